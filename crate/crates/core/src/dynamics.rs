//! Best-response dynamic with inertia: each step every player is
//! independently selected with probability q, and all selected players
//! simultaneously move to the winner of their line through the previous
//! profile; unselected players repeat their action. A profile is absorbing
//! exactly when it is a sink, so convergence is declared on reaching one.

use crate::error::{Error, Result};
use crate::grid::VertexId;
use crate::response::sinks;
use crate::rng::{stream, substream, SimRng};
use crate::table::WinnerTable;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DynamicsConfig {
    /// Per-step independent selection probability, in (0, 1].
    pub select_prob: f64,
    /// Step cap per run; hitting it is reported, never silently truncated.
    pub max_steps: u64,
    pub seed: u64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig { select_prob: 0.5, max_steps: 100_000, seed: 0 }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.select_prob > 0.0 && self.select_prob <= 1.0) {
            return Err(Error::Domain(format!(
                "selection probability must lie in (0, 1], got {}",
                self.select_prob
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Domain("max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicsResult {
    pub converged: bool,
    /// The absorbing sink; present exactly when converged.
    pub absorbing_profile: Option<VertexId>,
    pub steps: u64,
}

/// Move every selected player to its line winner under the old profile,
/// simultaneously; `selected` has one flag per player.
pub fn apply_selected(w: &WinnerTable, profile: VertexId, selected: &[bool]) -> VertexId {
    let shape = w.shape();
    debug_assert_eq!(selected.len(), shape.n() as usize);
    let mut next = profile;
    for (d, &on) in selected.iter().enumerate() {
        if !on {
            continue;
        }
        let d = d as u32;
        let line = shape.line_through(profile, d);
        let old_pos = shape.coord(profile, d);
        let new_pos = w.winner_pos(line);
        if new_pos != old_pos {
            let base = shape.pow(d);
            next = next - old_pos as usize * base + new_pos as usize * base;
        }
    }
    next
}

/// One step of the dynamic: draw the selection, then apply it.
pub fn step(w: &WinnerTable, profile: VertexId, q: f64, rng: &mut impl Rng) -> VertexId {
    let n = w.shape().n() as usize;
    // Memory caps bound n far below this; the array keeps the hot loop
    // allocation-free.
    assert!(n <= 64, "player count {n} exceeds the selection buffer");
    let mut selected = [false; 64];
    for s in selected.iter_mut().take(n) {
        *s = rng.random::<f64>() < q;
    }
    apply_selected(w, profile, &selected[..n])
}

/// Run from `start` until a sink is reached or `max_steps` elapse. The run
/// consumes the root stream of `cfg.seed`.
pub fn run(w: &WinnerTable, start: VertexId, cfg: &DynamicsConfig) -> Result<DynamicsResult> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed);
    Ok(run_with_rng(w, start, cfg.select_prob, cfg.max_steps, &mut rng))
}

pub(crate) fn run_with_rng(
    w: &WinnerTable,
    start: VertexId,
    q: f64,
    max_steps: u64,
    rng: &mut SimRng,
) -> DynamicsResult {
    let mut profile = start;
    let mut steps = 0u64;
    while steps < max_steps {
        if w.is_sink(profile) {
            return DynamicsResult { converged: true, absorbing_profile: Some(profile), steps };
        }
        let next = step(w, profile, q, rng);
        debug_assert!(valid_transition(w, profile, next));
        profile = next;
        steps += 1;
    }
    if w.is_sink(profile) {
        return DynamicsResult { converged: true, absorbing_profile: Some(profile), steps };
    }
    DynamicsResult { converged: false, absorbing_profile: None, steps }
}

/// A legal transition changes each coordinate either not at all or to the
/// winner of that player's line under the pre-step profile.
fn valid_transition(w: &WinnerTable, from: VertexId, to: VertexId) -> bool {
    let shape = w.shape();
    (0..shape.n()).all(|d| {
        let old = shape.coord(from, d);
        let new = shape.coord(to, d);
        new == old || new == w.winner_pos(shape.line_through(from, d))
    })
}

/// Which starting profiles a survey visits.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum StartSet {
    /// Every vertex once.
    All,
    /// This many uniformly drawn starts.
    Sampled(u64),
}

/// Aggregate convergence behaviour over many starts; run `i` draws from the
/// substream `(cfg.seed, i)`, so the survey is reproducible and
/// order-independent.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSurvey {
    pub runs: u64,
    pub converged: u64,
    pub rate: f64,
    /// Quantiles of step counts over converged runs: min, median, p90, max.
    pub steps_quantiles: [u64; 4],
    /// Absorption counts per sink.
    pub absorption: BTreeMap<VertexId, u64>,
}

pub fn convergence_survey(
    w: &WinnerTable,
    cfg: &DynamicsConfig,
    starts: StartSet,
) -> Result<ConvergenceSurvey> {
    cfg.validate()?;
    let total = w.shape().vertex_count();
    let runs = match starts {
        StartSet::All => total as u64,
        StartSet::Sampled(c) => c,
    };
    if runs == 0 {
        return Err(Error::Config("survey needs at least one start".into()));
    }
    let sink_list = sinks(w);
    let mut absorption: BTreeMap<VertexId, u64> = BTreeMap::new();
    let mut step_counts = Vec::new();
    let mut converged = 0u64;
    for i in 0..runs {
        let mut rng = substream(cfg.seed, i);
        let start = match starts {
            StartSet::All => i as usize,
            StartSet::Sampled(_) => rng.random_range(0..total),
        };
        let result = run_with_rng(w, start, cfg.select_prob, cfg.max_steps, &mut rng);
        if result.converged {
            let sink = result.absorbing_profile.expect("converged run has a profile");
            // Absorption soundness: the reported profile must be a sink.
            assert!(sink_list.binary_search(&sink).is_ok());
            converged += 1;
            step_counts.push(result.steps);
            *absorption.entry(sink).or_insert(0) += 1;
        }
    }
    step_counts.sort_unstable();
    let quantile = |f: f64| -> u64 {
        if step_counts.is_empty() {
            0
        } else {
            let idx = ((step_counts.len() - 1) as f64 * f).round() as usize;
            step_counts[idx]
        }
    };
    Ok(ConvergenceSurvey {
        runs,
        converged,
        rate: converged as f64 / runs as f64,
        steps_quantiles: [quantile(0.0), quantile(0.5), quantile(0.9), quantile(1.0)],
        absorption,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridShape, DEFAULT_MEM_CAP};
    use crate::response::classify_br;
    use crate::rng::stream;

    fn shape(n: u32, k: u32) -> GridShape {
        GridShape::new(n, k, DEFAULT_MEM_CAP).unwrap()
    }

    #[test]
    fn sink_is_a_fixed_point_of_any_selection() {
        let s = shape(3, 2);
        let w = WinnerTable::from_winners(&s, vec![0; s.line_count()]).unwrap();
        for mask in 0..8u32 {
            let selected: Vec<bool> = (0..3).map(|d| mask >> d & 1 == 1).collect();
            assert_eq!(apply_selected(&w, 0, &selected), 0);
        }
        let r = run(&w, 0, &DynamicsConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.steps, 0);
        assert_eq!(r.absorbing_profile, Some(0));
    }

    #[test]
    fn single_selection_moves_to_line_winner() {
        let s = shape(2, 2);
        let w = WinnerTable::from_winners(&s, vec![1, 0, 1, 0]).unwrap();
        let start = s.encode(&[0, 0]);
        // Only player 0 selected: row step to (1, 0).
        assert_eq!(apply_selected(&w, start, &[true, false]), s.encode(&[1, 0]));
        // Only player 1 selected: column step to (0, 1).
        assert_eq!(apply_selected(&w, start, &[false, true]), s.encode(&[0, 1]));
        // Both selected simultaneously: each follows its own line winner
        // against the old profile.
        assert_eq!(apply_selected(&w, start, &[true, true]), s.encode(&[1, 1]));
    }

    #[test]
    fn zero_sink_game_never_converges() {
        let s = shape(2, 2);
        let w = WinnerTable::from_winners(&s, vec![0, 1, 1, 0]).unwrap();
        let cfg = DynamicsConfig { max_steps: 2000, ..Default::default() };
        let r = run(&w, 0, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.steps, 2000);
        assert_eq!(r.absorbing_profile, None);
        let survey = convergence_survey(&w, &cfg, StartSet::All).unwrap();
        assert_eq!(survey.rate, 0.0);
        assert!(survey.absorption.is_empty());
    }

    #[test]
    fn weakly_acyclic_game_converges_from_every_start() {
        // All-zero table: connected and acyclic; with a generous cap the
        // failure probability is dwarfed by any real concern.
        let s = shape(3, 2);
        let w = WinnerTable::from_winners(&s, vec![0; s.line_count()]).unwrap();
        let survey =
            convergence_survey(&w, &DynamicsConfig::default(), StartSet::All).unwrap();
        assert_eq!(survey.rate, 1.0);
        assert_eq!(survey.absorption.len(), 1);
        assert_eq!(*survey.absorption.get(&0).unwrap(), 8);
    }

    #[test]
    fn connected_samples_converge_and_hit_every_sink() {
        let s = shape(3, 4);
        let mut rng = stream(33);
        let mut tried = 0;
        let mut connected_games = 0;
        while connected_games < 20 && tried < 500 {
            tried += 1;
            let w = WinnerTable::sample(&s, &mut rng);
            let flags = classify_br(&w);
            if !flags.connected {
                continue;
            }
            connected_games += 1;
            let cfg = DynamicsConfig { seed: 7 + tried, ..Default::default() };
            let survey = convergence_survey(&w, &cfg, StartSet::All).unwrap();
            assert_eq!(survey.rate, 1.0, "connected game failed to absorb");
            // On connected games every sink is reached with positive
            // frequency over all starts.
            for sink in sinks(&w) {
                assert!(
                    *survey.absorption.get(&sink).unwrap_or(&0) > 0,
                    "sink {sink} never absorbed"
                );
            }
        }
        assert_eq!(connected_games, 20);
    }

    #[test]
    fn config_validation() {
        let s = shape(2, 2);
        let w = WinnerTable::from_winners(&s, vec![0; 4]).unwrap();
        let bad_q = DynamicsConfig { select_prob: 0.0, ..Default::default() };
        assert!(run(&w, 0, &bad_q).is_err());
        let bad_cap = DynamicsConfig { max_steps: 0, ..Default::default() };
        assert!(run(&w, 0, &bad_cap).is_err());
    }
}
