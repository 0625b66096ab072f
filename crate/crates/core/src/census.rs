//! Good/bad sink classification by capped backward line exploration, and
//! the joint (X, Y) census that converges to a product of Poissons.
//!
//! A line reaches a sink when the line's winner does. The exploration starts
//! from the sink's own n lines (whose winner it is) and repeatedly scans the
//! non-winner vertices of a reaching line for other lines they win, stopping
//! early once `cap` reaching lines are known. The closure and the saturation
//! flag are order-independent set semantics; FIFO is used here.

use crate::asymptotics::{joint_poisson_pmf, tv_distance};
use crate::bitset::VertexSet;
use crate::branching::{extinction_fixed_point, OffspringSpec};
use crate::error::{Error, Result};
use crate::grid::{GridShape, VertexId};
use crate::response::sinks;
use crate::rng::substream;
use crate::table::WinnerTable;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Classification of every sink of one table at a fixed epsilon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SinkCensus {
    pub epsilon: f64,
    /// A sink is good when at least this many lines reach it: ceil(k^epsilon).
    pub threshold: u64,
    pub good: Vec<VertexId>,
    pub bad: Vec<VertexId>,
}

impl SinkCensus {
    /// Number of good sinks.
    pub fn x(&self) -> u64 {
        self.good.len() as u64
    }

    /// Number of bad sinks.
    pub fn y(&self) -> u64 {
        self.bad.len() as u64
    }
}

/// Count distinct lines that can reach the sink `s`, exploring until the
/// closure is exhausted (exact count, `saturated = false`) or `cap` lines
/// are known (`saturated = true`, count clamped to `cap`).
pub fn reaching_lines_count(w: &WinnerTable, s: VertexId, cap: u64) -> Result<(u64, bool)> {
    if !w.is_sink(s) {
        return Err(Error::NotASink(s));
    }
    let shape = w.shape();
    let mut known = VertexSet::new(shape.line_count());
    let mut queue: Vec<crate::grid::LineId> = Vec::new();
    let mut count = 0u64;
    for d in 0..shape.n() {
        let line = shape.line_through(s, d);
        known.insert(shape.line_index(line));
        count += 1;
        if count >= cap {
            return Ok((cap, true));
        }
        queue.push(line);
    }
    let mut head = 0;
    while head < queue.len() {
        let line = queue[head];
        head += 1;
        let winner_pos = w.winner_pos(line);
        for pos in 0..shape.k() as u16 {
            if pos == winner_pos {
                continue;
            }
            let u = shape.vertex_on_line(line, pos);
            for d in 0..shape.n() {
                if d == line.dim {
                    continue;
                }
                let other = shape.line_through(u, d);
                let oi = shape.line_index(other);
                if known.contains(oi) || w.winner_pos(other) != shape.coord(u, d) {
                    continue;
                }
                // u wins `other`, and u reaches s through `line`.
                known.insert(oi);
                count += 1;
                if count >= cap {
                    return Ok((cap, true));
                }
                queue.push(other);
            }
        }
    }
    Ok((count, false))
}

/// Threshold for goodness at `(k, epsilon)`: at least `k^epsilon` lines,
/// with integer counts read as `count >= ceil(k^epsilon)`.
pub fn good_threshold(k: u32, epsilon: f64) -> u64 {
    (k as f64).powf(epsilon).ceil() as u64
}

/// Classify every sink of the table as good or bad.
pub fn census(w: &WinnerTable, epsilon: f64) -> Result<SinkCensus> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    let threshold = good_threshold(w.shape().k(), epsilon);
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for s in sinks(w) {
        let (_, saturated) = reaching_lines_count(w, s, threshold)?;
        if saturated {
            good.push(s);
        } else {
            bad.push(s);
        }
    }
    Ok(SinkCensus { epsilon, threshold, good, bad })
}

/// Monte Carlo configuration for the joint (X, Y) law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusDistConfig {
    pub n: u32,
    pub k: u32,
    pub epsilon: f64,
    pub samples: u64,
    pub seed: u64,
    pub mem_cap_bytes: u64,
}

/// Empirical joint law of (X, Y) with its distance to the limiting product
/// of Poissons with rates (1-p, p), p = eta_{n-1}^n.
#[derive(Debug, Clone, Serialize)]
pub struct CensusDistribution {
    pub histogram: BTreeMap<(u64, u64), u64>,
    pub samples: u64,
    /// Limiting probability that a given sink is bad.
    pub p: f64,
    pub tv_to_poisson_product: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    /// Empirical frequency of X + Y = 0 (no sinks at all).
    pub p_empty: f64,
    /// Empirical frequency of at least one bad sink.
    pub bad_sink_frequency: f64,
}

/// Sample tables and histogram their (X, Y) counts; sample `j` uses the
/// substream `(seed, j)`.
pub fn census_distribution(cfg: &CensusDistConfig) -> Result<CensusDistribution> {
    if cfg.samples == 0 {
        return Err(Error::Config("census distribution needs samples >= 1".into()));
    }
    let shape = GridShape::new(cfg.n, cfg.k, cfg.mem_cap_bytes)?;
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 0.5) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1/2), got {}", cfg.epsilon)));
    }
    let pairs: Vec<(u64, u64)> = (0..cfg.samples)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(cfg.seed, j);
            let w = WinnerTable::sample(&shape, &mut rng);
            let c = census(&w, cfg.epsilon).expect("epsilon validated above");
            (c.x(), c.y())
        })
        .collect();
    let mut histogram = BTreeMap::new();
    for pair in pairs {
        *histogram.entry(pair).or_insert(0u64) += 1;
    }
    let eta = extinction_fixed_point(OffspringSpec::Poisson { mean: (cfg.n - 1) as f64 })?;
    let p = eta.powi(cfg.n as i32);
    let tv = tv_distance(&histogram, |&(a, b)| joint_poisson_pmf(1.0 - p, p, a, b))?;
    let total = cfg.samples as f64;
    let mean_x = histogram.iter().map(|(&(x, _), &c)| x as f64 * c as f64).sum::<f64>() / total;
    let mean_y = histogram.iter().map(|(&(_, y), &c)| y as f64 * c as f64).sum::<f64>() / total;
    let p_empty = *histogram.get(&(0, 0)).unwrap_or(&0) as f64 / total;
    // The empty sum is -0.0; flush the sign for clean serialization.
    let bad_sink_frequency = histogram
        .iter()
        .filter(|(&(_, y), _)| y > 0)
        .map(|(_, &c)| c as f64)
        .sum::<f64>()
        / total
        + 0.0;
    Ok(CensusDistribution {
        histogram,
        samples: cfg.samples,
        p,
        tv_to_poisson_product: tv,
        mean_x,
        mean_y,
        p_empty,
        bad_sink_frequency,
    })
}
