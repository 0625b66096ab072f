//! Reproducible Monte Carlo experiment runner.
//!
//! Sample `j` of sweep point `k` draws from the stream seeded by
//! `child_seed(child_seed(master, k), j)`, so records are a pure function of
//! (config, master seed, artifact version): worker count and scheduling can
//! never change an emitted byte. Records are collected in sample order and
//! summaries are derived from the records afterwards, single-threaded.

pub mod config;
pub mod emit;
pub mod oracle;
pub mod record;

pub use config::{DynamicsSettings, ExperimentConfig, ExperimentKind, OutputFormat};
pub use emit::{emit, records_to_jsonl, EmittedFiles};
pub use oracle::{brute_classify, brute_classify_better, exhaustive_oracle, OracleCounts};
pub use record::{
    DynamicsSampleRecord, Estimate, Manifest, RunRecord, SampleRecord, SummaryRow,
    SUMMARY_CSV_HEADER,
};

use crate::asymptotics::{joint_poisson_pmf, tv_distance};
use crate::branching::{extinction_fixed_point, OffspringSpec};
use crate::census::census;
use crate::dynamics::run_with_rng;
use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::response::{classify_better, classify_br, sinks};
use crate::rng::{child_seed, stream, substream};
use crate::slice::{
    all_good_cycles_one_scc_with, collect_good_cycles, cycles_and_basins,
    good_sinks_reached_from_good_cycle_with, nonsinks_reach_good_cycle_with, SliceTable,
};
use crate::table::{RankTable, WinnerTable};
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::time::Instant;

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn estimate(successes: u64, trials: u64) -> Estimate {
    let (lo, hi) = wilson_interval(successes, trials);
    Estimate {
        value: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
        lo,
        hi,
        count: successes,
        trials,
    }
}

/// Everything an experiment produces, before anything touches disk.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<SampleRecord>,
    pub summary: Vec<SummaryRow>,
    pub manifest: Manifest,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for &k in &cfg.k_list {
        if cfg.kind == ExperimentKind::Oracle {
            let shape = GridShape::new(cfg.n, k, cfg.mem_cap_bytes)?;
            let counts = exhaustive_oracle(&shape, cfg.enumeration_cap)?;
            let mut row = SummaryRow::bare(cfg.kind.as_str(), cfg.n, k, counts.tables);
            row.mean_sinks = Some(counts.mean_sinks);
            // Enumeration is exact: no conditioning-count gate applies.
            row.p_pne = Some(estimate(counts.with_pne, counts.tables));
            if counts.with_pne > 0 {
                row.p_connected_given_pne = Some(estimate(counts.connected, counts.with_pne));
                row.p_weakly_acyclic_given_pne =
                    Some(estimate(counts.weakly_acyclic, counts.with_pne));
            }
            row.oracle = Some(counts);
            summary.push(row);
            continue;
        }
        let k_seed = child_seed(cfg.seed, k as u64);
        let recs = run_samples(cfg, k, k_seed)?;
        summary.push(summarize(cfg, k, &recs)?);
        records.extend(recs);
    }
    let manifest = Manifest {
        config: cfg.clone(),
        master_seed: cfg.seed,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_secs: started.elapsed().as_secs_f64(),
        records_file: None,
        summary_file: None,
    };
    Ok(ExperimentOutput { records, summary, manifest })
}

fn run_samples(cfg: &ExperimentConfig, k: u32, k_seed: u64) -> Result<Vec<SampleRecord>> {
    let standalone_slices = cfg.kind == ExperimentKind::Slices && cfg.n == 2;
    let shape = if standalone_slices {
        None
    } else {
        Some(GridShape::new(cfg.n, k, cfg.mem_cap_bytes)?)
    };
    let work = |j: u64| -> SampleRecord {
        let sample_seed = child_seed(k_seed, j);
        let mut rng = stream(sample_seed);
        let mut rec = SampleRecord::bare(j, sample_seed, cfg.n, k);
        match cfg.kind {
            ExperimentKind::Connectivity => {
                let w = if cfg.include_better {
                    let r = RankTable::sample(shape.as_ref().unwrap(), &mut rng);
                    rec.better_flags = Some(classify_better(&r));
                    r.winner_table()
                } else {
                    WinnerTable::sample(shape.as_ref().unwrap(), &mut rng)
                };
                rec.flags = Some(classify_br(&w));
                rec.sinks = Some(sinks(&w).len() as u64);
            }
            ExperimentKind::SinkCensus => {
                let w = WinnerTable::sample(shape.as_ref().unwrap(), &mut rng);
                let c = census(&w, cfg.epsilon).expect("epsilon validated");
                let mut ids: Vec<u64> =
                    c.good.iter().chain(c.bad.iter()).map(|&v| v as u64).collect();
                ids.sort_unstable();
                rec.epsilon = Some(cfg.epsilon);
                rec.sinks = Some(ids.len() as u64);
                rec.sink_ids = Some(ids);
                rec.x = Some(c.x());
                rec.y = Some(c.y());
            }
            ExperimentKind::Slices if standalone_slices => {
                let slice = SliceTable::sample(k, &mut rng);
                let cycles = cycles_and_basins(&slice);
                rec.cycle_lengths = Some(cycles.iter().map(|c| c.len() as u64).collect());
                rec.good_cycle = Some(cycles.iter().any(|c| c.good));
            }
            ExperimentKind::Slices => {
                let w = WinnerTable::sample(shape.as_ref().unwrap(), &mut rng);
                let cycles = collect_good_cycles(&w).expect("anchors match shape");
                let slices_with_good: std::collections::BTreeSet<&Vec<u16>> =
                    cycles.iter().map(|c| &c.slice.anchor).collect();
                rec.epsilon = Some(cfg.epsilon);
                rec.sinks = Some(sinks(&w).len() as u64);
                rec.good_cycle_slices = Some(slices_with_good.len() as u64);
                rec.lemma8 = Some(all_good_cycles_one_scc_with(&w, &cycles).holds);
                rec.lemma9 = Some(nonsinks_reach_good_cycle_with(&w, &cycles).holds);
                rec.lemma10 = Some(
                    good_sinks_reached_from_good_cycle_with(&w, cfg.epsilon, &cycles)
                        .expect("epsilon validated")
                        .holds,
                );
            }
            ExperimentKind::Dynamics => {
                let w = WinnerTable::sample(shape.as_ref().unwrap(), &mut rng);
                rec.flags = Some(classify_br(&w));
                rec.sinks = Some(sinks(&w).len() as u64);
                let d = cfg.dynamics.expect("settings validated");
                let dyn_seed = child_seed(sample_seed, 1);
                let total = w.shape().vertex_count();
                let mut runs = Vec::with_capacity(d.starts as usize);
                let mut converged = 0u64;
                for i in 0..d.starts {
                    let mut run_rng = substream(dyn_seed, i);
                    let start = run_rng.random_range(0..total);
                    let r = run_with_rng(&w, start, d.select_prob, d.max_steps, &mut run_rng);
                    converged += r.converged as u64;
                    runs.push(RunRecord {
                        start: start as u64,
                        converged: r.converged,
                        steps: r.steps,
                        sink: r.absorbing_profile.map(|v| v as u64),
                    });
                }
                rec.dynamics = Some(DynamicsSampleRecord {
                    q: d.select_prob,
                    rate: converged as f64 / d.starts as f64,
                    converged,
                    runs,
                });
            }
            ExperimentKind::Oracle => unreachable!("handled by the caller"),
        }
        rec
    };
    let run_all = || (0..cfg.samples).into_par_iter().map(work).collect::<Vec<_>>();
    if cfg.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(pool.install(run_all))
    } else {
        Ok(run_all())
    }
}

fn summarize(cfg: &ExperimentConfig, k: u32, recs: &[SampleRecord]) -> Result<SummaryRow> {
    let mut row = SummaryRow::bare(cfg.kind.as_str(), cfg.n, k, recs.len() as u64);
    let samples = recs.len() as u64;
    match cfg.kind {
        ExperimentKind::Connectivity | ExperimentKind::Dynamics => {
            let pne = recs.iter().filter(|r| r.flags.unwrap().pne).count() as u64;
            let connected = recs.iter().filter(|r| r.flags.unwrap().connected).count() as u64;
            let weakly = recs.iter().filter(|r| r.flags.unwrap().weakly_acyclic).count() as u64;
            row.p_pne = Some(estimate(pne, samples));
            if pne >= 30 {
                row.p_connected_given_pne = Some(estimate(connected, pne));
                row.p_weakly_acyclic_given_pne = Some(estimate(weakly, pne));
            } else {
                row.insufficient = true;
            }
            row.mean_sinks = Some(
                recs.iter().map(|r| r.sinks.unwrap() as f64).sum::<f64>() / samples as f64,
            );
            if cfg.kind == ExperimentKind::Dynamics {
                let mut total_runs = 0u64;
                let mut total_conv = 0u64;
                let mut conn_runs = 0u64;
                let mut conn_conv = 0u64;
                let mut no_pne_runs = 0u64;
                let mut no_pne_conv = 0u64;
                for r in recs {
                    let d = r.dynamics.as_ref().unwrap();
                    let runs = d.runs.len() as u64;
                    total_runs += runs;
                    total_conv += d.converged;
                    if r.flags.unwrap().connected {
                        conn_runs += runs;
                        conn_conv += d.converged;
                    }
                    if !r.flags.unwrap().pne {
                        no_pne_runs += runs;
                        no_pne_conv += d.converged;
                    }
                }
                row.dynamics_rate = Some(estimate(total_conv, total_runs));
                if conn_runs >= 30 {
                    row.dynamics_rate_connected = Some(estimate(conn_conv, conn_runs));
                } else if conn_runs > 0 {
                    row.insufficient = true;
                }
                if no_pne_runs >= 30 {
                    row.dynamics_rate_no_pne = Some(estimate(no_pne_conv, no_pne_runs));
                } else if no_pne_runs > 0 {
                    row.insufficient = true;
                }
            }
        }
        ExperimentKind::SinkCensus => {
            let mut histogram: BTreeMap<(u64, u64), u64> = BTreeMap::new();
            for r in recs {
                *histogram.entry((r.x.unwrap(), r.y.unwrap())).or_insert(0) += 1;
            }
            let eta =
                extinction_fixed_point(OffspringSpec::Poisson { mean: (cfg.n - 1) as f64 })?;
            let p = eta.powi(cfg.n as i32);
            row.epsilon = Some(cfg.epsilon);
            row.census_tv =
                Some(tv_distance(&histogram, |&(a, b)| joint_poisson_pmf(1.0 - p, p, a, b))?);
            let total = samples as f64;
            row.mean_x = Some(
                histogram.iter().map(|(&(x, _), &c)| x as f64 * c as f64).sum::<f64>() / total,
            );
            row.mean_y = Some(
                histogram.iter().map(|(&(_, y), &c)| y as f64 * c as f64).sum::<f64>() / total,
            );
            row.p_empty = Some(*histogram.get(&(0, 0)).unwrap_or(&0) as f64 / total);
            // The empty sum is -0.0; flush the sign for clean serialization.
            row.bad_sink_frequency = Some(
                histogram.iter().filter(|(&(_, y), _)| y > 0).map(|(_, &c)| c as f64).sum::<f64>()
                    / total
                    + 0.0,
            );
            row.mean_sinks = Some(
                recs.iter().map(|r| r.sinks.unwrap() as f64).sum::<f64>() / total,
            );
        }
        ExperimentKind::Slices if cfg.n == 2 => {
            let good = recs.iter().filter(|r| r.good_cycle.unwrap()).count() as u64;
            row.good_cycle_fraction = Some(estimate(good, samples));
            let mut by_len = [0.0f64; 3];
            for r in recs {
                for &len in r.cycle_lengths.as_ref().unwrap() {
                    if (4..=8).contains(&len) && len % 2 == 0 {
                        by_len[(len as usize - 4) / 2] += 1.0;
                    }
                }
            }
            for m in &mut by_len {
                *m /= samples as f64;
            }
            row.mean_cycles_by_len = Some(by_len);
        }
        ExperimentKind::Slices => {
            let l8 = recs.iter().filter(|r| r.lemma8.unwrap()).count() as u64;
            let l9 = recs.iter().filter(|r| r.lemma9.unwrap()).count() as u64;
            let l10 = recs.iter().filter(|r| r.lemma10.unwrap()).count() as u64;
            row.epsilon = Some(cfg.epsilon);
            row.lemma8_rate = Some(estimate(l8, samples));
            row.lemma9_rate = Some(estimate(l9, samples));
            row.lemma10_rate = Some(estimate(l10, samples));
            row.mean_good_cycle_slices = Some(
                recs.iter().map(|r| r.good_cycle_slices.unwrap() as f64).sum::<f64>()
                    / samples as f64,
            );
        }
        ExperimentKind::Oracle => unreachable!("handled by the caller"),
    }
    Ok(row)
}
