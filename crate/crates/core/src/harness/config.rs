//! Experiment descriptors. A config plus a master seed fully determines
//! every record an experiment emits.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Sample winner tables and classify their best-response graphs.
    Connectivity,
    /// Sample winner tables and census good/bad sinks.
    SinkCensus,
    /// n = 2: sample bare slices and inventory their cycles.
    /// n >= 3: sample full tables and run the three structure checks.
    Slices,
    /// Sample winner tables and survey the inertial best-response dynamic.
    Dynamics,
    /// Exhaustive enumeration instead of sampling (summary only).
    Oracle,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Connectivity => "connectivity",
            ExperimentKind::SinkCensus => "sink_census",
            ExperimentKind::Slices => "slices",
            ExperimentKind::Dynamics => "dynamics",
            ExperimentKind::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DynamicsSettings {
    /// Per-step selection probability q.
    pub select_prob: f64,
    /// Random starts surveyed per sampled game.
    pub starts: u64,
    pub max_steps: u64,
}

impl Default for DynamicsSettings {
    fn default() -> Self {
        DynamicsSettings { select_prob: 0.5, starts: 10, max_steps: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: u32,
    /// One entry per sweep point.
    pub k_list: Vec<u32>,
    pub samples: u64,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSettings>,
    pub seed: u64,
    /// Worker threads; 0 picks the rayon default. Never affects results.
    pub workers: usize,
    /// Connectivity only: sample rank tables and classify both graphs.
    pub include_better: bool,
    pub mem_cap_bytes: u64,
    /// Table cap for the oracle kind.
    pub enumeration_cap: u64,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, n: u32, k_list: Vec<u32>) -> Self {
        ExperimentConfig {
            kind,
            n,
            k_list,
            samples: 1000,
            epsilon: 0.1,
            dynamics: None,
            seed: 0,
            workers: 0,
            include_better: false,
            mem_cap_bytes: crate::grid::DEFAULT_MEM_CAP,
            enumeration_cap: 20_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be >= 2, got {}", self.n)));
        }
        if self.k_list.is_empty() {
            return Err(Error::Config("at least one k is required".into()));
        }
        if let Some(&k) = self.k_list.iter().find(|&&k| k < 2) {
            return Err(Error::Config(format!("k must be >= 2, got {k}")));
        }
        if self.kind != ExperimentKind::Oracle && self.samples < 1 {
            return Err(Error::Config("Monte Carlo experiments need samples >= 1".into()));
        }
        match self.kind {
            ExperimentKind::SinkCensus => {
                if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
                    return Err(Error::Config(format!(
                        "sink census needs epsilon in (0, 1/2), got {}",
                        self.epsilon
                    )));
                }
            }
            ExperimentKind::Slices if self.n >= 3 => {
                // The good-sink check constrains epsilon harder.
                if !(self.epsilon > 0.0 && self.epsilon < 1.0 / 6.0) {
                    return Err(Error::Config(format!(
                        "slice structure checks need epsilon in (0, 1/6), got {}",
                        self.epsilon
                    )));
                }
            }
            ExperimentKind::Dynamics => {
                let d = self
                    .dynamics
                    .ok_or_else(|| Error::Config("dynamics experiments need settings".into()))?;
                if !(d.select_prob > 0.0 && d.select_prob <= 1.0) {
                    return Err(Error::Config(format!(
                        "selection probability must lie in (0, 1], got {}",
                        d.select_prob
                    )));
                }
                if d.starts < 1 || d.max_steps < 1 {
                    return Err(Error::Config("dynamics needs starts >= 1 and max_steps >= 1".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}
