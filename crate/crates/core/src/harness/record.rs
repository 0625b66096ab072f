//! Wire formats: per-sample JSONL records, summary rows, and the manifest.
//! Field names and order are part of the external interface; reruns with the
//! same config and seed must serialize byte-identically.

use super::config::ExperimentConfig;
use crate::response::ClassFlags;
use serde::{Deserialize, Serialize};

/// One JSONL line per sample; fields are present per experiment kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: u64,
    /// Derived seed of this sample's substream.
    pub seed: u64,
    pub n: u32,
    pub k: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flags: Option<ClassFlags>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub better_flags: Option<ClassFlags>,
    /// Sink count of the sampled table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sinks: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Sink vertex ids (census kind).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sink_ids: Option<Vec<u64>>,
    /// Good-sink count.
    #[serde(rename = "X", skip_serializing_if = "Option::is_none")]
    pub x: Option<u64>,
    /// Bad-sink count.
    #[serde(rename = "Y", skip_serializing_if = "Option::is_none")]
    pub y: Option<u64>,
    /// Cycle lengths of a standalone slice sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_lengths: Option<Vec<u64>>,
    /// Standalone slice: does it contain a good cycle?
    #[serde(skip_serializing_if = "Option::is_none")]
    pub good_cycle: Option<bool>,
    /// Table mode: slices containing a good cycle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub good_cycle_slices: Option<u64>,
    /// All good cycles share one strongly connected component.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma8: Option<bool>,
    /// Every non-sink reaches a good cycle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma9: Option<bool>,
    /// Every good sink is reached from a good cycle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma10: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSampleRecord>,
}

impl SampleRecord {
    pub fn bare(sample: u64, seed: u64, n: u32, k: u32) -> Self {
        SampleRecord {
            sample,
            seed,
            n,
            k,
            flags: None,
            better_flags: None,
            sinks: None,
            epsilon: None,
            sink_ids: None,
            x: None,
            y: None,
            cycle_lengths: None,
            good_cycle: None,
            good_cycle_slices: None,
            lemma8: None,
            lemma9: None,
            lemma10: None,
            dynamics: None,
        }
    }
}

/// Survey of the inertial dynamic on one sampled game.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamicsSampleRecord {
    pub q: f64,
    pub runs: Vec<RunRecord>,
    pub converged: u64,
    pub rate: f64,
}

/// One dynamics run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub start: u64,
    pub converged: bool,
    pub steps: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sink: Option<u64>,
}

/// A proportion with its 95% Wilson interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    /// Successes and trials behind the estimate.
    pub count: u64,
    pub trials: u64,
}

/// Per-(n, k) aggregate of an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub kind: String,
    pub n: u32,
    pub k: u32,
    pub samples: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_pne: Option<Estimate>,
    /// Conditional on having a PNE; omitted when the conditioning event
    /// count is below 30 (see `insufficient`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_connected_given_pne: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_weakly_acyclic_given_pne: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_sinks: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_y: Option<f64>,
    /// Frequency of X + Y = 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_empty: Option<f64>,
    /// TV distance of the (X, Y) histogram to the limiting Poisson product.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub census_tv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bad_sink_frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub good_cycle_fraction: Option<Estimate>,
    /// Mean cycles of length 4, 6, 8 per slice.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_cycles_by_len: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_good_cycle_slices: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma8_rate: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma9_rate: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma10_rate: Option<Estimate>,
    /// Convergence rate over all runs of all samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamics_rate: Option<Estimate>,
    /// Convergence rate restricted to connected samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamics_rate_connected: Option<Estimate>,
    /// Convergence rate restricted to samples without a PNE.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamics_rate_no_pne: Option<Estimate>,
    /// Oracle kind: exact table counts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<super::oracle::OracleCounts>,
    /// True when a conditional estimate was withheld for lack of
    /// conditioning events (fewer than 30).
    pub insufficient: bool,
}

impl SummaryRow {
    pub fn bare(kind: &str, n: u32, k: u32, samples: u64) -> Self {
        SummaryRow {
            kind: kind.to_string(),
            n,
            k,
            samples,
            p_pne: None,
            p_connected_given_pne: None,
            p_weakly_acyclic_given_pne: None,
            mean_sinks: None,
            epsilon: None,
            mean_x: None,
            mean_y: None,
            p_empty: None,
            census_tv: None,
            bad_sink_frequency: None,
            good_cycle_fraction: None,
            mean_cycles_by_len: None,
            mean_good_cycle_slices: None,
            lemma8_rate: None,
            lemma9_rate: None,
            lemma10_rate: None,
            dynamics_rate: None,
            dynamics_rate_connected: None,
            dynamics_rate_no_pne: None,
            oracle: None,
            insufficient: false,
        }
    }
}

/// Fixed CSV column set for summary rows.
pub const SUMMARY_CSV_HEADER: &str = "kind,n,k,samples,p_pne,p_pne_lo,p_pne_hi,\
p_connected_given_pne,p_connected_given_pne_lo,p_connected_given_pne_hi,\
p_weakly_acyclic_given_pne,p_weakly_acyclic_given_pne_lo,p_weakly_acyclic_given_pne_hi,\
mean_sinks,epsilon,mean_x,mean_y,p_empty,census_tv,bad_sink_frequency,\
good_cycle_fraction,good_cycle_fraction_lo,good_cycle_fraction_hi,\
mean_cycles_len4,mean_cycles_len6,mean_cycles_len8,mean_good_cycle_slices,\
lemma8_rate,lemma9_rate,lemma10_rate,dynamics_rate,dynamics_rate_connected,\
dynamics_rate_no_pne,insufficient";

fn cell_f(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cells_e(e: Option<Estimate>) -> [String; 3] {
    match e {
        Some(e) => [e.value.to_string(), e.lo.to_string(), e.hi.to_string()],
        None => [String::new(), String::new(), String::new()],
    }
}

impl SummaryRow {
    /// One CSV line matching [`SUMMARY_CSV_HEADER`].
    pub fn to_csv_line(&self) -> String {
        let pne = cells_e(self.p_pne);
        let conn = cells_e(self.p_connected_given_pne);
        let weak = cells_e(self.p_weakly_acyclic_given_pne);
        let gcf = cells_e(self.good_cycle_fraction);
        let by_len = self
            .mean_cycles_by_len
            .map(|m| [m[0].to_string(), m[1].to_string(), m[2].to_string()])
            .unwrap_or_default();
        let fields: Vec<String> = vec![
            self.kind.clone(),
            self.n.to_string(),
            self.k.to_string(),
            self.samples.to_string(),
            pne[0].clone(),
            pne[1].clone(),
            pne[2].clone(),
            conn[0].clone(),
            conn[1].clone(),
            conn[2].clone(),
            weak[0].clone(),
            weak[1].clone(),
            weak[2].clone(),
            cell_f(self.mean_sinks),
            cell_f(self.epsilon),
            cell_f(self.mean_x),
            cell_f(self.mean_y),
            cell_f(self.p_empty),
            cell_f(self.census_tv),
            cell_f(self.bad_sink_frequency),
            gcf[0].clone(),
            gcf[1].clone(),
            gcf[2].clone(),
            by_len[0].clone(),
            by_len[1].clone(),
            by_len[2].clone(),
            cell_f(self.mean_good_cycle_slices),
            cells_e(self.lemma8_rate)[0].clone(),
            cells_e(self.lemma9_rate)[0].clone(),
            cells_e(self.lemma10_rate)[0].clone(),
            cells_e(self.dynamics_rate)[0].clone(),
            cells_e(self.dynamics_rate_connected)[0].clone(),
            cells_e(self.dynamics_rate_no_pne)[0].clone(),
            self.insufficient.to_string(),
        ];
        fields.join(",")
    }
}

/// Reproduction metadata written next to every emitted experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub artifact_version: String,
    pub wall_time_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary_file: Option<String>,
}
