//! Exhaustive ground truth at enumerable sizes.
//!
//! Classification here is deliberately independent of the production path:
//! the digraph is materialized as explicit adjacency lists and every flag is
//! read off per-vertex reachability closures, with no connectivity
//! shortcuts. The production classifiers are tested against this oracle
//! table by table.

use crate::error::Result;
use crate::grid::GridShape;
use crate::response::ClassFlags;
use crate::table::{enumerate_rank_tables, enumerate_winner_tables, RankTable, WinnerTable};
use serde::{Deserialize, Serialize};

/// Explicit adjacency of a table's best-response graph.
fn best_adjacency(w: &WinnerTable) -> Vec<Vec<usize>> {
    let shape = w.shape();
    let mut adj = vec![Vec::new(); shape.vertex_count()];
    for li in 0..shape.line_count() {
        let line = shape.line_from_index(li);
        let winner_pos = w.winner_pos(line);
        let winner = shape.vertex_on_line(line, winner_pos);
        for pos in 0..shape.k() as u16 {
            if pos != winner_pos {
                adj[shape.vertex_on_line(line, pos)].push(winner);
            }
        }
    }
    adj
}

/// Explicit adjacency of a rank table's better-response graph.
fn better_adjacency(r: &RankTable) -> Vec<Vec<usize>> {
    let shape = r.shape();
    let mut adj = vec![Vec::new(); shape.vertex_count()];
    for li in 0..shape.line_count() {
        let line = shape.line_from_index(li);
        let ranking = r.line_ranking(line);
        for (better_rank, &bp) in ranking.iter().enumerate() {
            let better = shape.vertex_on_line(line, bp);
            for &wp in &ranking[better_rank + 1..] {
                adj[shape.vertex_on_line(line, wp)].push(better);
            }
        }
    }
    adj
}

/// Per-vertex classification data from explicit closures.
pub struct BruteClassification {
    pub flags: ClassFlags,
    pub sink_count: usize,
    pub scc_count: usize,
}

fn brute_classify_adj(adj: &[Vec<usize>]) -> BruteClassification {
    let total = adj.len();
    // strict[v]: reachable from v along >= 1 edge.
    let mut strict = Vec::with_capacity(total);
    for v in 0..total {
        let mut seen = vec![false; total];
        let mut queue: Vec<usize> = Vec::new();
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push(u);
            }
        }
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            for &t in &adj[u] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push(t);
                }
            }
        }
        strict.push(seen);
    }
    let reaches = |a: usize, b: usize| a == b || strict[a][b];
    let sinks: Vec<usize> = (0..total).filter(|&v| adj[v].is_empty()).collect();
    let pne = !sinks.is_empty();
    let connected = pne
        && (0..total).all(|v| sinks.contains(&v) || sinks.iter().all(|&s| strict[v][s]));
    let weakly_acyclic = pne && (0..total).all(|v| sinks.iter().any(|&s| reaches(v, s)));
    let acyclic = (0..total).all(|v| !strict[v][v]);
    // Mutual reachability classes.
    let mut comp = vec![usize::MAX; total];
    let mut scc_count = 0;
    for v in 0..total {
        if comp[v] != usize::MAX {
            continue;
        }
        for (u, slot) in comp.iter_mut().enumerate().skip(v) {
            if *slot == usize::MAX && reaches(v, u) && reaches(u, v) {
                *slot = scc_count;
            }
        }
        scc_count += 1;
    }
    BruteClassification {
        flags: ClassFlags { pne, connected, weakly_acyclic, acyclic },
        sink_count: sinks.len(),
        scc_count,
    }
}

/// Independent classification of a winner table.
pub fn brute_classify(w: &WinnerTable) -> BruteClassification {
    brute_classify_adj(&best_adjacency(w))
}

/// Independent classification of a rank table's better-response graph.
pub fn brute_classify_better(r: &RankTable) -> BruteClassification {
    brute_classify_adj(&better_adjacency(r))
}

/// Exact counts over all winner tables of a shape, with better-response
/// counts over all rank tables where that enumeration is also feasible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleCounts {
    pub tables: u64,
    pub with_pne: u64,
    pub connected: u64,
    pub weakly_acyclic: u64,
    pub acyclic: u64,
    /// Exact mean sink count over all tables.
    pub mean_sinks: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub better: Option<BetterOracleCounts>,
}

/// Exact better-response counts over all rank tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetterOracleCounts {
    pub tables: u64,
    pub with_pne: u64,
    pub connected: u64,
    pub weakly_acyclic: u64,
    pub acyclic: u64,
}

/// Enumerate every table of the shape and count classes exactly.
pub fn exhaustive_oracle(shape: &GridShape, enumeration_cap: u64) -> Result<OracleCounts> {
    let mut counts = OracleCounts {
        tables: 0,
        with_pne: 0,
        connected: 0,
        weakly_acyclic: 0,
        acyclic: 0,
        mean_sinks: 0.0,
        better: None,
    };
    let mut sink_total = 0u64;
    for table in enumerate_winner_tables(shape, enumeration_cap)? {
        let c = brute_classify(&table);
        counts.tables += 1;
        counts.with_pne += c.flags.pne as u64;
        counts.connected += c.flags.connected as u64;
        counts.weakly_acyclic += c.flags.weakly_acyclic as u64;
        counts.acyclic += c.flags.acyclic as u64;
        sink_total += c.sink_count as u64;
    }
    counts.mean_sinks = sink_total as f64 / counts.tables as f64;
    if let Ok(rank_iter) = enumerate_rank_tables(shape, enumeration_cap) {
        let mut better = BetterOracleCounts {
            tables: 0,
            with_pne: 0,
            connected: 0,
            weakly_acyclic: 0,
            acyclic: 0,
        };
        for table in rank_iter {
            let c = brute_classify_better(&table);
            better.tables += 1;
            better.with_pne += c.flags.pne as u64;
            better.connected += c.flags.connected as u64;
            better.weakly_acyclic += c.flags.weakly_acyclic as u64;
            better.acyclic += c.flags.acyclic as u64;
        }
        counts.better = Some(better);
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DEFAULT_MEM_CAP;
    use crate::response::{classify_br, classify_better, scc, sinks};
    use crate::rng::stream;

    fn shape(n: u32, k: u32) -> GridShape {
        GridShape::new(n, k, DEFAULT_MEM_CAP).unwrap()
    }

    #[test]
    fn oracle_counts_n2_k2() {
        let counts = exhaustive_oracle(&shape(2, 2), 1 << 20).unwrap();
        assert_eq!(counts.tables, 16);
        assert_eq!(counts.with_pne, 14);
        // The expected sink count is exactly one.
        assert!((counts.mean_sinks - 1.0).abs() < 1e-12);
        let better = counts.better.unwrap();
        assert_eq!(better.tables, 16);
        assert_eq!(better.with_pne, 14);
    }

    #[test]
    fn production_classifier_matches_oracle_everywhere_n2_k2() {
        let s = shape(2, 2);
        for table in enumerate_winner_tables(&s, 1 << 20).unwrap() {
            let brute = brute_classify(&table);
            assert_eq!(classify_br(&table), brute.flags);
            assert_eq!(sinks(&table).len(), brute.sink_count);
            assert_eq!(scc(&table).count as usize, brute.scc_count);
        }
    }

    #[test]
    fn better_classifier_matches_oracle_on_samples() {
        let s = shape(2, 3);
        let mut rng = stream(11);
        for _ in 0..150 {
            let r = RankTable::sample(&s, &mut rng);
            assert_eq!(classify_better(&r), brute_classify_better(&r).flags);
        }
    }
}
