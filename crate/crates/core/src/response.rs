//! Implicit best- and better-response digraphs over a table.
//!
//! Neighborhoods are computed from the winners on the fly; traversals hold
//! O(k^n) bits of state, never O(edges). Reachability is an iterative
//! work-list BFS and cycle detection an iterative three-color DFS, so grids
//! up to ~1e7 vertices stay within stack and memory budgets.

use crate::bitset::VertexSet;
use crate::grid::VertexId;
use crate::table::{RankTable, WinnerTable};
use serde::{Deserialize, Serialize};

/// Connectivity classification of one game.
///
/// Invariants: `connected` implies `weakly_acyclic` and `has_pne`;
/// `acyclic` implies `weakly_acyclic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFlags {
    /// At least one sink (pure Nash equilibrium) exists.
    pub pne: bool,
    /// Some sink exists and every non-sink can reach every sink.
    pub connected: bool,
    /// Every vertex can reach a sink.
    pub weakly_acyclic: bool,
    /// The response graph has no directed cycles.
    pub acyclic: bool,
}

/// Backward closure of a target vertex.
pub struct ReachSet {
    /// Vertices with a directed path to the target (the target included).
    pub member: VertexSet,
    /// Distinct lines whose winner lies in `member`.
    pub touched_line_count: usize,
}

/// Neighborhood access shared by the best-response and better-response
/// views of a table.
pub(crate) trait ResponseView {
    fn vertex_count(&self) -> usize;
    fn n(&self) -> u32;
    fn for_each_out(&self, v: VertexId, f: impl FnMut(VertexId));
    fn for_each_in(&self, v: VertexId, f: impl FnMut(VertexId));
    fn is_sink(&self, v: VertexId) -> bool;
}

pub(crate) struct BestView<'a>(pub &'a WinnerTable);

impl ResponseView for BestView<'_> {
    fn vertex_count(&self) -> usize {
        self.0.shape().vertex_count()
    }

    fn n(&self) -> u32 {
        self.0.shape().n()
    }

    fn for_each_out(&self, v: VertexId, mut f: impl FnMut(VertexId)) {
        let shape = self.0.shape();
        for d in 0..shape.n() {
            let w = self.0.winner_vertex(shape.line_through(v, d));
            if w != v {
                // The winner of a line has no out-edge within that line.
                debug_assert!(self.0.wins(w, d));
                f(w);
            }
        }
    }

    fn for_each_in(&self, v: VertexId, mut f: impl FnMut(VertexId)) {
        let shape = self.0.shape();
        for d in 0..shape.n() {
            let line = shape.line_through(v, d);
            let pos = shape.coord(v, d);
            if self.0.winner_pos(line) == pos {
                for p in 0..shape.k() as u16 {
                    if p != pos {
                        f(shape.vertex_on_line(line, p));
                    }
                }
            }
        }
    }

    fn is_sink(&self, v: VertexId) -> bool {
        self.0.is_sink(v)
    }
}

pub(crate) struct BetterView<'a>(pub &'a RankTable);

impl ResponseView for BetterView<'_> {
    fn vertex_count(&self) -> usize {
        self.0.shape().vertex_count()
    }

    fn n(&self) -> u32 {
        self.0.shape().n()
    }

    fn for_each_out(&self, v: VertexId, mut f: impl FnMut(VertexId)) {
        let shape = self.0.shape();
        for d in 0..shape.n() {
            let line = shape.line_through(v, d);
            let pos = shape.coord(v, d);
            // Everything listed before v's position is strictly preferred.
            for &p in self.0.line_ranking(line) {
                if p == pos {
                    break;
                }
                f(shape.vertex_on_line(line, p));
            }
        }
    }

    fn for_each_in(&self, v: VertexId, mut f: impl FnMut(VertexId)) {
        let shape = self.0.shape();
        for d in 0..shape.n() {
            let line = shape.line_through(v, d);
            let pos = shape.coord(v, d);
            let ranking = self.0.line_ranking(line);
            let my_rank = ranking.iter().position(|&p| p == pos).unwrap();
            for &p in &ranking[my_rank + 1..] {
                f(shape.vertex_on_line(line, p));
            }
        }
    }

    fn is_sink(&self, v: VertexId) -> bool {
        let shape = self.0.shape();
        (0..shape.n()).all(|d| {
            let line = shape.line_through(v, d);
            self.0.line_ranking(line)[0] == shape.coord(v, d)
        })
    }
}

/// Best-response out-neighborhood of `v`: at most n vertices, one per
/// dimension; empty exactly when `v` is a sink.
pub fn out_neighbors_br(w: &WinnerTable, v: VertexId) -> Vec<VertexId> {
    let mut out = Vec::with_capacity(w.shape().n() as usize);
    BestView(w).for_each_out(v, |u| out.push(u));
    out
}

/// All sinks (pure Nash equilibria) of the table, ascending.
///
/// Every sink is the winner of its dimension-0 line, so scanning the
/// k^(n-1) dimension-0 winners beats testing all k^n vertices.
pub fn sinks(w: &WinnerTable) -> Vec<VertexId> {
    let shape = w.shape();
    let per_dim = shape.pow(shape.n() - 1);
    let mut out: Vec<VertexId> = (0..per_dim)
        .filter_map(|slot| {
            let line = crate::grid::LineId { dim: 0, slot };
            let v = w.winner_vertex(line);
            (1..shape.n()).all(|d| w.wins(v, d)).then_some(v)
        })
        .collect();
    out.sort_unstable();
    out
}

/// Sinks of the better-response graph; identical to [`sinks`] of the
/// projected winner table.
pub fn sinks_better(r: &RankTable) -> Vec<VertexId> {
    sinks_of(&BetterView(r))
}

fn sinks_of(view: &impl ResponseView) -> Vec<VertexId> {
    (0..view.vertex_count()).filter(|&v| view.is_sink(v)).collect()
}

/// Vertices with a directed best-response path into any of `targets`.
pub(crate) fn backward_closure_br(w: &WinnerTable, targets: &[VertexId]) -> VertexSet {
    backward_closure(&BestView(w), targets)
}

fn backward_closure(view: &impl ResponseView, targets: &[VertexId]) -> VertexSet {
    let mut member = VertexSet::new(view.vertex_count());
    let mut queue: Vec<VertexId> = Vec::new();
    for &t in targets {
        if member.insert(t) {
            queue.push(t);
        }
    }
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        view.for_each_in(v, |u| {
            if member.insert(u) {
                queue.push(u);
            }
        });
    }
    member
}

/// Backward closure of `target` in the best-response graph, together with
/// the count of lines that can reach it (lines whose winner is a member).
pub fn backward_reach(w: &WinnerTable, target: VertexId) -> ReachSet {
    let member = backward_closure(&BestView(w), &[target]);
    let shape = w.shape();
    let touched_line_count = (0..shape.line_count())
        .filter(|&li| member.contains(w.winner_vertex(shape.line_from_index(li))))
        .count();
    ReachSet { member, touched_line_count }
}

fn classify(view: &impl ResponseView, sinks: Vec<VertexId>) -> ClassFlags {
    if sinks.is_empty() {
        // Without a sink nothing can reach one, and a finite acyclic digraph
        // would have one, so every flag is down.
        return ClassFlags { pne: false, connected: false, weakly_acyclic: false, acyclic: false };
    }
    let total = view.vertex_count();
    // Every non-sink reaches s exactly when only the other sinks are missing
    // from s's backward closure.
    let mut connected = true;
    let mut union: Option<VertexSet> = None;
    for &s in &sinks {
        let member = backward_closure(view, &[s]);
        if member.count() != total - (sinks.len() - 1) {
            connected = false;
        }
        match &mut union {
            None => union = Some(member),
            Some(u) => {
                for v in member.iter() {
                    u.insert(v);
                }
            }
        }
    }
    let weakly_acyclic = union.map(|u| u.is_full()).unwrap_or(false);
    ClassFlags { pne: true, connected, weakly_acyclic, acyclic: is_acyclic(view) }
}

/// Classify the best-response graph of a winner table.
pub fn classify_br(w: &WinnerTable) -> ClassFlags {
    classify(&BestView(w), sinks(w))
}

/// Classify the better-response graph of a rank table.
pub fn classify_better(r: &RankTable) -> ClassFlags {
    let view = BetterView(r);
    let s = sinks_of(&view);
    classify(&view, s)
}

/// Three-color iterative DFS over the implicit out-neighborhoods.
fn is_acyclic(view: &impl ResponseView) -> bool {
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let total = view.vertex_count();
    let mut color = vec![WHITE; total];
    // Arena of out-neighbor lists; the frame for v owns outs[start..end].
    let mut outs: Vec<VertexId> = Vec::new();
    // Frames: (vertex, start, cursor, end).
    let mut stack: Vec<(VertexId, usize, usize, usize)> = Vec::new();
    for root in 0..total {
        if color[root] != WHITE {
            continue;
        }
        color[root] = GRAY;
        let start = outs.len();
        view.for_each_out(root, |u| outs.push(u));
        stack.push((root, start, start, outs.len()));
        while let Some(&(v, start, cursor, end)) = stack.last() {
            if cursor == end {
                color[v] = BLACK;
                outs.truncate(start);
                stack.pop();
                continue;
            }
            stack.last_mut().unwrap().2 += 1;
            let u = outs[cursor];
            match color[u] {
                WHITE => {
                    color[u] = GRAY;
                    let s = outs.len();
                    view.for_each_out(u, |x| outs.push(x));
                    stack.push((u, s, s, outs.len()));
                }
                GRAY => return false,
                _ => {}
            }
        }
    }
    true
}

/// Strongly-connected-component labels for the best-response graph.
pub struct SccLabels {
    /// Component id per vertex; mutually reachable vertices share an id.
    pub comp: Vec<u32>,
    pub count: u32,
}

/// Iterative Tarjan over the implicit best-response graph.
pub fn scc(w: &WinnerTable) -> SccLabels {
    let view = BestView(w);
    let total = view.vertex_count();
    let n = view.n();
    const UNSET: u32 = u32::MAX;
    let mut index = vec![UNSET; total];
    let mut low = vec![0u32; total];
    let mut on_stack = vec![false; total];
    let mut comp = vec![UNSET; total];
    let mut next_index: u32 = 0;
    let mut count: u32 = 0;
    let mut tarjan_stack: Vec<VertexId> = Vec::new();
    // Call frames: (vertex, next dimension to try).
    let mut frames: Vec<(VertexId, u32)> = Vec::new();

    let neighbor = |v: VertexId, d: u32| -> Option<VertexId> {
        let shape = w.shape();
        let u = w.winner_vertex(shape.line_through(v, d));
        (u != v).then_some(u)
    };

    for root in 0..total {
        if index[root] != UNSET {
            continue;
        }
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        tarjan_stack.push(root);
        on_stack[root] = true;
        frames.push((root, 0));
        while let Some(&(v, dim)) = frames.last() {
            if dim < n {
                frames.last_mut().unwrap().1 += 1;
                if let Some(u) = neighbor(v, dim) {
                    if index[u] == UNSET {
                        index[u] = next_index;
                        low[u] = next_index;
                        next_index += 1;
                        tarjan_stack.push(u);
                        on_stack[u] = true;
                        frames.push((u, 0));
                    } else if on_stack[u] {
                        low[v] = low[v].min(index[u]);
                    }
                }
            } else {
                if low[v] == index[v] {
                    loop {
                        let u = tarjan_stack.pop().expect("tarjan stack underflow");
                        on_stack[u] = false;
                        comp[u] = count;
                        if u == v {
                            break;
                        }
                    }
                    count += 1;
                }
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[v]);
                }
            }
        }
    }
    SccLabels { comp, count }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridShape, DEFAULT_MEM_CAP};
    use crate::rng::stream;
    use crate::table::enumerate_winner_tables;

    fn shape(n: u32, k: u32) -> GridShape {
        GridShape::new(n, k, DEFAULT_MEM_CAP).unwrap()
    }

    /// Table fixture with every winner at position 0: unique sink at the
    /// origin and every vertex stepping coordinatewise toward it.
    fn all_zero_table(n: u32, k: u32) -> WinnerTable {
        let s = shape(n, k);
        WinnerTable::from_winners(&s, vec![0; s.line_count()]).unwrap()
    }

    /// n=2, k=2 table with no sinks: one directed 4-cycle.
    fn four_cycle_table() -> WinnerTable {
        let s = shape(2, 2);
        WinnerTable::from_winners(&s, vec![0, 1, 1, 0]).unwrap()
    }

    #[test]
    fn out_neighbors_by_definition() {
        let s = shape(2, 2);
        // Row line of (0,0) won by (1,0); column line won by (0,1).
        let w = WinnerTable::from_winners(&s, vec![1, 0, 1, 0]).unwrap();
        let v = s.encode(&[0, 0]);
        let mut got = out_neighbors_br(&w, v);
        got.sort_unstable();
        let mut want = vec![s.encode(&[1, 0]), s.encode(&[0, 1])];
        want.sort_unstable();
        assert_eq!(got, want);
    }

    #[test]
    fn sink_has_no_out_neighbors() {
        let w = all_zero_table(3, 3);
        let origin = 0;
        assert!(w.is_sink(origin));
        assert!(out_neighbors_br(&w, origin).is_empty());
        assert_eq!(sinks(&w), vec![origin]);
    }

    #[test]
    fn edge_count_identity() {
        // Out-degrees sum to n * k^(n-1) * (k-1) for every table.
        let mut rng = stream(2);
        for &(n, k) in &[(2u32, 4u32), (3, 3), (4, 2)] {
            let s = shape(n, k);
            let w = WinnerTable::sample(&s, &mut rng);
            let edges: usize = (0..s.vertex_count())
                .map(|v| out_neighbors_br(&w, v).len())
                .sum();
            assert_eq!(edges, s.line_count() * (k as usize - 1));
        }
    }

    #[test]
    fn backward_reach_trivial_cases() {
        let s = shape(2, 2);
        // Four-cycle table: (1,1) has in-edges only from the cycle; pick a
        // table where some vertex is a source instead.
        let w = WinnerTable::from_winners(&s, vec![0, 0, 0, 0]).unwrap();
        // (1,1) is a source here: it wins nothing and nothing points to it.
        let source = s.encode(&[1, 1]);
        let r = backward_reach(&w, source);
        assert_eq!(r.member.count(), 1);
        assert!(r.member.contains(source));
        assert_eq!(r.touched_line_count, 0);

        let w = all_zero_table(3, 2);
        let r = backward_reach(&w, 0);
        assert_eq!(r.member.count(), 8);
        assert_eq!(r.touched_line_count, 12);
    }

    #[test]
    fn classify_zero_sink_table() {
        let flags = classify_br(&four_cycle_table());
        assert!(!flags.pne && !flags.connected && !flags.weakly_acyclic && !flags.acyclic);
    }

    #[test]
    fn classify_all_zero_table() {
        let flags = classify_br(&all_zero_table(3, 2));
        assert!(flags.pne && flags.connected && flags.weakly_acyclic && flags.acyclic);
    }

    #[test]
    fn scc_structure() {
        // All-zero table: every vertex its own component (acyclic).
        let w = all_zero_table(2, 3);
        let labels = scc(&w);
        assert_eq!(labels.count as usize, w.shape().vertex_count());

        // Four-cycle table: a single component.
        let labels = scc(&four_cycle_table());
        assert_eq!(labels.count, 1);

        // A sink is always a singleton component.
        let mut rng = stream(9);
        let s = shape(3, 3);
        for _ in 0..20 {
            let w = WinnerTable::sample(&s, &mut rng);
            let labels = scc(&w);
            for sink in sinks(&w) {
                let c = labels.comp[sink];
                let size = labels.comp.iter().filter(|&&x| x == c).count();
                assert_eq!(size, 1);
            }
        }
    }

    #[test]
    fn better_sinks_match_projected_winner_sinks() {
        let mut rng = stream(31);
        for &(n, k) in &[(2u32, 3u32), (3, 2)] {
            let s = shape(n, k);
            for _ in 0..5000 {
                let r = RankTable::sample(&s, &mut rng);
                assert_eq!(sinks_better(&r), sinks(&r.winner_table()));
            }
        }
    }

    #[test]
    fn mean_sink_count_is_one() {
        // E[#sinks] = k^n * k^{-n} = 1 exactly; the sample mean stays
        // within 3 sigma of it.
        let s = shape(2, 4);
        let samples = 2000;
        let mut rng = stream(52);
        let total: usize = (0..samples)
            .map(|_| sinks(&WinnerTable::sample(&s, &mut rng)).len())
            .sum();
        let mean = total as f64 / samples as f64;
        let sigma = 1.0 / (samples as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * sigma, "mean sinks {mean}");
    }

    #[test]
    fn class_implication_chain_on_samples() {
        // Diagram of game classes: the six implications must hold on every
        // sampled game.
        let mut rng = stream(47);
        for &(n, k, iters) in &[(2u32, 2u32, 4000usize), (2, 3, 3000), (3, 2, 3000)] {
            let s = shape(n, k);
            for _ in 0..iters {
                let r = RankTable::sample(&s, &mut rng);
                let best = classify_br(&r.winner_table());
                let better = classify_better(&r);
                assert!(!better.acyclic || best.acyclic);
                assert!(!best.acyclic || best.weakly_acyclic);
                assert!(!best.weakly_acyclic || better.weakly_acyclic);
                assert!(!best.connected || best.weakly_acyclic);
                assert!(!best.connected || better.connected);
                assert!(!better.connected || better.weakly_acyclic);
                assert!(!best.connected || best.pne);
            }
        }
    }

    #[test]
    fn backward_reach_excludes_other_sinks() {
        let mut rng = stream(63);
        let s = shape(3, 2);
        let mut multi = 0;
        for _ in 0..400 {
            let w = WinnerTable::sample(&s, &mut rng);
            let sk = sinks(&w);
            if sk.len() < 2 {
                continue;
            }
            multi += 1;
            for &a in &sk {
                let r = backward_reach(&w, a);
                for &b in &sk {
                    if a != b {
                        assert!(!r.member.contains(b));
                    }
                }
            }
        }
        assert!(multi > 0);
    }

    #[test]
    fn enumerated_sink_fraction_n2_k2() {
        // 14 of the 16 tables have at least one sink; mean sink count is 1.
        let s = shape(2, 2);
        let mut with_pne = 0;
        let mut total_sinks = 0usize;
        for t in enumerate_winner_tables(&s, 1 << 20).unwrap() {
            let sk = sinks(&t);
            if !sk.is_empty() {
                with_pne += 1;
            }
            total_sinks += sk.len();
        }
        assert_eq!(with_pne, 14);
        assert_eq!(total_sinks, 16);
    }
}
