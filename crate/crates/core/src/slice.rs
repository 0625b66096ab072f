//! Two-dimensional slice analysis: complete cycle inventories with basin
//! sizes, good-cycle filtering, and the three global structure checks
//! (shared component, reachability into the cycles, reachability out to the
//! good sinks).
//!
//! Within a slice only dimensions 0 and 1 vary, and the winner of a line has
//! no out-edge inside that line, so every directed walk alternates
//! dimensions after its first move. The slice dynamics therefore live on a
//! state graph over (vertex, next-dimension) pairs with out-degree at most
//! one: its cycles are exactly the slice's best-response cycles, and each
//! state leads to at most one cycle, so a vertex belongs to at most two
//! basins. Inventory and basins cost O(k^2) per slice.

use crate::bitset::VertexSet;
use crate::census::census;
use crate::error::{Error, Result};
use crate::grid::{GridShape, VertexId};
use crate::response::{backward_closure_br, scc};
use crate::table::WinnerTable;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// The two winner maps of one slice: a standalone `L(2, k)`-like object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceTable {
    k: u32,
    /// Winner coordinate-0 of the dimension-0 line at each coordinate-1 value.
    horiz: Vec<u16>,
    /// Winner coordinate-1 of the dimension-1 line at each coordinate-0 value.
    vert: Vec<u16>,
}

/// A slice of a larger grid: coordinates 2..n pinned to `anchor`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceRef {
    pub anchor: Vec<u16>,
}

/// One best-response cycle of a slice with its basin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceCycle {
    /// Cycle vertices in walk order; even length, dimensions alternating.
    pub vertices: Vec<(u16, u16)>,
    /// Slice vertices with a within-slice directed path to the cycle
    /// (cycle vertices included).
    pub basin_size: usize,
    pub good: bool,
}

impl SliceCycle {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

impl SliceTable {
    pub fn k(&self) -> u32 {
        self.k
    }

    /// Sample the 2k line winners independently and uniformly.
    pub fn sample(k: u32, rng: &mut impl Rng) -> Self {
        let horiz = (0..k).map(|_| rng.random_range(0..k) as u16).collect();
        let vert = (0..k).map(|_| rng.random_range(0..k) as u16).collect();
        SliceTable { k, horiz, vert }
    }

    pub fn from_winner_maps(k: u32, horiz: Vec<u16>, vert: Vec<u16>) -> Result<Self> {
        if horiz.len() != k as usize || vert.len() != k as usize {
            return Err(Error::Config("winner maps must each have k entries".into()));
        }
        if horiz.iter().chain(&vert).any(|&p| p as u32 >= k) {
            return Err(Error::Config("winner position out of range".into()));
        }
        Ok(SliceTable { k, horiz, vert })
    }

    /// Extract the slice of `w` at `anchor` (coordinates 2..n). For n = 2
    /// the anchor is empty and the whole grid is the single slice.
    pub fn from_table(w: &WinnerTable, anchor: &[u16]) -> Result<Self> {
        let shape = w.shape();
        if anchor.len() != shape.n() as usize - 2 {
            return Err(Error::Config(format!(
                "anchor must fix {} coordinates, got {}",
                shape.n() - 2,
                anchor.len()
            )));
        }
        let k = shape.k();
        let mut coords = vec![0u16; shape.n() as usize];
        coords[2..].copy_from_slice(anchor);
        let mut horiz = Vec::with_capacity(k as usize);
        for y in 0..k as u16 {
            coords[0] = 0;
            coords[1] = y;
            horiz.push(w.winner_pos(shape.line_through(shape.encode(&coords), 0)));
        }
        let mut vert = Vec::with_capacity(k as usize);
        for x in 0..k as u16 {
            coords[0] = x;
            coords[1] = 0;
            vert.push(w.winner_pos(shape.line_through(shape.encode(&coords), 1)));
        }
        Ok(SliceTable { k, horiz, vert })
    }

    /// Successor in the state graph; states are `2 * (x + y k) + next_dim`.
    fn succ(&self, state: usize) -> Option<usize> {
        let k = self.k as usize;
        let dim = state & 1;
        let v = state >> 1;
        let (x, y) = (v % k, v / k);
        if dim == 0 {
            let nx = self.horiz[y] as usize;
            (nx != x).then(|| ((nx + y * k) << 1) | 1)
        } else {
            let ny = self.vert[x] as usize;
            (ny != y).then(|| (x + ny * k) << 1)
        }
    }
}

/// Thresholds a cycle must meet to be good: length at least sqrt(k) and
/// basin at least k^2 / (800 ln k). Natural logarithm.
pub fn good_cycle_thresholds(k: u32) -> (f64, f64) {
    let kf = k as f64;
    (kf.sqrt(), kf * kf / (800.0 * kf.ln()))
}

/// Complete cycle inventory of the slice with basin sizes.
pub fn cycles_and_basins(slice: &SliceTable) -> Vec<SliceCycle> {
    let k = slice.k as usize;
    let states = 2 * k * k;
    const UNVISITED: u32 = u32::MAX;
    const NO_CYCLE: u32 = u32::MAX - 1;
    const NOT_ON_PATH: u32 = u32::MAX;
    // Cycle id (or NO_CYCLE) each state eventually reaches.
    let mut leads_to = vec![UNVISITED; states];
    let mut pos_in_path = vec![NOT_ON_PATH; states];
    let mut path: Vec<usize> = Vec::new();
    let mut cycles: Vec<Vec<usize>> = Vec::new();

    for start in 0..states {
        if leads_to[start] != UNVISITED {
            continue;
        }
        path.clear();
        let mut cur = start;
        let outcome = loop {
            if leads_to[cur] != UNVISITED {
                break leads_to[cur];
            }
            if pos_in_path[cur] != NOT_ON_PATH {
                // Walked into the current path: the tail is a new cycle.
                let cycle_start = pos_in_path[cur] as usize;
                let id = cycles.len() as u32;
                for &s in &path[cycle_start..] {
                    leads_to[s] = id;
                    pos_in_path[s] = NOT_ON_PATH;
                }
                cycles.push(path[cycle_start..].to_vec());
                path.truncate(cycle_start);
                break id;
            }
            pos_in_path[cur] = path.len() as u32;
            path.push(cur);
            match slice.succ(cur) {
                Some(next) => cur = next,
                None => break NO_CYCLE,
            }
        };
        for &s in &path {
            leads_to[s] = outcome;
            pos_in_path[s] = NOT_ON_PATH;
        }
    }

    let mut basins = vec![0usize; cycles.len()];
    for v in 0..k * k {
        let a = leads_to[v << 1];
        let b = leads_to[(v << 1) | 1];
        if a != NO_CYCLE {
            basins[a as usize] += 1;
        }
        if b != NO_CYCLE && b != a {
            basins[b as usize] += 1;
        }
    }

    let (min_len, min_basin) = good_cycle_thresholds(slice.k);
    cycles
        .into_iter()
        .zip(basins)
        .map(|(states, basin_size)| {
            let vertices: Vec<(u16, u16)> = states
                .iter()
                .map(|&s| {
                    let v = s >> 1;
                    ((v % k) as u16, (v / k) as u16)
                })
                .collect();
            debug_assert!(vertices.len().is_multiple_of(2) && vertices.len() >= 2);
            debug_assert!(
                states.windows(2).all(|w| (w[0] & 1) != (w[1] & 1)),
                "cycle must alternate dimensions"
            );
            let good = vertices.len() as f64 >= min_len && basin_size as f64 >= min_basin;
            SliceCycle { vertices, basin_size, good }
        })
        .collect()
}

/// The good cycles of the slice.
pub fn good_cycles(slice: &SliceTable) -> Vec<SliceCycle> {
    cycles_and_basins(slice).into_iter().filter(|c| c.good).collect()
}

/// A good cycle located in the full grid.
#[derive(Debug, Clone)]
pub struct GlobalCycle {
    pub slice: SliceRef,
    /// Cycle vertices as global ids.
    pub vertices: Vec<VertexId>,
    pub basin_size: usize,
}

/// Iterate the anchors of all k^(n-2) slices.
pub fn slice_anchors(shape: &GridShape) -> impl Iterator<Item = Vec<u16>> + '_ {
    let dims = shape.n() as usize - 2;
    let k = shape.k() as u16;
    let mut next = Some(vec![0u16; dims]);
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut digits = current.clone();
        for d in digits.iter_mut() {
            *d += 1;
            if *d < k {
                next = Some(digits);
                return Some(current);
            }
            *d = 0;
        }
        Some(current)
    })
}

/// Collect the good cycles of every slice, with global vertex ids.
pub fn collect_good_cycles(w: &WinnerTable) -> Result<Vec<GlobalCycle>> {
    let shape = w.shape();
    let k = shape.k() as usize;
    let mut out = Vec::new();
    for anchor in slice_anchors(shape) {
        let slice = SliceTable::from_table(w, &anchor)?;
        let base: usize = anchor
            .iter()
            .enumerate()
            .map(|(i, &a)| a as usize * shape.pow(i as u32 + 2))
            .sum();
        for cycle in cycles_and_basins(&slice) {
            if cycle.good {
                let vertices = cycle
                    .vertices
                    .iter()
                    .map(|&(x, y)| base + x as usize + y as usize * k)
                    .collect();
                out.push(GlobalCycle {
                    slice: SliceRef { anchor: anchor.clone() },
                    vertices,
                    basin_size: cycle.basin_size,
                });
            }
        }
    }
    Ok(out)
}

/// Outcome of the shared-component check.
#[derive(Debug, Clone)]
pub struct SccCheck {
    pub holds: bool,
    /// A pair of vertices from good cycles in different components.
    pub witness: Option<(VertexId, VertexId)>,
    pub good_cycle_count: usize,
}

/// Do all good cycles lie in one strongly connected component? Vacuously
/// true with at most one good cycle.
pub fn all_good_cycles_one_scc(w: &WinnerTable) -> Result<SccCheck> {
    let cycles = collect_good_cycles(w)?;
    Ok(all_good_cycles_one_scc_with(w, &cycles))
}

/// As [`all_good_cycles_one_scc`], with the cycles already collected.
pub fn all_good_cycles_one_scc_with(w: &WinnerTable, cycles: &[GlobalCycle]) -> SccCheck {
    if cycles.len() <= 1 {
        return SccCheck { holds: true, witness: None, good_cycle_count: cycles.len() };
    }
    let labels = scc(w);
    let first = cycles[0].vertices[0];
    for cycle in &cycles[1..] {
        let v = cycle.vertices[0];
        if labels.comp[v] != labels.comp[first] {
            return SccCheck {
                holds: false,
                witness: Some((first, v)),
                good_cycle_count: cycles.len(),
            };
        }
    }
    SccCheck { holds: true, witness: None, good_cycle_count: cycles.len() }
}

/// Outcome of the every-non-sink-reaches-a-good-cycle check.
#[derive(Debug, Clone)]
pub struct ReachCheck {
    pub holds: bool,
    /// Non-sinks with no directed path to any good cycle.
    pub counterexamples: Vec<VertexId>,
    pub good_cycle_count: usize,
}

pub fn nonsinks_reach_good_cycle(w: &WinnerTable) -> Result<ReachCheck> {
    let cycles = collect_good_cycles(w)?;
    Ok(nonsinks_reach_good_cycle_with(w, &cycles))
}

/// As [`nonsinks_reach_good_cycle`], with the cycles already collected.
pub fn nonsinks_reach_good_cycle_with(w: &WinnerTable, cycles: &[GlobalCycle]) -> ReachCheck {
    let targets: Vec<VertexId> = cycles.iter().flat_map(|c| c.vertices.iter().copied()).collect();
    let closure = backward_closure_br(w, &targets);
    let shape = w.shape();
    let counterexamples: Vec<VertexId> = (0..shape.vertex_count())
        .filter(|&v| !closure.contains(v) && !w.is_sink(v))
        .collect();
    ReachCheck {
        holds: counterexamples.is_empty(),
        counterexamples,
        good_cycle_count: cycles.len(),
    }
}

/// Outcome of the every-good-sink-reached-from-a-good-cycle check.
#[derive(Debug, Clone)]
pub struct GoodSinkCheck {
    pub holds: bool,
    /// Good sinks not reachable from any good cycle.
    pub counterexamples: Vec<VertexId>,
    pub good_sink_count: usize,
}

/// Requires epsilon < 1/6. Vacuously true when there are no good sinks.
pub fn good_sinks_reached_from_good_cycle(w: &WinnerTable, epsilon: f64) -> Result<GoodSinkCheck> {
    let cycles = collect_good_cycles(w)?;
    good_sinks_reached_from_good_cycle_with(w, epsilon, &cycles)
}

/// As [`good_sinks_reached_from_good_cycle`], with the cycles collected.
pub fn good_sinks_reached_from_good_cycle_with(
    w: &WinnerTable,
    epsilon: f64,
    cycles: &[GlobalCycle],
) -> Result<GoodSinkCheck> {
    if !(epsilon > 0.0 && epsilon < 1.0 / 6.0) {
        return Err(Error::Domain(format!(
            "good-sink reachability needs epsilon in (0, 1/6), got {epsilon}"
        )));
    }
    let good_sinks = census(w, epsilon)?.good;
    if good_sinks.is_empty() {
        return Ok(GoodSinkCheck { holds: true, counterexamples: Vec::new(), good_sink_count: 0 });
    }
    let mut cycle_set = VertexSet::new(w.shape().vertex_count());
    for c in cycles {
        for &v in &c.vertices {
            cycle_set.insert(v);
        }
    }
    let mut counterexamples = Vec::new();
    for &s in &good_sinks {
        let reach = crate::response::backward_reach(w, s);
        if !reach.member.intersects(&cycle_set) {
            counterexamples.push(s);
        }
    }
    Ok(GoodSinkCheck {
        holds: counterexamples.is_empty(),
        counterexamples,
        good_sink_count: good_sinks.len(),
    })
}
