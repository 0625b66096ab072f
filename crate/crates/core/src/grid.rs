//! Integer-coded geometry of the grid `[k]^n`: vertices, lines, slices.
//!
//! Vertices are mixed-radix codes (dimension 0 fastest): the profile
//! `(c_0, ..., c_{n-1})` has index `c_0 + c_1 k + ... + c_{n-1} k^{n-1}`.
//! A line in dimension `d` is the set of k vertices agreeing everywhere
//! except coordinate `d`; it is addressed by `(d, slot)` where `slot` is the
//! mixed-radix code of the remaining n-1 coordinates.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Index of an action profile in `[0, k^n)`.
pub type VertexId = usize;

/// One of the `n * k^(n-1)` lines of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LineId {
    /// Dimension the line varies in, `0 <= dim < n`.
    pub dim: u32,
    /// Code of the fixed coordinates, `0 <= slot < k^(n-1)`.
    pub slot: usize,
}

/// Dimensions and derived counts of a grid `[k]^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridShape {
    n: u32,
    k: u32,
    vertex_count: usize,
    line_count: usize,
    /// pow[i] = k^i for i in 0..=n.
    pow: Vec<usize>,
}

/// Default construction budget: bytes of working set a shape may demand.
pub const DEFAULT_MEM_CAP: u64 = 1 << 30;

/// Rough per-shape working-set estimate used against the memory cap:
/// winner storage (2 bytes/line) plus traversal scratch (~16 bytes/vertex
/// covers component labels, visit stamps and a few bitsets).
fn working_set_bytes(vertex_count: u128, line_count: u128) -> u128 {
    16 * vertex_count + 2 * line_count
}

impl GridShape {
    /// Build the shape for `n` players with `k` actions each, failing if the
    /// working set would exceed `mem_cap_bytes`.
    pub fn new(n: u32, k: u32, mem_cap_bytes: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("n must be >= 2, got {n}")));
        }
        if k < 2 {
            return Err(Error::Domain(format!("k must be >= 2, got {k}")));
        }
        if k > u16::MAX as u32 {
            return Err(Error::Domain(format!(
                "k must fit in 16 bits, got {k}"
            )));
        }
        // Grow k^n in u128 so the overflow check itself cannot overflow.
        let mut vertex_count: u128 = 1;
        for _ in 0..n {
            vertex_count = vertex_count.saturating_mul(k as u128);
            if vertex_count > u64::MAX as u128 {
                return Err(Error::ShapeTooLarge {
                    n,
                    k,
                    required: u128::MAX,
                    cap: mem_cap_bytes,
                });
            }
        }
        let line_count = (n as u128) * (vertex_count / k as u128);
        let required = working_set_bytes(vertex_count, line_count);
        if required > mem_cap_bytes as u128 || vertex_count > usize::MAX as u128 {
            return Err(Error::ShapeTooLarge { n, k, required, cap: mem_cap_bytes });
        }
        let vertex_count = vertex_count as usize;
        let mut pow = Vec::with_capacity(n as usize + 1);
        let mut p = 1usize;
        for _ in 0..=n {
            pow.push(p);
            p = p.saturating_mul(k as usize);
        }
        Ok(GridShape {
            n,
            k,
            vertex_count,
            line_count: line_count as usize,
            pow,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn line_count(&self) -> usize {
        self.line_count
    }

    /// k^i for i <= n.
    pub fn pow(&self, i: u32) -> usize {
        self.pow[i as usize]
    }

    /// Mixed-radix encode; `coords.len()` must equal n and entries be < k.
    pub fn encode(&self, coords: &[u16]) -> VertexId {
        debug_assert_eq!(coords.len(), self.n as usize);
        let mut idx = 0usize;
        for (i, &c) in coords.iter().enumerate() {
            debug_assert!((c as u32) < self.k);
            idx += c as usize * self.pow[i];
        }
        idx
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(&self, v: VertexId) -> Vec<u16> {
        let mut out = vec![0u16; self.n as usize];
        self.decode_into(v, &mut out);
        out
    }

    pub fn decode_into(&self, v: VertexId, out: &mut [u16]) {
        debug_assert!(v < self.vertex_count);
        let k = self.k as usize;
        let mut rest = v;
        for c in out.iter_mut().take(self.n as usize) {
            *c = (rest % k) as u16;
            rest /= k;
        }
    }

    /// Coordinate of `v` in dimension `dim`.
    pub fn coord(&self, v: VertexId, dim: u32) -> u16 {
        ((v / self.pow[dim as usize]) % self.k as usize) as u16
    }

    /// The line through `v` in dimension `dim`.
    pub fn line_through(&self, v: VertexId, dim: u32) -> LineId {
        let lo = v % self.pow[dim as usize];
        let hi = v / self.pow[dim as usize + 1];
        LineId { dim, slot: lo + hi * self.pow[dim as usize] }
    }

    /// All n lines through `v`, with `v`'s position on each.
    pub fn lines_through(&self, v: VertexId) -> Vec<(LineId, u16)> {
        (0..self.n)
            .map(|d| (self.line_through(v, d), self.coord(v, d)))
            .collect()
    }

    /// Flat index of a line in `[0, line_count)`: lines grouped by dimension.
    pub fn line_index(&self, line: LineId) -> usize {
        debug_assert!(line.dim < self.n);
        debug_assert!(line.slot < self.pow[self.n as usize - 1]);
        line.dim as usize * self.pow[self.n as usize - 1] + line.slot
    }

    pub fn line_from_index(&self, index: usize) -> LineId {
        let per_dim = self.pow[self.n as usize - 1];
        LineId { dim: (index / per_dim) as u32, slot: index % per_dim }
    }

    /// Vertex at position `pos` on `line`.
    pub fn vertex_on_line(&self, line: LineId, pos: u16) -> VertexId {
        debug_assert!((pos as u32) < self.k);
        let base = self.pow[line.dim as usize];
        let lo = line.slot % base;
        let hi = line.slot / base;
        lo + pos as usize * base + hi * base * self.k as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts_small_grids() {
        let s = GridShape::new(3, 2, DEFAULT_MEM_CAP).unwrap();
        assert_eq!(s.vertex_count(), 8);
        assert_eq!(s.line_count(), 12);
        let s = GridShape::new(2, 2, DEFAULT_MEM_CAP).unwrap();
        assert_eq!(s.line_count(), 4);
    }

    #[test]
    fn oversized_shape_rejected() {
        // 20^20 overflows any desk-scale budget.
        let err = GridShape::new(20, 20, DEFAULT_MEM_CAP).unwrap_err();
        assert!(matches!(err, Error::ShapeTooLarge { .. }));
        // Also rejected with a cap it would nominally fit under arithmetic-wise.
        assert!(GridShape::new(4, 1000, 1 << 20).is_err());
    }

    #[test]
    fn degenerate_parameters_rejected() {
        assert!(GridShape::new(1, 2, DEFAULT_MEM_CAP).is_err());
        assert!(GridShape::new(2, 1, DEFAULT_MEM_CAP).is_err());
    }

    #[test]
    fn lines_through_origin_n2() {
        let s = GridShape::new(2, 2, DEFAULT_MEM_CAP).unwrap();
        let v = s.encode(&[0, 0]);
        let lines = s.lines_through(v);
        assert_eq!(lines.len(), 2);
        for (line, pos) in lines {
            assert_eq!(pos, 0);
            assert_eq!(s.vertex_on_line(line, 0), v);
        }
    }

    #[test]
    fn lines_through_n3() {
        let s = GridShape::new(3, 2, DEFAULT_MEM_CAP).unwrap();
        let v = s.encode(&[1, 0, 1]);
        let lines = s.lines_through(v);
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].1, 1);
        assert_eq!(lines[1].1, 0);
        assert_eq!(lines[2].1, 1);
    }

    #[test]
    fn line_partition_per_dimension() {
        // For each dimension the k^(n-1) lines partition all k^n vertices.
        let s = GridShape::new(3, 3, DEFAULT_MEM_CAP).unwrap();
        for d in 0..3 {
            let mut seen = vec![false; s.vertex_count()];
            for slot in 0..s.pow(2) {
                let line = LineId { dim: d, slot };
                for pos in 0..3u16 {
                    let v = s.vertex_on_line(line, pos);
                    assert!(!seen[v], "vertex covered twice in dim {d}");
                    seen[v] = true;
                    assert_eq!(s.line_through(v, d), line);
                    assert_eq!(s.coord(v, d), pos);
                }
            }
            assert!(seen.iter().all(|&b| b));
        }
    }

    proptest! {
        #[test]
        fn codec_roundtrip(n in 2u32..6, k in 2u32..6, raw in any::<u64>()) {
            let s = GridShape::new(n, k, DEFAULT_MEM_CAP).unwrap();
            let v = (raw as usize) % s.vertex_count();
            let coords = s.decode(v);
            prop_assert_eq!(s.encode(&coords), v);
            for d in 0..n {
                prop_assert_eq!(coords[d as usize], s.coord(v, d));
            }
        }

        #[test]
        fn two_vertices_share_at_most_one_line(
            n in 2u32..5, k in 2u32..5, a in any::<u64>(), b in any::<u64>()
        ) {
            let s = GridShape::new(n, k, DEFAULT_MEM_CAP).unwrap();
            let a = (a as usize) % s.vertex_count();
            let b = (b as usize) % s.vertex_count();
            if a != b {
                let la: std::collections::HashSet<_> =
                    s.lines_through(a).into_iter().map(|(l, _)| l).collect();
                let shared = s
                    .lines_through(b)
                    .into_iter()
                    .filter(|(l, _)| la.contains(l))
                    .count();
                prop_assert!(shared <= 1);
            }
        }
    }
}
