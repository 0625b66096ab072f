//! Winner tables and rank tables over a grid.
//!
//! A [`WinnerTable`] keeps one winner per line and is simultaneously the
//! random model on the grid and a game's best-response graph. A [`RankTable`]
//! keeps a full per-line ranking (best to worst) and encodes the
//! better-response structure of a generic ordinal game; its top entries
//! project onto a winner table. Winners are stored as position-in-line
//! (2 bytes per line), never as global vertex ids.

use crate::error::{Error, Result};
use crate::grid::{GridShape, LineId, VertexId};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One winner per line; entries are positions in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinnerTable {
    shape: GridShape,
    winners: Vec<u16>,
}

impl WinnerTable {
    /// Sample every line's winner independently and uniformly.
    pub fn sample(shape: &GridShape, rng: &mut impl Rng) -> Self {
        let k = shape.k();
        let winners = (0..shape.line_count())
            .map(|_| rng.random_range(0..k) as u16)
            .collect();
        WinnerTable { shape: shape.clone(), winners }
    }

    /// Wrap explicit winners; every entry must be `< k` and the vector must
    /// have exactly `line_count` entries.
    pub fn from_winners(shape: &GridShape, winners: Vec<u16>) -> Result<Self> {
        if winners.len() != shape.line_count() {
            return Err(Error::Config(format!(
                "expected {} winners, got {}",
                shape.line_count(),
                winners.len()
            )));
        }
        if let Some(&w) = winners.iter().find(|&&w| w as u32 >= shape.k()) {
            return Err(Error::Config(format!(
                "winner position {w} out of range for k={}",
                shape.k()
            )));
        }
        Ok(WinnerTable { shape: shape.clone(), winners })
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn winners(&self) -> &[u16] {
        &self.winners
    }

    /// Winner position of `line`.
    pub fn winner_pos(&self, line: LineId) -> u16 {
        self.winners[self.shape.line_index(line)]
    }

    /// Winner of `line` as a vertex.
    pub fn winner_vertex(&self, line: LineId) -> VertexId {
        self.shape.vertex_on_line(line, self.winner_pos(line))
    }

    /// Does `v` win its line in dimension `dim`?
    pub fn wins(&self, v: VertexId, dim: u32) -> bool {
        self.winner_pos(self.shape.line_through(v, dim)) == self.shape.coord(v, dim)
    }

    /// A sink wins all n of its lines (a pure Nash equilibrium).
    pub fn is_sink(&self, v: VertexId) -> bool {
        (0..self.shape.n()).all(|d| self.wins(v, d))
    }

    /// Compact JSON form `{n, k, winners: [...]}`.
    pub fn to_json(&self) -> Result<String> {
        let wire = WireTable {
            n: self.shape.n(),
            k: self.shape.k(),
            winners: self.winners.clone(),
        };
        Ok(serde_json::to_string(&wire)?)
    }

    pub fn from_json(json: &str, mem_cap_bytes: u64) -> Result<Self> {
        let wire: WireTable = serde_json::from_str(json)?;
        let shape = GridShape::new(wire.n, wire.k, mem_cap_bytes)?;
        WinnerTable::from_winners(&shape, wire.winners)
    }

    /// Raw little-endian form: `[n: u32][k: u32][winners: u16 x line_count]`.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 2 * self.winners.len());
        out.extend_from_slice(&self.shape.n().to_le_bytes());
        out.extend_from_slice(&self.shape.k().to_le_bytes());
        for &w in &self.winners {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8], mem_cap_bytes: u64) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::Config("raw table shorter than its header".into()));
        }
        let n = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
        let k = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        let shape = GridShape::new(n, k, mem_cap_bytes)?;
        let body = &bytes[8..];
        if body.len() != 2 * shape.line_count() {
            return Err(Error::Config(format!(
                "raw table body has {} bytes, expected {}",
                body.len(),
                2 * shape.line_count()
            )));
        }
        let winners = body
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        WinnerTable::from_winners(&shape, winners)
    }
}

#[derive(Serialize, Deserialize)]
struct WireTable {
    n: u32,
    k: u32,
    winners: Vec<u16>,
}

/// A full ranking per line, best to worst; stored flattened, k entries per
/// line in line-index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTable {
    shape: GridShape,
    ranks: Vec<u16>,
}

impl RankTable {
    /// Sample an independent uniform permutation of `[0, k)` for each line.
    pub fn sample(shape: &GridShape, rng: &mut impl Rng) -> Self {
        let k = shape.k() as usize;
        let mut ranks = Vec::with_capacity(shape.line_count() * k);
        let mut perm: Vec<u16> = (0..k as u16).collect();
        for _ in 0..shape.line_count() {
            perm.shuffle(rng);
            ranks.extend_from_slice(&perm);
        }
        RankTable { shape: shape.clone(), ranks }
    }

    /// Wrap explicit rankings; each line's chunk must be a permutation of
    /// `[0, k)`.
    pub fn from_ranks(shape: &GridShape, ranks: Vec<u16>) -> Result<Self> {
        let k = shape.k() as usize;
        if ranks.len() != shape.line_count() * k {
            return Err(Error::Config(format!(
                "expected {} rank entries, got {}",
                shape.line_count() * k,
                ranks.len()
            )));
        }
        let mut seen = vec![false; k];
        for chunk in ranks.chunks_exact(k) {
            seen.iter_mut().for_each(|s| *s = false);
            for &p in chunk {
                if p as usize >= k || seen[p as usize] {
                    return Err(Error::Config("line ranking is not a permutation".into()));
                }
                seen[p as usize] = true;
            }
        }
        Ok(RankTable { shape: shape.clone(), ranks })
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    /// Ranking of `line`, best to worst.
    pub fn line_ranking(&self, line: LineId) -> &[u16] {
        let k = self.shape.k() as usize;
        let i = self.shape.line_index(line) * k;
        &self.ranks[i..i + k]
    }

    /// Rank index (0 = best) of position `pos` within `line`.
    pub fn rank_of(&self, line: LineId, pos: u16) -> usize {
        self.line_ranking(line)
            .iter()
            .position(|&p| p == pos)
            .expect("position outside line")
    }

    /// Project to the winner table formed by each line's top entry.
    pub fn winner_table(&self) -> WinnerTable {
        let k = self.shape.k() as usize;
        let winners = self.ranks.iter().step_by(k).copied().collect();
        WinnerTable { shape: self.shape.clone(), winners }
    }
}

/// Iterator over every winner table of a shape, odometer order.
pub struct WinnerTableIter {
    shape: GridShape,
    next: Option<Vec<u16>>,
}

impl Iterator for WinnerTableIter {
    type Item = WinnerTable;

    fn next(&mut self) -> Option<WinnerTable> {
        let current = self.next.take()?;
        let table = WinnerTable { shape: self.shape.clone(), winners: current.clone() };
        let k = self.shape.k() as u16;
        let mut digits = current;
        for d in digits.iter_mut() {
            *d += 1;
            if *d < k {
                self.next = Some(digits);
                return Some(table);
            }
            *d = 0;
        }
        // Wrapped around: this was the last table.
        Some(table)
    }
}

/// Enumerate all `k^line_count` winner tables, failing when the count
/// exceeds `cap`.
pub fn enumerate_winner_tables(shape: &GridShape, cap: u64) -> Result<WinnerTableIter> {
    let needed = count_pow(shape.k() as u128, shape.line_count() as u32);
    if needed > cap as u128 {
        return Err(Error::EnumerationCap { needed, cap });
    }
    Ok(WinnerTableIter {
        shape: shape.clone(),
        next: Some(vec![0u16; shape.line_count()]),
    })
}

/// Iterator over every rank table of a shape: odometer over per-line
/// permutation indices.
pub struct RankTableIter {
    shape: GridShape,
    perms: Vec<Vec<u16>>,
    next: Option<Vec<usize>>,
}

impl Iterator for RankTableIter {
    type Item = RankTable;

    fn next(&mut self) -> Option<RankTable> {
        let current = self.next.take()?;
        let k = self.shape.k() as usize;
        let mut ranks = Vec::with_capacity(self.shape.line_count() * k);
        for &pi in &current {
            ranks.extend_from_slice(&self.perms[pi]);
        }
        let table = RankTable { shape: self.shape.clone(), ranks };
        let mut digits = current;
        for d in digits.iter_mut() {
            *d += 1;
            if *d < self.perms.len() {
                self.next = Some(digits);
                return Some(table);
            }
            *d = 0;
        }
        Some(table)
    }
}

/// Enumerate all `(k!)^line_count` rank tables, failing above `cap`.
pub fn enumerate_rank_tables(shape: &GridShape, cap: u64) -> Result<RankTableIter> {
    let k = shape.k() as usize;
    let mut fact: u128 = 1;
    for i in 2..=k as u128 {
        fact = fact.saturating_mul(i);
    }
    let needed = count_pow(fact, shape.line_count() as u32);
    if needed > cap as u128 {
        return Err(Error::EnumerationCap { needed, cap });
    }
    let mut perms = Vec::with_capacity(fact as usize);
    let mut current: Vec<u16> = (0..k as u16).collect();
    loop {
        perms.push(current.clone());
        if !next_permutation(&mut current) {
            break;
        }
    }
    Ok(RankTableIter {
        shape: shape.clone(),
        perms,
        next: Some(vec![0usize; shape.line_count()]),
    })
}

fn count_pow(base: u128, exp: u32) -> u128 {
    let mut out: u128 = 1;
    for _ in 0..exp {
        out = out.saturating_mul(base);
    }
    out
}

fn next_permutation(perm: &mut [u16]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}
