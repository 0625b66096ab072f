//! Fixed-size bitset over vertex ids; the traversal working sets never
//! materialize edge lists, so this is the only per-vertex state they hold.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    blocks: Vec<u64>,
    capacity: usize,
    ones: usize,
}

impl VertexSet {
    pub fn new(capacity: usize) -> Self {
        VertexSet { blocks: vec![0; capacity.div_ceil(64)], capacity, ones: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of members.
    pub fn count(&self) -> usize {
        self.ones
    }

    pub fn contains(&self, v: usize) -> bool {
        debug_assert!(v < self.capacity);
        self.blocks[v >> 6] & (1u64 << (v & 63)) != 0
    }

    /// Insert; returns true if `v` was new.
    pub fn insert(&mut self, v: usize) -> bool {
        debug_assert!(v < self.capacity);
        let mask = 1u64 << (v & 63);
        let block = &mut self.blocks[v >> 6];
        if *block & mask == 0 {
            *block |= mask;
            self.ones += 1;
            true
        } else {
            false
        }
    }

    pub fn is_full(&self) -> bool {
        self.ones == self.capacity
    }

    /// Any common member with `other`?
    pub fn intersects(&self, other: &VertexSet) -> bool {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .any(|(a, b)| a & b != 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().enumerate().flat_map(|(bi, &block)| {
            let mut bits = block;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let tz = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(bi * 64 + tz)
                }
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let mut s = VertexSet::new(130);
        assert!(s.insert(0));
        assert!(s.insert(129));
        assert!(!s.insert(0));
        assert!(s.contains(0) && s.contains(129) && !s.contains(64));
        assert_eq!(s.count(), 2);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 129]);
        let mut t = VertexSet::new(130);
        t.insert(64);
        assert!(!s.intersects(&t));
        t.insert(129);
        assert!(s.intersects(&t));
    }
}
