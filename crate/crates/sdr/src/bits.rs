//! Fixed-width bit vector used for world states and classical states.

/// A fixed-width vector of bits. Width is set at construction and never
/// changes; indexing out of range panics.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    width: usize,
    blocks: Vec<u64>,
}

impl BitVec {
    pub fn zeros(width: usize) -> Self {
        BitVec {
            width,
            blocks: vec![0; width.div_ceil(64)],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        debug_assert!(idx < self.width);
        self.blocks[idx / 64] & (1u64 << (idx % 64)) != 0
    }

    #[inline]
    pub fn set(&mut self, idx: usize, value: bool) {
        debug_assert!(idx < self.width);
        let mask = 1u64 << (idx % 64);
        if value {
            self.blocks[idx / 64] |= mask;
        } else {
            self.blocks[idx / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Indices of set bits, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(|&i| self.get(i))
    }
}

impl std::fmt::Debug for BitVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitVec[")?;
        for (n, i) in self.iter_ones().enumerate() {
            if n > 0 {
                write!(f, " ")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_roundtrip() {
        let mut b = BitVec::zeros(130);
        b.set(0, true);
        b.set(64, true);
        b.set(129, true);
        assert!(b.get(0) && b.get(64) && b.get(129));
        assert!(!b.get(1) && !b.get(128));
        assert_eq!(b.count_ones(), 3);
        assert_eq!(b.iter_ones().collect::<Vec<_>>(), vec![0, 64, 129]);
        b.set(64, false);
        assert!(!b.get(64));
    }

    #[test]
    fn ordering_is_total_and_stable() {
        let mut a = BitVec::zeros(8);
        let mut b = BitVec::zeros(8);
        a.set(3, true);
        b.set(5, true);
        assert!(a != b);
        assert_eq!(a.cmp(&b), a.cmp(&b));
    }
}
