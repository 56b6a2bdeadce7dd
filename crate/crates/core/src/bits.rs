//! Fixed-capacity bit set for request lines and similar per-neuron flags.

/// A 256-bit set indexed by neuron number within a core.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BitSet256 {
    words: [u64; 4],
}

impl BitSet256 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, index: usize) {
        assert!(index < 256);
        self.words[index / 64] |= 1 << (index % 64);
    }

    pub fn clear(&mut self, index: usize) {
        assert!(index < 256);
        self.words[index / 64] &= !(1 << (index % 64));
    }

    pub fn get(&self, index: usize) -> bool {
        assert!(index < 256);
        self.words[index / 64] & (1 << (index % 64)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn count(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Lowest set bit, if any (the highest-priority pending request).
    pub fn min_set_bit(&self) -> Option<usize> {
        for (i, w) in self.words.iter().enumerate() {
            if *w != 0 {
                return Some(i * 64 + w.trailing_zeros() as usize);
            }
        }
        None
    }

    /// Iterate set bits in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let words = self.words;
        (0..4).flat_map(move |i| {
            let mut w = words[i];
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(i * 64 + b)
                }
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_set_bit_scans_ascending() {
        let mut s = BitSet256::new();
        assert_eq!(s.min_set_bit(), None);
        s.set(200);
        s.set(7);
        s.set(63);
        assert_eq!(s.min_set_bit(), Some(7));
        s.clear(7);
        assert_eq!(s.min_set_bit(), Some(63));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![63, 200]);
    }

    #[test]
    fn count_and_empty() {
        let mut s = BitSet256::new();
        assert!(s.is_empty());
        for i in [0usize, 64, 128, 255] {
            s.set(i);
        }
        assert_eq!(s.count(), 4);
        assert!(s.get(255));
        assert!(!s.get(1));
    }
}
