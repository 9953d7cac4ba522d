//! Occupation configurations as bit vectors.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    len: usize,
    words: Vec<u64>,
}

impl Configuration {
    pub fn empty(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn full(len: usize) -> Self {
        let mut c = Self::empty(len);
        for x in 0..len {
            c.set(x, true);
        }
        c
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut c = Self::empty(bits.len());
        for (x, &b) in bits.iter().enumerate() {
            c.set(x, b);
        }
        c
    }

    /// Decodes a state index: site `x` is bit `x`.
    pub fn from_index(len: usize, index: usize) -> Self {
        let mut c = Self::empty(len);
        if len > 0 {
            c.words[0] = index as u64;
        }
        c
    }

    /// Inverse of [`Configuration::from_index`]; only meaningful for `len <= 64`.
    pub fn index(&self) -> usize {
        self.words.first().copied().unwrap_or(0) as usize
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, x: usize) -> bool {
        self.words[x / 64] >> (x % 64) & 1 == 1
    }

    pub fn set(&mut self, x: usize, value: bool) {
        let bit = 1u64 << (x % 64);
        if value {
            self.words[x / 64] |= bit;
        } else {
            self.words[x / 64] &= !bit;
        }
    }

    pub fn occupancy(&self, x: usize) -> f64 {
        if self.get(x) {
            1.0
        } else {
            0.0
        }
    }

    /// `eta^a`: flips the occupancy of `a`.
    pub fn flip(&mut self, a: usize) {
        self.words[a / 64] ^= 1u64 << (a % 64);
    }

    /// `eta^{xy}`: exchanges the occupancies of `x` and `y`.
    pub fn swap(&mut self, x: usize, y: usize) {
        if self.get(x) != self.get(y) {
            self.flip(x);
            self.flip(y);
        }
    }

    pub fn particle_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|x| self.get(x))
    }

    /// Mean occupancy over `sites`.
    pub fn average(&self, sites: &[usize]) -> f64 {
        sites.iter().filter(|&&x| self.get(x)).count() as f64 / sites.len() as f64
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        write!(f, "Configuration({s})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn index_round_trip() {
        let c = Configuration::from_index(5, 0b10110);
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![false, true, true, false, true]);
        assert_eq!(c.index(), 0b10110);
        assert_eq!(c.particle_count(), 3);
    }

    proptest! {
        #[test]
        fn swaps_and_flips_are_involutions(bits in proptest::collection::vec(any::<bool>(), 1..150), x in 0usize..150, y in 0usize..150) {
            let n = bits.len();
            let (x, y) = (x % n, y % n);
            let c = Configuration::from_bools(&bits);
            let mut d = c.clone();
            d.swap(x, y);
            prop_assert_eq!(d.particle_count(), c.particle_count());
            d.swap(x, y);
            prop_assert_eq!(&d, &c);
            let mut e = c.clone();
            e.flip(x);
            prop_assert_eq!(e.particle_count().abs_diff(c.particle_count()), 1);
            e.flip(x);
            prop_assert_eq!(e, c);
        }
    }
}
