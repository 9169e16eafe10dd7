//! Counter-based random substreams.
//!
//! Every random quantity in the crate is addressed by a key path such as
//! `(seed, domain, voter, draw)`. A [`Substream`] is a pure function of that
//! path and an internal counter, so the value a voter receives never depends
//! on how work was split across threads or on how many other voters exist.

use crate::normal::std_normal_inv_cdf;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Domain labels separating unrelated uses of the same master seed.
pub mod domain {
    pub const ELECTORATE: u64 = 0x454c_4543_544f_5241;
    pub const PERCEPTION: u64 = 0x5045_5243_4550_5431;
    pub const SURVEY: u64 = 0x5355_5256_4559_5f31;
    pub const ELECTION: u64 = 0x454c_4543_5449_4f4e;
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic stream of random values keyed by a label path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substream {
    key: u64,
    counter: u64,
}

impl Substream {
    /// Root stream for `(seed, domain)`.
    pub fn root(seed: u64, domain: u64) -> Self {
        let key = mix64(mix64(seed ^ 0xD134_2543_DE82_EF95) ^ domain.wrapping_mul(GOLDEN_GAMMA));
        Self { key, counter: 0 }
    }

    /// Child stream for `label`. Does not advance `self`.
    pub fn derive(&self, label: u64) -> Self {
        let key = mix64(self.key ^ mix64(label.wrapping_add(GOLDEN_GAMMA)));
        Self { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key ^ mix64(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform on the open interval (0, 1).
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate by inversion.
    pub fn next_normal(&mut self) -> f64 {
        std_normal_inv_cdf(self.next_open01())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_is_pure() {
        let root = Substream::root(7, domain::ELECTORATE);
        let mut a = root.derive(3);
        let mut b = root.derive(3);
        for _ in 0..10 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_ne!(root.derive(3).next_u64(), root.derive(4).next_u64());
    }

    #[test]
    fn domains_and_seeds_separate() {
        let a = Substream::root(1, domain::ELECTORATE).derive(0).next_u64();
        let b = Substream::root(1, domain::PERCEPTION).derive(0).next_u64();
        let c = Substream::root(2, domain::ELECTORATE).derive(0).next_u64();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn uniforms_look_uniform() {
        let mut s = Substream::root(99, domain::SURVEY);
        let n = 200_000;
        let mut sum = 0.0;
        let mut below_quarter = 0usize;
        for _ in 0..n {
            let u = s.next_open01();
            assert!(u > 0.0 && u < 1.0);
            sum += u;
            if u < 0.25 {
                below_quarter += 1;
            }
        }
        let mean = sum / n as f64;
        // sd of the mean is sqrt(1/12 / n) ~ 6.5e-4
        assert!((mean - 0.5).abs() < 4.0 * 6.5e-4, "mean {mean}");
        let frac = below_quarter as f64 / n as f64;
        assert!((frac - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / n as f64).sqrt());
    }
}
