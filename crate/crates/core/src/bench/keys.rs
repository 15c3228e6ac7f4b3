use rand::distr::{Distribution, Uniform};
use rand::Rng;
use rand_distr::Zipf;

use super::config::KeyDist;
use crate::{IndexKey, IndexValue};

/// Draws key numbers in `0..universe`.
///
/// Zipfian ranks are spread over the key space by a fixed affine
/// permutation, so hot keys do not cluster in one node.
#[derive(Debug, Clone)]
pub struct KeyGen {
    universe: u64,
    dist: Dist,
    mult: u64,
    offset: u64,
}

#[derive(Debug, Clone)]
enum Dist {
    Uniform(Uniform<u64>),
    Zipf(Zipf<f64>),
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl KeyGen {
    pub fn new(universe: u64, dist: KeyDist) -> Self {
        assert!(universe > 0, "empty key universe");
        let dist = match dist {
            KeyDist::Uniform => Dist::Uniform(Uniform::new(0, universe).expect("non-empty range")),
            KeyDist::Zipfian(s) => {
                Dist::Zipf(Zipf::new(universe as f64, s).expect("validated skew"))
            }
        };
        let mut mult = 0x9e37_79b9_7f4a_7c15 % universe;
        while gcd(mult.max(1), universe) != 1 {
            mult += 1;
        }
        KeyGen {
            universe,
            dist,
            mult: mult.max(1),
            offset: universe / 3,
        }
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    /// Popularity rank of the next draw, 0 being the most popular. Uniform
    /// draws have no ranking and return the key itself.
    pub fn rank<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.dist {
            Dist::Uniform(u) => u.sample(rng),
            Dist::Zipf(z) => (z.sample(rng) as u64).clamp(1, self.universe) - 1,
        }
    }

    pub fn key_of_rank(&self, rank: u64) -> u64 {
        match self.dist {
            Dist::Uniform(_) => rank,
            Dist::Zipf(_) => {
                ((rank as u128 * self.mult as u128 + self.offset as u128) % self.universe as u128)
                    as u64
            }
        }
    }

    pub fn next<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.key_of_rank(self.rank(rng))
    }
}

/// Fixed-width keys built from key numbers, ordered like the numbers.
pub trait BenchKey: IndexKey {
    fn from_num(n: u64) -> Self;
}

impl BenchKey for u32 {
    fn from_num(n: u64) -> Self {
        n as u32
    }
}

/// 16 bytes: an 8-byte constant prefix, then the number in big-endian.
impl BenchKey for [u8; 16] {
    fn from_num(n: u64) -> Self {
        let mut k = *b"mvskbenc\0\0\0\0\0\0\0\0";
        k[8..].copy_from_slice(&n.to_be_bytes());
        k
    }
}

pub trait BenchValue: IndexValue {
    fn from_num(n: u64) -> Self;
}

impl BenchValue for u32 {
    fn from_num(n: u64) -> Self {
        n as u32
    }
}

impl BenchValue for [u8; 100] {
    fn from_num(n: u64) -> Self {
        let mut v = [0u8; 100];
        for chunk in v.chunks_mut(8) {
            chunk.copy_from_slice(&n.to_le_bytes()[..chunk.len()]);
        }
        v
    }
}
