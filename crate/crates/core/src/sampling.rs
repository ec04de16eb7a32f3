//! Seeded low-discrepancy sampling: a Halton sequence with a seeded
//! Cranley–Patterson rotation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::Aabb;

const PRIMES: [u8; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Deterministic quasi-random points in `[0,1)^dim`.
#[derive(Clone, Debug)]
pub struct QuasiRandom {
    shift: Vec<f64>,
    index: usize,
}

impl QuasiRandom {
    /// `dim <= 16`.
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1 && dim <= PRIMES.len(), "quasi-random dimension must be in 1..=16");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.gen::<f64>()).collect();
        QuasiRandom { shift, index: 1 }
    }

    pub fn next_unit(&mut self) -> Vec<f64> {
        let i = self.index;
        self.index += 1;
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(s, b)| {
                let v = halton::number(b, i) + s;
                v - v.floor()
            })
            .collect()
    }

    /// Next point mapped into `bbox`.
    pub fn next_in(&mut self, bbox: &Aabb) -> Vec<f64> {
        self.next_unit()
            .iter()
            .zip(bbox.min.iter().zip(&bbox.max))
            .map(|(u, (a, b))| a + u * (b - a))
            .collect()
    }
}

/// `count` tuples of `k` points in `bbox`, drawn jointly from one
/// `k * dim`-dimensional sequence so the tuple members are independent.
pub fn tuples(bbox: &Aabb, k: usize, count: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let n = bbox.dim();
    let mut q = QuasiRandom::new(k * n, seed);
    (0..count)
        .map(|_| {
            let u = q.next_unit();
            u.chunks(n)
                .map(|c| c.iter().zip(bbox.min.iter().zip(&bbox.max)).map(|(u, (a, b))| a + u * (b - a)).collect())
                .collect()
        })
        .collect()
}
