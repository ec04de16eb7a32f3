use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Bracketing;
use crate::error::{GeomError, Result};
use crate::metric::GrushinSpace;
use crate::sampling::QuasiRandom;

pub const DEFAULT_DOUBLING_SAMPLE: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub sample_size: usize,
    pub balls_tested: usize,
    pub bracketing: Bracketing,
    /// Max over tested balls of the half-radius cover size; at least 1.
    pub d_estimate: usize,
    pub mean_cover: f64,
    /// Largest number of sample points in a tested ball (ambiguous ones included).
    pub max_members: usize,
    /// Ball members whose membership could not be certified either way.
    pub ambiguous_members: usize,
}

/// Doubling estimate on `DEFAULT_DOUBLING_SAMPLE` quasi-random points of the box.
pub fn estimate_doubling(space: &GrushinSpace, balls: usize, seed: u64, bracketing: Bracketing) -> Result<DoublingReport> {
    let mut q = QuasiRandom::new(space.dim(), seed);
    let pts: Vec<Vec<f64>> = (0..DEFAULT_DOUBLING_SAMPLE).map(|_| q.next_in(space.bbox())).collect();
    estimate_doubling_on(space, &pts, balls, seed, bracketing)
}

/// Covers sampled `d_Y`-balls by balls of half the radius centred at sample
/// points, greedily by coverage, then drops redundant centres. A point is in
/// a ball unless its lower bound excludes it; a centre covers a point only if
/// the upper bound is within the half radius.
pub fn estimate_doubling_on(
    space: &GrushinSpace,
    points: &[Vec<f64>],
    balls: usize,
    seed: u64,
    bracketing: Bracketing,
) -> Result<DoublingReport> {
    if balls == 0 {
        return Err(GeomError::InvalidParameter { name: "balls", reason: "must be at least 1".into() });
    }
    if points.is_empty() {
        return Err(GeomError::InvalidParameter { name: "points", reason: "sample is empty".into() });
    }
    let n = points.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let vals: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| bracketing.bracket(space, &points[i], &points[j]))
        .collect::<Result<_>>()?;
    let mut lo = vec![0.0; n * n];
    let mut up = vec![0.0; n * n];
    for (&(i, j), &(l, u)) in pairs.iter().zip(&vals) {
        lo[i * n + j] = l;
        lo[j * n + i] = l;
        up[i * n + j] = u;
        up[j * n + i] = u;
    }
    let diam = up.iter().cloned().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = DoublingReport {
        sample_size: n,
        balls_tested: balls,
        bracketing,
        d_estimate: 1,
        mean_cover: 0.0,
        max_members: 0,
        ambiguous_members: 0,
    };
    let mut total = 0usize;
    for _ in 0..balls {
        let c = rng.gen_range(0..n);
        let r = diam * 2f64.powf(-4.0 * rng.gen::<f64>());
        let members: Vec<usize> = (0..n).filter(|&j| lo[c * n + j] <= r).collect();
        rep.ambiguous_members += members.iter().filter(|&&j| up[c * n + j] > r).count();
        rep.max_members = rep.max_members.max(members.len());
        let count = if r > 0.0 { cover(&members, n, |s, q| s == q || up[s * n + q] <= 0.5 * r) } else { 1 };
        total += count;
        rep.d_estimate = rep.d_estimate.max(count);
    }
    rep.mean_cover = total as f64 / balls as f64;
    Ok(rep)
}

fn cover(members: &[usize], n: usize, covers: impl Fn(usize, usize) -> bool) -> usize {
    let mut covered = vec![false; members.len()];
    let mut left = members.len();
    let mut centres: Vec<usize> = Vec::new();
    while left > 0 {
        let (mut best, mut gain) = (0, 0);
        for s in 0..n {
            let g = members.iter().zip(&covered).filter(|(&q, &c)| !c && covers(s, q)).count();
            if g > gain {
                best = s;
                gain = g;
            }
        }
        for (k, &q) in members.iter().enumerate() {
            if !covered[k] && covers(best, q) {
                covered[k] = true;
                left -= 1;
            }
        }
        centres.push(best);
    }
    let mut keep = vec![true; centres.len()];
    for i in (0..centres.len()).rev() {
        keep[i] = false;
        let still = members
            .iter()
            .all(|&q| centres.iter().zip(&keep).any(|(&s, &k)| k && covers(s, q)));
        if !still {
            keep[i] = true;
        }
    }
    keep.iter().filter(|&&k| k).count().max(1)
}
