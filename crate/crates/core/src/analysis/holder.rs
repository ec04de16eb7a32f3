use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Bracketing;
use crate::error::{GeomError, Result};
use crate::geom::norm_diff;
use crate::metric::GrushinSpace;
use crate::sampling;

/// Hölder constant `2^beta C^(2-beta) N / (1-beta)` for a singular set whose
/// complement is a union of `n` `C`-uniform domains.
pub fn holder_constant_uniform(c: f64, n: u32, beta: f64) -> Result<f64> {
    if !(c >= 1.0) || !c.is_finite() {
        return Err(GeomError::InvalidParameter { name: "C", reason: format!("must be >= 1, got {c}") });
    }
    if n == 0 {
        return Err(GeomError::InvalidParameter { name: "N", reason: "must be positive".into() });
    }
    check_beta(beta)?;
    Ok(2f64.powf(beta) * c.powf(2.0 - beta) * f64::from(n) / (1.0 - beta))
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(GeomError::InvalidParameter { name: "beta", reason: format!("must lie in [0,1), got {beta}") });
    }
    Ok(())
}

/// A sampled pair with its bracket.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub euclidean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub h_claimed: f64,
    pub beta: f64,
    pub samples: usize,
    pub bracketing: Bracketing,
    /// Max of `upper / d_E^(1-beta)`.
    pub worst_ratio: f64,
    /// Max of `lower / d_E^(1-beta)`; exceeding `h_claimed` proves a violation.
    pub worst_certified_ratio: f64,
    /// Pairs whose upper bound exceeds the claim while the lower bound does not.
    pub inconclusive: usize,
    pub violated: bool,
    pub worst_pair: Option<PairWitness>,
}

/// Tests `d_Y(x,y) <= H d_E(x,y)^(1-beta)` on seeded quasi-random pairs in the box.
pub fn check_holder(
    space: &GrushinSpace,
    h: f64,
    samples: usize,
    seed: u64,
    bracketing: Bracketing,
) -> Result<HolderReport> {
    if !(h > 0.0) {
        return Err(GeomError::InvalidParameter { name: "H", reason: "must be positive".into() });
    }
    if samples == 0 {
        return Err(GeomError::InvalidParameter { name: "samples", reason: "must be at least 1".into() });
    }
    let g = 1.0 - space.beta();
    let pairs = sampling::tuples(space.bbox(), 2, samples, seed);
    let rows: Vec<PairWitness> = pairs
        .par_iter()
        .map(|p| {
            let (lower, upper) = bracketing.bracket(space, &p[0], &p[1])?;
            Ok(PairWitness { x: p[0].clone(), y: p[1].clone(), euclidean: norm_diff(&p[0], &p[1]), lower, upper })
        })
        .collect::<Result<_>>()?;
    let mut rep = HolderReport {
        h_claimed: h,
        beta: space.beta(),
        samples,
        bracketing,
        worst_ratio: 0.0,
        worst_certified_ratio: 0.0,
        inconclusive: 0,
        violated: false,
        worst_pair: None,
    };
    let mut key = (false, f64::NEG_INFINITY);
    for w in rows {
        if w.euclidean == 0.0 {
            continue;
        }
        let scale = w.euclidean.powf(g);
        let (lo, up) = (w.lower / scale, w.upper / scale);
        rep.worst_ratio = rep.worst_ratio.max(up);
        rep.worst_certified_ratio = rep.worst_certified_ratio.max(lo);
        if up > h && lo <= h {
            rep.inconclusive += 1;
        }
        // Prefer the strongest certified violation, else the largest upper ratio.
        let k = if lo > h { (true, lo) } else { (false, up) };
        if (k.0 && !key.0) || (k.0 == key.0 && k.1 > key.1) {
            key = k;
            rep.worst_pair = Some(w);
        }
    }
    rep.violated = rep.worst_certified_ratio > h;
    Ok(rep)
}
