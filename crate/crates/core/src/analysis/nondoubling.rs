use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// Largest construction attempted before reporting overflow.
pub const MAX_BALLS: u64 = 10_000_000;
const EXHAUSTIVE_PAIRS: usize = 5_000;

/// Disjoint balls of radius `2^(-n-2)` in `dx^2 + exp(2/|x|^eps) dy^2`,
/// centred on `x = 3 * 2^(-n-2)` at heights `k * spacing` in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonDoublingBalls {
    pub eps: f64,
    pub n: u32,
    pub radius: f64,
    pub center_x: f64,
    pub spacing: f64,
    pub count: u64,
    /// `floor(2^(n+1) e^(2^(n eps)))`.
    pub required: u64,
    /// Smallest certified lower bound on the distance between two centres.
    pub min_pair_lower: f64,
    /// Pairs checked explicitly; beyond `EXHAUSTIVE_PAIRS` centres only
    /// neighbours are checked (all gaps are multiples of the spacing and the
    /// bound grows with the gap).
    pub pairs_checked: u64,
    pub disjoint: bool,
    pub meets_required: bool,
}

/// A path shorter than `2r` between centres on the vertical line `x = x0`
/// stays in `|x - x0| < r`, where `sqrt(G) >= exp(1/(x0+r)^eps)`; so
/// `d >= min(2r, gap * exp(1/(x0+r)^eps))`.
fn pair_lower(gap: f64, r: f64, speed: f64) -> f64 {
    (2.0 * r).min(gap * speed)
}

pub fn nondoubling_ball_count(eps: f64, n: u32) -> Result<NonDoublingBalls> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(GeomError::InvalidParameter { name: "eps", reason: "must be positive".into() });
    }
    let r = 2f64.powi(-(n as i32) - 2);
    let x0 = 3.0 * r;
    let expo = 2f64.powf(f64::from(n) * eps);
    let required_f = (2f64.powi(n as i32 + 1) * expo.exp()).floor();
    if !required_f.is_finite() || required_f > MAX_BALLS as f64 {
        return Err(GeomError::Overflow(format!("{required_f:e} balls for n = {n}, eps = {eps}")));
    }
    let speed = (1.0 / (x0 + r).powf(eps)).exp();
    let spacing = 2.0 * r / speed * (1.0 + 1e-12);
    let mut count = (1.0 / spacing).floor() as u64 + 1;
    while (count - 1) as f64 * spacing > 1.0 {
        count -= 1;
    }
    let m = count as usize;
    let mut min_lower = f64::INFINITY;
    let mut checked = 0u64;
    if m <= EXHAUSTIVE_PAIRS {
        for i in 0..m {
            for j in i + 1..m {
                min_lower = min_lower.min(pair_lower((j - i) as f64 * spacing, r, speed));
                checked += 1;
            }
        }
    } else {
        min_lower = pair_lower(spacing, r, speed);
        checked = (m - 1) as u64;
    }
    let disjoint = m < 2 || min_lower >= 2.0 * r;
    Ok(NonDoublingBalls {
        eps,
        n,
        radius: r,
        center_x: x0,
        spacing,
        count,
        required: required_f as u64,
        min_pair_lower: min_lower,
        pairs_checked: checked,
        disjoint,
        meets_required: count >= required_f as u64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonDoublingFlag {
    pub c: f64,
    /// `(n, count)` for each constructed level.
    pub counts: Vec<(u32, u64)>,
    /// First `n` with `count > c^n`.
    pub first_exceeding: Option<u32>,
    /// Levels skipped because the construction would overflow.
    pub overflowed: Vec<u32>,
    pub non_doubling: bool,
}

/// Compares disjoint-ball counts against `c^n` for `n = 0..=n_max`.
pub fn nondoubling_flag(eps: f64, n_max: u32, c: f64) -> Result<NonDoublingFlag> {
    let mut out = NonDoublingFlag { c, counts: Vec::new(), first_exceeding: None, overflowed: Vec::new(), non_doubling: false };
    for n in 0..=n_max {
        match nondoubling_ball_count(eps, n) {
            Ok(b) => {
                if out.first_exceeding.is_none() && b.count as f64 > c.powi(n as i32) {
                    out.first_exceeding = Some(n);
                }
                out.counts.push((n, b.count));
            }
            Err(GeomError::Overflow(_)) => out.overflowed.push(n),
            Err(e) => return Err(e),
        }
    }
    out.non_doubling = out.first_exceeding.is_some();
    Ok(out)
}

impl NonDoublingBalls {
    /// Ball centres `(x0, k * spacing)`.
    pub fn centers(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.count).map(move |k| [self.center_x, k as f64 * self.spacing])
    }
}
