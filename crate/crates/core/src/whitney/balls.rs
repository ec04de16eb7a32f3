//! Relative distances, Whitney balls and the comparability checks on enlarged systems.

use rustc_hash::FxHashMap;
use serde::Serialize;

use super::decomposition::CubeSystem;
use crate::error::{GeomError, Result};

/// Default Whitney-ball radius.
pub const DEFAULT_EPS: f64 = 0.5;

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(GeomError::InvalidParameter { name: "eps", reason: format!("{eps} not in (0,1)") });
    }
    Ok(())
}

/// `d(Q, R)` between distinct cubes; synthetic points never shorten it.
fn cube_gap(sys: &CubeSystem, q: usize, r: usize, reach: f64) -> f64 {
    let ball = sys.sample.ball(&sys.cubes[q].members, reach);
    ball.iter().filter(|(p, _)| sys.cube_of(*p) == Some(r)).map(|x| x.1).fold(f64::INFINITY, f64::min)
}

/// `Delta(Q, R) = d(Q, R) / min(diam Q, diam R)` using enlarged diameters.
pub fn relative_distance(sys: &CubeSystem, q: usize, r: usize) -> Result<f64> {
    let n = sys.cubes.len();
    if q >= n || r >= n {
        return Err(GeomError::InvalidParameter { name: "cube", reason: format!("index out of range (have {n})") });
    }
    if q == r {
        return Ok(0.0);
    }
    let m = sys.cubes[q].effective_diam().min(sys.cubes[r].effective_diam());
    if m <= 0.0 {
        return Err(GeomError::InvalidParameter { name: "cube", reason: "zero diameter; enlarge the cubes first".into() });
    }
    Ok(cube_gap(sys, q, r, f64::INFINITY) / m)
}

/// `Q*` and `Q**` as sorted cube indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhitneyBall {
    pub cube: usize,
    pub star: Vec<usize>,
    pub star2: Vec<usize>,
}

/// `Q*` from the given diameters; cubes of zero diameter only contain themselves.
fn star(sys: &CubeSystem, q: usize, eps: f64, diams: &[f64]) -> Vec<usize> {
    let dq = diams[q];
    let mut out = vec![q];
    if dq > 0.0 {
        let ball = sys.sample.ball(&sys.cubes[q].members, eps * dq);
        let mut gap: FxHashMap<usize, f64> = FxHashMap::default();
        for (p, d) in ball {
            if let Some(r) = sys.cube_of(p) {
                if r != q {
                    let e = gap.entry(r).or_insert(f64::INFINITY);
                    *e = e.min(d);
                }
            }
        }
        for (r, d) in gap {
            let m = dq.min(diams[r]);
            if m > 0.0 && d < eps * m {
                out.push(r);
            }
        }
    }
    out.sort_unstable();
    out
}

fn all_stars(sys: &CubeSystem, eps: f64, diams: &[f64]) -> Vec<Vec<usize>> {
    use rayon::prelude::*;
    (0..sys.cubes.len()).into_par_iter().map(|q| star(sys, q, eps, diams)).collect()
}

fn star2(stars: &[Vec<usize>], q: usize) -> Vec<usize> {
    let mut v: Vec<usize> = stars[q].iter().flat_map(|&r| stars[r].iter().cloned()).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// The Whitney ball of radius `eps` about cube `q` and its iterate.
pub fn whitney_ball(sys: &CubeSystem, q: usize, eps: f64) -> Result<WhitneyBall> {
    check_eps(eps)?;
    if q >= sys.cubes.len() {
        return Err(GeomError::InvalidParameter { name: "cube", reason: "index out of range".into() });
    }
    let diams: Vec<f64> = sys.cubes.iter().map(|c| c.effective_diam()).collect();
    let s = star(sys, q, eps, &diams);
    let mut stars: FxHashMap<usize, Vec<usize>> = FxHashMap::default();
    for &r in &s {
        stars.insert(r, star(sys, r, eps, &diams));
    }
    let mut s2: Vec<usize> = stars.values().flatten().cloned().collect();
    s2.sort_unstable();
    s2.dedup();
    Ok(WhitneyBall { cube: q, star: s, star2: s2 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiameterViolation {
    pub q: usize,
    pub r: usize,
    pub diam_q: f64,
    pub diam_r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhitneyBallReport {
    pub eps: f64,
    /// `1 + a C1 / (2 delta c0) + eps`.
    pub comparability_factor: f64,
    pub pairs_checked: usize,
    pub diameter_violations: Vec<DiameterViolation>,
    /// Cubes with `diam Q <= c0 delta^k / 2` before enlargement.
    pub small_cubes: usize,
    /// Small cubes whose `Q*` or `Q**` is not `{Q}`.
    pub isolation_failures: usize,
    /// Pairs of cubes with positive original diameter where `R ∈ Q*`
    /// and `R~ ∈ Q~*` disagree.
    pub correspondence_failures: usize,
    pub symmetric: bool,
    pub max_star: usize,
    pub max_star2: usize,
    /// Largest number of sets `Q**` containing one point.
    pub max_multiplicity: usize,
    pub passed: bool,
}

/// Checks the comparability of diameters in Whitney balls, the isolation of
/// small cubes and the multiplicity of iterated balls.
pub fn verify_whitney_balls(sys: &CubeSystem, eps: f64) -> Result<WhitneyBallReport> {
    check_eps(eps)?;
    let d = sys.data;
    let diams: Vec<f64> = sys.cubes.iter().map(|c| c.effective_diam()).collect();
    if let Some(i) = diams.iter().position(|x| *x <= 0.0) {
        return Err(GeomError::InvalidParameter { name: "cube", reason: format!("cube {i} has zero diameter; enlarge first") });
    }
    let stars = all_stars(sys, eps, &diams);
    let factor = 1.0 + d.a * d.c1 / (2.0 * d.delta * d.c0) + eps;
    let (lo, hi) = ((d.a - 2.0) / 2.0 / factor, 2.0 / (d.a - 2.0) * factor);
    let mut violations = Vec::new();
    let mut pairs = 0;
    let mut symmetric = true;
    for (q, s) in stars.iter().enumerate() {
        for &r in s {
            pairs += 1;
            symmetric &= stars[r].binary_search(&q).is_ok();
            let (dq, dr) = (diams[q], diams[r]);
            let slack = 1e-12 * dq.max(dr);
            if dq < lo * dr - slack || dq > hi * dr + slack {
                violations.push(DiameterViolation { q, r, diam_q: dq, diam_r: dr });
            }
        }
    }
    let stars2: Vec<Vec<usize>> = (0..stars.len()).map(|q| star2(&stars, q)).collect();
    let small: Vec<usize> =
        (0..sys.cubes.len()).filter(|&i| sys.cubes[i].diam <= d.c0 * d.delta.powi(sys.cubes[i].k) / 2.0).collect();
    let isolation_failures = small.iter().filter(|&&q| stars[q] != vec![q] || stars2[q] != vec![q]).count();
    let original: Vec<f64> = sys.cubes.iter().map(|c| c.diam).collect();
    let orig_stars = all_stars(sys, eps, &original);
    let correspondence_failures = (0..sys.cubes.len())
        .filter(|&q| original[q] > 0.0)
        .map(|q| {
            let a: Vec<usize> = orig_stars[q].iter().cloned().filter(|&r| original[r] > 0.0).collect();
            let b: Vec<usize> = stars[q].iter().cloned().filter(|&r| original[r] > 0.0).collect();
            a.iter().filter(|r| b.binary_search(r).is_err()).count() + b.iter().filter(|r| a.binary_search(r).is_err()).count()
        })
        .sum();
    let mut multiplicity: FxHashMap<usize, usize> = FxHashMap::default();
    for s2 in &stars2 {
        for &r in s2 {
            for &p in &sys.cubes[r].members {
                *multiplicity.entry(p).or_default() += 1;
            }
        }
    }
    let max_star = stars.iter().map(Vec::len).max().unwrap_or(0);
    let max_star2 = stars2.iter().map(Vec::len).max().unwrap_or(0);
    let max_multiplicity = multiplicity.values().cloned().max().unwrap_or(0);
    let passed = violations.is_empty() && isolation_failures == 0 && correspondence_failures == 0 && symmetric;
    Ok(WhitneyBallReport {
        eps,
        comparability_factor: factor,
        pairs_checked: pairs,
        diameter_violations: violations,
        small_cubes: small.len(),
        isolation_failures,
        correspondence_failures,
        symmetric,
        max_star,
        max_star2,
        max_multiplicity,
        passed,
    })
}
