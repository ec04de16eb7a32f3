//! Per-cube charts `f_B(y) = l^(-beta) y` on Christ–Whitney cubes of `R^n \ Y`.

use serde::Serialize;

use super::decomposition::{Boundary, CubeSystem, WhitneyData};
use crate::error::{GeomError, Result};
use crate::geom::norm_diff;

/// Largest `a` tried by [`select_a`].
pub const A_CAP: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChartConstants {
    pub beta: f64,
    pub a: f64,
    pub k: i32,
    /// `C1 delta^k`.
    pub m: f64,
    /// `(a/delta + 1) C1 delta^k`.
    pub l_big: f64,
    /// `((1-beta) L)^(1/(1-beta))`.
    pub ell: f64,
    pub c2: f64,
    pub j: f64,
    pub c3: f64,
    /// `(1+2J)^(-beta)`.
    pub lower_factor: f64,
    /// `(C3-J)^(-beta)`.
    pub upper_factor: f64,
    /// `max((1+2J)^beta, (C3-J)^(-beta))`.
    pub bound: f64,
}

fn scale_free(beta: f64, delta: f64, a: f64) -> (f64, f64, f64) {
    let g = 1.0 - beta;
    let s = a / delta + 1.0;
    let c2 = 1.0 / (s * g);
    let j = 1.0 / (1.0 / c2 - 1.0);
    let c3 = ((a - 2.0) / s).powf(1.0 / g);
    (c2, j, c3)
}

fn admissible(beta: f64, delta: f64, a: f64) -> bool {
    let (c2, j, c3) = scale_free(beta, delta, a);
    c2 < 1.0 && c3 - j > 0.0
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(GeomError::InvalidParameter { name: "beta", reason: format!("{beta} not in [0,1)") });
    }
    Ok(())
}

/// Smallest integer `a >= 4` with `C2 < 1` and `C3 - J > 0`.
pub fn select_a(beta: f64, delta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(GeomError::InvalidParameter { name: "delta", reason: format!("{delta} not in (0,1)") });
    }
    let mut a = 4.0;
    while a <= A_CAP {
        if admissible(beta, delta, a) {
            return Ok(a);
        }
        a += 1.0;
    }
    Err(GeomError::InvalidParameter { name: "beta", reason: format!("{beta} too close to 1: no admissible a up to {A_CAP}") })
}

/// Chart constants for a scale-`k` cube.
pub fn chart_constants(beta: f64, data: &WhitneyData, k: i32) -> Result<ChartConstants> {
    check_beta(beta)?;
    let a = data.a;
    if !admissible(beta, data.delta, a) {
        return Err(GeomError::InvalidParameter { name: "a", reason: format!("a = {a} gives C3 - J <= 0 or C2 >= 1") });
    }
    let g = 1.0 - beta;
    let m = data.c1 * data.delta.powi(k);
    let l_big = (a / data.delta + 1.0) * m;
    let ell = (g * l_big).powf(1.0 / g);
    let (c2, j, c3) = scale_free(beta, data.delta, a);
    let lower_factor = (1.0 + 2.0 * j).powf(-beta);
    let upper_factor = (c3 - j).powf(-beta);
    Ok(ChartConstants {
        beta,
        a,
        k,
        m,
        l_big,
        ell,
        c2,
        j,
        c3,
        lower_factor,
        upper_factor,
        bound: (1.0 / lower_factor).max(upper_factor),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChartReport {
    pub cube: usize,
    pub constants: ChartConstants,
    pub pairs: usize,
    /// Pairs where `l^beta * lower(d_Y) < (1+2J)^(-beta) d_E`.
    pub lower_violations: usize,
    /// Pairs where `l^beta * upper(d_Y) > (C3-J)^(-beta) d_E`.
    pub upper_violations: usize,
    /// Extremes of `rho = l^beta * upper(d_Y) / d_E`.
    pub rho_min: f64,
    pub rho_max: f64,
    /// `sqrt(rho_max / rho_min)`: bi-Lipschitz constant of `f_B` after the best rescaling.
    pub distortion: f64,
    /// `max(rho_max, 1/rho_min)`: bi-Lipschitz constant of `f_B` as defined.
    pub unscaled: f64,
    pub passed: bool,
}

/// Images `l^(-beta) y` of the cube's sample points.
pub fn chart_points(sys: &CubeSystem, cube: usize) -> Result<Vec<Vec<f64>>> {
    let (_, c) = chart_setup(sys, cube)?;
    let s = c.ell.powf(-c.beta);
    Ok(sys.cubes[cube].members.iter().map(|&p| sys.sample.point(p).iter().map(|x| s * x).collect()).collect())
}

fn chart_setup(sys: &CubeSystem, cube: usize) -> Result<(&crate::metric::GrushinSpace, ChartConstants)> {
    let space = sys
        .sample
        .space()
        .ok_or(GeomError::InvalidParameter { name: "sample", reason: "charts need a Grushin sample".into() })?;
    if sys.boundary != Boundary::Singular {
        return Err(GeomError::InvalidParameter { name: "boundary", reason: "charts need Omega = R^n \\ Y".into() });
    }
    let q = sys
        .cubes
        .get(cube)
        .ok_or(GeomError::InvalidParameter { name: "cube", reason: format!("index {cube} out of range") })?;
    Ok((space, chart_constants(space.beta(), &sys.data, q.k)?))
}

/// Checks the chart sandwich on every pair of sample points in the cube.
pub fn cube_chart(sys: &CubeSystem, cube: usize) -> Result<ChartReport> {
    let (space, c) = chart_setup(sys, cube)?;
    let members = &sys.cubes[cube].members;
    let scale = c.ell.powf(c.beta);
    let reach = sys.cubes[cube].diam.max(0.0) * (1.0 + 1e-9);
    let mut pairs = 0;
    let (mut lower_violations, mut upper_violations) = (0, 0);
    let (mut rho_min, mut rho_max) = (f64::INFINITY, 0.0f64);
    for (i, &p) in members.iter().enumerate() {
        let x = sys.sample.point(p);
        let near: rustc_hash::FxHashMap<usize, f64> = sys.sample.ball(&[p], reach).into_iter().collect();
        for &q in &members[i + 1..] {
            let y = sys.sample.point(q);
            let de = norm_diff(x, y);
            if de == 0.0 {
                continue;
            }
            let graph = near.get(&q).copied().unwrap_or_else(|| sys.sample.dist(p, q));
            let upper = graph.min(space.segment_length(x, y)?);
            let lower = space.distance_lower_bound(x, y)?;
            pairs += 1;
            let tol = 1e-12 * de;
            if scale * lower < c.lower_factor * de - tol {
                lower_violations += 1;
            }
            if scale * upper > c.upper_factor * de + tol {
                upper_violations += 1;
            }
            let rho = scale * upper / de;
            rho_min = rho_min.min(rho);
            rho_max = rho_max.max(rho);
        }
    }
    let (distortion, unscaled) =
        if pairs == 0 { (1.0, 1.0) } else { ((rho_max / rho_min).sqrt(), rho_max.max(1.0 / rho_min)) };
    Ok(ChartReport {
        cube,
        constants: c,
        pairs,
        lower_violations,
        upper_violations,
        rho_min,
        rho_max,
        distortion,
        unscaled,
        passed: lower_violations == 0 && upper_violations == 0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChartSummary {
    pub beta: f64,
    pub a: f64,
    pub bound: f64,
    pub charts: Vec<ChartReport>,
    pub lower_violations: usize,
    pub upper_violations: usize,
    pub min_distortion: f64,
    pub max_distortion: f64,
    /// `max_distortion / min_distortion`.
    pub distortion_spread: f64,
    pub passed: bool,
}

/// Charts of every cube with at least `min_members` sample points.
pub fn chart_summary(sys: &CubeSystem, min_members: usize) -> Result<ChartSummary> {
    use rayon::prelude::*;
    let idx: Vec<usize> = (0..sys.cubes.len()).filter(|&i| sys.cubes[i].members.len() >= min_members.max(2)).collect();
    let beta = sys
        .sample
        .space()
        .ok_or(GeomError::InvalidParameter { name: "sample", reason: "charts need a Grushin sample".into() })?
        .beta();
    let charts: Vec<ChartReport> = idx.par_iter().map(|&i| cube_chart(sys, i)).collect::<Result<_>>()?;
    let charts: Vec<ChartReport> = charts.into_iter().filter(|c| c.pairs > 0).collect();
    let bound = match charts.first() {
        Some(c) => c.constants.bound,
        None => chart_constants(beta, &sys.data, 0)?.bound,
    };
    let min_distortion = charts.iter().map(|c| c.distortion).fold(f64::INFINITY, f64::min);
    let max_distortion = charts.iter().map(|c| c.distortion).fold(0.0, f64::max);
    let lower_violations = charts.iter().map(|c| c.lower_violations).sum();
    let upper_violations = charts.iter().map(|c| c.upper_violations).sum();
    Ok(ChartSummary {
        beta,
        a: sys.data.a,
        bound,
        lower_violations,
        upper_violations,
        min_distortion,
        max_distortion,
        distortion_spread: if charts.is_empty() { 1.0 } else { max_distortion / min_distortion },
        passed: lower_violations == 0 && upper_violations == 0,
        charts,
    })
}
