use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::metric::GrushinSpace;
use crate::sampling::QuasiRandom;
use crate::singular_set::Primitive;

/// Gaussian curvature of `lambda (dx^2 + dy^2)` with `lambda = d_E(., Y)^(-2 beta)`,
/// as `-Laplacian(log lambda) / (2 lambda)` on a five-point stencil of step `h`.
pub fn gaussian_curvature_conformal(space: &GrushinSpace, p: &[f64], h: f64) -> Result<f64> {
    if space.dim() != 2 {
        return Err(GeomError::UnsupportedDimension(space.dim()));
    }
    space.check_point(p)?;
    if !(h > 0.0) {
        return Err(GeomError::InvalidParameter { name: "h", reason: "step must be positive".into() });
    }
    let y = space.singular();
    let d = y.distance(p);
    let reach = 10.0 * h;
    if d < reach {
        return Err(GeomError::Stencil(format!("distance to Y {d:e} is below 10 h = {reach:e}")));
    }
    if y.feature_gap(p)? <= 2.0 * reach {
        return Err(GeomError::Stencil("within 10 h of the medial axis (competing features)".into()));
    }
    // One-sided slopes of d_E(., Y) differ by at most reach/(d - reach) per unit of curvature where smooth.
    let allow = 2.0 * reach / (d - reach) + 1e-8;
    for i in 0..2 {
        let mut f = p.to_vec();
        f[i] += reach;
        let mut b = p.to_vec();
        b[i] -= reach;
        let (gf, gb) = ((y.distance(&f) - d) / reach, (d - y.distance(&b)) / reach);
        if (gf - gb).abs() > allow {
            return Err(GeomError::Stencil("within 10 h of the medial axis (gradient jump)".into()));
        }
    }
    let beta = space.beta();
    if beta == 0.0 {
        return Ok(0.0);
    }
    let log_lambda = |q: &[f64]| -2.0 * beta * y.distance(q).ln();
    let at = |dx: f64, dy: f64| log_lambda(&[p[0] + dx, p[1] + dy]);
    let lap = (at(h, 0.0) + at(-h, 0.0) + at(0.0, h) + at(0.0, -h) - 4.0 * at(0.0, 0.0)) / (h * h);
    Ok(-lap / (2.0 * d.powf(-2.0 * beta)))
}

/// Brioschi's formula for `E dx^2 + G dy^2`:
/// `K = -1/(2 sqrt(EG)) [ d/dx (G_x / sqrt(EG)) + d/dy (E_y / sqrt(EG)) ]`,
/// with nested central differences of step `h`.
pub fn gaussian_curvature_diagonal<E, G>(e: E, g: G, p: &[f64], h: f64) -> Result<f64>
where
    E: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> f64,
{
    if p.len() != 2 {
        return Err(GeomError::DimensionMismatch { expected: 2, got: p.len() });
    }
    if !(h > 0.0) {
        return Err(GeomError::InvalidParameter { name: "h", reason: "step must be positive".into() });
    }
    let (x, y) = (p[0], p[1]);
    for i in -2..=2 {
        for j in -2..=2 {
            let (u, v) = (x + f64::from(i) * h, y + f64::from(j) * h);
            let (ev, gv) = (e(u, v), g(u, v));
            if !(ev > 0.0 && gv > 0.0 && ev.is_finite() && gv.is_finite()) {
                return Err(GeomError::Stencil(format!("metric coefficient not positive and finite at ({u}, {v})")));
            }
        }
    }
    let root = |u: f64, v: f64| (e(u, v) * g(u, v)).sqrt();
    let a = |u: f64, v: f64| (g(u + h, v) - g(u - h, v)) / (2.0 * h) / root(u, v);
    let b = |u: f64, v: f64| (e(u, v + h) - e(u, v - h)) / (2.0 * h) / root(u, v);
    let ax = (a(x + h, y) - a(x - h, y)) / (2.0 * h);
    let by = (b(x, y + h) - b(x, y - h)) / (2.0 * h);
    Ok(-(ax + by) / (2.0 * root(x, y)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub a_claimed: f64,
    pub points: Vec<Vec<f64>>,
    pub k_numeric: Vec<f64>,
    pub k_closed_form: Option<Vec<f64>>,
    /// `|K| d_Y(., Y)^2` per point.
    pub products: Vec<f64>,
    /// Smallest `A` with `|K| <= A d_Y(., Y)^(-2)` on the samples.
    pub a_fit: f64,
    /// `(max - min) / max` of the products; 0 for constant products.
    pub product_spread: f64,
    /// Sampled points rejected by the stencil preconditions.
    pub skipped: usize,
    pub violated: bool,
}

/// Verifies `|K(x)| <= A d_Y(x, Y)^(-2)` at up to `samples` seeded points of the
/// box, with steps `h = 1e-3 d_E(x, Y)`.
pub fn check_whitney_curvature(space: &GrushinSpace, a: f64, samples: usize, seed: u64) -> Result<CurvatureReport> {
    if space.dim() != 2 {
        return Err(GeomError::UnsupportedDimension(space.dim()));
    }
    if !(a >= 0.0) {
        return Err(GeomError::InvalidParameter { name: "A", reason: "must be nonnegative".into() });
    }
    let closed = closed_form(space);
    let mut q = QuasiRandom::new(2, seed);
    let mut rep = CurvatureReport {
        a_claimed: a,
        points: Vec::new(),
        k_numeric: Vec::new(),
        k_closed_form: closed.as_ref().map(|_| Vec::new()),
        products: Vec::new(),
        a_fit: 0.0,
        product_spread: 0.0,
        skipped: 0,
        violated: false,
    };
    for _ in 0..samples {
        let p = q.next_in(space.bbox());
        let h = 1e-3 * space.singular().distance(&p);
        let k = match gaussian_curvature_conformal(space, &p, h) {
            Ok(k) => k,
            Err(GeomError::Stencil(_)) | Err(GeomError::InvalidParameter { .. }) => {
                rep.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let dy = space.distance_to_singular(&p)?;
        let prod = k.abs() * dy * dy;
        if let (Some(f), Some(v)) = (&closed, rep.k_closed_form.as_mut()) {
            v.push(f(&p));
        }
        rep.points.push(p);
        rep.k_numeric.push(k);
        rep.products.push(prod);
    }
    let max = rep.products.iter().cloned().fold(0.0, f64::max);
    let min = rep.products.iter().cloned().fold(f64::INFINITY, f64::min);
    rep.a_fit = max;
    rep.product_spread = if max > 0.0 { (max - min) / max } else { 0.0 };
    rep.violated = rep.a_fit > a;
    Ok(rep)
}

type ClosedForm = Box<dyn Fn(&[f64]) -> f64>;

/// Exact curvature for a single point (flat cone) or a single line.
fn closed_form(space: &GrushinSpace) -> Option<ClosedForm> {
    let beta = space.beta();
    match space.singular().primitives() {
        [Primitive::Point { .. }] => Some(Box::new(|_| 0.0)),
        [Primitive::Hyperplane { .. } | Primitive::Line { .. }] => {
            let y = space.singular().clone();
            Some(Box::new(move |p| -beta * y.distance(p).powf(2.0 * beta - 2.0)))
        }
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaCurvatureSample {
    pub x: f64,
    pub numeric: f64,
    pub closed_form: f64,
    pub rel_error: f64,
}

/// Brioschi curvature of the alpha-Grushin metric `dx^2 + |x|^(-2 alpha) dy^2`
/// at `(x, 0)` for each `x`, against `-alpha(alpha+1) x^(-2)`.
pub fn alpha_grushin_curvature(alpha: f64, xs: &[f64]) -> Result<Vec<AlphaCurvatureSample>> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(GeomError::InvalidParameter { name: "alpha", reason: "must be nonnegative".into() });
    }
    xs.iter()
        .map(|&x| {
            let h = 1e-3 * x.abs();
            let numeric = gaussian_curvature_diagonal(|_, _| 1.0, |u, _| u.abs().powf(-2.0 * alpha), &[x, 0.0], h)?;
            let closed_form = -alpha * (alpha + 1.0) / (x * x);
            let rel_error = if closed_form == 0.0 { numeric.abs() } else { (numeric / closed_form - 1.0).abs() };
            Ok(AlphaCurvatureSample { x, numeric, closed_form, rel_error })
        })
        .collect()
}

/// Curvature of `dx^2 + exp(2/|x|^eps) dy^2` at `(x, 0)`: numeric and
/// `-eps (eps + x^eps (1 + eps)) x^(-2(1+eps))`.
pub fn nondoubling_metric_curvature(eps: f64, x: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0) {
        return Err(GeomError::InvalidParameter { name: "eps", reason: "must be positive".into() });
    }
    let h = 1e-4 * x.abs() * x.abs().powf(eps);
    let numeric = gaussian_curvature_diagonal(|_, _| 1.0, |u, _| (2.0 / u.abs().powf(eps)).exp(), &[x, 0.0], h)?;
    let closed = -eps * (eps + x.abs().powf(eps) * (1.0 + eps)) * x.abs().powf(-2.0 * (1.0 + eps));
    Ok((numeric, closed))
}
