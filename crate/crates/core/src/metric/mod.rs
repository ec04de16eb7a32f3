//! The conformal metric `ds = ds_E / d_E(., Y)^beta`: weights, path lengths,
//! analytic bounds and the certified distance solver.

mod certificate;
mod shorten;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geom::{check_dim, check_finite, coord_scale, lerp, lerp_into, ROUNDING, norm_diff, Aabb, Point};
use crate::quadrature;
use crate::singular_set::SingularSet;

pub use solver::{distance, distance_with, refine, refine_with, DistanceBracket, SolveStats, SolverOptions};

/// Default relative cell-size factor of the grid solver.
pub const DEFAULT_RESOLUTION: f64 = 0.02;

const QUAD_REL: f64 = 1e-11;

/// `(Y, beta)` together with a computation window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrushinSpace {
    singular: SingularSet,
    beta: f64,
    bbox: Aabb,
    pad: f64,
}

impl GrushinSpace {
    /// Builds a space; `pad` defaults to the box diameter.
    pub fn new(singular: SingularSet, beta: f64, bbox: Aabb, pad: Option<f64>) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(GeomError::InvalidParameter { name: "beta", reason: format!("{beta} not in [0,1)") });
        }
        if bbox.dim() != singular.dim() {
            return Err(GeomError::DimensionMismatch { expected: singular.dim(), got: bbox.dim() });
        }
        if bbox.volume() <= 0.0 {
            return Err(GeomError::InvalidParameter { name: "bbox", reason: "must have positive volume".into() });
        }
        let diam = bbox.diameter();
        let pad = pad.unwrap_or(diam);
        if !pad.is_finite() || pad < diam {
            return Err(GeomError::InvalidParameter {
                name: "pad",
                reason: format!("{pad} is smaller than the box diameter {diam}"),
            });
        }
        Ok(GrushinSpace { singular, beta, bbox, pad })
    }

    pub fn singular(&self) -> &SingularSet {
        &self.singular
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }
    pub fn pad(&self) -> f64 {
        self.pad
    }
    pub fn dim(&self) -> usize {
        self.singular.dim()
    }
    pub fn window(&self) -> Aabb {
        self.bbox.padded(self.pad)
    }

    /// The same space with every length multiplied by `s`.
    pub fn dilate(&self, s: f64) -> Result<Self> {
        use crate::singular_set::Primitive as P;
        let sc = |v: &Vec<f64>| v.iter().map(|x| x * s).collect::<Vec<_>>();
        let prims = self
            .singular
            .primitives()
            .iter()
            .map(|p| match p {
                P::Point { at } => P::Point { at: sc(at) },
                P::Segment { a, b } => P::Segment { a: sc(a), b: sc(b) },
                P::HalfLine { origin, direction } => P::HalfLine { origin: sc(origin), direction: direction.clone() },
                P::Line { point, direction } => P::Line { point: sc(point), direction: direction.clone() },
                P::Hyperplane { point, normal } => P::Hyperplane { point: sc(point), normal: normal.clone() },
                P::Box { min, max } => P::Box { min: sc(min), max: sc(max) },
                P::Cloud { points } => P::Cloud { points: points.iter().map(sc).collect() },
            })
            .collect();
        let y = SingularSet::new(self.dim(), prims)?;
        let bbox = Aabb::new(sc(&self.bbox.min), sc(&self.bbox.max))?;
        GrushinSpace::new(y, self.beta, bbox, Some(self.pad * s))
    }

    pub(crate) fn check_point(&self, p: &[f64]) -> Result<()> {
        check_dim(p, self.dim())?;
        check_finite(p, "point")
    }

    /// Conformal weight `d_E(p,Y)^(-beta)`.
    pub fn weight(&self, p: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        Ok(self.weight_unchecked(p))
    }

    #[inline]
    pub(crate) fn weight_unchecked(&self, p: &[f64]) -> f64 {
        if self.beta == 0.0 {
            return 1.0;
        }
        let d = self.singular.distance(p);
        if d == 0.0 {
            f64::INFINITY
        } else {
            d.powf(-self.beta)
        }
    }

    /// Exact `d_Y(p, Y) = d_E(p,Y)^(1-beta)/(1-beta)`.
    pub fn distance_to_singular(&self, p: &[f64]) -> Result<f64> {
        self.check_point(p)?;
        Ok(radial_cost(0.0, self.singular.distance(p), self.beta))
    }

    /// Grushin length of a straight segment; `+inf` if it runs inside `Y`.
    pub fn segment_length(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_point(a)?;
        self.check_point(b)?;
        let (v, ok) = self.segment_integral(a, b, QUAD_REL);
        if v.is_finite() && !ok {
            return Err(GeomError::Quadrature { estimate: v, error: f64::NAN });
        }
        Ok(v)
    }

    /// Grushin length of a polyline; `Ok(+inf)` when the path has positive
    /// Euclidean length inside `Y`.
    pub fn grushin_length(&self, path: &Polyline) -> Result<f64> {
        check_dim(&path.vertices[0], self.dim())?;
        let mut total = 0.0;
        for w in path.vertices.windows(2) {
            let (v, ok) = self.segment_integral(&w[0], &w[1], QUAD_REL);
            if v.is_infinite() {
                return Ok(f64::INFINITY);
            }
            if !ok || v.is_nan() {
                return Err(GeomError::Quadrature { estimate: v, error: f64::NAN });
            }
            total += v;
        }
        if total.is_finite() {
            Ok(total)
        } else {
            Err(GeomError::NonFiniteLength)
        }
    }

    /// Integral of the weight along `[a,b]` and a convergence flag.
    pub(crate) fn segment_integral(&self, a: &[f64], b: &[f64], rel: f64) -> (f64, bool) {
        let len = norm_diff(a, b);
        if len == 0.0 {
            return (0.0, true);
        }
        if self.beta == 0.0 {
            return (len, true);
        }
        if self.singular.overlap_length(a, b) > 1e-12 * len {
            return (f64::INFINITY, true);
        }
        let n = a.len();
        let mut buf = vec![0.0; n];
        lerp_into(a, b, 0.5, &mut buf);
        let dmid = self.singular.distance(&buf);
        if dmid > 4.0 * len {
            // The weight is analytic and nearly constant here.
            return (gauss5(|t| self.weight_at(a, b, t, &mut buf), len), true);
        }
        let mut ts = Vec::new();
        self.singular.segment_breakpoints(a, b, &mut ts);
        let mut knots = Vec::with_capacity(ts.len() + 2);
        knots.push(0.0);
        knots.extend(ts);
        knots.push(1.0);
        let mut total = 0.0;
        let mut ok = true;
        for w in knots.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 <= t0 {
                continue;
            }
            let pl = (t1 - t0) * len;
            let d0 = self.dist_at(a, b, t0, &mut buf);
            let d1 = self.dist_at(a, b, t1, &mut buf);
            if d0.min(d1) >= pl {
                let r = self.plain(a, b, t0, t1, len, rel, &mut buf);
                total += r.0;
                ok &= r.1;
                continue;
            }
            let tm = 0.5 * (t0 + t1);
            for (te, tf, de) in [(t0, tm, d0), (t1, tm, d1)] {
                let hl = (tf - te).abs() * len;
                let r = if de < hl {
                    self.tail_length(a, b, te, tf, len, rel, &mut buf)
                } else {
                    self.plain(a, b, te.min(tf), te.max(tf), len, rel, &mut buf)
                };
                total += r.0;
                ok &= r.1;
            }
        }
        (total, ok)
    }

    #[inline]
    fn dist_at(&self, a: &[f64], b: &[f64], t: f64, buf: &mut [f64]) -> f64 {
        lerp_into(a, b, t, buf);
        self.singular.distance(buf)
    }

    #[inline]
    fn weight_at(&self, a: &[f64], b: &[f64], t: f64, buf: &mut [f64]) -> f64 {
        lerp_into(a, b, t, buf);
        self.weight_unchecked(buf)
    }

    #[allow(clippy::too_many_arguments)]
    fn plain(&self, a: &[f64], b: &[f64], t0: f64, t1: f64, len: f64, rel: f64, buf: &mut [f64]) -> (f64, bool) {
        let r = quadrature::integrate(|t| self.weight_at(a, b, t, buf), t0, t1, rel, 1e-15 * len);
        let noise = ROUNDING * coord_scale(a, b) / ((t1 - t0) * len);
        (r.value * len, settled(&r, noise))
    }

    /// Integrates from the singular end `te` toward `tf` after the substitution
    /// `tau = T u^(1/(1-beta))`, which makes a radial power law exactly constant.
    /// Below `tau0` coordinates lose relative precision, so the tail uses the
    /// hyperbolic profile through the two end distances; distances within
    /// rounding of zero count as zero, which can only lengthen the result.
    #[allow(clippy::too_many_arguments)]
    fn tail_length(&self, a: &[f64], b: &[f64], te: f64, tf: f64, len: f64, rel: f64, buf: &mut [f64]) -> (f64, bool) {
        let q = 1.0 / (1.0 - self.beta);
        let span = tf - te;
        let big_t = span.abs() * len;
        let base = if te == 0.0 {
            a.to_vec()
        } else if te == 1.0 {
            b.to_vec()
        } else {
            lerp(a, b, te)
        };
        let scale = coord_scale(a, b);
        let tau0 = (1e-9 * scale).min(0.5 * big_t);
        let u0 = (tau0 / big_t).powf(1.0 / q);
        let at = |s: f64, buf: &mut [f64]| {
            for i in 0..buf.len() {
                buf[i] = base[i] + s * (b[i] - a[i]);
            }
        };
        let r = quadrature::integrate(
            |u| {
                at(span * u.powf(q), buf);
                self.weight_unchecked(buf) * big_t * q * u.powf(q - 1.0)
            },
            u0,
            1.0,
            rel,
            1e-15 * len,
        );
        let snap = |d: f64| if d <= ROUNDING * scale { 0.0 } else { d };
        let de = snap(self.singular.distance(&base));
        at(span * tau0 / big_t, buf);
        let dt = snap(self.singular.distance(buf));
        let tail = if dt <= de {
            tau0 * dt.powf(-self.beta)
        } else if de == 0.0 {
            radial_cost(0.0, dt, self.beta) * tau0 / dt
        } else {
            let k2 = (dt * dt - de * de) / (tau0 * tau0);
            let beta = self.beta;
            quadrature::integrate(|t| (de * de + k2 * t * t).powf(-0.5 * beta), 0.0, tau0, rel, 0.0).value
        };
        (r.value + tail, settled(&r, ROUNDING * scale / big_t) && tail.is_finite())
    }

    /// Certified lower bound on `d_Y(x,y)`: the larger of the two-sided
    /// radial estimate and the near/far estimate `d_E/(d_E(x,Y)+d_E)^beta`.
    pub fn distance_lower_bound(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.lower_bound_unchecked(x, y))
    }

    pub(crate) fn lower_bound_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let dxy = norm_diff(x, y);
        if dxy == 0.0 {
            return 0.0;
        }
        let dx = self.singular.distance(x);
        let dy = self.singular.distance(y);
        let b = self.beta;
        let radial = radial_cost(dx, dxy, b).max(radial_cost(dy, dxy, b));
        let near = (dxy / (dx + dxy).powf(b)).max(dxy / (dy + dxy).powf(b));
        radial.max(near)
    }

    /// The two-sided radial estimate alone.
    pub fn radial_lower_bound(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        let dxy = norm_diff(x, y);
        let (dx, dy) = (self.singular.distance(x), self.singular.distance(y));
        Ok(radial_cost(dx, dxy, self.beta).max(radial_cost(dy, dxy, self.beta)))
    }
}

/// Least weighted cost of travelling Euclidean distance `r` from a point at
/// distance `d0` from `Y`: `((d0+r)^(1-b) - d0^(1-b))/(1-b)`.
/// Converged, or stopped at the rounding floor `noise` (relative) of the integrand.
fn settled(r: &quadrature::Integral, noise: f64) -> bool {
    r.converged || r.error <= noise.max(1e-8) * r.value.abs()
}

pub fn radial_cost(d0: f64, r: f64, b: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if b == 0.0 {
        return r;
    }
    let g = 1.0 - b;
    if d0 <= 0.0 {
        return r.powf(g) / g;
    }
    // d0^g ((1 + r/d0)^g - 1) without cancellation.
    d0.powf(g) * (g * (r / d0).ln_1p()).exp_m1() / g
}

fn gauss5(mut f: impl FnMut(f64) -> f64, len: f64) -> f64 {
    const X: [f64; 5] = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
    const W: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let mut s = 0.0;
    for i in 0..5 {
        s += W[i] * f(0.5 + 0.5 * X[i]);
    }
    0.5 * s * len
}

/// A piecewise-linear path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(GeomError::ShortPolyline);
        }
        let n = vertices[0].dim();
        for v in &vertices {
            check_dim(v, n)?;
        }
        Ok(Polyline { vertices })
    }

    /// From raw coordinate rows.
    pub fn from_coords(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(Point::new).collect::<Result<_>>()?)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn euclidean_length(&self) -> f64 {
        self.vertices.windows(2).map(|w| norm_diff(&w[0], &w[1])).sum()
    }

    pub fn reversed(&self) -> Polyline {
        let mut v = self.vertices.clone();
        v.reverse();
        Polyline { vertices: v }
    }

    /// One vertex per row, comma separated, with a header.
    pub fn to_csv(&self) -> String {
        let n = self.vertices[0].dim();
        let header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let mut s = header.join(",");
        s.push('\n');
        for v in &self.vertices {
            let row: Vec<String> = v.iter().map(|c| format!("{c}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}
