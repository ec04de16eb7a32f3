//! Explicit maps: the cone path-isometry, the alpha-Grushin coordinate change,
//! snowflake exponents, and a bi-Lipschitz distortion estimator on samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geom::norm_diff;
use crate::metric::Polyline;
use crate::quadrature::integrate;
use crate::whitney::MetricSample;

const QUAD_REL: f64 = 1e-10;

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(GeomError::InvalidParameter { name: "beta", reason: format!("{beta} not in [0,1)") });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(GeomError::InvalidParameter { name: "alpha", reason: format!("{alpha} is not a finite nonnegative number") });
    }
    Ok(())
}

fn planar(p: &[f64]) -> Result<[f64; 2]> {
    match p {
        [x, y] if x.is_finite() && y.is_finite() => Ok([*x, *y]),
        [_, _] => Err(GeomError::NonFinite { what: "map argument" }),
        _ => Err(GeomError::DimensionMismatch { expected: 2, got: p.len() }),
    }
}

/// `sqrt((1-beta)^(-2) - 1)`, the height gained per unit of `r^(1-beta)`.
pub fn cone_slope(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(((1.0 - beta).powi(-2) - 1.0).sqrt())
}

/// `(r^g cos t, r^g sin t, k r^g)` with `g = 1 - beta`; the origin maps to 0.
pub fn cone_map(beta: f64, p: &[f64]) -> Result<[f64; 3]> {
    let k = cone_slope(beta)?;
    let [x, y] = planar(p)?;
    let r = x.hypot(y);
    if r == 0.0 {
        return Ok([0.0; 3]);
    }
    let s = r.powf(1.0 - beta);
    Ok([s * x / r, s * y / r, k * s])
}

/// Exact distance for `Y = {0}`: the chord of the unrolled cone.
pub fn cone_distance(beta: f64, p: &[f64], q: &[f64]) -> Result<f64> {
    check_beta(beta)?;
    let (p, q) = (planar(p)?, planar(q)?);
    let g = 1.0 - beta;
    let (r1, r2) = (p[0].hypot(p[1]), q[0].hypot(q[1]));
    let (s1, s2) = (r1.powf(g) / g, r2.powf(g) / g);
    if r1 == 0.0 || r2 == 0.0 {
        return Ok(s1 + s2);
    }
    let cross = p[0] * q[1] - p[1] * q[0];
    let dot = p[0] * q[0] + p[1] * q[1];
    let psi = g * cross.abs().atan2(dot);
    if psi >= std::f64::consts::PI {
        return Ok(s1 + s2);
    }
    Ok((s1 * s1 + s2 * s2 - 2.0 * s1 * s2 * psi.cos()).max(0.0).sqrt())
}

/// Refines a planar polyline by `m` equal pieces per segment and maps it.
fn mapped_points(path: &Polyline, m: usize, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let v = path.vertices();
    let mut out = vec![f(&v[0])?];
    for w in v.windows(2) {
        for i in 1..=m {
            let t = i as f64 / m as f64;
            let p: Vec<f64> = w[0].iter().zip(w[1].iter()).map(|(a, b)| a + t * (b - a)).collect();
            out.push(f(&p)?);
        }
    }
    Ok(out)
}

fn chord_sum(pts: &[Vec<f64>]) -> f64 {
    pts.windows(2).map(|w| norm_diff(&w[0], &w[1])).sum()
}

/// Euclidean length of `cone_map` applied to a planar path, from inscribed
/// polylines with Richardson extrapolation.
pub fn cone_image_length(beta: f64, path: &Polyline, subdivisions: usize) -> Result<f64> {
    check_beta(beta)?;
    let m = subdivisions.max(1);
    let f = |p: &[f64]| cone_map(beta, p).map(|x| x.to_vec());
    let coarse = chord_sum(&mapped_points(path, m, f)?);
    let fine = chord_sum(&mapped_points(path, 2 * m, f)?);
    Ok(fine + (fine - coarse) / 3.0)
}

/// `(|x|^alpha x / (1+alpha), y)`.
pub fn grushin_chart(alpha: f64, p: &[f64]) -> Result<[f64; 2]> {
    check_alpha(alpha)?;
    let [x, y] = planar(p)?;
    Ok([x.abs().powf(alpha) * x / (1.0 + alpha), y])
}

/// Inverse of [`grushin_chart`].
pub fn grushin_chart_inverse(alpha: f64, q: &[f64]) -> Result<[f64; 2]> {
    check_alpha(alpha)?;
    let [u, v] = planar(q)?;
    let x = ((1.0 + alpha) * u.abs()).powf(1.0 / (1.0 + alpha));
    Ok([x.copysign(u), v])
}

/// Conformal weight `(1+alpha)^(-alpha/(1+alpha)) |u|^(-alpha/(1+alpha))` of the image line element.
pub fn pushforward_weight(alpha: f64, u: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let e = -alpha / (1.0 + alpha);
    Ok((1.0 + alpha).powf(e) * u.abs().powf(e))
}

fn finish(total: f64, converged: bool) -> Result<f64> {
    if !converged || !total.is_finite() {
        return Err(GeomError::Quadrature { estimate: total, error: f64::NAN });
    }
    Ok(total)
}

/// Length of a planar path for `dx^2 + |x|^(-2 alpha) dy^2`.
pub fn alpha_grushin_length(alpha: f64, path: &Polyline) -> Result<f64> {
    check_alpha(alpha)?;
    planar(&path.vertices()[0])?;
    let (mut total, mut ok) = (0.0, true);
    for w in path.vertices().windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let r = integrate(
            |t| {
                let x = a[0] + t * dx;
                (dx * dx + x.abs().powf(-2.0 * alpha) * dy * dy).sqrt()
            },
            0.0,
            1.0,
            QUAD_REL,
            0.0,
        );
        total += r.value;
        ok &= r.converged;
    }
    finish(total, ok)
}

/// Weighted Euclidean length of the image of a planar path under
/// [`grushin_chart`], integrating [`pushforward_weight`] along an inscribed
/// image polyline with `subdivisions` pieces per segment.
pub fn pushforward_length(alpha: f64, path: &Polyline, subdivisions: usize) -> Result<f64> {
    check_alpha(alpha)?;
    let pts = mapped_points(path, subdivisions.max(1), |p| grushin_chart(alpha, p).map(|x| x.to_vec()))?;
    let e = -alpha / (1.0 + alpha);
    let c = (1.0 + alpha).powf(e);
    let (mut total, mut ok) = (0.0, true);
    for w in pts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let len = norm_diff(a, b);
        if len == 0.0 {
            continue;
        }
        let r = integrate(|t| c * (a[0] + t * (b[0] - a[0])).abs().powf(e), 0.0, 1.0, QUAD_REL, 0.0);
        total += len * r.value;
        ok &= r.converged;
    }
    finish(total, ok)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Snowflake {
    pub beta_tilde: f64,
    pub alpha_tilde: f64,
    /// `floor(alpha_tilde) + 2`.
    pub target_dim: usize,
}

/// Exponents for the conformal deformation of an `eps`-snowflake line.
pub fn snowflake_parameter(beta: f64, eps: f64) -> Result<Snowflake> {
    check_beta(beta)?;
    if !(eps > 0.5 && eps <= 1.0) {
        return Err(GeomError::InvalidParameter { name: "eps", reason: format!("{eps} not in (1/2, 1]") });
    }
    let bt = 1.0 - eps;
    let den = 1.0 - bt - beta + bt * beta;
    assert!(den > 0.0, "(1 - beta_tilde)(1 - beta) is positive");
    let alpha_tilde = (bt + beta - bt * beta) / den;
    Ok(Snowflake { beta_tilde: bt, alpha_tilde, target_dim: alpha_tilde.floor() as usize + 2 })
}

/// One stage of a [`CandidateMap`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapStep {
    Cone { beta: f64 },
    GrushinChart { alpha: f64 },
    ProjectXy,
    Identity,
}

impl MapStep {
    fn output_dim(&self, input: usize) -> Result<usize> {
        match self {
            MapStep::Cone { .. } | MapStep::GrushinChart { .. } if input != 2 => {
                Err(GeomError::DimensionMismatch { expected: 2, got: input })
            }
            MapStep::Cone { .. } => Ok(3),
            MapStep::GrushinChart { .. } => Ok(2),
            MapStep::ProjectXy if input < 2 => Err(GeomError::DimensionMismatch { expected: 2, got: input }),
            MapStep::ProjectXy => Ok(2),
            MapStep::Identity => Ok(input),
        }
    }

    fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(match *self {
            MapStep::Cone { beta } => cone_map(beta, p)?.to_vec(),
            MapStep::GrushinChart { alpha } => grushin_chart(alpha, p)?.to_vec(),
            MapStep::ProjectXy => p[..2].to_vec(),
            MapStep::Identity => p.to_vec(),
        })
    }
}

/// A composition of built-in maps, applied left to right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateMap {
    pub pipeline: Vec<MapStep>,
}

impl CandidateMap {
    /// Parses `{"pipeline": [{"map": "cone", "beta": 0.5}, {"map": "project-xy"}]}`.
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// A single named map: `cone`, `grushin-chart`, `project-xy` or `identity`.
    pub fn named(name: &str, beta: f64, alpha: f64) -> Result<Self> {
        let step = match name {
            "cone" => {
                check_beta(beta)?;
                MapStep::Cone { beta }
            }
            "grushin-chart" => {
                check_alpha(alpha)?;
                MapStep::GrushinChart { alpha }
            }
            "project-xy" => MapStep::ProjectXy,
            "identity" => MapStep::Identity,
            _ => return Err(GeomError::InvalidParameter { name: "map", reason: format!("unknown map `{name}`") }),
        };
        Ok(CandidateMap { pipeline: vec![step] })
    }

    /// Output dimension for inputs of dimension `domain_dim`.
    pub fn target_dim(&self, domain_dim: usize) -> Result<usize> {
        self.pipeline.iter().try_fold(domain_dim, |d, s| s.output_dim(d))
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.target_dim(p.len())?;
        self.pipeline.iter().try_fold(p.to_vec(), |x, s| s.apply(&x))
    }
}

/// A witnessed pair and its distance ratio `d_target / d_source`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub i: usize,
    pub j: usize,
    pub source_lower: f64,
    pub source_upper: f64,
    pub target: f64,
    /// `target / source_upper` for expansion, `target / source_lower` for contraction.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionReport {
    /// Certified lower bound on the distortion after the best global rescaling.
    pub l_lower: f64,
    pub pairs: usize,
    /// The rescaling factor attaining `l_lower` on the witnessed pairs.
    pub scale: f64,
    pub worst_expand: Option<Witness>,
    pub worst_contract: Option<Witness>,
}

/// Distortion of `f` on random pairs of sample points. Source distances are
/// bracketed by the Grushin lower bound and the sample metric.
pub fn measure_distortion(sample: &MetricSample, f: &CandidateMap, pairs: usize, seed: u64) -> Result<DistortionReport> {
    let space = sample.space();
    measure_distortion_with(sample.points(), f, pairs, seed, |i, j| {
        let hi = sample.dist(i, j);
        let lo = match space {
            Some(s) => s.distance_lower_bound(sample.point(i), sample.point(j))?.min(hi),
            None => hi,
        };
        Ok((lo, hi))
    })
}

/// As [`measure_distortion`] with caller-supplied brackets `(lower, upper)`.
/// The pairs are a prefix of one seeded stream, so more pairs never lower the bound.
pub fn measure_distortion_with(
    points: &[Vec<f64>],
    f: &CandidateMap,
    pairs: usize,
    seed: u64,
    bracket: impl Fn(usize, usize) -> Result<(f64, f64)>,
) -> Result<DistortionReport> {
    let n = points.len();
    if n < 2 {
        return Err(GeomError::InvalidParameter { name: "points", reason: "need at least two points".into() });
    }
    let images: Vec<Vec<f64>> = points.iter().map(|p| f.eval(p)).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut expand: Option<Witness> = None;
    let mut contract: Option<Witness> = None;
    let mut used = 0;
    for _ in 0..pairs {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let (lo, hi) = bracket(i, j)?;
        if !(hi > 0.0) {
            continue;
        }
        used += 1;
        let target = norm_diff(&images[i], &images[j]);
        let w = |ratio| Witness { i, j, source_lower: lo, source_upper: hi, target, ratio };
        if expand.is_none_or(|e| target / hi > e.ratio) {
            expand = Some(w(target / hi));
        }
        let c = if lo > 0.0 { target / lo } else { f64::INFINITY };
        if contract.is_none_or(|e| c < e.ratio) {
            contract = Some(w(c));
        }
    }
    let (l_lower, scale) = match (expand, contract) {
        (Some(e), Some(c)) if c.ratio > 0.0 && c.ratio.is_finite() => {
            ((e.ratio / c.ratio).sqrt().max(1.0), 1.0 / (e.ratio * c.ratio).sqrt())
        }
        (Some(_), Some(c)) if c.ratio == 0.0 => (f64::INFINITY, 1.0),
        _ => (1.0, 1.0),
    };
    Ok(DistortionReport { l_lower, pairs: used, scale, worst_expand: expand, worst_contract: contract })
}
