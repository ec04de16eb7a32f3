//! Singular sets built from closed primitives with exact distance oracles.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geom::{check_dim, check_finite, dot, norm, Point};

/// A closed primitive shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Primitive {
    Point { at: Vec<f64> },
    Segment { a: Vec<f64>, b: Vec<f64> },
    HalfLine { origin: Vec<f64>, direction: Vec<f64> },
    Line { point: Vec<f64>, direction: Vec<f64> },
    Hyperplane { point: Vec<f64>, normal: Vec<f64> },
    Box { min: Vec<f64>, max: Vec<f64> },
    Cloud { points: Vec<Vec<f64>> },
}

impl Primitive {
    fn coordinate_lists(&self) -> Vec<&Vec<f64>> {
        match self {
            Primitive::Point { at } => vec![at],
            Primitive::Segment { a, b } => vec![a, b],
            Primitive::HalfLine { origin, direction } => vec![origin, direction],
            Primitive::Line { point, direction } => vec![point, direction],
            Primitive::Hyperplane { point, normal } => vec![point, normal],
            Primitive::Box { min, max } => vec![min, max],
            Primitive::Cloud { points } => points.iter().collect(),
        }
    }

    fn normalized(&self, index: usize) -> Result<Primitive> {
        let unit = |v: &Vec<f64>, what: &str| -> Result<Vec<f64>> {
            let n = norm(v);
            if n == 0.0 {
                return Err(GeomError::InvalidPrimitive { index, reason: format!("zero {what}") });
            }
            Ok(v.iter().map(|c| c / n).collect())
        };
        Ok(match self {
            Primitive::HalfLine { origin, direction } => Primitive::HalfLine {
                origin: origin.clone(),
                direction: unit(direction, "direction")?,
            },
            Primitive::Line { point, direction } => Primitive::Line {
                point: point.clone(),
                direction: unit(direction, "direction")?,
            },
            Primitive::Hyperplane { point, normal } => Primitive::Hyperplane {
                point: point.clone(),
                normal: unit(normal, "normal")?,
            },
            Primitive::Box { min, max } => {
                if min.iter().zip(max).any(|(a, b)| a > b) {
                    return Err(GeomError::InvalidPrimitive { index, reason: "box min exceeds max".into() });
                }
                self.clone()
            }
            Primitive::Cloud { points } if points.is_empty() => {
                return Err(GeomError::InvalidPrimitive { index, reason: "empty point cloud".into() })
            }
            other => other.clone(),
        })
    }

    /// Squared distance from `p`, and the nearest point when `nearest` is given.
    fn dist2(&self, p: &[f64], mut nearest: Option<&mut Vec<f64>>) -> f64 {
        let mut set = |q: &mut dyn FnMut(&mut Vec<f64>)| {
            if let Some(out) = nearest.as_deref_mut() {
                out.clear();
                q(out);
            }
        };
        match self {
            Primitive::Point { at } => {
                set(&mut |o| o.extend_from_slice(at));
                sq_dist(p, at)
            }
            Primitive::Segment { a, b } => line_like(p, a, b, true, 0.0, 1.0, &mut set),
            Primitive::HalfLine { origin, direction } => {
                line_like(p, origin, direction, false, 0.0, f64::INFINITY, &mut set)
            }
            Primitive::Line { point, direction } => {
                line_like(p, point, direction, false, f64::NEG_INFINITY, f64::INFINITY, &mut set)
            }
            Primitive::Hyperplane { point, normal } => {
                let s: f64 = p.iter().zip(point).zip(normal).map(|((x, q), n)| (x - q) * n).sum();
                set(&mut |o| o.extend(p.iter().zip(normal).map(|(x, n)| x - s * n)));
                s * s
            }
            Primitive::Box { min, max } => {
                set(&mut |o| o.extend(p.iter().zip(min.iter().zip(max)).map(|(x, (a, b))| x.clamp(*a, *b))));
                p.iter()
                    .zip(min.iter().zip(max))
                    .map(|(x, (a, b))| {
                        let d = x - x.clamp(*a, *b);
                        d * d
                    })
                    .sum()
            }
            Primitive::Cloud { points } => {
                let mut best = 0usize;
                let mut bd = f64::INFINITY;
                for (i, q) in points.iter().enumerate() {
                    let d = sq_dist(p, q);
                    if d < bd || (d == bd && lex_less(q, &points[best])) {
                        bd = d;
                        best = i;
                    }
                }
                set(&mut |o| o.extend_from_slice(&points[best]));
                bd
            }
        }
    }

    /// Parameters `t` in `[0,1]` where the distance along `a + t(b-a)` to this
    /// primitive attains a local minimum or where the segment enters/leaves it.
    fn critical_params(&self, a: &[f64], b: &[f64], out: &mut Vec<f64>) {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        let dd = dot(&d, &d);
        if dd == 0.0 {
            return;
        }
        let project = |q: &[f64]| -> f64 {
            let s: f64 = q.iter().zip(a).zip(&d).map(|((q, a), d)| (q - a) * d).sum();
            (s / dd).clamp(0.0, 1.0)
        };
        match self {
            Primitive::Point { at } => out.push(project(at)),
            Primitive::Cloud { points } => out.extend(points.iter().map(|q| project(q))),
            Primitive::Segment { a: p, b: q } => {
                let dir: Vec<f64> = q.iter().zip(p).map(|(x, y)| x - y).collect();
                out.push(closest_segment_param(a, &d, p, &dir, 0.0, 1.0));
                slab_crossings(a, &d, p, &dir, &[0.0, dot(&dir, &dir)], out);
            }
            Primitive::HalfLine { origin, direction } => {
                out.push(closest_segment_param(a, &d, origin, direction, 0.0, f64::INFINITY));
                slab_crossings(a, &d, origin, direction, &[0.0], out);
            }
            Primitive::Line { point, direction } => out.push(closest_segment_param(
                a,
                &d,
                point,
                direction,
                f64::NEG_INFINITY,
                f64::INFINITY,
            )),
            Primitive::Hyperplane { point, normal } => {
                let sa: f64 = a.iter().zip(point).zip(normal).map(|((x, q), n)| (x - q) * n).sum();
                let sb: f64 = b.iter().zip(point).zip(normal).map(|((x, q), n)| (x - q) * n).sum();
                if sa * sb < 0.0 {
                    out.push(sa / (sa - sb));
                }
            }
            Primitive::Box { min, max } => {
                for i in 0..a.len() {
                    if d[i] != 0.0 {
                        for c in [min[i], max[i]] {
                            let t = (c - a[i]) / d[i];
                            if t > 0.0 && t < 1.0 {
                                out.push(t);
                            }
                        }
                    }
                }
                if let Some((t0, t1)) = self.clip(a, &d) {
                    out.push(t0);
                    out.push(t1);
                } else {
                    out.push(golden_min(|t| {
                        let p: Vec<f64> = a.iter().zip(&d).map(|(a, d)| a + t * d).collect();
                        self.dist2(&p, None)
                    }));
                }
            }
        }
    }

    /// Parameter interval of `a + t d`, `t in [0,1]`, inside a box primitive.
    fn clip(&self, a: &[f64], d: &[f64]) -> Option<(f64, f64)> {
        let Primitive::Box { min, max } = self else { return None };
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for i in 0..a.len() {
            if d[i] == 0.0 {
                if a[i] < min[i] || a[i] > max[i] {
                    return None;
                }
            } else {
                let (mut u, mut v) = ((min[i] - a[i]) / d[i], (max[i] - a[i]) / d[i]);
                if u > v {
                    std::mem::swap(&mut u, &mut v);
                }
                t0 = t0.max(u);
                t1 = t1.min(v);
                if t0 > t1 {
                    return None;
                }
            }
        }
        Some((t0, t1))
    }

    /// Euclidean length of the part of segment `[a,b]` contained in this primitive.
    fn overlap_length(&self, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        let len = norm(&d);
        if len == 0.0 {
            return 0.0;
        }
        let tol = 1e-12 * (1.0 + norm(a).max(norm(b)));
        match self {
            Primitive::Point { .. } | Primitive::Cloud { .. } => 0.0,
            Primitive::Hyperplane { .. } => {
                if self.dist2(a, None).sqrt() <= tol && self.dist2(b, None).sqrt() <= tol {
                    len
                } else {
                    0.0
                }
            }
            Primitive::Box { .. } => self.clip(a, &d).map_or(0.0, |(t0, t1)| (t1 - t0) * len),
            Primitive::Segment { a: p, b: q } => {
                let dir: Vec<f64> = q.iter().zip(p).map(|(x, y)| x - y).collect();
                collinear_overlap(a, b, len, p, &dir, 0.0, 1.0, tol)
            }
            Primitive::HalfLine { origin, direction } => {
                collinear_overlap(a, b, len, origin, direction, 0.0, f64::INFINITY, tol)
            }
            Primitive::Line { point, direction } => {
                collinear_overlap(a, b, len, point, direction, f64::NEG_INFINITY, f64::INFINITY, tol)
            }
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// Distance to `o + s dir`, `s in [lo, hi]`. `unnormalized` means `dir = end - o`.
type Setter<'a> = &'a mut dyn FnMut(&mut dyn FnMut(&mut Vec<f64>));

fn line_like(
    p: &[f64],
    o: &[f64],
    dir_or_end: &[f64],
    unnormalized: bool,
    lo: f64,
    hi: f64,
    set: Setter<'_>,
) -> f64 {
    let dir: Vec<f64> = if unnormalized {
        dir_or_end.iter().zip(o).map(|(e, o)| e - o).collect()
    } else {
        dir_or_end.to_vec()
    };
    let dd = dot(&dir, &dir);
    let s = if dd == 0.0 {
        0.0
    } else {
        (p.iter().zip(o).zip(&dir).map(|((p, o), d)| (p - o) * d).sum::<f64>() / dd).clamp(lo, hi)
    };
    let q: Vec<f64> = o.iter().zip(&dir).map(|(o, d)| o + s * d).collect();
    set(&mut |out| out.extend_from_slice(&q));
    sq_dist(p, &q)
}

/// Parameter on `a + t d1` (`t in [0,1]`) closest to `o + s d2` (`s in [lo,hi]`).
fn closest_segment_param(a: &[f64], d1: &[f64], o: &[f64], d2: &[f64], lo: f64, hi: f64) -> f64 {
    let r: Vec<f64> = a.iter().zip(o).map(|(a, o)| a - o).collect();
    let aa = dot(d1, d1);
    let e = dot(d2, d2);
    let f = dot(d2, &r);
    let c = dot(d1, &r);
    if e == 0.0 {
        return (-c / aa).clamp(0.0, 1.0);
    }
    let b = dot(d1, d2);
    let denom = aa * e - b * b;
    let mut t = if denom > 1e-14 * aa * e { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let s = (b * t + f) / e;
    if s < lo {
        t = ((b * lo - c) / aa).clamp(0.0, 1.0);
    } else if s > hi {
        t = ((b * hi - c) / aa).clamp(0.0, 1.0);
    }
    t
}

#[allow(clippy::too_many_arguments)]
fn collinear_overlap(
    a: &[f64],
    b: &[f64],
    len: f64,
    o: &[f64],
    dir: &[f64],
    lo: f64,
    hi: f64,
    tol: f64,
) -> f64 {
    let dd = dot(dir, dir);
    if dd == 0.0 {
        return 0.0;
    }
    let off = |p: &[f64]| -> (f64, f64) {
        let s = p.iter().zip(o).zip(dir).map(|((p, o), d)| (p - o) * d).sum::<f64>() / dd;
        let q: Vec<f64> = o.iter().zip(dir).map(|(o, d)| o + s * d).collect();
        (s, sq_dist(p, &q).sqrt())
    };
    let (sa, ea) = off(a);
    let (sb, eb) = off(b);
    if ea > tol || eb > tol {
        return 0.0;
    }
    let (u, v) = if sa < sb { (sa, sb) } else { (sb, sa) };
    let (u, v) = (u.max(lo), v.min(hi));
    if v <= u {
        0.0
    } else {
        len * (v - u) / (sb - sa).abs()
    }
}

fn golden_min(f: impl Fn(f64) -> f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Parameters where `a + t d` crosses the hyperplanes `(x - o).dir = level`,
/// across which the nearest point of a segment or half-line changes type.
fn slab_crossings(a: &[f64], d: &[f64], o: &[f64], dir: &[f64], levels: &[f64], out: &mut Vec<f64>) {
    let rate = dot(d, dir);
    if rate == 0.0 {
        return;
    }
    let start: f64 = a.iter().zip(o).zip(dir).map(|((x, o), u)| (x - o) * u).sum();
    for l in levels {
        let t = (l - start) / rate;
        if t > 0.0 && t < 1.0 {
            out.push(t);
        }
    }
}

/// Nonempty union of closed primitives in `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSingularSet", into = "RawSingularSet")]
pub struct SingularSet {
    dim: usize,
    primitives: Vec<Primitive>,
}

#[derive(Serialize, Deserialize)]
struct RawSingularSet {
    dim: usize,
    primitives: Vec<Primitive>,
}

impl TryFrom<RawSingularSet> for SingularSet {
    type Error = GeomError;
    fn try_from(raw: RawSingularSet) -> Result<Self> {
        SingularSet::new(raw.dim, raw.primitives)
    }
}

impl From<SingularSet> for RawSingularSet {
    fn from(s: SingularSet) -> Self {
        RawSingularSet { dim: s.dim, primitives: s.primitives }
    }
}

impl SingularSet {
    pub fn new(dim: usize, primitives: Vec<Primitive>) -> Result<Self> {
        if dim == 0 {
            return Err(GeomError::InvalidParameter { name: "dimension", reason: "must be positive".into() });
        }
        if primitives.is_empty() {
            return Err(GeomError::EmptySingularSet);
        }
        let mut out = Vec::with_capacity(primitives.len());
        for (index, p) in primitives.iter().enumerate() {
            for c in p.coordinate_lists() {
                if c.len() != dim {
                    return Err(GeomError::InvalidPrimitive {
                        index,
                        reason: format!("expected {dim} coordinates, got {}", c.len()),
                    });
                }
                if c.iter().any(|x| !x.is_finite()) {
                    return Err(GeomError::InvalidPrimitive { index, reason: "non-finite coordinate".into() });
                }
            }
            out.push(p.normalized(index)?);
        }
        Ok(SingularSet { dim, primitives: out })
    }

    /// The single point `at`.
    pub fn point(at: &[f64]) -> Self {
        Self::new(at.len(), vec![Primitive::Point { at: at.to_vec() }]).expect("finite point")
    }

    /// The hyperplane `{x_axis = 0}`; in the plane this is the vertical axis.
    pub fn coordinate_hyperplane(dim: usize, axis: usize) -> Self {
        let mut normal = vec![0.0; dim];
        normal[axis] = 1.0;
        Self::new(dim, vec![Primitive::Hyperplane { point: vec![0.0; dim], normal }]).expect("valid hyperplane")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    /// A new set with `p` appended.
    pub fn with_primitive(&self, p: Primitive) -> Result<Self> {
        let mut prims = self.primitives.clone();
        prims.push(p);
        Self::new(self.dim, prims)
    }

    /// Euclidean distance without dimension checks (hot path).
    #[inline]
    pub fn distance(&self, p: &[f64]) -> f64 {
        self.primitives
            .iter()
            .map(|q| q.dist2(p, None))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Checked distance. Values at rounding level relative to the coordinates
    /// are reported as 0, so points returned by [`Self::nearest_point`] lie on the set.
    pub fn euclid_distance(&self, p: &[f64]) -> Result<f64> {
        check_dim(p, self.dim)?;
        check_finite(p, "point")?;
        let d = self.distance(p);
        Ok(if d <= crate::geom::ROUNDING * crate::geom::coord_scale(p, p) { 0.0 } else { d })
    }

    pub fn nearest_point(&self, p: &[f64]) -> Result<Point> {
        Ok(self.nearest_feature(p)?.1)
    }

    /// Nearest point together with the index of the primitive providing it.
    pub fn nearest_feature(&self, p: &[f64]) -> Result<(usize, Point)> {
        check_dim(p, self.dim)?;
        check_finite(p, "point")?;
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        let mut buf = Vec::with_capacity(self.dim);
        for (i, q) in self.primitives.iter().enumerate() {
            let d = q.dist2(p, Some(&mut buf));
            if best.as_ref().is_none_or(|(bd, _, _)| d < *bd) {
                best = Some((d, i, buf.clone()));
            }
        }
        let (_, i, q) = best.expect("nonempty");
        Ok((i, Point::from_vec_unchecked(q)))
    }

    /// Distance to the second-nearest feature minus distance to the nearest
    /// one, where features are the primitives and the individual cloud points;
    /// `+inf` with a single feature. The gap is 2-Lipschitz and vanishes on the
    /// part of the medial axis created by competing features.
    pub fn feature_gap(&self, p: &[f64]) -> Result<f64> {
        check_dim(p, self.dim)?;
        check_finite(p, "point")?;
        let (mut d1, mut d2) = (f64::INFINITY, f64::INFINITY);
        let mut push = |d: f64| {
            if d < d1 {
                d2 = d1;
                d1 = d;
            } else if d < d2 {
                d2 = d;
            }
        };
        for q in &self.primitives {
            match q {
                Primitive::Cloud { points } => {
                    for c in points {
                        push(c.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt());
                    }
                }
                _ => push(q.dist2(p, None).sqrt()),
            }
        }
        Ok(d2 - d1)
    }

    /// Total length of `[a,b]` lying in the set (overlaps between primitives counted once per primitive).
    pub fn overlap_length(&self, a: &[f64], b: &[f64]) -> f64 {
        self.primitives.iter().map(|q| q.overlap_length(a, b)).fold(0.0, f64::max)
    }

    /// Sorted parameters in `(0,1)` at which the segment `[a,b]` comes closest to
    /// some primitive; used to split quadrature near the singular set.
    pub fn segment_breakpoints(&self, a: &[f64], b: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for q in &self.primitives {
            q.critical_params(a, b, out);
        }
        let len = crate::geom::norm_diff(a, b);
        let eps = if len > 0.0 { crate::geom::ROUNDING * crate::geom::coord_scale(a, b) / len } else { 0.5 };
        out.retain(|t| *t > eps && *t < 1.0 - eps);
        out.sort_by(f64::total_cmp);
        out.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    }

    /// Smallest distance to the set along the segment, sampled at the endpoints and breakpoints.
    pub fn segment_min_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut ts = Vec::new();
        self.segment_breakpoints(a, b, &mut ts);
        let mut p = vec![0.0; a.len()];
        let mut m = self.distance(a).min(self.distance(b));
        for t in ts {
            crate::geom::lerp_into(a, b, t, &mut p);
            m = m.min(self.distance(&p));
        }
        m
    }
}
