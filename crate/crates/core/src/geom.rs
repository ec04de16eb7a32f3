//! Points, boxes and small vector helpers.

use serde::{Deserialize, Serialize};
use std::ops::Deref;

use crate::error::{GeomError, Result};

/// A point of Euclidean space with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(GeomError::DimensionMismatch { expected: 1, got: 0 });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::NonFinite { what: "point" });
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Point(coords)
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<[f64; 2]> for Point {
    fn from(c: [f64; 2]) -> Self {
        Point(c.to_vec())
    }
}

impl From<[f64; 3]> for Point {
    fn from(c: [f64; 3]) -> Self {
        Point(c.to_vec())
    }
}

/// Axis-aligned box `[min, max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Aabb {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(GeomError::DimensionMismatch { expected: min.len(), got: max.len() });
        }
        if min.iter().chain(&max).any(|c| !c.is_finite()) {
            return Err(GeomError::NonFinite { what: "box" });
        }
        if min.iter().zip(&max).any(|(a, b)| a > b) {
            return Err(GeomError::InvalidParameter {
                name: "bbox",
                reason: "min exceeds max".into(),
            });
        }
        Ok(Aabb { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn diameter(&self) -> f64 {
        norm_diff(&self.max, &self.min)
    }

    pub fn volume(&self) -> f64 {
        self.min.iter().zip(&self.max).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.contains_tol(p, 0.0)
    }

    pub fn contains_tol(&self, p: &[f64], tol: f64) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .zip(self.min.iter().zip(&self.max))
                .all(|(x, (a, b))| *x >= a - tol && *x <= b + tol)
    }

    pub fn padded(&self, pad: f64) -> Aabb {
        Aabb {
            min: self.min.iter().map(|a| a - pad).collect(),
            max: self.max.iter().map(|b| b + pad).collect(),
        }
    }

    /// Euclidean distance from `p` to the box (0 inside).
    pub fn distance(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(x, (a, b))| {
                let d = if x < a { a - x } else if x > b { x - b } else { 0.0 };
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Euclidean distance from an interior point `p` to the boundary.
    pub fn distance_to_boundary(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(x, (a, b))| (x - a).min(b - x))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + t (b - a)`
#[inline]
pub fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

#[inline]
pub fn lerp_into(a: &[f64], b: &[f64], t: f64, out: &mut [f64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = x + t * (y - x);
    }
}

pub(crate) fn check_finite(p: &[f64], what: &'static str) -> Result<()> {
    if p.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(GeomError::NonFinite { what })
    }
}

pub(crate) fn check_dim(p: &[f64], n: usize) -> Result<()> {
    if p.len() == n {
        Ok(())
    } else {
        Err(GeomError::DimensionMismatch { expected: n, got: p.len() })
    }
}

/// Relative rounding allowance for geometric predicates.
pub(crate) const ROUNDING: f64 = 64.0 * f64::EPSILON;

/// `1 + max |coordinate|` over both points.
pub(crate) fn coord_scale(a: &[f64], b: &[f64]) -> f64 {
    1.0 + a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()))
}
