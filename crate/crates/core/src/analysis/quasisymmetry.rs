use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::holder::check_beta;
use super::Bracketing;
use crate::error::{GeomError, Result};
use crate::geom::norm_diff;
use crate::metric::{radial_cost, GrushinSpace};
use crate::sampling;

/// Control function `eta(t) = max(H t^(1-beta) / c(t,beta), 2^beta (1 + 1/(2t))^beta t)`
/// with `c(t,beta) = ((1+2t)^(1-beta) - (2t)^(1-beta)) / (1-beta)`.
pub fn eta_control(beta: f64, h: f64, t: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(h > 0.0) {
        return Err(GeomError::InvalidParameter { name: "H", reason: "must be positive".into() });
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(GeomError::InvalidParameter { name: "t", reason: format!("must be positive, got {t}") });
    }
    Ok(eta_unchecked(beta, h, t))
}

fn eta_unchecked(beta: f64, h: f64, t: f64) -> f64 {
    let c = radial_cost(2.0 * t, 1.0, beta);
    let first = h * t.powf(1.0 - beta) / c;
    let second = if beta == 0.0 { t } else { 2f64.powf(beta) * (1.0 + 0.5 / t).powf(beta) * t };
    first.max(second)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// `d_E(x,y) / d_E(x,z)`.
    pub t: f64,
    pub eta: f64,
    pub xy: (f64, f64),
    pub xz: (f64, f64),
}

impl TripleWitness {
    /// `lower(x,y)/upper(x,z) - eta(t)`: positive only for a proven violation.
    pub fn certified_excess(&self) -> f64 {
        self.xy.0 / self.xz.1 - self.eta
    }

    /// `upper(x,y)/lower(x,z) - eta(t)`.
    pub fn optimistic_excess(&self) -> f64 {
        self.xy.1 / self.xz.0 - self.eta
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasisymmetryReport {
    pub beta: f64,
    pub h: f64,
    /// The first branch of eta divides by `c(t,beta)`.
    pub eta_first_branch: String,
    pub bracketing: Bracketing,
    pub triples_tested: usize,
    /// Max certified excess; positive means a proven violation.
    pub worst_excess: f64,
    /// Max excess if every bracket resolved against the claim.
    pub worst_optimistic_excess: f64,
    pub violations: usize,
    pub violated: bool,
    pub worst_triple: Option<TripleWitness>,
}

/// Brackets one triple; fails if two points coincide.
pub fn qs_triple(
    space: &GrushinSpace,
    h: f64,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    bracketing: Bracketing,
) -> Result<TripleWitness> {
    let (dxy, dxz, dyz) = (norm_diff(x, y), norm_diff(x, z), norm_diff(y, z));
    if dxy == 0.0 || dxz == 0.0 || dyz == 0.0 {
        return Err(GeomError::InvalidParameter { name: "triple", reason: "points must be distinct".into() });
    }
    let t = dxy / dxz;
    let eta = eta_control(space.beta(), h, t)?;
    Ok(TripleWitness {
        x: x.to_vec(),
        y: y.to_vec(),
        z: z.to_vec(),
        t,
        eta,
        xy: bracketing.bracket(space, x, y)?,
        xz: bracketing.bracket(space, x, z)?,
    })
}

/// Tests `d_Y(x,y)/d_Y(x,z) <= eta(d_E(x,y)/d_E(x,z))` on seeded triples.
pub fn check_quasisymmetry(
    space: &GrushinSpace,
    h: f64,
    triples: usize,
    seed: u64,
    bracketing: Bracketing,
) -> Result<QuasisymmetryReport> {
    if triples == 0 {
        return Err(GeomError::InvalidParameter { name: "triples", reason: "must be at least 1".into() });
    }
    eta_control(space.beta(), h, 1.0)?;
    let samples = sampling::tuples(space.bbox(), 3, triples, seed);
    let rows: Vec<Option<TripleWitness>> = samples
        .par_iter()
        .map(|p| match qs_triple(space, h, &p[0], &p[1], &p[2], bracketing) {
            Ok(w) => Ok(Some(w)),
            Err(GeomError::InvalidParameter { name: "triple", .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut rep = QuasisymmetryReport {
        beta: space.beta(),
        h,
        eta_first_branch: "H t^(1-beta) / c(t,beta)".into(),
        bracketing,
        triples_tested: 0,
        worst_excess: f64::NEG_INFINITY,
        worst_optimistic_excess: f64::NEG_INFINITY,
        violations: 0,
        violated: false,
        worst_triple: None,
    };
    for w in rows.into_iter().flatten() {
        rep.triples_tested += 1;
        let e = w.certified_excess();
        rep.worst_optimistic_excess = rep.worst_optimistic_excess.max(w.optimistic_excess());
        if e > 0.0 {
            rep.violations += 1;
        }
        if e > rep.worst_excess {
            rep.worst_excess = e;
            rep.worst_triple = Some(w);
        }
    }
    rep.violated = rep.violations > 0;
    Ok(rep)
}
