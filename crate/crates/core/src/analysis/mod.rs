//! Checks of the analytic properties of Grushin spaces on seeded samples.
//!
//! Violations are only ever claimed from the certified side of a bracket.

mod curvature;
mod doubling;
mod holder;
mod nondoubling;
mod quasisymmetry;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metric::{self, GrushinSpace};

pub use curvature::{
    alpha_grushin_curvature, check_whitney_curvature, gaussian_curvature_conformal, gaussian_curvature_diagonal,
    nondoubling_metric_curvature, AlphaCurvatureSample, CurvatureReport,
};
pub use doubling::{estimate_doubling, estimate_doubling_on, DoublingReport};
pub use holder::{check_holder, holder_constant_uniform, HolderReport, PairWitness};
pub use nondoubling::{nondoubling_ball_count, nondoubling_flag, NonDoublingBalls, NonDoublingFlag};
pub use quasisymmetry::{check_quasisymmetry, eta_control, qs_triple, QuasisymmetryReport, TripleWitness};

/// How distance brackets are obtained for sampled pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Bracketing {
    /// Upper: Grushin length of the straight segment. Lower: the analytic bound.
    #[default]
    Straight,
    /// The grid solver at the given relative resolution.
    Solver { resolution: f64 },
}


impl Bracketing {
    /// `(lower, upper)` for `d_Y(x, y)`.
    pub fn bracket(&self, space: &GrushinSpace, x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
        match *self {
            Bracketing::Straight => {
                let lower = space.distance_lower_bound(x, y)?;
                let upper = space.segment_length(x, y)?;
                Ok((lower, upper))
            }
            Bracketing::Solver { resolution } => {
                let b = metric::distance(space, x, y, resolution)?;
                Ok((b.lower, b.upper))
            }
        }
    }
}
