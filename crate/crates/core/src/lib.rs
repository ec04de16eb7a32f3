//! Numerical toolkit for conformal Grushin spaces: `R^n` with the length
//! metric `ds_E / d_E(., Y)^beta` for a closed singular set `Y`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod embeddings;
pub mod analysis;
pub mod geom;
pub mod metric;
pub mod quadrature;
pub mod sampling;
pub mod singular_set;
pub mod whitney;

pub use error::{GeomError, Result};
pub use geom::{Aabb, Point};
pub use metric::{DistanceBracket, GrushinSpace, Polyline, SolverOptions};
pub use singular_set::{Primitive, SingularSet};
