//! Space-spec files: a JSON description of `(Y, beta)`, a box and solver defaults.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "beta": 0.5,
//!   "singular": [{ "type": "point", "at": [0, 0] }],
//!   "bbox": { "min": [-2, -2], "max": [2, 2] },
//!   "solver": { "resolution": 0.05, "seed": 0 }
//! }
//! ```

use std::path::Path;

use grushin_core::{Aabb, GeomError, GrushinSpace, Primitive, SingularSet};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const DEFAULT_RESOLUTION: f64 = 0.05;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    dimension: usize,
    beta: f64,
    singular: Vec<Primitive>,
    bbox: RawBox,
    #[serde(default)]
    solver: SolverDefaults,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    min: Vec<f64>,
    max: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SolverDefaults {
    resolution: Option<f64>,
    pad: Option<f64>,
    seed: Option<u64>,
}

/// A parsed and validated spec.
#[derive(Debug, Clone)]
pub struct SpaceSpec {
    pub space: GrushinSpace,
    pub resolution: f64,
    pub seed: u64,
    pub sha256: String,
}

impl SpaceSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
        Self::parse(&path.display().to_string(), &bytes)
    }

    pub fn parse(file: &str, bytes: &[u8]) -> Result<Self> {
        let sha256 = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();
        let text = std::str::from_utf8(bytes).map_err(|e| CliError::Spec {
            file: file.into(),
            field: "<file>".into(),
            message: format!("not UTF-8: {e}"),
        })?;
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = match e.path().to_string() {
                p if p == "." || p == "?" => "<root>".to_string(),
                p => p,
            };
            CliError::Spec { file: file.into(), field, message: e.into_inner().to_string() }
        })?;
        let fail = |field: String, message: String| {
            let message = match line_of(text, &field) {
                Some(line) => format!("{message} (line {line})"),
                None => message,
            };
            CliError::Spec { file: file.into(), field, message }
        };
        let singular = SingularSet::new(raw.dimension, raw.singular).map_err(|e| match e {
            GeomError::InvalidPrimitive { index, reason } => fail(format!("singular[{index}]"), reason),
            GeomError::EmptySingularSet => fail("singular".into(), e.to_string()),
            GeomError::InvalidParameter { name, reason } => fail(name.into(), reason),
            e => fail("singular".into(), e.to_string()),
        })?;
        if raw.bbox.min.len() != raw.dimension || raw.bbox.max.len() != raw.dimension {
            return Err(fail(
                "bbox".into(),
                format!("expected {} coordinates in min and max", raw.dimension),
            ));
        }
        let bbox = Aabb::new(raw.bbox.min, raw.bbox.max).map_err(|e| fail("bbox".into(), e.to_string()))?;
        let space = GrushinSpace::new(singular, raw.beta, bbox, raw.solver.pad).map_err(|e| match e {
            GeomError::InvalidParameter { name: "pad", reason } => fail("solver.pad".into(), reason),
            GeomError::InvalidParameter { name, reason } => fail(name.into(), reason),
            e => fail("<root>".into(), e.to_string()),
        })?;
        let resolution = raw.solver.resolution.unwrap_or(DEFAULT_RESOLUTION);
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(fail("solver.resolution".into(), format!("{resolution} must be positive")));
        }
        Ok(SpaceSpec { space, resolution, seed: raw.solver.seed.unwrap_or(0), sha256 })
    }
}

/// Line of the first occurrence of the last key in a field path like `solver.pad`.
fn line_of(text: &str, field: &str) -> Option<usize> {
    let key = field.rsplit('.').next()?.split('[').next()?;
    let needle = format!("\"{key}\"");
    let at = text.find(&needle)?;
    Some(text[..at].matches('\n').count() + 1)
}

/// Coordinates given on the command line.
#[derive(Clone, Debug)]
pub struct Coords(pub Vec<f64>);

/// Parses `"1,0"` or `"1.5, -2"` into coordinates.
pub fn parse_point(s: &str) -> std::result::Result<Coords, String> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("bad coordinate `{}`: {e}", c.trim())))
        .collect::<std::result::Result<_, _>>()
        .map(Coords)
}
