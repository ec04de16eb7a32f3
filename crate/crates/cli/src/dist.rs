use std::path::PathBuf;

use clap::Args;
use grushin_core::metric::{distance, refine};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::{write_atomic, Report};
use crate::spec::{parse_point, Coords, SpaceSpec};
use crate::{OutArgs, Outcome};

#[derive(Debug, Args)]
pub struct DistArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Comma-separated coordinates, e.g. `1,0`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
    from: Coords,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
    to: Coords,
    /// Relative resolution; defaults to the space spec's solver resolution.
    #[arg(long)]
    resolution: Option<f64>,
    /// Number of refinements, each halving the resolution.
    #[arg(long, default_value_t = 0)]
    refine: u32,
    /// Write the witness polyline as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct DistResult {
    from: Vec<f64>,
    to: Vec<f64>,
    lower: f64,
    upper: f64,
    width: f64,
    refinements: u32,
    window_restricted_upper: bool,
    bracket: grushin_core::DistanceBracket,
}

pub fn run(a: &DistArgs) -> Result<Outcome> {
    let spec = SpaceSpec::load(&a.spec)?;
    let dim = spec.space.dim();
    for (name, p) in [("--from", &a.from.0), ("--to", &a.to.0)] {
        if p.len() != dim {
            return Err(CliError::Usage(format!("{name} has {} coordinates, the space has dimension {dim}", p.len())));
        }
        if !spec.space.bbox().contains(p) {
            return Err(CliError::Usage(format!("{name} {p:?} lies outside the bbox")));
        }
    }
    let resolution = a.resolution.unwrap_or(spec.resolution);
    let mut b = distance(&spec.space, &a.from.0, &a.to.0, resolution)?;
    for _ in 0..a.refine {
        b = refine(&spec.space, &b)?;
    }
    if let (Some(path), Some(w)) = (&a.csv, &b.witness) {
        write_atomic(path, &w.to_csv())?;
    }
    let result = DistResult {
        from: a.from.0.clone(),
        to: a.to.0.clone(),
        lower: b.lower,
        upper: b.upper,
        width: b.width(),
        refinements: a.refine,
        window_restricted_upper: true,
        bracket: b,
    };
    let json = Report::new("dist", Some(&spec), result).resolution(resolution).to_json()?;
    Ok(Outcome { json, passed: true })
}
