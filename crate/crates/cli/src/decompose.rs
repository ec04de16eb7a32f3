use std::path::PathBuf;

use clap::Args;
use grushin_core::whitney::{
    chart_summary, enlarge_cubes, select_a, verify_whitney_balls, whitney_decompose, Boundary, ChartSummary, CubeSystem,
    MetricSample, WhitneyBallReport, WhitneyData, WhitneyReport, DEFAULT_EPS,
};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::{write_atomic, Report};
use crate::spec::SpaceSpec;
use crate::{OutArgs, Outcome};

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Grid points per side of the box.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0.125)]
    delta: f64,
    #[arg(long, default_value_t = 1.0 / 9.0)]
    c0: f64,
    #[arg(long, default_value_t = 2.0)]
    c1: f64,
    /// Defaults to the smallest admissible value for the space spec's beta.
    #[arg(long)]
    a: Option<f64>,
    /// Enlarge cubes of small diameter.
    #[arg(long)]
    enlarge: bool,
    /// Check Whitney balls on the enlarged system (implies --enlarge).
    #[arg(long, alias = "verify-sec7")]
    verify_balls: bool,
    /// Slack in the Whitney-ball radius, in (0, 1).
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Build and check the chart of every cube with at least two points.
    #[arg(long)]
    charts: bool,
    /// Write cube footprints as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct CubeRow {
    k: i32,
    center: Vec<f64>,
    members: usize,
    diam: f64,
    boundary_distance: f64,
    enlarged_diam: Option<f64>,
}

#[derive(Serialize)]
struct DecomposeResult {
    data: WhitneyData,
    grid_side: usize,
    sample_size: usize,
    omega_size: usize,
    enlarged: bool,
    report: WhitneyReport,
    whitney_balls: Option<WhitneyBallReport>,
    charts: Option<ChartSummary>,
    cubes: Vec<CubeRow>,
}

/// `side^n` points of a regular grid on the box.
fn grid(spec: &SpaceSpec, side: usize) -> Vec<Vec<f64>> {
    let b = spec.space.bbox();
    let n = b.dim();
    let total = side.pow(n as u32);
    (0..total)
        .map(|mut i| {
            (0..n)
                .map(|d| {
                    let j = i % side;
                    i /= side;
                    b.min[d] + (b.max[d] - b.min[d]) * j as f64 / (side - 1) as f64
                })
                .collect()
        })
        .collect()
}

pub fn build(spec: &SpaceSpec, side: usize, data: WhitneyData) -> Result<CubeSystem> {
    if side < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    let points = grid(spec, side);
    let omega: Vec<usize> = (0..points.len()).filter(|&i| spec.space.singular().distance(&points[i]) > 0.0).collect();
    let m = MetricSample::grushin(&spec.space, points, None)?;
    Ok(whitney_decompose(&m, &omega, data, Boundary::Singular)?)
}

pub fn run(a: &DecomposeArgs) -> Result<Outcome> {
    let spec = SpaceSpec::load(&a.spec)?;
    let beta = spec.space.beta();
    let a_value = match a.a {
        Some(v) => v,
        None => select_a(beta, a.delta)?,
    };
    let data = WhitneyData::new(a.delta, a.c0, a.c1, a_value)?;
    let mut sys = build(&spec, a.samples, data)?;
    let enlarged = a.enlarge || a.verify_balls;
    if enlarged {
        sys = enlarge_cubes(&sys);
    }
    let whitney_balls = if a.verify_balls { Some(verify_whitney_balls(&sys, a.eps)?) } else { None };
    let charts = if a.charts { Some(chart_summary(&sys, 2)?) } else { None };
    if let Some(p) = &a.csv {
        write_atomic(p, &sys.to_csv())?;
    }
    let passed = sys.report.passed
        && whitney_balls.as_ref().is_none_or(|s| s.passed)
        && charts.as_ref().is_none_or(|c| c.passed);
    let cubes = sys
        .cubes
        .iter()
        .map(|c| CubeRow {
            k: c.k,
            center: sys.sample.point(c.center).to_vec(),
            members: c.members.len(),
            diam: c.diam,
            boundary_distance: c.boundary_distance,
            enlarged_diam: c.enlarged.map(|e| e.diam),
        })
        .collect();
    let result = DecomposeResult {
        data,
        grid_side: a.samples,
        sample_size: sys.sample.len(),
        omega_size: sys.omega.len(),
        enlarged,
        report: sys.report.clone(),
        whitney_balls,
        charts,
        cubes,
    };
    let json = Report::new("decompose", Some(&spec), result).passed(passed).to_json()?;
    Ok(Outcome { json, passed })
}
