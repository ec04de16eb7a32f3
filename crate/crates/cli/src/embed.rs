use std::path::PathBuf;

use clap::Args;
use grushin_core::embeddings::{
    alpha_grushin_length, cone_distance, cone_image_length, measure_distortion, measure_distortion_with,
    pushforward_length, CandidateMap, DistortionReport,
};
use grushin_core::sampling::QuasiRandom;
use grushin_core::whitney::MetricSample;
use grushin_core::{Aabb, Polyline, Primitive};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::Report;
use crate::spec::SpaceSpec;
use crate::{OutArgs, Outcome};

const NAMED: [&str; 4] = ["cone", "grushin-chart", "project-xy", "identity"];

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// `cone`, `grushin-chart`, `project-xy` or `identity`.
    #[arg(required_unless_present = "pipeline", conflicts_with = "pipeline")]
    map: Option<String>,
    /// JSON file `{"pipeline": [{"map": "cone", "beta": 0.5}, {"map": "project-xy"}]}`.
    #[arg(long)]
    pipeline: Option<PathBuf>,
    /// Required except for `grushin-chart`.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Sampled polylines for the path checks.
    #[arg(long, default_value_t = 50)]
    paths: usize,
    /// Sample points for the distortion estimate.
    #[arg(long, default_value_t = 300)]
    samples: usize,
    #[arg(long, default_value_t = 2000)]
    pairs: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Relative tolerance of the path checks.
    #[arg(long)]
    tol: Option<f64>,
    /// Fail when the distortion lower bound exceeds this value.
    #[arg(long)]
    max_distortion: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct PathRow {
    vertices: usize,
    source_length: f64,
    image_length: f64,
    rel_error: f64,
}

#[derive(Serialize)]
struct PathCheck {
    kind: &'static str,
    tol: f64,
    max_rel_error: f64,
    failures: usize,
    paths: Vec<PathRow>,
}

#[derive(Serialize)]
struct EmbedResult {
    map: CandidateMap,
    path_check: Option<PathCheck>,
    distortion_brackets: Option<&'static str>,
    distortion: Option<DistortionReport>,
}

/// Four-vertex polylines in `region` whose consecutive vertices satisfy `keep`.
fn random_paths(region: &Aabb, count: usize, seed: u64, keep: impl Fn(&[f64], &[f64]) -> bool) -> Vec<Polyline> {
    let mut q = QuasiRandom::new(2, seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut v = vec![q.next_in(region)];
        if !keep(&v[0], &v[0]) {
            continue;
        }
        while v.len() < 4 {
            let p = q.next_in(region);
            if keep(v.last().expect("nonempty"), &p) {
                v.push(p);
            }
        }
        out.push(Polyline::from_coords(v).expect("four finite vertices"));
    }
    out
}

fn seg_dist_to_origin(a: &[f64], b: &[f64]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    let t = if dd > 0.0 { (-(a[0] * d[0] + a[1] * d[1]) / dd).clamp(0.0, 1.0) } else { 0.0 };
    (a[0] + t * d[0]).hypot(a[1] + t * d[1])
}

fn check_paths(
    kind: &'static str,
    paths: &[Polyline],
    tol: f64,
    lengths: impl Fn(&Polyline) -> grushin_core::Result<(f64, f64)>,
) -> Result<PathCheck> {
    let rows = paths
        .iter()
        .map(|p| {
            let (s, i) = lengths(p)?;
            Ok(PathRow { vertices: p.vertices().len(), source_length: s, image_length: i, rel_error: (s - i).abs() / s })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_rel_error = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    let failures = rows.iter().filter(|r| r.rel_error.is_nan() || r.rel_error > tol).count();
    Ok(PathCheck { kind, tol, max_rel_error, failures, paths: rows })
}

fn is_origin(spec: &SpaceSpec) -> bool {
    matches!(spec.space.singular().primitives(), [Primitive::Point { at }] if at.iter().all(|&c| c == 0.0))
}

pub fn run(a: &EmbedArgs) -> Result<Outcome> {
    let spec = a.spec.as_deref().map(SpaceSpec::load).transpose()?;
    let seed = a.seed.or(spec.as_ref().map(|s| s.seed)).unwrap_or(0);
    let (name, map) = match (&a.map, &a.pipeline) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            let map = CandidateMap::from_json(&text).map_err(|e| CliError::Spec {
                file: path.display().to_string(),
                field: "pipeline".into(),
                message: e.to_string(),
            })?;
            ("pipeline", map)
        }
        (Some(name), None) => {
            let name = NAMED
                .iter()
                .find(|n| **n == name.as_str())
                .ok_or_else(|| CliError::Usage(format!("unknown map `{name}`; expected one of {}", NAMED.join(", "))))?;
            if spec.is_none() && *name != "grushin-chart" {
                return Err(CliError::Usage(format!("embed {name} needs --spec")));
            }
            let beta = spec.as_ref().map_or(0.0, |s| s.space.beta());
            (*name, CandidateMap::named(name, beta, a.alpha)?)
        }
        (None, None) => return Err(CliError::Usage("give a map name or --pipeline".into())),
    };

    let path_check = match name {
        "cone" => {
            let spec = spec.as_ref().expect("checked above");
            if spec.space.dim() != 2 || !is_origin(spec) {
                return Err(CliError::Usage("the cone map needs a planar spec with Y = {0}".into()));
            }
            let margin = 0.0125 * spec.space.bbox().diameter();
            let paths = random_paths(spec.space.bbox(), a.paths, seed, |p, q| seg_dist_to_origin(p, q) > margin);
            let beta = spec.space.beta();
            Some(check_paths("path-isometry", &paths, a.tol.unwrap_or(2e-3), |p| {
                Ok((spec.space.grushin_length(p)?, cone_image_length(beta, p, 400)?))
            })?)
        }
        "grushin-chart" => {
            let region = match &spec {
                Some(s) if s.space.dim() != 2 => {
                    return Err(CliError::Usage("grushin-chart needs a planar spec".into()));
                }
                Some(s) => s.space.bbox().clone(),
                None => Aabb::new(vec![-2.0, -2.0], vec![2.0, 2.0])?,
            };
            let margin = 0.0125 * region.diameter();
            if region.max[0] <= 2.0 * margin {
                return Err(CliError::Usage("grushin-chart needs a box reaching into x > 0".into()));
            }
            let half = Aabb::new(vec![region.min[0].max(2.0 * margin), region.min[1]], region.max.clone())?;
            let paths = random_paths(&half, a.paths, seed, |p, q| p[0] > margin && q[0] > margin);
            let alpha = a.alpha;
            Some(check_paths("length-preservation", &paths, a.tol.unwrap_or(1e-3), |p| {
                Ok((alpha_grushin_length(alpha, p)?, pushforward_length(alpha, p, 200)?))
            })?)
        }
        _ => None,
    };

    let (distortion_brackets, distortion) = match &spec {
        None => (None, None),
        Some(s) => {
            let margin = 0.0125 * s.space.bbox().diameter();
            let mut q = QuasiRandom::new(s.space.dim(), seed);
            let mut pts = Vec::with_capacity(a.samples);
            while pts.len() < a.samples {
                let p = q.next_in(s.space.bbox());
                if s.space.singular().distance(&p) > margin {
                    pts.push(p);
                }
            }
            if name == "cone" {
                let beta = s.space.beta();
                let r = measure_distortion_with(&pts, &map, a.pairs, seed, |i, j| {
                    cone_distance(beta, &pts[i], &pts[j]).map(|d| (d, d))
                })?;
                (Some("exact"), Some(r))
            } else {
                let m = MetricSample::grushin(&s.space, pts, None)?;
                (Some("sample-graph"), Some(measure_distortion(&m, &map, a.pairs, seed)?))
            }
        }
    };

    let passed = path_check.as_ref().is_none_or(|c| c.failures == 0)
        && match (a.max_distortion, &distortion) {
            (Some(max), Some(d)) => d.l_lower <= max,
            _ => true,
        };
    let result = EmbedResult { map, path_check, distortion_brackets, distortion };
    let json = Report::new(&format!("embed {name}"), spec.as_ref(), result).seed(seed).passed(passed).to_json()?;
    Ok(Outcome { json, passed })
}
