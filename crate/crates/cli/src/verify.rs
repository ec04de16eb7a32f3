use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use grushin_core::analysis::{
    alpha_grushin_curvature, check_holder, check_quasisymmetry, check_whitney_curvature, estimate_doubling,
    eta_control, holder_constant_uniform, nondoubling_ball_count, Bracketing,
};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::{write_atomic, Report};
use crate::spec::SpaceSpec;
use crate::{OutArgs, Outcome};

#[derive(Debug, Subcommand)]
pub enum Which {
    /// `d_Y(x,y) <= H d_E(x,y)^(1-beta)` on random pairs.
    Holder {
        #[command(flatten)]
        common: Common,
        /// Hölder constant; defaults to the uniform constant for C = 2, N = 2.
        #[arg(long = "H")]
        h: Option<f64>,
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
    /// Quasisymmetry with the control function built from `H`.
    Qs {
        #[command(flatten)]
        common: Common,
        #[arg(long = "H")]
        h: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Gaussian curvature: the α-Grushin closed form with `--alpha`, else the
    /// conformal metric of the space spec against `|K| <= A d_Y^(-2)`.
    Curvature {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Claimed Whitney curvature constant; without it the fit is only reported.
        #[arg(long = "A")]
        a: Option<f64>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Relative tolerance against closed forms.
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
        /// Write the sampled curvature field as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Greedy estimate of the doubling constant.
    Doubling {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Fail when the estimate exceeds this value.
        #[arg(long)]
        max: Option<usize>,
    },
    /// Disjoint balls in the non-doubling example metric.
    Nondoubling {
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    spec: PathBuf,
    /// Defaults to the space spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Bracket distances with the grid solver instead of straight segments.
    #[arg(long)]
    solver: bool,
    /// Solver resolution; defaults to the space spec's.
    #[arg(long)]
    resolution: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

impl Which {
    pub fn out(&self) -> &OutArgs {
        match self {
            Which::Holder { common, .. } | Which::Qs { common, .. } | Which::Doubling { common, .. } => &common.out,
            Which::Curvature { out, .. } | Which::Nondoubling { out, .. } => out,
        }
    }
}

struct Loaded {
    spec: SpaceSpec,
    seed: u64,
    bracketing: Bracketing,
    resolution: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<Loaded> {
        let spec = SpaceSpec::load(&self.spec)?;
        let seed = self.seed.unwrap_or(spec.seed);
        let (bracketing, resolution) = if self.solver {
            let r = self.resolution.unwrap_or(spec.resolution);
            (Bracketing::Solver { resolution: r }, Some(r))
        } else {
            (Bracketing::Straight, None)
        };
        Ok(Loaded { spec, seed, bracketing, resolution })
    }
}

fn finish<T: Serialize>(cmd: &str, l: &Loaded, result: T, passed: bool) -> Result<Outcome> {
    let mut r = Report::new(cmd, Some(&l.spec), result).seed(l.seed).passed(passed);
    if let Some(res) = l.resolution {
        r = r.resolution(res);
    }
    Ok(Outcome { json: r.to_json()?, passed })
}

fn default_h(beta: f64, h: Option<f64>) -> Result<f64> {
    match h {
        Some(h) => Ok(h),
        None => Ok(holder_constant_uniform(2.0, 2, beta)?),
    }
}

#[derive(Serialize)]
struct EtaSample {
    t: f64,
    eta: f64,
}

#[derive(Serialize)]
struct QsResult {
    eta_samples: Vec<EtaSample>,
    eta_strictly_decreasing: bool,
    report: grushin_core::analysis::QuasisymmetryReport,
}

#[derive(Serialize)]
struct AlphaResult {
    alpha: f64,
    tol: f64,
    max_rel_error: f64,
    samples: Vec<grushin_core::analysis::AlphaCurvatureSample>,
}

#[derive(Serialize)]
struct ConformalResult {
    tol: f64,
    a_tested: bool,
    closed_form_mismatches: Option<usize>,
    report: grushin_core::analysis::CurvatureReport,
}

pub fn run(which: &Which) -> Result<Outcome> {
    match which {
        Which::Holder { common, h, samples } => {
            let l = common.load()?;
            let h = default_h(l.spec.space.beta(), *h)?;
            let r = check_holder(&l.spec.space, h, *samples, l.seed, l.bracketing)?;
            let passed = !r.violated;
            finish("verify holder", &l, r, passed)
        }
        Which::Qs { common, h, samples } => {
            let l = common.load()?;
            let beta = l.spec.space.beta();
            let h = default_h(beta, *h)?;
            let r = check_quasisymmetry(&l.spec.space, h, *samples, l.seed, l.bracketing)?;
            let eta_samples = (1..=6)
                .map(|k| {
                    let t = 10f64.powi(-k);
                    eta_control(beta, h, t).map(|eta| EtaSample { t, eta })
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let eta_strictly_decreasing = eta_samples.windows(2).all(|w| w[1].eta < w[0].eta);
            let passed = !r.violated;
            finish("verify qs", &l, QsResult { eta_samples, eta_strictly_decreasing, report: r }, passed)
        }
        Which::Curvature { spec, alpha: Some(alpha), tol, csv, .. } => {
            if spec.is_some() {
                return Err(CliError::Usage("--alpha and --spec are mutually exclusive".into()));
            }
            let xs: Vec<f64> = (0..10).map(|i| 0.5 + 1.5 * f64::from(i) / 9.0).collect();
            let samples = alpha_grushin_curvature(*alpha, &xs)?;
            let max_rel_error = samples.iter().map(|s| s.rel_error).fold(0.0, f64::max);
            let passed = samples.iter().all(|s| s.rel_error <= *tol);
            if let Some(p) = csv {
                let mut s = String::from("x,numeric,closed_form\n");
                for c in &samples {
                    let _ = writeln!(s, "{},{},{}", c.x, c.numeric, c.closed_form);
                }
                write_atomic(p, &s)?;
            }
            let result = AlphaResult { alpha: *alpha, tol: *tol, max_rel_error, samples };
            let json = Report::new("verify curvature", None, result).passed(passed).to_json()?;
            Ok(Outcome { json, passed })
        }
        Which::Curvature { spec: None, alpha: None, .. } => {
            Err(CliError::Usage("verify curvature needs --spec or --alpha".into()))
        }
        Which::Curvature { spec: Some(path), alpha: None, a, samples, seed, tol, csv, .. } => {
            let spec = SpaceSpec::load(path)?;
            let seed = seed.unwrap_or(spec.seed);
            let r = check_whitney_curvature(&spec.space, a.unwrap_or(f64::INFINITY), *samples, seed)?;
            let mismatches = r.k_closed_form.as_ref().map(|cf| {
                r.k_numeric.iter().zip(cf).filter(|(k, c)| (*k - *c).abs() > tol * c.abs() + 1e-6).count()
            });
            if let Some(p) = csv {
                let mut s = String::from("x,y,k_numeric,k_closed_form,product\n");
                for (i, pt) in r.points.iter().enumerate() {
                    let cf = r.k_closed_form.as_ref().map_or(String::new(), |c| c[i].to_string());
                    let _ = writeln!(s, "{},{},{},{},{}", pt[0], pt[1], r.k_numeric[i], cf, r.products[i]);
                }
                write_atomic(p, &s)?;
            }
            let passed = !r.violated && mismatches.unwrap_or(0) == 0;
            let result = ConformalResult { tol: *tol, a_tested: a.is_some(), closed_form_mismatches: mismatches, report: r };
            let json = Report::new("verify curvature", Some(&spec), result).seed(seed).passed(passed).to_json()?;
            Ok(Outcome { json, passed })
        }
        Which::Doubling { common, samples, max } => {
            let l = common.load()?;
            let r = estimate_doubling(&l.spec.space, *samples, l.seed, l.bracketing)?;
            let passed = max.is_none_or(|m| r.d_estimate <= m);
            finish("verify doubling", &l, r, passed)
        }
        Which::Nondoubling { eps, n, .. } => {
            let r = nondoubling_ball_count(*eps, *n)?;
            let passed = r.disjoint && r.meets_required;
            let json = Report::new("verify nondoubling", None, r).passed(passed).to_json()?;
            Ok(Outcome { json, passed })
        }
    }
}
