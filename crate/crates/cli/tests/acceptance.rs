//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use grushin_core::analysis::*;
use grushin_core::metric::{distance, refine};
use grushin_core::sampling::QuasiRandom;
use grushin_core::whitney::*;
use grushin_core::{Aabb, GrushinSpace, Primitive, Result, SingularSet};

const RADIAL_REL_TOL: f64 = 0.02;
const RADIAL_RESOLUTION: f64 = 0.02;
const RADIAL_POINTS: usize = 20;
const RADIAL_LIMIT: Duration = Duration::from_secs(120);

const CONE_EXACT_DEG: f64 = 22.5;
const CONE_START_RESOLUTION: f64 = 0.05;
const CONE_MAX_REL_WIDTH: f64 = 0.04;
const CONE_LIMIT: Duration = Duration::from_secs(60);

const FLAT_DISTANCE_TOL: f64 = 0.01;
const FLAT_CURVATURE_TOL: f64 = 1e-6;
const FLAT_ETA_TOL: f64 = 1e-12;

const CURVATURE_REL_TOL: f64 = 0.02;
const PRODUCT_SPREAD_TOL: f64 = 0.03;

const NONDOUBLING_REQUIRED: [(u32, u64); 3] = [(0, 5), (1, 29), (2, 436)];
const NONDOUBLING_LIMIT: Duration = Duration::from_secs(120);

const WHITNEY_GRID: usize = 100;
const WHITNEY_LIMIT: Duration = Duration::from_secs(180);

const BALLS_GRIDS: (usize, usize) = (283, 400);
const BALLS_BETA: f64 = 0.5;
const MULTIPLICITY_SLACK: usize = 1;

const CHART_GRID: usize = 100;
const CHART_MAX_SPREAD: f64 = 1.2;

const QS_TRIPLES: usize = 1000;
const QS_H: f64 = 16.0;

const DELTA: f64 = 0.125;
const C0: f64 = 1.0 / 9.0;
const C1: f64 = 2.0;

type Check = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Check);

fn square(r: f64) -> Aabb {
    Aabb::new(vec![-r, -r], vec![r, r]).unwrap()
}

fn axis(beta: f64) -> GrushinSpace {
    GrushinSpace::new(SingularSet::coordinate_hyperplane(2, 0), beta, square(2.0), None).unwrap()
}

fn grid(n: usize) -> Vec<Vec<f64>> {
    let h = 1.0 / (n - 1) as f64;
    (0..n * n).map(|i| vec![(i % n) as f64 * h, (i / n) as f64 * h]).collect()
}

/// The unit square minus a vertical line that avoids the grid.
fn square_minus_line(n: usize, beta: f64) -> Result<(MetricSample, Vec<usize>)> {
    let x0 = std::f64::consts::FRAC_1_PI + 0.5 / n as f64;
    let y = SingularSet::new(2, vec![Primitive::Line { point: vec![x0, 0.0], direction: vec![0.0, 1.0] }])?;
    let space = GrushinSpace::new(y, beta, Aabb::new(vec![0.0, 0.0], vec![1.0, 1.0])?, None)?;
    let m = MetricSample::grushin(&space, grid(n), None)?;
    let omega = (0..m.len()).filter(|&i| space.singular().distance(m.point(i)) > 0.0).collect();
    Ok((m, omega))
}

fn decompose(n: usize, beta: f64) -> Result<CubeSystem> {
    let (m, omega) = square_minus_line(n, beta)?;
    let data = WhitneyData::new(DELTA, C0, C1, select_a(beta, DELTA)?)?;
    whitney_decompose(&m, &omega, data, Boundary::Singular)
}

fn radial_exactness() -> Check {
    let start = Instant::now();
    let sets = [
        ("point", SingularSet::point(&[0.1, -0.2])),
        ("line", SingularSet::coordinate_hyperplane(2, 0)),
        ("segment", SingularSet::new(2, vec![Primitive::Segment { a: vec![-0.5, 0.3], b: vec![0.6, -0.1] }])?),
    ];
    let (mut worst, mut graph, mut lower_ok, mut solves) = (0.0f64, 0.0f64, true, 0);
    for (_, y) in &sets {
        for beta in [0.0, 0.25, 0.5, 0.75] {
            let s = GrushinSpace::new(y.clone(), beta, square(2.0), None)?;
            let mut q = QuasiRandom::new(2, 11);
            let mut done = 0;
            while done < RADIAL_POINTS {
                let p = q.next_in(s.bbox());
                if y.distance(&p) < 0.05 {
                    continue;
                }
                let near = y.nearest_point(&p)?;
                let b = distance(&s, &p, near.coords(), RADIAL_RESOLUTION)?;
                let exact = s.distance_to_singular(&p)?;
                worst = worst.max((b.upper - exact).abs() / exact);
                graph = graph.max((b.stats.graph_length - exact).abs() / exact);
                lower_ok &= b.lower <= exact * (1.0 + 1e-9);
                done += 1;
                solves += 1;
            }
        }
    }
    let t = start.elapsed();
    Ok((
        worst <= RADIAL_REL_TOL && lower_ok && t <= RADIAL_LIMIT,
        format!(
            "{solves} solves, worst upper error {worst:.2e} (raw graph path {graph:.2e}), lower bounds valid: {lower_ok}"
        ),
    ))
}

fn cone_geodesic() -> Check {
    let start = Instant::now();
    let exact = 4.0 * CONE_EXACT_DEG.to_radians().sin();
    let s = GrushinSpace::new(SingularSet::point(&[0.0, 0.0]), 0.5, square(2.0), None)?;
    let mut b = distance(&s, &[1.0, 0.0], &[0.0, 1.0], CONE_START_RESOLUTION)?;
    for _ in 0..2 {
        b = refine(&s, &b)?;
    }
    let rel = b.width() / exact;
    let contains = b.lower <= exact && exact <= b.upper * (1.0 + 1e-12);
    Ok((
        contains && rel <= CONE_MAX_REL_WIDTH && start.elapsed() <= CONE_LIMIT,
        format!("[{:.5}, {:.5}] vs {exact:.5}, width {:.2}%", b.lower, b.upper, 100.0 * rel),
    ))
}

fn flat_degeneration() -> Check {
    let s = GrushinSpace::new(SingularSet::point(&[0.0, 0.0]), 0.0, Aabb::new(vec![-1.0, -1.0], vec![4.0, 5.0])?, None)?;
    let mut dist_err = 0.0f64;
    let mut q = QuasiRandom::new(2, 3);
    let mut pairs = vec![(vec![0.0, 0.0], vec![3.0, 4.0])];
    pairs.extend((0..5).map(|_| (q.next_in(s.bbox()), q.next_in(s.bbox()))));
    for (x, y) in &pairs {
        let b = distance(&s, x, y, 0.05)?;
        let e = grushin_core::geom::norm_diff(x, y);
        dist_err = dist_err.max((b.upper - e).abs() / e).max((e - b.lower).abs() / e);
    }
    let flat = axis(0.0);
    let curv = check_whitney_curvature(&flat, 1.0, 50, 1)?;
    let k_max = curv.k_numeric.iter().map(|k| k.abs()).fold(0.0, f64::max);
    let holder = check_holder(&flat, 1.0, 300, 4, Bracketing::Straight)?;
    let qs = check_quasisymmetry(&flat, 1.0, 300, 2, Bracketing::Straight)?;
    let eta_err = [1e-6, 0.01, 0.3, 1.0, 7.5, 1e4]
        .iter()
        .map(|&t| eta_control(0.0, 1.0, t).map(|e| (e - t).abs() / t))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let passed = dist_err <= FLAT_DISTANCE_TOL
        && k_max <= FLAT_CURVATURE_TOL
        && !holder.violated
        && (holder.worst_ratio - 1.0).abs() <= 1e-9
        && !qs.violated
        && qs.worst_excess <= FLAT_ETA_TOL
        && eta_err <= FLAT_ETA_TOL;
    Ok((
        passed,
        format!(
            "distance error {:.2e}, max |K| {k_max:.1e}, holder ratio {:.12}, qs excess {:.1e}, eta error {eta_err:.1e}",
            dist_err, holder.worst_ratio, qs.worst_excess
        ),
    ))
}

fn curvature() -> Check {
    let xs: Vec<f64> = (0..10).map(|i| 0.5 + 1.5 * f64::from(i) / 9.0).collect();
    let mut alpha_err = 0.0f64;
    for alpha in [1.0, 2.0] {
        for s in alpha_grushin_curvature(alpha, &xs)? {
            alpha_err = alpha_err.max(s.rel_error);
        }
    }
    let r = check_whitney_curvature(&axis(0.5), f64::INFINITY, 100, 1)?;
    let cf = r.k_closed_form.as_ref().expect("closed form for a line");
    let conf_err = r.k_numeric.iter().zip(cf).map(|(k, c)| (k - c).abs() / c.abs()).fold(0.0, f64::max);
    let passed = alpha_err <= CURVATURE_REL_TOL
        && conf_err <= CURVATURE_REL_TOL
        && r.product_spread <= PRODUCT_SPREAD_TOL
        && r.points.len() >= 10;
    Ok((
        passed,
        format!(
            "alpha-Grushin error {:.2e}, conformal error {conf_err:.2e} on {} points, product spread {:.2e}",
            alpha_err,
            r.points.len(),
            r.product_spread
        ),
    ))
}

fn nondoubling() -> Check {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, need) in NONDOUBLING_REQUIRED {
        let b = nondoubling_ball_count(1.0, n)?;
        ok &= b.required == need && b.count >= need && b.disjoint && b.min_pair_lower >= 2.0 * b.radius;
        parts.push(format!("n={n}: {}/{need}", b.count));
    }
    Ok((ok && start.elapsed() <= NONDOUBLING_LIMIT, format!("{}, disjoint by lower bounds", parts.join(", "))))
}

fn christ_whitney() -> Check {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [0.25, 0.5] {
        let sys = decompose(WHITNEY_GRID, beta)?;
        let r = &sys.report;
        ok &= r.disjoint && r.distance_violations == 0 && r.dense && r.uncovered == 0 && r.passed;
        parts.push(format!("beta={beta}: {} cubes, distance violations {}, dense {}", r.cubes, r.distance_violations, r.dense));
    }
    Ok((ok && start.elapsed() <= WHITNEY_LIMIT, parts.join("; ")))
}

fn whitney_balls() -> Check {
    let mut ns = Vec::new();
    let mut ok = true;
    for n in [BALLS_GRIDS.0, BALLS_GRIDS.1] {
        let sys = enlarge_cubes(&decompose(n, BALLS_BETA)?);
        let r = verify_whitney_balls(&sys, DEFAULT_EPS)?;
        ok &= r.diameter_violations.is_empty() && r.isolation_failures == 0 && r.passed;
        ns.push((n, r.max_multiplicity, r.small_cubes, r.diameter_violations.len()));
    }
    let stable = ns[0].1.abs_diff(ns[1].1) <= MULTIPLICITY_SLACK;
    Ok((
        ok && stable,
        ns.iter()
            .map(|(n, m, s, v)| format!("{n}^2: N={m}, small cubes {s}, violations {v}"))
            .collect::<Vec<_>>()
            .join("; "),
    ))
}

fn cube_charts() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [0.25, 0.5] {
        let a = select_a(beta, DELTA)?;
        let sys = decompose(CHART_GRID, beta)?;
        let s = chart_summary(&sys, 2)?;
        ok &= s.passed && s.distortion_spread <= CHART_MAX_SPREAD && !s.charts.is_empty();
        parts.push(format!(
            "beta={beta}: a={a}, {} charts, violations {}/{}, spread {:.4}",
            s.charts.len(),
            s.lower_violations,
            s.upper_violations,
            s.distortion_spread
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn quasisymmetry() -> Check {
    let r = check_quasisymmetry(&axis(0.5), QS_H, QS_TRIPLES, 1, Bracketing::Straight)?;
    let etas = (1..=6).map(|k| eta_control(0.5, QS_H, 10f64.powi(-k))).collect::<Result<Vec<_>>>()?;
    let decreasing = etas.windows(2).all(|w| w[1] < w[0]);
    Ok((
        r.triples_tested == QS_TRIPLES && r.violations == 0 && decreasing,
        format!("{} triples, {} violations, eta(1e-k) decreasing: {decreasing}", r.triples_tested, r.violations),
    ))
}

fn spec(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "specs", name].iter().collect();
    p.display().to_string()
}

fn reproducibility() -> Check {
    let cone = spec("cone.json");
    let axis = spec("v-axis.json");
    let flat = spec("euclidean.json");
    let square = spec("square-minus-line.json");
    let runs: Vec<Vec<&str>> = vec![
        vec!["dist", "--spec", &cone, "--from", "1,0", "--to", "0,1", "--refine", "1"],
        vec!["dist", "--spec", &flat, "--from", "0,0", "--to", "3,4"],
        vec!["verify", "holder", "--spec", &axis, "--H", "16"],
        vec!["verify", "qs", "--spec", &axis, "--seed", "7"],
        vec!["verify", "curvature", "--alpha", "1"],
        vec!["verify", "curvature", "--spec", &axis, "--A", "3"],
        vec!["verify", "doubling", "--spec", &axis],
        vec!["verify", "nondoubling", "--eps", "1", "--n", "2"],
        vec!["decompose", "--spec", &square, "--samples", "80", "--verify-balls", "--charts"],
        vec!["embed", "cone", "--spec", &cone],
        vec!["embed", "grushin-chart", "--alpha", "2"],
        vec!["embed", "project-xy", "--spec", &axis, "--seed", "3"],
    ];
    let mut differing = Vec::new();
    for args in &runs {
        let out: Vec<Vec<u8>> = [1, 4]
            .iter()
            .map(|threads| {
                let o = Command::new(env!("CARGO_BIN_EXE_grushin"))
                    .args(args)
                    .env("GRUSHIN_THREADS", threads.to_string())
                    .output()
                    .expect("run grushin");
                assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
                o.stdout
            })
            .collect();
        if out[0] != out[1] || out[0].is_empty() {
            differing.push(args.join(" "));
        }
    }
    Ok((
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} commands byte-identical across two runs", runs.len())
        } else {
            format!("differing: {}", differing.join(" | "))
        },
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("radial distance to Y is exact", radial_exactness),
        ("cone geodesic bracket", cone_geodesic),
        ("beta = 0 reduces to Euclidean", flat_degeneration),
        ("curvature closed forms", curvature),
        ("non-doubling ball counts", nondoubling),
        ("Christ-Whitney decomposition", christ_whitney),
        ("Whitney balls after enlargement", whitney_balls),
        ("cube charts", cube_charts),
        ("quasisymmetry on a line", quasisymmetry),
        ("reproducible JSON", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match std::panic::catch_unwind(check) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        failed += usize::from(!passed);
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1}s]",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
