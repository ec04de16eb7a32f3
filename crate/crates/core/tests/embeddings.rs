use approx::assert_relative_eq;
use grushin_core::embeddings::*;
use grushin_core::sampling::QuasiRandom;
use grushin_core::whitney::MetricSample;
use grushin_core::{Aabb, GeomError, GrushinSpace, Polyline, SingularSet};

fn random_paths(count: usize, seed: u64, keep: impl Fn(&[f64], &[f64]) -> bool) -> Vec<Polyline> {
    let mut q = QuasiRandom::new(2, seed);
    let bbox = Aabb::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
    let mut out = Vec::new();
    while out.len() < count {
        let mut v = vec![q.next_in(&bbox)];
        if !keep(&v[0], &v[0]) {
            continue;
        }
        while v.len() < 4 {
            let p = q.next_in(&bbox);
            if keep(v.last().unwrap(), &p) {
                v.push(p);
            }
        }
        out.push(Polyline::from_coords(v).unwrap());
    }
    out
}

fn seg_dist_to_origin(a: &[f64], b: &[f64]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    let t = if dd > 0.0 { (-(a[0] * d[0] + a[1] * d[1]) / dd).clamp(0.0, 1.0) } else { 0.0 };
    (a[0] + t * d[0]).hypot(a[1] + t * d[1])
}

#[test]
fn cone_map_examples() {
    let p = cone_map(0.5, &[1.0, 0.0]).unwrap();
    assert_relative_eq!(p[0], 1.0);
    assert_eq!(p[1], 0.0);
    assert_relative_eq!(p[2], 3f64.sqrt(), max_relative = 1e-15);
    assert_eq!(cone_map(0.0, &[0.3, -0.7]).unwrap(), [0.3, -0.7, 0.0]);
    assert_eq!(cone_map(0.5, &[0.0, 0.0]).unwrap(), [0.0; 3]);
    assert!(cone_map(1.0, &[1.0, 0.0]).is_err());
    assert!(cone_map(0.5, &[1.0, 0.0, 0.0]).is_err());
}

#[test]
fn cone_map_is_a_path_isometry() {
    let paths = random_paths(50, 7, |a, b| seg_dist_to_origin(a, b) > 0.05);
    for beta in [0.25, 0.5, 0.75] {
        let space =
            GrushinSpace::new(SingularSet::point(&[0.0, 0.0]), beta, Aabb::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap(), None)
                .unwrap();
        for path in &paths {
            let intrinsic = space.grushin_length(path).unwrap();
            let image = cone_image_length(beta, path, 400).unwrap();
            assert_relative_eq!(intrinsic, image, max_relative = 2e-3);
        }
    }
    let circle: Vec<Vec<f64>> =
        (0..=64).map(|i| (i as f64 * std::f64::consts::TAU / 64.0).sin_cos()).map(|(s, c)| vec![c, s]).collect();
    let circle = Polyline::from_coords(circle).unwrap();
    assert_relative_eq!(cone_image_length(0.5, &circle, 64).unwrap(), std::f64::consts::TAU, max_relative = 1e-6);
}

#[test]
fn cone_distance_closed_form() {
    let d = cone_distance(0.5, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
    assert_relative_eq!(d, 4.0 * (std::f64::consts::PI / 8.0).sin(), max_relative = 1e-14);
    assert_relative_eq!(cone_distance(0.0, &[1.0, 2.0], &[4.0, 6.0]).unwrap(), 5.0, max_relative = 1e-14);
    assert_relative_eq!(cone_distance(0.75, &[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 2.0 * 4.0 * (std::f64::consts::PI / 8.0).sin());
    assert_relative_eq!(cone_distance(0.5, &[0.0, 0.0], &[4.0, 0.0]).unwrap(), 4.0);
}

#[test]
fn grushin_chart_examples() {
    assert_eq!(grushin_chart(1.0, &[2.0, 0.0]).unwrap(), [2.0, 0.0]);
    assert_eq!(grushin_chart(0.0, &[-0.3, 0.8]).unwrap(), [-0.3, 0.8]);
    assert_eq!(pushforward_weight(0.0, 0.4).unwrap(), 1.0);
    assert_relative_eq!(pushforward_weight(1.0, 2.0).unwrap(), 0.5);
    assert!(grushin_chart(-1.0, &[1.0, 1.0]).is_err());
}

#[test]
fn grushin_chart_inverse_round_trip() {
    let mut q = QuasiRandom::new(2, 3);
    let bbox = Aabb::new(vec![-3.0, -3.0], vec![3.0, 3.0]).unwrap();
    for alpha in [0.0, 0.5, 1.0, 2.0, 3.7] {
        for _ in 0..200 {
            let p = q.next_in(&bbox);
            let u = grushin_chart(alpha, &p).unwrap();
            assert_eq!(u[0].signum(), p[0].signum(), "half-planes are preserved");
            let back = grushin_chart_inverse(alpha, &u).unwrap();
            assert!((back[0] - p[0]).abs() <= 1e-12 * p[0].abs().max(1.0) && back[1] == p[1]);
            let again = grushin_chart(alpha, &back).unwrap();
            assert!((again[0] - u[0]).abs() <= 1e-12 * u[0].abs().max(1.0));
        }
    }
}

#[test]
fn grushin_chart_preserves_length() {
    let paths: Vec<Polyline> = random_paths(20, 11, |a, b| a[0] > 0.05 && b[0] > 0.05);
    for alpha in [1.0, 2.0] {
        for path in &paths {
            let l = alpha_grushin_length(alpha, path).unwrap();
            let image = pushforward_length(alpha, path, 200).unwrap();
            assert_relative_eq!(l, image, max_relative = 1e-3);
        }
    }
}

#[test]
fn snowflake_examples() {
    let s = snowflake_parameter(0.5, 1.0).unwrap();
    assert_eq!((s.beta_tilde, s.alpha_tilde, s.target_dim), (0.0, 1.0, 3));
    let s = snowflake_parameter(0.0, 1.0).unwrap();
    assert_eq!((s.alpha_tilde, s.target_dim), (0.0, 2));
    let s = snowflake_parameter(0.5, 0.75).unwrap();
    assert_eq!(s.beta_tilde, 0.25);
    assert_relative_eq!(s.alpha_tilde, 5.0 / 3.0, max_relative = 1e-15);
    assert_eq!(s.target_dim, 3);
    for i in 0..20 {
        let beta = i as f64 / 20.0;
        assert_relative_eq!(snowflake_parameter(beta, 1.0).unwrap().alpha_tilde, beta / (1.0 - beta), max_relative = 1e-14);
    }
    assert!(snowflake_parameter(0.5, 0.5).is_err());
    assert!(snowflake_parameter(0.5, 1.01).is_err());
    assert!(snowflake_parameter(1.0, 1.0).is_err());
}

#[test]
fn candidate_maps() {
    let m = CandidateMap::from_json(r#"{"pipeline": [{"map": "cone", "beta": 0.5}, {"map": "project-xy"}]}"#).unwrap();
    assert_eq!(m.target_dim(2).unwrap(), 2);
    let p = m.eval(&[4.0, 0.0]).unwrap();
    assert_relative_eq!(p[0], 2.0);
    assert!(m.eval(&[1.0, 2.0, 3.0]).is_err());
    assert!(CandidateMap::from_json(r#"{"pipeline": [{"map": "warp"}]}"#).is_err());
    assert!(CandidateMap::from_json(r#"{"pipeline": [{"map": "cone", "beta": 0.5, "gamma": 1}]}"#).is_err());
    assert!(matches!(CandidateMap::named("warp", 0.5, 1.0), Err(GeomError::InvalidParameter { name: "map", .. })));
    assert_eq!(CandidateMap::named("cone", 0.5, 0.0).unwrap().target_dim(2).unwrap(), 3);
    let json = serde_json::to_string(&m).unwrap();
    assert_eq!(CandidateMap::from_json(&json).unwrap(), m);
}

#[test]
fn identity_has_unit_distortion() {
    let mut q = QuasiRandom::new(2, 5);
    let pts: Vec<Vec<f64>> = (0..100).map(|_| q.next_unit()).collect();
    let m = MetricSample::euclidean(pts).unwrap();
    let r = measure_distortion(&m, &CandidateMap::named("identity", 0.0, 0.0).unwrap(), 500, 1).unwrap();
    assert_relative_eq!(r.l_lower, 1.0, max_relative = 1e-12);
    assert_eq!(r.pairs, 500);
}

fn annulus(n: usize) -> Vec<Vec<f64>> {
    let mut q = QuasiRandom::new(2, 9);
    let mut out = Vec::new();
    while out.len() < n {
        let u = q.next_unit();
        let (r, t) = (1.0 + u[0], u[1] * std::f64::consts::TAU);
        out.push(vec![r * t.cos(), r * t.sin()]);
    }
    out
}

#[test]
fn cone_distortion_on_an_annulus() {
    let pts = annulus(300);
    let exact = |i: usize, j: usize| cone_distance(0.5, &pts[i], &pts[j]).map(|d| (d, d));
    let cone = CandidateMap::named("cone", 0.5, 0.0).unwrap();
    let r = measure_distortion_with(&pts, &cone, 5000, 2, exact).unwrap();
    assert!(r.l_lower >= 1.0 && r.l_lower <= 1.25, "{}", r.l_lower);
    let flat = CandidateMap::from_json(r#"{"pipeline": [{"map": "cone", "beta": 0.5}, {"map": "project-xy"}]}"#).unwrap();
    let p = measure_distortion_with(&pts, &flat, 5000, 2, exact).unwrap();
    assert!(p.l_lower.is_finite() && p.l_lower >= r.l_lower);
}

#[test]
fn distortion_is_monotone_in_pairs() {
    let pts = annulus(200);
    let exact = |i: usize, j: usize| cone_distance(0.5, &pts[i], &pts[j]).map(|d| (d, d));
    let cone = CandidateMap::named("cone", 0.5, 0.0).unwrap();
    let mut last = 0.0;
    for pairs in [1, 10, 100, 1000, 4000] {
        let r = measure_distortion_with(&pts, &cone, pairs, 4, exact).unwrap();
        assert!(r.l_lower >= last);
        last = r.l_lower;
    }
}

#[test]
fn distortion_with_sample_brackets() {
    let space =
        GrushinSpace::new(SingularSet::point(&[0.0, 0.0]), 0.5, Aabb::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap(), None).unwrap();
    let m = MetricSample::grushin(&space, annulus(400), None).unwrap();
    let cone = CandidateMap::named("cone", 0.5, 0.0).unwrap();
    let r = measure_distortion(&m, &cone, 2000, 3).unwrap();
    let e = r.worst_expand.unwrap();
    assert!(e.source_lower <= e.source_upper);
    let pts = m.points().to_vec();
    let exact = |i: usize, j: usize| cone_distance(0.5, &pts[i], &pts[j]).map(|d| (d, d));
    let sharp = measure_distortion_with(&pts, &cone, 2000, 3, exact).unwrap();
    assert!(r.l_lower <= sharp.l_lower * (1.0 + 1e-9), "brackets only weaken the certificate");
}
