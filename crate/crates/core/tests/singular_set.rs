use approx::assert_relative_eq;
use grushin_core::{GeomError, Primitive, SingularSet};
use proptest::prelude::*;

fn segment() -> SingularSet {
    SingularSet::new(2, vec![Primitive::Segment { a: vec![0.0, 0.0], b: vec![1.0, 0.0] }]).unwrap()
}

fn mixed() -> SingularSet {
    SingularSet::new(
        2,
        vec![
            Primitive::Segment { a: vec![-1.0, -1.0], b: vec![0.5, 0.2] },
            Primitive::HalfLine { origin: vec![1.0, 1.0], direction: vec![0.0, 1.0] },
            Primitive::Box { min: vec![-1.5, 0.5], max: vec![-1.0, 1.0] },
            Primitive::Cloud { points: vec![vec![1.5, -1.5], vec![0.0, -1.8]] },
        ],
    )
    .unwrap()
}

#[test]
fn distance_examples() {
    assert_eq!(SingularSet::point(&[0.0, 0.0]).euclid_distance(&[1.0, 0.0]).unwrap(), 1.0);
    assert_eq!(SingularSet::coordinate_hyperplane(2, 0).euclid_distance(&[3.0, 4.0]).unwrap(), 3.0);
    assert_relative_eq!(segment().euclid_distance(&[2.0, 2.0]).unwrap(), 5f64.sqrt(), max_relative = 1e-15);
}

#[test]
fn nearest_point_examples() {
    assert_eq!(SingularSet::point(&[0.0, 0.0]).nearest_point(&[1.0, 0.0]).unwrap().coords(), &[0.0, 0.0]);
    assert_eq!(SingularSet::coordinate_hyperplane(2, 0).nearest_point(&[3.0, 4.0]).unwrap().coords(), &[0.0, 4.0]);
    assert_eq!(segment().nearest_point(&[2.0, 2.0]).unwrap().coords(), &[1.0, 0.0]);
}

#[test]
fn segment_distance_matches_dense_sampling() {
    let s = segment();
    let dense = (0..=100_000)
        .map(|i| {
            let t = f64::from(i) / 100_000.0;
            (2.0 - t).hypot(2.0)
        })
        .fold(f64::INFINITY, f64::min);
    assert_relative_eq!(s.euclid_distance(&[2.0, 2.0]).unwrap(), dense, max_relative = 1e-12);
}

#[test]
fn ties_use_primitive_order_then_lexicographic() {
    let y = SingularSet::new(
        2,
        vec![Primitive::Point { at: vec![1.0, 0.0] }, Primitive::Point { at: vec![-1.0, 0.0] }],
    )
    .unwrap();
    assert_eq!(y.nearest_point(&[0.0, 0.0]).unwrap().coords(), &[1.0, 0.0]);
    let cloud = SingularSet::new(2, vec![Primitive::Cloud { points: vec![vec![1.0, 0.0], vec![-1.0, 0.0]] }]).unwrap();
    assert_eq!(cloud.nearest_point(&[0.0, 0.0]).unwrap().coords(), &[-1.0, 0.0]);
}

#[test]
fn box_and_halfline_distances() {
    let y = mixed();
    assert_eq!(y.euclid_distance(&[-1.2, 0.7]).unwrap(), 0.0);
    assert_relative_eq!(y.euclid_distance(&[1.0, 3.0]).unwrap(), 0.0);
    let hl = SingularSet::new(2, vec![Primitive::HalfLine { origin: vec![0.0, 0.0], direction: vec![1.0, 0.0] }]).unwrap();
    assert_relative_eq!(hl.euclid_distance(&[-3.0, 4.0]).unwrap(), 5.0);
    assert_relative_eq!(hl.euclid_distance(&[7.0, -2.0]).unwrap(), 2.0);
}

#[test]
fn errors() {
    assert!(matches!(SingularSet::new(2, vec![]), Err(GeomError::EmptySingularSet)));
    assert!(matches!(
        SingularSet::new(2, vec![Primitive::Point { at: vec![0.0, 0.0, 0.0] }]),
        Err(GeomError::InvalidPrimitive { index: 0, .. })
    ));
    assert!(matches!(segment().euclid_distance(&[1.0]), Err(GeomError::DimensionMismatch { .. })));
    assert!(SingularSet::new(2, vec![Primitive::Hyperplane { point: vec![0.0, 0.0], normal: vec![0.0, 0.0] }]).is_err());
}

#[test]
fn json_round_trip() {
    let y = mixed();
    let s = serde_json::to_string(&y).unwrap();
    let back: SingularSet = serde_json::from_str(&s).unwrap();
    assert_eq!(back, y);
    assert!(serde_json::from_str::<SingularSet>(r#"{"dim":2,"primitives":[]}"#).is_err());
}

proptest! {
    #[test]
    fn one_lipschitz(p in prop::array::uniform2(-3.0f64..3.0), q in prop::array::uniform2(-3.0f64..3.0)) {
        let y = mixed();
        let (dp, dq) = (y.euclid_distance(&p).unwrap(), y.euclid_distance(&q).unwrap());
        let e = (p[0] - q[0]).hypot(p[1] - q[1]);
        prop_assert!((dp - dq).abs() <= e * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn nearest_point_lies_on_set(p in prop::array::uniform2(-3.0f64..3.0)) {
        let y = mixed();
        let q = y.nearest_point(&p).unwrap();
        prop_assert_eq!(y.euclid_distance(q.coords()).unwrap(), 0.0);
        let e = (p[0] - q.coords()[0]).hypot(p[1] - q.coords()[1]);
        prop_assert!((e - y.euclid_distance(&p).unwrap()).abs() <= 1e-12 * (1.0 + e));
    }

    #[test]
    fn adding_primitives_never_increases(p in prop::array::uniform2(-3.0f64..3.0), c in prop::array::uniform2(-3.0f64..3.0)) {
        let y = segment();
        let z = y.with_primitive(Primitive::Point { at: c.to_vec() }).unwrap();
        prop_assert!(z.euclid_distance(&p).unwrap() <= y.euclid_distance(&p).unwrap());
    }
}
