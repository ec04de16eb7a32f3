//! Christ–Whitney decompositions: maximal Christ cubes taken from distance shells.

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use super::christ::{christ_decompose_on, ChristData, ChristHierarchy, ChristReport};
use super::sample::MetricSample;
use crate::error::{GeomError, Result};

/// Data `(delta, c0, C1, a)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyData {
    pub delta: f64,
    pub c0: f64,
    pub c1: f64,
    pub a: f64,
}

impl WhitneyData {
    pub fn new(delta: f64, c0: f64, c1: f64, a: f64) -> Result<Self> {
        let d = WhitneyData { delta, c0, c1, a };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        self.christ().validate()?;
        if !(self.a >= 4.0 && self.a.is_finite()) {
            return Err(GeomError::InvalidParameter { name: "a", reason: format!("need a >= 4, got {}", self.a) });
        }
        Ok(())
    }

    pub fn christ(&self) -> ChristData {
        ChristData { delta: self.delta, c0: self.c0, c1: self.c1 }
    }

    /// Bounds of `d(Q, X \ Omega)` for a scale-`k` cube.
    pub fn distance_window(&self, k: i32) -> (f64, f64) {
        let s = self.delta.powi(k);
        ((self.a - 2.0) * self.c1 * s, self.a * self.c1 / self.delta * s)
    }
}

/// What `X \ Omega` is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// The sample points outside `Omega`.
    Complement,
    /// The singular set of the sample's Grushin space, at the exact distance `d_Y(p, Y)`.
    Singular,
}

/// The synthetic point `q` attached to a small cube: `d(q, x) = offset` for
/// the centre `x` and `d(q, p) = d(x, p) + offset` for every other point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Enlargement {
    pub offset: f64,
    /// Diameter of the enlarged cube.
    pub diam: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhitneyCube {
    pub k: i32,
    pub center: usize,
    pub members: Vec<usize>,
    pub diam: f64,
    pub boundary_distance: f64,
    /// `(a-2) C1 delta^k <= d(Q, X \ Omega) <= (a C1 / delta) delta^k`.
    pub distance_ok: bool,
    /// `B(x, c0 delta^k) ∩ sample ⊂ Q ⊂ B(x, C1 delta^k)`.
    pub sandwich_ok: bool,
    pub enlarged: Option<Enlargement>,
}

impl WhitneyCube {
    /// Diameter after enlargement, if any.
    pub fn effective_diam(&self) -> f64 {
        self.enlarged.map_or(self.diam, |e| e.diam)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhitneyReport {
    pub cubes: usize,
    pub disjoint: bool,
    pub distance_violations: usize,
    pub sandwich_violations: usize,
    /// Omega points in no cube.
    pub uncovered: usize,
    /// Largest distance from an Omega point to the union of the cubes.
    pub max_gap: f64,
    /// `C1 delta^(k_min)` over the emitted cubes.
    pub density_radius: f64,
    pub dense: bool,
    pub christ: ChristReport,
    pub passed: bool,
}

/// A Christ–Whitney decomposition of `Omega` in a metric sample.
#[derive(Clone, Debug, Serialize)]
pub struct CubeSystem {
    pub data: WhitneyData,
    pub boundary: Boundary,
    pub sample: MetricSample,
    pub omega: Vec<usize>,
    pub complement: Vec<usize>,
    pub cubes: Vec<WhitneyCube>,
    pub report: WhitneyReport,
    #[serde(skip)]
    pub(crate) cube_of: Vec<Option<u32>>,
}

/// Shell index `k` with `a C1 delta^k < d <= a C1 delta^(k-1)`.
fn shell(d: f64, data: &WhitneyData) -> i32 {
    let base = data.a * data.c1;
    let mut k = ((d / base).ln() / data.delta.ln()).floor() as i32 + 1;
    while base * data.delta.powi(k) >= d {
        k += 1;
    }
    while base * data.delta.powi(k - 1) < d {
        k -= 1;
    }
    k
}

/// Decomposes `Omega = omega` (sample indices) with the given data.
pub fn whitney_decompose(m: &MetricSample, omega: &[usize], data: WhitneyData, boundary: Boundary) -> Result<CubeSystem> {
    data.validate()?;
    let mut omega = omega.to_vec();
    omega.sort_unstable();
    omega.dedup();
    if omega.is_empty() {
        return Err(GeomError::InvalidParameter { name: "omega", reason: "contains no sample points".into() });
    }
    if *omega.last().expect("nonempty") >= m.len() {
        return Err(GeomError::InvalidParameter { name: "omega", reason: "index out of range".into() });
    }
    let in_omega: FxHashSet<usize> = omega.iter().cloned().collect();
    let complement: Vec<usize> = (0..m.len()).filter(|i| !in_omega.contains(i)).collect();
    let bd: Vec<f64> = match boundary {
        Boundary::Complement => {
            if complement.is_empty() {
                return Err(GeomError::InvalidParameter {
                    name: "omega",
                    reason: "omega is the whole sample; there is no complement".into(),
                });
            }
            m.nearest_sources(&complement, f64::INFINITY).iter().map(|x| x.map_or(f64::INFINITY, |v| v.0)).collect()
        }
        Boundary::Singular => {
            let space = m.space().ok_or(GeomError::InvalidParameter {
                name: "boundary",
                reason: "the singular boundary needs a sample drawn from a Grushin space".into(),
            })?;
            m.points().iter().map(|p| space.distance_to_singular(p)).collect::<Result<_>>()?
        }
    };
    for &p in &omega {
        if !(bd[p] > 0.0 && bd[p].is_finite()) {
            return Err(GeomError::InvalidParameter {
                name: "omega",
                reason: format!("point {p} is at distance {} from the complement", bd[p]),
            });
        }
    }
    let h = christ_decompose_on(m, &omega, data.christ())?;
    let shells: Vec<i32> = omega.iter().map(|&p| shell(bd[p], &data)).collect();
    let (k_lo, k_hi) = (*shells.iter().min().expect("nonempty"), *shells.iter().max().expect("nonempty"));
    let initial: FxHashSet<(i32, usize)> = omega.iter().zip(&shells).map(|(&p, &k)| (k, h.owner(k, p))).collect();
    let is_maximal = |k: i32, c: usize| (k_lo..k).all(|l| !initial.contains(&(l, h.owner(l, c))));
    let mut chosen: FxHashMap<(i32, usize), Vec<usize>> = FxHashMap::default();
    let mut uncovered = Vec::new();
    for &p in &omega {
        let hit = (k_lo..=k_hi).map(|l| (l, h.owner(l, p))).find(|key| initial.contains(key));
        match hit {
            Some(key) if is_maximal(key.0, key.1) => chosen.entry(key).or_default().push(p),
            _ => uncovered.push(p),
        }
    }
    let mut keys: Vec<(i32, usize)> = chosen.keys().cloned().collect();
    keys.sort_unstable();
    let cubes: Vec<WhitneyCube> = {
        use rayon::prelude::*;
        keys.par_iter()
            .map(|&(k, c)| {
                let members = chosen[&(k, c)].clone();
                make_cube(m, &h, &data, k, c, members, &bd)
            })
            .collect()
    };
    let mut cube_of: Vec<Option<u32>> = vec![None; m.len()];
    let mut disjoint = true;
    for (i, q) in cubes.iter().enumerate() {
        for &p in &q.members {
            disjoint &= cube_of[p].is_none();
            cube_of[p] = Some(i as u32);
        }
    }
    let k_min = cubes.iter().map(|q| q.k).min().unwrap_or(0);
    let density_radius = data.c1 * data.delta.powi(k_min);
    let max_gap = if uncovered.is_empty() {
        0.0
    } else {
        let sources: Vec<usize> = cubes.iter().flat_map(|q| q.members.iter().cloned()).collect();
        let near = m.nearest_sources(&sources, f64::INFINITY);
        uncovered.iter().map(|&p| near[p].map_or(f64::INFINITY, |x| x.0)).fold(0.0, f64::max)
    };
    let distance_violations = cubes.iter().filter(|q| !q.distance_ok).count();
    let sandwich_violations = cubes.iter().filter(|q| !q.sandwich_ok).count();
    let dense = max_gap <= density_radius;
    let report = WhitneyReport {
        cubes: cubes.len(),
        disjoint,
        distance_violations,
        sandwich_violations,
        uncovered: uncovered.len(),
        max_gap,
        density_radius,
        dense,
        passed: disjoint && dense && distance_violations == 0 && sandwich_violations == 0,
        christ: h.report.clone(),
    };
    Ok(CubeSystem { data, boundary, sample: m.clone(), omega, complement, cubes, report, cube_of })
}

fn make_cube(
    m: &MetricSample,
    h: &ChristHierarchy,
    data: &WhitneyData,
    k: i32,
    center: usize,
    members: Vec<usize>,
    bd: &[f64],
) -> WhitneyCube {
    let (near, far) = ChristHierarchy::cube_ratios(m, h.active(), k, center, &members, data.christ());
    let diam = diameter(m, &members, 2.0 * data.c1 * data.delta.powi(k));
    let boundary_distance = members.iter().map(|&p| bd[p]).fold(f64::INFINITY, f64::min);
    let (lo, hi) = data.distance_window(k);
    let tol = 1e-12 * hi;
    WhitneyCube {
        k,
        center,
        diam,
        boundary_distance,
        distance_ok: boundary_distance >= lo - tol && boundary_distance <= hi + tol,
        sandwich_ok: near >= data.c0 && far <= data.c1,
        enlarged: None,
        members,
    }
}

/// Exact diameter of a point set; `hint` bounds the search radius.
pub(crate) fn diameter(m: &MetricSample, members: &[usize], hint: f64) -> f64 {
    if members.len() < 2 {
        return 0.0;
    }
    let set: FxHashSet<usize> = members.iter().cloned().collect();
    let mut diam: f64 = 0.0;
    for &p in members {
        let ball = m.ball(&[p], hint * (1.0 + 1e-9));
        let mut seen = 0;
        for (q, d) in ball {
            if set.contains(&q) {
                seen += 1;
                diam = diam.max(d);
            }
        }
        if seen < members.len() {
            for &q in members {
                diam = diam.max(m.dist(p, q));
            }
        }
    }
    diam
}

/// Attaches the synthetic point to every cube with `diam Q < c0 delta^k / 4`.
pub fn enlarge_cubes(sys: &CubeSystem) -> CubeSystem {
    let mut out = sys.clone();
    let data = sys.data;
    for q in &mut out.cubes {
        let offset = data.c0 * data.delta.powi(q.k) / 4.0;
        if q.diam < offset {
            let reach = q.members.iter().map(|&p| sys.sample.dist(q.center, p)).fold(0.0, f64::max);
            q.enlarged = Some(Enlargement { offset, diam: q.diam.max(reach + offset) });
        } else {
            q.enlarged = None;
        }
    }
    out
}

/// A point of the enlarged space: a sample point or the synthetic point of a cube.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Node {
    Sample(usize),
    Synthetic(usize),
}

impl CubeSystem {
    /// Index of the cube containing sample point `p`.
    pub fn cube_of(&self, p: usize) -> Option<usize> {
        self.cube_of[p].map(|i| i as usize)
    }

    pub fn is_enlarged(&self) -> bool {
        self.cubes.iter().any(|q| q.enlarged.is_some())
    }

    /// Distance in the enlarged space.
    pub fn node_distance(&self, a: Node, b: Node) -> f64 {
        let anchor = |n: Node| match n {
            Node::Sample(p) => (p, 0.0),
            Node::Synthetic(i) => (self.cubes[i].center, self.cubes[i].enlarged.map_or(0.0, |e| e.offset)),
        };
        if a == b {
            return 0.0;
        }
        let ((pa, oa), (pb, ob)) = (anchor(a), anchor(b));
        self.sample.dist(pa, pb) + oa + ob
    }

    /// Every node of the enlarged space.
    pub fn nodes(&self) -> Vec<Node> {
        let mut v: Vec<Node> = (0..self.sample.len()).map(Node::Sample).collect();
        v.extend(self.cubes.iter().enumerate().filter(|(_, q)| q.enlarged.is_some()).map(|(i, _)| Node::Synthetic(i)));
        v
    }

    /// Cube footprints: one row per member point.
    pub fn to_csv(&self) -> String {
        let n = self.sample.points().first().map_or(0, |p| p.len());
        let mut s = String::from("cube,k,point,is_center");
        for i in 0..n {
            s.push_str(&format!(",x{i}"));
        }
        s.push('\n');
        for (ci, q) in self.cubes.iter().enumerate() {
            for &p in &q.members {
                s.push_str(&format!("{ci},{},{p},{}", q.k, u8::from(p == q.center)));
                for c in self.sample.point(p) {
                    s.push_str(&format!(",{c}"));
                }
                s.push('\n');
            }
        }
        s
    }
}
