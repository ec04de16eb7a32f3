//! Nested greedy nets and the cube hierarchy they induce.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::sample::MetricSample;
use crate::error::{GeomError, Result};

const MAX_LEVELS: usize = 128;
const ATTEMPTS: usize = 3;

/// The constants `(delta, c0, C1)` of a cube hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChristData {
    pub delta: f64,
    pub c0: f64,
    pub c1: f64,
}

impl ChristData {
    pub fn new(delta: f64, c0: f64, c1: f64) -> Result<Self> {
        let d = ChristData { delta, c0, c1 };
        d.validate()?;
        Ok(d)
    }

    /// `0 < delta + c0 < 1/4` with both positive, and `C1 > 1/(1 - delta)`.
    pub fn validate(&self) -> Result<()> {
        let ChristData { delta, c0, c1 } = *self;
        if !(delta > 0.0 && c0 > 0.0 && delta + c0 < 0.25) {
            return Err(GeomError::InvalidParameter {
                name: "delta",
                reason: format!("need delta > 0, c0 > 0 and delta + c0 < 1/4, got delta={delta}, c0={c0}"),
            });
        }
        if !(c1.is_finite() && c1 > 1.0 / (1.0 - delta)) {
            return Err(GeomError::InvalidParameter {
                name: "C1",
                reason: format!("need C1 > 1/(1-delta) = {}, got {c1}", 1.0 / (1.0 - delta)),
            });
        }
        Ok(())
    }
}

impl Default for ChristData {
    fn default() -> Self {
        ChristData { delta: 1.0 / 8.0, c0: 1.0 / 9.0, c1: 2.0 }
    }
}

/// One cube `Q_mu^k`. Points are sample indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChristCube {
    pub k: i32,
    pub mu: usize,
    pub center: usize,
    pub members: Vec<usize>,
    /// Centre of the enclosing cube one scale up.
    pub parent: Option<usize>,
    /// Centres of the cubes one scale down.
    pub children: Vec<usize>,
}

/// Outcome of the a-posteriori checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChristReport {
    pub levels: usize,
    pub cubes: usize,
    /// Every point lies in exactly one cube at every scale.
    pub dense: bool,
    /// Every cube lies inside one cube of the next coarser scale.
    pub nested: bool,
    /// Cubes failing `B(x, c0 delta^k) ∩ sample ⊂ Q ⊂ B(x, C1 delta^k)`.
    pub sandwich_failures: usize,
    /// Largest `c0` and smallest `C1` the hierarchy satisfies.
    pub c0_tight: f64,
    pub c1_tight: f64,
    /// Net orders tried (1 when the first order passed).
    pub attempts: usize,
    pub passed: bool,
}

#[derive(Clone, Debug)]
struct Level {
    /// Net point indices; each level's net extends the previous one.
    net: Vec<usize>,
    /// Cube centre of every active point at this scale.
    owner: FxHashMap<usize, usize>,
}

/// Christ cubes of the active points of a sample, scales `k_min..=k_max`.
/// At `k_min` there is a single cube; at `k_max` every cube is one point.
/// Coarser and finer scales repeat these.
#[derive(Clone, Debug)]
pub struct ChristHierarchy {
    pub data: ChristData,
    pub k_min: i32,
    pub k_max: i32,
    active: Vec<usize>,
    levels: Vec<Level>,
    pub report: ChristReport,
}

/// Builds the hierarchy on every point of `m`.
pub fn christ_decompose(m: &MetricSample, data: ChristData) -> Result<ChristHierarchy> {
    let all: Vec<usize> = (0..m.len()).collect();
    christ_decompose_on(m, &all, data)
}

/// Builds the hierarchy on the points `active` (sorted, distinct), with
/// distances measured in all of `m`. Net orders are retried when the
/// checks fail.
pub fn christ_decompose_on(m: &MetricSample, active: &[usize], data: ChristData) -> Result<ChristHierarchy> {
    data.validate()?;
    if active.is_empty() {
        return Err(GeomError::InvalidParameter { name: "points", reason: "no points to decompose".into() });
    }
    if active.windows(2).any(|w| w[0] >= w[1]) || *active.last().expect("nonempty") >= m.len() {
        return Err(GeomError::InvalidParameter { name: "points", reason: "indices must be sorted, distinct and in range".into() });
    }
    let mut best: Option<ChristHierarchy> = None;
    for attempt in 0..ATTEMPTS {
        let order = net_order(active, attempt);
        let mut h = build(m, active, &order, data)?;
        h.report.attempts = attempt + 1;
        let better = best.as_ref().is_none_or(|b| h.report.sandwich_failures < b.report.sandwich_failures);
        let done = h.report.passed;
        if better {
            best = Some(h);
        }
        if done {
            break;
        }
    }
    let best = best.expect("at least one attempt");
    if !best.report.passed {
        let r = &best.report;
        return Err(GeomError::Verification(format!(
            "cube properties fail after {ATTEMPTS} net orders: dense={}, nested={}, {} sandwich failures",
            r.dense, r.nested, r.sandwich_failures
        )));
    }
    Ok(best)
}

fn net_order(active: &[usize], attempt: usize) -> Vec<usize> {
    match attempt {
        0 => active.to_vec(),
        1 => active.iter().rev().cloned().collect(),
        _ => {
            // Interleave by bit-reversed position.
            let n = active.len();
            let bits = usize::BITS - n.leading_zeros();
            let mut keyed: Vec<(usize, usize)> =
                (0..n).map(|i| (if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) }, active[i])).collect();
            keyed.sort_unstable();
            keyed.into_iter().map(|x| x.1).collect()
        }
    }
}

fn build(m: &MetricSample, active: &[usize], order: &[usize], data: ChristData) -> Result<ChristHierarchy> {
    let delta = data.delta;
    let root = order[0];
    let far = m
        .ball(&[root], f64::INFINITY)
        .into_iter()
        .filter(|(j, _)| active.binary_search(j).is_ok())
        .collect::<Vec<_>>();
    if far.len() < active.len() {
        return Err(GeomError::InvalidParameter { name: "sample", reason: "sample metric is disconnected".into() });
    }
    let r0 = far.iter().map(|x| x.1).fold(0.0, f64::max);
    let k_min = if r0 > 0.0 { (r0.ln() / delta.ln()).floor() as i32 } else { 0 };
    let mut nets: Vec<Vec<usize>> = vec![vec![root]];
    let mut is_net = vec![false; m.len()];
    is_net[root] = true;
    while nets.last().expect("nonempty").len() < active.len() {
        if nets.len() >= MAX_LEVELS {
            return Err(GeomError::ResourceLimit(format!("more than {MAX_LEVELS} scales; sample has near-duplicate points")));
        }
        let k = k_min + nets.len() as i32;
        let r = delta.powi(k);
        let mut net = nets.last().expect("nonempty").clone();
        let mut cover = vec![f64::INFINITY; m.len()];
        for &s in &net {
            m.cover_from(s, r, &mut cover);
        }
        for &p in order {
            if !is_net[p] && cover[p] > r {
                is_net[p] = true;
                net.push(p);
                m.cover_from(p, r, &mut cover);
            }
        }
        nets.push(net);
    }
    let k_max = k_min + nets.len() as i32 - 1;
    // parent[l][y] for net points y of level l+1: nearest net point of level l.
    let mut levels: Vec<Level> = Vec::with_capacity(nets.len());
    let last = nets.len() - 1;
    let mut owner: FxHashMap<usize, usize> = active.iter().map(|&p| (p, p)).collect();
    let mut rev: Vec<Level> = vec![Level { net: nets[last].clone(), owner: owner.clone() }];
    for l in (0..last).rev() {
        let r = delta.powi(k_min + l as i32);
        let near = m.nearest_sources(&nets[l], r * (1.0 + 1e-12));
        let mut parent: FxHashMap<usize, usize> = FxHashMap::default();
        for &y in &nets[l + 1] {
            let (_, s) = near[y].ok_or_else(|| GeomError::Overflow("net point outside every coarser cover".into()))?;
            parent.insert(y, s);
        }
        for v in owner.values_mut() {
            *v = parent[v];
        }
        rev.push(Level { net: nets[l].clone(), owner: owner.clone() });
    }
    rev.reverse();
    levels.extend(rev);
    let mut h = ChristHierarchy {
        data,
        k_min,
        k_max,
        active: active.to_vec(),
        levels,
        report: ChristReport {
            levels: nets.len(),
            cubes: 0,
            dense: true,
            nested: true,
            sandwich_failures: 0,
            c0_tight: f64::INFINITY,
            c1_tight: 0.0,
            attempts: 1,
            passed: false,
        },
    };
    h.verify(m);
    Ok(h)
}

impl ChristHierarchy {
    /// Indices of the decomposed points.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    fn level(&self, k: i32) -> &Level {
        let l = (k.clamp(self.k_min, self.k_max) - self.k_min) as usize;
        &self.levels[l]
    }

    /// Centre of the scale-`k` cube containing the active point `p`.
    pub fn owner(&self, k: i32, p: usize) -> usize {
        if k > self.k_max {
            return p;
        }
        self.level(k).owner[&p]
    }

    /// Net (cube centres) at scale `k`.
    pub fn net(&self, k: i32) -> &[usize] {
        if k > self.k_max {
            return &self.active;
        }
        &self.level(k).net
    }

    /// Members of the scale-`k` cube centred at `center`.
    pub fn members(&self, k: i32, center: usize) -> Vec<usize> {
        if k > self.k_max {
            return vec![center];
        }
        let lv = self.level(k);
        self.active.iter().cloned().filter(|p| lv.owner[p] == center).collect()
    }

    /// Every cube at scale `k`, in net order.
    pub fn cubes_at(&self, k: i32) -> Vec<ChristCube> {
        let net = self.net(k).to_vec();
        let mut groups: FxHashMap<usize, Vec<usize>> = FxHashMap::default();
        for &p in &self.active {
            groups.entry(self.owner(k, p)).or_default().push(p);
        }
        let mut kids: FxHashMap<usize, Vec<usize>> = FxHashMap::default();
        for &c in self.net(k + 1) {
            kids.entry(self.owner(k, c)).or_default().push(c);
        }
        net.iter()
            .enumerate()
            .map(|(mu, &c)| ChristCube {
                k,
                mu,
                center: c,
                members: groups.remove(&c).unwrap_or_default(),
                parent: Some(self.owner(k - 1, c)),
                children: kids.remove(&c).unwrap_or_default(),
            })
            .collect()
    }

    /// All cubes of the stored scales.
    pub fn cubes(&self) -> Vec<ChristCube> {
        (self.k_min..=self.k_max)
            .flat_map(|k| {
                let mut c = self.cubes_at(k);
                if k == self.k_min {
                    for q in &mut c {
                        q.parent = None;
                    }
                }
                c
            })
            .collect()
    }

    /// Checks of the sandwich for one cube: `(c0 ratio, C1 ratio)`, i.e. the
    /// nearest non-member and the farthest member in units of `delta^k`.
    pub(crate) fn cube_ratios(m: &MetricSample, active: &[usize], k: i32, center: usize, members: &[usize], data: ChristData) -> (f64, f64) {
        let scale = data.delta.powi(k);
        let reach = data.c1 * scale * (1.0 + 1e-9);
        let ball = m.ball(&[center], reach);
        let found: FxHashMap<usize, f64> = ball.iter().cloned().collect();
        let mut far: f64 = 0.0;
        for &q in members {
            let d = match found.get(&q) {
                Some(&d) => d,
                None => m.dist(center, q),
            };
            far = far.max(d);
        }
        let mut near = reach;
        for (q, d) in ball {
            if active.binary_search(&q).is_ok() && members.binary_search(&q).is_err() {
                near = near.min(d);
            }
        }
        (near / scale, far / scale)
    }

    fn verify(&mut self, m: &MetricSample) {
        let data = self.data;
        let mut failures = 0;
        let mut cubes = 0;
        let (mut c0t, mut c1t) = (f64::INFINITY, 0.0f64);
        let mut nested = true;
        for k in self.k_min..=self.k_max {
            for cube in self.cubes_at(k) {
                cubes += 1;
                let (near, far) = Self::cube_ratios(m, &self.active, k, cube.center, &cube.members, data);
                c0t = c0t.min(near);
                c1t = c1t.max(far);
                if near < data.c0 || far > data.c1 {
                    failures += 1;
                }
                if k > self.k_min {
                    let up = self.owner(k - 1, cube.center);
                    nested &= cube.members.iter().all(|&p| self.owner(k - 1, p) == up);
                }
            }
        }
        let dense = self.levels.iter().all(|l| self.active.iter().all(|p| l.owner.contains_key(p)));
        self.report.cubes = cubes;
        self.report.dense = dense;
        self.report.nested = nested;
        self.report.sandwich_failures = failures;
        self.report.c0_tight = c0t;
        self.report.c1_tight = c1t;
        self.report.passed = dense && nested && failures == 0;
    }
}
