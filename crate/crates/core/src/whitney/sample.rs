//! Finite metric samples with truncated ball queries.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;
use serde::{Serialize, Serializer};

use crate::error::{GeomError, Result};
use crate::geom::{check_finite, norm_diff};
use crate::metric::GrushinSpace;

/// How sample distances are defined.
#[derive(Clone, Debug)]
enum Kind {
    /// Exact Euclidean distances.
    Euclidean,
    /// Shortest paths in a weighted graph. For Grushin samples the edges are
    /// straight segments, so every distance is the length of an actual path.
    Graph { offsets: Vec<usize>, targets: Vec<u32>, weights: Vec<f64> },
}

/// A finite metric space `(points, d)`.
#[derive(Clone, Debug)]
pub struct MetricSample {
    points: Vec<Vec<f64>>,
    kind: Kind,
    space: Option<GrushinSpace>,
    buckets: Buckets,
    neighbor_radius: Option<f64>,
}

impl Serialize for MetricSample {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View {
            kind: &'static str,
            points: usize,
            neighbor_radius: Option<f64>,
            beta: Option<f64>,
        }
        View {
            kind: match self.kind {
                Kind::Euclidean => "euclidean",
                Kind::Graph { .. } if self.space.is_some() => "grushin-graph",
                Kind::Graph { .. } => "matrix",
            },
            points: self.points.len(),
            neighbor_radius: self.neighbor_radius,
            beta: self.space.as_ref().map(|s| s.beta()),
        }
        .serialize(s)
    }
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let first = points.first().ok_or(GeomError::InvalidParameter { name: "points", reason: "sample is empty".into() })?;
    let n = first.len();
    if n == 0 {
        return Err(GeomError::InvalidParameter { name: "points", reason: "zero-dimensional points".into() });
    }
    for p in points {
        if p.len() != n {
            return Err(GeomError::DimensionMismatch { expected: n, got: p.len() });
        }
        check_finite(p, "sample point")?;
    }
    if points.len() >= u32::MAX as usize {
        return Err(GeomError::ResourceLimit(format!("{} sample points", points.len())));
    }
    Ok(n)
}

impl MetricSample {
    /// Points with the Euclidean metric.
    pub fn euclidean(points: Vec<Vec<f64>>) -> Result<Self> {
        check_points(&points)?;
        let buckets = Buckets::new(&points);
        Ok(MetricSample { points, kind: Kind::Euclidean, space: None, buckets, neighbor_radius: None })
    }

    /// Points of a Grushin space. For `beta = 0` the metric is Euclidean;
    /// otherwise it is the shortest-path metric of the graph joining points
    /// within `neighbor_radius` (default: three times the median
    /// nearest-neighbour spacing) by straight segments, an upper bound on `d_Y`.
    pub fn grushin(space: &GrushinSpace, points: Vec<Vec<f64>>, neighbor_radius: Option<f64>) -> Result<Self> {
        let n = check_points(&points)?;
        if n != space.dim() {
            return Err(GeomError::DimensionMismatch { expected: space.dim(), got: n });
        }
        let buckets = Buckets::new(&points);
        if space.beta() == 0.0 {
            return Ok(MetricSample { points, kind: Kind::Euclidean, space: Some(space.clone()), buckets, neighbor_radius: None });
        }
        let radius = match neighbor_radius {
            Some(r) if r > 0.0 && r.is_finite() => r,
            Some(r) => return Err(GeomError::InvalidParameter { name: "neighbor_radius", reason: format!("{r} must be positive") }),
            None => 3.0 * median_spacing(&points, &buckets),
        };
        let mut pairs = Vec::new();
        for i in 0..points.len() {
            buckets.for_each_within(&points, &points[i], radius, |j| {
                if (j as usize) > i {
                    pairs.push((i as u32, j));
                }
            });
        }
        let lengths: Vec<f64> = {
            use rayon::prelude::*;
            pairs
                .par_iter()
                .map(|&(a, b)| space.segment_length(&points[a as usize], &points[b as usize]))
                .collect::<Result<_>>()?
        };
        let (offsets, targets, weights) = csr(points.len(), &pairs, &lengths);
        Ok(MetricSample {
            points,
            kind: Kind::Graph { offsets, targets, weights },
            space: Some(space.clone()),
            buckets,
            neighbor_radius: Some(radius),
        })
    }

    /// Points with an explicit symmetric distance matrix. Distances are
    /// closed under shortest paths, so a matrix violating the triangle
    /// inequality is replaced by its metric closure.
    #[allow(clippy::needless_range_loop)]
    pub fn from_matrix(points: Vec<Vec<f64>>, matrix: &[Vec<f64>]) -> Result<Self> {
        check_points(&points)?;
        let m = points.len();
        if matrix.len() != m || matrix.iter().any(|r| r.len() != m) {
            return Err(GeomError::InvalidParameter { name: "matrix", reason: format!("expected {m}x{m} entries") });
        }
        let mut pairs = Vec::new();
        let mut lengths = Vec::new();
        for i in 0..m {
            if matrix[i][i] != 0.0 {
                return Err(GeomError::InvalidParameter { name: "matrix", reason: format!("nonzero diagonal at {i}") });
            }
            for j in i + 1..m {
                let (a, b) = (matrix[i][j], matrix[j][i]);
                if !(a.is_finite() && a > 0.0) || (a - b).abs() > 1e-12 * a {
                    return Err(GeomError::InvalidParameter {
                        name: "matrix",
                        reason: format!("entry ({i},{j}) must be positive, finite and symmetric"),
                    });
                }
                pairs.push((i as u32, j as u32));
                lengths.push(a);
            }
        }
        let (offsets, targets, weights) = csr(m, &pairs, &lengths);
        let buckets = Buckets::new(&points);
        Ok(MetricSample { points, kind: Kind::Graph { offsets, targets, weights }, space: None, buckets, neighbor_radius: None })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// The Grushin space the sample was drawn from, if any.
    pub fn space(&self) -> Option<&GrushinSpace> {
        self.space.as_ref()
    }

    pub fn neighbor_radius(&self) -> Option<f64> {
        self.neighbor_radius
    }

    /// `d(i, j)`; `+inf` between graph components.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match &self.kind {
            Kind::Euclidean => norm_diff(&self.points[i], &self.points[j]),
            Kind::Graph { .. } => {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                let mut out = f64::INFINITY;
                self.search(&[(a as u32, 0.0, a as u32)], f64::INFINITY, Some(b as u32), |v, d, _| {
                    if v == b as u32 {
                        out = d;
                    }
                });
                out
            }
        }
    }

    /// Every point within `r` of the nearest of `centers`, with that distance.
    pub fn ball(&self, centers: &[usize], r: f64) -> Vec<(usize, f64)> {
        let mut best: FxHashMap<u32, f64> = FxHashMap::default();
        match &self.kind {
            Kind::Euclidean => {
                for &c in centers {
                    self.buckets.for_each_within(&self.points, &self.points[c], r, |j| {
                        let d = norm_diff(&self.points[c], &self.points[j as usize]);
                        let e = best.entry(j).or_insert(f64::INFINITY);
                        *e = e.min(d);
                    });
                }
            }
            Kind::Graph { .. } => {
                let seeds: Vec<(u32, f64, u32)> = centers.iter().map(|&c| (c as u32, 0.0, 0)).collect();
                self.search(&seeds, r, None, |v, d, _| {
                    best.insert(v, d);
                });
            }
        }
        let mut out: Vec<(usize, f64)> = best.into_iter().filter(|(_, d)| *d <= r).map(|(j, d)| (j as usize, d)).collect();
        out.sort_unstable_by_key(|x| x.0);
        out
    }

    /// For every point, the lexicographically smallest `(distance, source)`
    /// over `sources` with distance at most `r`; `None` when out of reach.
    pub fn nearest_sources(&self, sources: &[usize], r: f64) -> Vec<Option<(f64, usize)>> {
        let mut out: Vec<Option<(f64, usize)>> = vec![None; self.len()];
        match &self.kind {
            Kind::Euclidean => {
                for &s in sources {
                    self.buckets.for_each_within(&self.points, &self.points[s], r, |j| {
                        let d = norm_diff(&self.points[s], &self.points[j as usize]);
                        let cand = (d, s);
                        let slot = &mut out[j as usize];
                        if slot.is_none_or(|cur| lex_less(cand, cur)) {
                            *slot = Some(cand);
                        }
                    });
                }
            }
            Kind::Graph { .. } => {
                let seeds: Vec<(u32, f64, u32)> = sources.iter().map(|&s| (s as u32, 0.0, s as u32)).collect();
                self.search(&seeds, r, None, |v, d, l| out[v as usize] = Some((d, l as usize)));
            }
        }
        out
    }

    /// Lowers `cover[j]` to `d(s, j)` wherever that is at most `r`.
    pub fn cover_from(&self, s: usize, r: f64, cover: &mut [f64]) {
        match &self.kind {
            Kind::Euclidean => {
                self.buckets.for_each_within(&self.points, &self.points[s], r, |j| {
                    let d = norm_diff(&self.points[s], &self.points[j as usize]);
                    let c = &mut cover[j as usize];
                    *c = c.min(d);
                });
            }
            Kind::Graph { offsets, targets, weights } => {
                // Only propagate where the cover improves; settled values are exact.
                let mut heap = BinaryHeap::new();
                let mut dist: FxHashMap<u32, f64> = FxHashMap::default();
                dist.insert(s as u32, 0.0);
                heap.push(Entry(0.0, 0, s as u32));
                while let Some(Entry(d, _, v)) = heap.pop() {
                    if d > dist[&v] {
                        continue;
                    }
                    if d >= cover[v as usize] && v as usize != s {
                        continue;
                    }
                    cover[v as usize] = cover[v as usize].min(d);
                    for k in offsets[v as usize]..offsets[v as usize + 1] {
                        let (u, nd) = (targets[k], d + weights[k]);
                        if nd <= r && nd < cover[u as usize] && dist.get(&u).is_none_or(|&o| nd < o) {
                            dist.insert(u, nd);
                            heap.push(Entry(nd, 0, u));
                        }
                    }
                }
            }
        }
    }

    /// Truncated multi-source Dijkstra on `(distance, label)` keys; calls
    /// `visit` once per settled node.
    fn search(&self, seeds: &[(u32, f64, u32)], r: f64, stop: Option<u32>, mut visit: impl FnMut(u32, f64, u32)) {
        let Kind::Graph { offsets, targets, weights } = &self.kind else {
            unreachable!("graph search on a Euclidean sample")
        };
        let mut best: FxHashMap<u32, (f64, u32)> = FxHashMap::default();
        let mut heap = BinaryHeap::new();
        for &(v, d, l) in seeds {
            if best.get(&v).is_none_or(|&cur| lex_less((d, l as usize), (cur.0, cur.1 as usize))) {
                best.insert(v, (d, l));
                heap.push(Entry(d, l, v));
            }
        }
        let mut done: rustc_hash::FxHashSet<u32> = Default::default();
        while let Some(Entry(d, l, v)) = heap.pop() {
            if !done.insert(v) {
                continue;
            }
            visit(v, d, l);
            if stop == Some(v) {
                return;
            }
            for k in offsets[v as usize]..offsets[v as usize + 1] {
                let (u, nd) = (targets[k], d + weights[k]);
                if nd > r || done.contains(&u) {
                    continue;
                }
                if best.get(&u).is_none_or(|&cur| lex_less((nd, l as usize), (cur.0, cur.1 as usize))) {
                    best.insert(u, (nd, l));
                    heap.push(Entry(nd, l, u));
                }
            }
        }
    }

    /// Full distance matrix (intended for small samples).
    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        let m = self.len();
        let mut out = vec![vec![0.0; m]; m];
        for (i, row) in out.iter_mut().enumerate() {
            match &self.kind {
                Kind::Euclidean => {
                    for (x, q) in row.iter_mut().zip(&self.points) {
                        *x = norm_diff(&self.points[i], q);
                    }
                }
                Kind::Graph { .. } => {
                    row.iter_mut().for_each(|x| *x = f64::INFINITY);
                    self.search(&[(i as u32, 0.0, 0)], f64::INFINITY, None, |v, d, _| row[v as usize] = d);
                }
            }
        }
        out
    }
}

fn lex_less(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Largest relative triangle defect `(d_ik - d_ij - d_jk) / d_ik` of a matrix.
pub fn triangle_defect(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for k in 0..n {
            if i == k || m[i][k] == 0.0 {
                continue;
            }
            for j in 0..n {
                worst = worst.max((m[i][k] - m[i][j] - m[j][k]) / m[i][k]);
            }
        }
    }
    worst
}

fn csr(n: usize, pairs: &[(u32, u32)], lengths: &[f64]) -> (Vec<usize>, Vec<u32>, Vec<f64>) {
    let mut offsets = vec![0usize; n + 1];
    for (&(a, b), w) in pairs.iter().zip(lengths) {
        if w.is_finite() {
            offsets[a as usize + 1] += 1;
            offsets[b as usize + 1] += 1;
        }
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut targets = vec![0u32; offsets[n]];
    let mut weights = vec![0.0; offsets[n]];
    for (&(a, b), &w) in pairs.iter().zip(lengths) {
        if !w.is_finite() {
            continue;
        }
        for (u, v) in [(a, b), (b, a)] {
            let k = fill[u as usize];
            targets[k] = v;
            weights[k] = w;
            fill[u as usize] += 1;
        }
    }
    (offsets, targets, weights)
}

#[derive(PartialEq)]
struct Entry(f64, u32, u32);
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1)).then_with(|| o.2.cmp(&self.2))
    }
}

/// Uniform grid of point indices.
#[derive(Clone, Debug)]
struct Buckets {
    h: f64,
    origin: Vec<f64>,
    cells: FxHashMap<Vec<i64>, Vec<u32>>,
    count: usize,
}

impl Buckets {
    fn new(points: &[Vec<f64>]) -> Self {
        let n = points[0].len();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in points {
            for i in 0..n {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        let per_axis = (points.len() as f64).powf(1.0 / n as f64).max(1.0);
        let h = if extent > 0.0 { extent / per_axis } else { 1.0 };
        let mut b = Buckets { h, origin: lo, cells: FxHashMap::default(), count: points.len() };
        for (i, p) in points.iter().enumerate() {
            let key = b.key(p);
            b.cells.entry(key).or_default().push(i as u32);
        }
        b
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter().zip(&self.origin).map(|(x, o)| ((x - o) / self.h).floor() as i64).collect()
    }

    /// Indices of points within Euclidean distance `r` of `c`, in no particular order.
    fn for_each_within(&self, points: &[Vec<f64>], c: &[f64], r: f64, mut f: impl FnMut(u32)) {
        let n = c.len();
        let span = if r.is_finite() { (r / self.h).ceil() as i64 } else { i64::MAX };
        let cells_needed = (2.0 * span as f64 + 1.0).powi(n as i32);
        let tol = r * (1.0 + 1e-12);
        if cells_needed > self.cells.len() as f64 || cells_needed > 4.0 * self.count as f64 {
            for cell in self.cells.values() {
                for &j in cell {
                    if norm_diff(&points[j as usize], c) <= tol {
                        f(j);
                    }
                }
            }
            return;
        }
        let k0 = self.key(c);
        let mut idx = vec![-span; n];
        loop {
            let key: Vec<i64> = k0.iter().zip(&idx).map(|(a, b)| a + b).collect();
            if let Some(cell) = self.cells.get(&key) {
                for &j in cell {
                    if norm_diff(&points[j as usize], c) <= tol {
                        f(j);
                    }
                }
            }
            let mut d = 0;
            loop {
                if d == n {
                    return;
                }
                idx[d] += 1;
                if idx[d] <= span {
                    break;
                }
                idx[d] = -span;
                d += 1;
            }
        }
    }
}

fn median_spacing(points: &[Vec<f64>], b: &Buckets) -> f64 {
    if points.len() < 2 {
        return 1.0;
    }
    let mut nn: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut r = b.h;
            loop {
                let mut best = f64::INFINITY;
                b.for_each_within(points, p, r, |j| {
                    if j as usize != i {
                        best = best.min(norm_diff(p, &points[j as usize]));
                    }
                });
                if best.is_finite() || !r.is_finite() {
                    return best;
                }
                r = if r > 1e300 { f64::INFINITY } else { r * 2.0 };
            }
        })
        .filter(|d| *d > 0.0 && d.is_finite())
        .collect();
    if nn.is_empty() {
        return 1.0;
    }
    nn.sort_by(f64::total_cmp);
    nn[nn.len() / 2]
}
