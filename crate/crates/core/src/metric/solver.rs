//! Adaptive-grid graph solver producing certified distance brackets.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{certificate, radial_cost, shorten, GrushinSpace, Polyline};
use crate::error::{GeomError, Result};
use crate::geom::{norm_diff, Aabb, Point};

const MAX_LEVEL: u32 = 40;
const EXCLUDED: u32 = u32::MAX;

/// Tuning knobs of the grid solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Smallest cell side; defaults to `1e-5 * diameter(bbox)`.
    pub floor: Option<f64>,
    /// Leaf count at which refinement stops (the effective floor is raised).
    pub leaf_budget: usize,
    /// Compute the potential-based lower bound (planar spaces only).
    pub certify: bool,
    /// Vertex cap of the shortened witness.
    pub max_path_vertices: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { floor: None, leaf_budget: 1_000_000, certify: true, max_path_vertices: 128 }
    }
}

/// Diagnostics of one solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub leaves: usize,
    pub nodes: usize,
    pub edges: usize,
    /// Effective smallest cell side.
    pub floor: f64,
    pub budget_limited: bool,
    /// Length of the raw shortest graph path.
    pub graph_length: f64,
    pub analytic_lower: f64,
    pub certified_lower: Option<f64>,
    /// Upper bounds only consider paths inside this window.
    pub window: Aabb,
}

/// Certified two-sided bounds on `d_Y(from, to)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceBracket {
    pub from: Point,
    pub to: Point,
    pub lower: f64,
    pub upper: f64,
    pub witness: Option<Polyline>,
    pub resolution: f64,
    pub stats: SolveStats,
}

impl DistanceBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Brackets `d_Y(x,y)` with the default options.
pub fn distance(space: &GrushinSpace, x: &[f64], y: &[f64], resolution: f64) -> Result<DistanceBracket> {
    distance_with(space, x, y, resolution, &SolverOptions::default())
}

pub fn distance_with(
    space: &GrushinSpace,
    x: &[f64],
    y: &[f64],
    resolution: f64,
    opts: &SolverOptions,
) -> Result<DistanceBracket> {
    space.check_point(x)?;
    space.check_point(y)?;
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(GeomError::InvalidParameter { name: "resolution", reason: format!("{resolution} must be positive") });
    }
    let tol = 1e-12 * (1.0 + space.bbox().diameter());
    for p in [x, y] {
        if !space.bbox().contains_tol(p, tol) {
            return Err(GeomError::OutsideWindow { point: p.to_vec() });
        }
    }
    // Queries are solved in a canonical endpoint order so that swapping
    // the endpoints gives identical bounds.
    let swap = y.iter().zip(x).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()) == Some(std::cmp::Ordering::Less);
    let (a, b) = if swap { (y, x) } else { (x, y) };
    let mut out = match space.dim() {
        2 => solve::<2>(space, a, b, resolution, opts),
        3 => solve::<3>(space, a, b, resolution, opts),
        n => Err(GeomError::UnsupportedDimension(n)),
    }?;
    if swap {
        std::mem::swap(&mut out.from, &mut out.to);
        out.witness = out.witness.map(|w| w.reversed());
    }
    Ok(out)
}

/// Re-solves at half the resolution. The upper bound never increases and the
/// lower bound never decreases. Exceeding the leaf budget is reported as an
/// error; the input bracket stays valid.
pub fn refine(space: &GrushinSpace, b: &DistanceBracket) -> Result<DistanceBracket> {
    refine_with(space, b, &SolverOptions::default())
}

pub fn refine_with(space: &GrushinSpace, b: &DistanceBracket, opts: &SolverOptions) -> Result<DistanceBracket> {
    let mut nb = distance_with(space, &b.from, &b.to, b.resolution * 0.5, opts)?;
    if nb.stats.budget_limited && b.stats.budget_limited && nb.stats.floor >= b.stats.floor {
        return Err(GeomError::ResourceLimit(format!(
            "leaf budget {} reached; floor stuck at {:.3e}",
            opts.leaf_budget, nb.stats.floor
        )));
    }
    if b.upper < nb.upper {
        nb.upper = b.upper;
        nb.witness = b.witness.clone();
    }
    nb.lower = nb.lower.max(b.lower);
    Ok(nb)
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Cell<const D: usize> {
    pub level: u8,
    pub idx: [i64; D],
}

/// Adaptive dyadic grid restricted to the cells a near-optimal path can visit.
pub(crate) struct Grid<const D: usize> {
    pub origin: [f64; D],
    pub side: f64,
    pub leaves: Vec<Cell<D>>,
    lookup: FxHashMap<(u8, [i64; D]), u32>,
    max_level: u8,
    pub excluded_any: bool,
    pub nodes: Vec<[i64; D]>,
    pub positions: Vec<[f64; D]>,
    /// Boundary nodes of every leaf, sorted by node id.
    pub leaf_nodes: Vec<Vec<u32>>,
}

impl<const D: usize> Grid<D> {
    pub fn cell_side(&self, level: u8) -> f64 {
        self.side / (1u64 << level) as f64
    }

    pub fn cell_min(&self, c: &Cell<D>) -> [f64; D] {
        let s = self.cell_side(c.level);
        std::array::from_fn(|i| self.origin[i] + c.idx[i] as f64 * s)
    }

    pub fn cell_center(&self, c: &Cell<D>) -> [f64; D] {
        let s = self.cell_side(c.level);
        let m = self.cell_min(c);
        std::array::from_fn(|i| m[i] + 0.5 * s)
    }

    fn unit(&self) -> f64 {
        self.side / (1u64 << MAX_LEVEL) as f64
    }

    fn node_position(&self, k: &[i64; D]) -> [f64; D] {
        let u = self.unit();
        std::array::from_fn(|i| self.origin[i] + k[i] as f64 * u)
    }

    /// Leaf containing the integer point `p` nudged into orthant `orth`.
    fn locate_int(&self, p: &[i64; D], orth: &[i8; D]) -> Option<u32> {
        for l in 0..=self.max_level {
            let shift = MAX_LEVEL - l as u32;
            let n = 1i64 << l;
            let mut idx = [0i64; D];
            for i in 0..D {
                let v = if orth[i] < 0 { (p[i] - 1) >> shift } else { p[i] >> shift };
                if v < 0 || v >= n {
                    return None;
                }
                idx[i] = v;
            }
            if let Some(&v) = self.lookup.get(&(l, idx)) {
                return (v != EXCLUDED).then_some(v);
            }
        }
        None
    }

    pub fn locate(&self, p: &[f64]) -> Option<u32> {
        let u = self.unit();
        let top = (1i64 << MAX_LEVEL) - 1;
        let q: [i64; D] = std::array::from_fn(|i| (((p[i] - self.origin[i]) / u).floor() as i64).clamp(0, top));
        self.locate_int(&q, &[1; D])
    }

    pub fn window(&self) -> Aabb {
        Aabb { min: self.origin.to_vec(), max: self.origin.iter().map(|o| o + self.side).collect() }
    }
}

/// What the refinement needs to know about the query.
pub(crate) struct Query<'a, const D: usize> {
    pub space: &'a GrushinSpace,
    pub x: [f64; D],
    pub y: [f64; D],
    pub dx: f64,
    pub dy: f64,
    /// Grushin length of the straight segment from `x` to `y`.
    pub straight: f64,
}

impl<const D: usize> Query<'_, D> {
    /// Lower bound on the cost of any path from `x` to `y` through a box.
    pub fn box_cost(&self, min: &[f64; D], side: f64) -> f64 {
        let dist = |p: &[f64; D]| -> f64 {
            (0..D)
                .map(|i| {
                    let d = (min[i] - p[i]).max(p[i] - min[i] - side).max(0.0);
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        };
        let b = self.space.beta();
        let g = 1.0 - b;
        let mut bounds = [radial_cost(self.dx, dist(&self.x), b), radial_cost(self.dy, dist(&self.y), b)];
        if b > 0.0 {
            // d_Y(., Y) is 1-Lipschitz for d_Y and equals t^g / g exactly.
            let center: [f64; D] = std::array::from_fn(|i| min[i] + 0.5 * side);
            let half = 0.5 * side * (D as f64).sqrt();
            let dc = self.space.singular().distance(&center);
            let (lo, hi) = (((dc - half).max(0.0)).powf(g) / g, (dc + half).powf(g) / g);
            for (k, d) in [self.dx, self.dy].into_iter().enumerate() {
                let gd = d.powf(g) / g;
                bounds[k] = bounds[k].max(gd - hi).max(lo - gd);
            }
        }
        bounds[0] + bounds[1]
    }

    pub fn excludes(&self, min: &[f64; D], side: f64) -> bool {
        self.straight.is_finite() && self.box_cost(min, side) > self.straight * (1.0 + 1e-9) + 1e-300
    }
}

pub(crate) fn build_grid<const D: usize>(
    q: &Query<'_, D>,
    resolution: f64,
    floor: f64,
    budget: usize,
) -> (Grid<D>, f64, bool) {
    let space = q.space;
    let window = space.window();
    let origin: [f64; D] = std::array::from_fn(|i| window.min[i]);
    let side = (0..D).map(|i| window.max[i] - window.min[i]).fold(0.0, f64::max);
    let diam = space.bbox().diameter();
    let far_cap = resolution * diam;
    let beta = space.beta();
    let mut grid = Grid {
        origin,
        side,
        leaves: Vec::new(),
        lookup: FxHashMap::default(),
        max_level: 0,
        excluded_any: false,
        nodes: Vec::new(),
        positions: Vec::new(),
        leaf_nodes: Vec::new(),
    };
    let half_diag = (D as f64).sqrt() * 0.5;
    let needs_split = |g: &Grid<D>, c: &Cell<D>| -> bool {
        let s = g.cell_side(c.level);
        if s <= floor {
            return false;
        }
        let target = if beta == 0.0 {
            far_cap
        } else {
            let dc = space.singular().distance(&g.cell_center(c));
            (resolution * (dc - half_diag * s).max(0.0)).min(far_cap)
        };
        s > target.max(floor)
    };
    let mut frontier = vec![Cell { level: 0u8, idx: [0i64; D] }];
    let mut effective_floor = floor;
    let mut limited = false;
    let mut level = 0u8;
    loop {
        let flags: Vec<u8> = frontier
            .par_iter()
            .map(|c| {
                let m = grid.cell_min(c);
                if q.excludes(&m, grid.cell_side(c.level)) {
                    0
                } else if needs_split(&grid, c) {
                    2
                } else {
                    1
                }
            })
            .collect();
        let mut split = Vec::new();
        for (c, f) in frontier.iter().zip(&flags) {
            match f {
                0 => {
                    grid.excluded_any = true;
                    grid.lookup.insert((c.level, c.idx), EXCLUDED);
                }
                1 => {
                    grid.lookup.insert((c.level, c.idx), grid.leaves.len() as u32);
                    grid.leaves.push(*c);
                }
                _ => split.push(*c),
            }
        }
        grid.max_level = level;
        if split.is_empty() {
            break;
        }
        let projected = grid.leaves.len() + split.len() * (1 << D);
        if projected > budget || level as u32 + 1 > MAX_LEVEL {
            limited = true;
            effective_floor = effective_floor.max(grid.cell_side(level));
            for c in split {
                grid.lookup.insert((c.level, c.idx), grid.leaves.len() as u32);
                grid.leaves.push(c);
            }
            break;
        }
        level += 1;
        frontier = split
            .iter()
            .flat_map(|c| {
                (0..(1usize << D)).map(move |m| Cell {
                    level: c.level + 1,
                    idx: std::array::from_fn(|i| 2 * c.idx[i] + ((m >> i) & 1) as i64),
                })
            })
            .collect();
    }
    if grid.leaves.is_empty() {
        return (grid, effective_floor, limited);
    }
    connect(&mut grid);
    (grid, effective_floor, limited)
}

fn connect<const D: usize>(grid: &mut Grid<D>) {
    let mut node_ids: FxHashMap<[i64; D], u32> = FxHashMap::default();
    let mut nodes = Vec::new();
    for c in &grid.leaves {
        let shift = MAX_LEVEL - c.level as u32;
        for m in 0..(1usize << D) {
            let k: [i64; D] = std::array::from_fn(|i| (c.idx[i] + ((m >> i) & 1) as i64) << shift);
            node_ids.entry(k).or_insert_with(|| {
                nodes.push(k);
                (nodes.len() - 1) as u32
            });
        }
    }
    let orthants: Vec<[i8; D]> = (0..(1usize << D))
        .map(|m| std::array::from_fn(|i| if (m >> i) & 1 == 1 { 1 } else { -1 }))
        .collect();
    let hits: Vec<Vec<u32>> = nodes
        .par_iter()
        .map(|k| {
            let mut v: Vec<u32> = orthants.iter().filter_map(|o| grid.locate_int(k, o)).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let mut leaf_nodes = vec![Vec::new(); grid.leaves.len()];
    for (n, ls) in hits.iter().enumerate() {
        for &l in ls {
            leaf_nodes[l as usize].push(n as u32);
        }
    }
    grid.positions = nodes.iter().map(|k| grid.node_position(k)).collect();
    grid.nodes = nodes;
    grid.leaf_nodes = leaf_nodes;
}

#[derive(PartialEq)]
struct HeapItem(f64, u32);
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Dijkstra on a CSR graph; ties broken by vertex index.
pub(crate) fn dijkstra(offsets: &[usize], targets: &[u32], weights: &[f64], src: u32, dst: u32) -> Option<(f64, Vec<u32>)> {
    let n = offsets.len() - 1;
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![u32::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[src as usize] = 0.0;
    heap.push(HeapItem(0.0, src));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u as usize] {
            continue;
        }
        if u == dst {
            break;
        }
        for e in offsets[u as usize]..offsets[u as usize + 1] {
            let v = targets[e];
            let nd = d + weights[e];
            if nd < dist[v as usize] || (nd == dist[v as usize] && u < prev[v as usize]) {
                let improved = nd < dist[v as usize];
                dist[v as usize] = nd;
                prev[v as usize] = u;
                if improved {
                    heap.push(HeapItem(nd, v));
                }
            }
        }
    }
    if !dist[dst as usize].is_finite() {
        return None;
    }
    let mut path = vec![dst];
    let mut cur = dst;
    while cur != src {
        cur = prev[cur as usize];
        path.push(cur);
    }
    path.reverse();
    Some((dist[dst as usize], path))
}

fn solve<const D: usize>(
    space: &GrushinSpace,
    xs: &[f64],
    ys: &[f64],
    resolution: f64,
    opts: &SolverOptions,
) -> Result<DistanceBracket> {
    let x: [f64; D] = std::array::from_fn(|i| xs[i]);
    let y: [f64; D] = std::array::from_fn(|i| ys[i]);
    let analytic = space.lower_bound_unchecked(xs, ys);
    let floor = opts.floor.unwrap_or(1e-5 * space.bbox().diameter());
    let window = space.window();
    let mk = |lower: f64, upper: f64, witness: Option<Polyline>, stats: SolveStats| DistanceBracket {
        from: Point::from_vec_unchecked(xs.to_vec()),
        to: Point::from_vec_unchecked(ys.to_vec()),
        lower,
        upper,
        witness,
        resolution,
        stats,
    };
    if xs == ys {
        let stats = SolveStats {
            leaves: 0,
            nodes: 0,
            edges: 0,
            floor,
            budget_limited: false,
            graph_length: 0.0,
            analytic_lower: 0.0,
            certified_lower: None,
            window,
        };
        let w = Polyline::from_coords(vec![xs.to_vec(), ys.to_vec()])?;
        return Ok(mk(0.0, 0.0, Some(w), stats));
    }
    let (straight, _) = space.segment_integral(xs, ys, 1e-12);
    let q = Query {
        space,
        x,
        y,
        dx: space.singular().distance(xs),
        dy: space.singular().distance(ys),
        straight,
    };
    let (grid, eff_floor, limited) = build_grid::<D>(&q, resolution, floor, opts.leaf_budget);

    // Graph: grid nodes, then x and y.
    let n = grid.nodes.len();
    let (sx, sy) = (n as u32, n as u32 + 1);
    let lx = grid.locate(xs).expect("x lies in an included cell");
    let ly = grid.locate(ys).expect("y lies in an included cell");
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for ln in &grid.leaf_nodes {
        for (i, &a) in ln.iter().enumerate() {
            for &b in &ln[i + 1..] {
                pairs.push((a, b));
            }
        }
    }
    for &a in &grid.leaf_nodes[lx as usize] {
        pairs.push((a, sx));
    }
    for &a in &grid.leaf_nodes[ly as usize] {
        pairs.push((a, sy));
    }
    if lx == ly {
        pairs.push((sx, sy));
    }
    pairs.sort_unstable();
    pairs.dedup();
    let pos = |i: u32| -> &[f64] {
        if i == sx {
            xs
        } else if i == sy {
            ys
        } else {
            &grid.positions[i as usize]
        }
    };
    let weights: Vec<f64> = pairs.par_iter().map(|&(a, b)| space.segment_integral(pos(a), pos(b), 1e-8).0).collect();
    let total = n + 2;
    let mut deg = vec![0usize; total + 1];
    for (&(a, b), w) in pairs.iter().zip(&weights) {
        if w.is_finite() {
            deg[a as usize + 1] += 1;
            deg[b as usize + 1] += 1;
        }
    }
    for i in 0..total {
        deg[i + 1] += deg[i];
    }
    let offsets = deg.clone();
    let mut fill = deg;
    let mut targets = vec![0u32; offsets[total]];
    let mut wts = vec![0.0; offsets[total]];
    for (&(a, b), &w) in pairs.iter().zip(&weights) {
        if !w.is_finite() {
            continue;
        }
        for (u, v) in [(a, b), (b, a)] {
            let k = fill[u as usize];
            targets[k] = v;
            wts[k] = w;
            fill[u as usize] += 1;
        }
    }
    let mut stats = SolveStats {
        leaves: grid.leaves.len(),
        nodes: n,
        edges: pairs.len(),
        floor: eff_floor,
        budget_limited: limited,
        graph_length: f64::INFINITY,
        analytic_lower: analytic,
        certified_lower: None,
        window: grid.window(),
    };
    let Some((glen, path)) = dijkstra(&offsets, &targets, &wts, sx, sy) else {
        return Ok(mk(analytic, f64::INFINITY, None, stats));
    };
    stats.graph_length = glen;
    let verts: Vec<Vec<f64>> = path.iter().map(|&i| pos(i).to_vec()).collect();
    let clamp_box = grid.window();
    let mut best = shorten::shorten(space, verts, &clamp_box, opts.max_path_vertices);
    let mut upper = space.grushin_length(&Polyline::from_coords(best.clone())?)?;
    if straight.is_finite() && straight <= upper * (1.0 + 1e-12) {
        best = vec![xs.to_vec(), ys.to_vec()];
        upper = space.grushin_length(&Polyline::from_coords(best.clone())?)?;
    }
    let witness = Polyline::from_coords(best)?;
    debug_assert!(norm_diff(&witness.vertices()[0], xs) == 0.0);
    if opts.certify && D == 2 && space.beta() > 0.0 && analytic < upper * (1.0 - 1e-9) {
        // Paths through a cell whose cost bound exceeds `upper` are never shorter than the witness.
        let core: Vec<bool> = grid
            .leaves
            .iter()
            .map(|c| q.box_cost(&grid.cell_min(c), grid.cell_side(c.level)) <= upper * (1.0 + 1e-9))
            .collect();
        let cert = (&grid as &dyn std::any::Any)
            .downcast_ref::<Grid<2>>()
            .and_then(|g| certificate::potential_lower_bound(g, space, [xs[0], xs[1]], [ys[0], ys[1]], lx, ly, &core));
        let exit = {
            let wb = grid.window();
            let b = space.beta();
            radial_cost(q.dx, wb.distance_to_boundary(xs), b) + radial_cost(q.dy, wb.distance_to_boundary(ys), b)
        };
        stats.certified_lower = cert.map(|c| c.min(exit));
    }
    let lower = stats.certified_lower.map_or(analytic, |c| c.max(analytic));
    Ok(mk(lower, upper, Some(witness), stats))
}
