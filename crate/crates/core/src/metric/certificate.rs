//! Potential-based lower bound on planar grids.
//!
//! A piecewise-linear function `psi` on a conforming triangulation of the
//! included cells with `|grad psi| <= w_lo(T)` on every triangle (where
//! `w_lo(T)` bounds the weight from below on `T`) satisfies
//! `psi(y) - psi(x) <= length` for every path inside the triangulated region.

use std::collections::BinaryHeap;

use super::solver::Grid;
use super::{radial_cost, GrushinSpace};
use crate::geom::norm_diff;

struct Mesh {
    pos: Vec<[f64; 2]>,
    tris: Vec<[u32; 3]>,
    slow: Vec<f64>,
    /// Fan triangles of every leaf, as a range into `tris`.
    leaf_tris: Vec<(usize, usize)>,
    tri_leaf: Vec<u32>,
}

fn build_mesh(grid: &Grid<2>, space: &GrushinSpace) -> Mesh {
    let n = grid.positions.len();
    let mut pos = grid.positions.clone();
    let mut tris = Vec::new();
    let mut leaf_tris = Vec::with_capacity(grid.leaves.len());
    let mut tri_leaf = Vec::new();
    for (li, c) in grid.leaves.iter().enumerate() {
        let ctr = grid.cell_center(c);
        let cid = (n + li) as u32;
        pos.push(ctr);
        let mut ring: Vec<(f64, u32)> = grid.leaf_nodes[li]
            .iter()
            .map(|&v| {
                let p = grid.positions[v as usize];
                ((p[1] - ctr[1]).atan2(p[0] - ctr[0]), v)
            })
            .collect();
        ring.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let start = tris.len();
        for i in 0..ring.len() {
            let a = ring[i].1;
            let b = ring[(i + 1) % ring.len()].1;
            tris.push([cid, a, b]);
            tri_leaf.push(li as u32);
        }
        leaf_tris.push((start, tris.len()));
    }
    let beta = space.beta();
    let dist: Vec<f64> = pos.iter().map(|p| space.singular().distance(p)).collect();
    let slow = tris
        .iter()
        .map(|t| {
            let mut dhi = f64::INFINITY;
            for &v in t {
                let far = t.iter().map(|&u| norm_diff(&pos[v as usize], &pos[u as usize])).fold(0.0, f64::max);
                dhi = dhi.min(dist[v as usize] + far);
            }
            dhi.powf(-beta)
        })
        .collect();
    Mesh { pos, tris, slow, leaf_tris, tri_leaf }
}

/// Minimum over the segment `[A,B]` of the interpolated value plus `w |P - C|`.
fn hopf_lax(a: [f64; 2], fa: f64, b: [f64; 2], fb: f64, c: [f64; 2], w: f64) -> f64 {
    let f = |s: f64| {
        let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        (1.0 - s) * fa + s * fb + w * ((p[0] - c[0]).hypot(p[1] - c[1]))
    };
    let u = [b[0] - a[0], b[1] - a[1]];
    let pv = [a[0] - c[0], a[1] - c[1]];
    let uu = u[0] * u[0] + u[1] * u[1];
    let pu = pv[0] * u[0] + pv[1] * u[1];
    let pp = pv[0] * pv[0] + pv[1] * pv[1];
    let mut best = f(0.0).min(f(1.0));
    if uu > 0.0 && w > 0.0 {
        let kappa = -(fb - fa) / w;
        let m = uu - kappa * kappa;
        if m > 0.0 {
            let disc = pu * pu - uu * (pu * pu - kappa * kappa * pp) / m;
            if disc >= 0.0 {
                let r = disc.sqrt();
                for s in [(-pu + r) / uu, (-pu - r) / uu] {
                    if (0.0..=1.0).contains(&s) {
                        best = best.min(f(s));
                    }
                }
            }
        }
    }
    best
}

#[derive(PartialEq)]
struct Item(f64, u32);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

fn barycentric(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Option<[f64; 3]> {
    let det = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
    if det == 0.0 {
        return None;
    }
    let l1 = ((b[1] - c[1]) * (p[0] - c[0]) + (c[0] - b[0]) * (p[1] - c[1])) / det;
    let l2 = ((c[1] - a[1]) * (p[0] - c[0]) + (a[0] - c[0]) * (p[1] - c[1])) / det;
    let l3 = 1.0 - l1 - l2;
    let tol = -1e-10;
    (l1 >= tol && l2 >= tol && l3 >= tol).then_some([l1, l2, l3])
}


/// Lower bound on the length of paths from `x` to `y` that stay inside the
/// included cells of `grid`; `None` when the construction degenerates.
pub(crate) fn potential_lower_bound(
    grid: &Grid<2>,
    space: &GrushinSpace,
    x: [f64; 2],
    y: [f64; 2],
    lx: u32,
    ly: u32,
    core: &[bool],
) -> Option<f64> {
    let m = build_mesh(grid, space);
    let nv = m.pos.len();
    let mut incident: Vec<Vec<u32>> = vec![Vec::new(); nv];
    for (ti, t) in m.tris.iter().enumerate() {
        for &v in t {
            incident[v as usize].push(ti as u32);
        }
    }
    let mut phi = vec![f64::INFINITY; nv];
    let mut heap = BinaryHeap::new();
    let (s, e) = m.leaf_tris[lx as usize];
    let w0 = m.slow[s..e].iter().cloned().fold(f64::INFINITY, f64::min);
    for t in &m.tris[s..e] {
        for &v in t {
            let val = w0 * norm_diff(&m.pos[v as usize], &x);
            if val < phi[v as usize] {
                phi[v as usize] = val;
                heap.push(Item(val, v));
            }
        }
    }
    let mut pops = 0usize;
    let cap = 200 * nv;
    while let Some(Item(d, v)) = heap.pop() {
        if d > phi[v as usize] {
            continue;
        }
        pops += 1;
        if pops > cap {
            return None;
        }
        for &ti in &incident[v as usize] {
            let t = m.tris[ti as usize];
            let w = m.slow[ti as usize];
            for k in 0..3 {
                let c = t[k];
                if c == v {
                    continue;
                }
                let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                let (fa, fb) = (phi[a as usize], phi[b as usize]);
                let cand = if fa.is_finite() && fb.is_finite() {
                    hopf_lax(m.pos[a as usize], fa, m.pos[b as usize], fb, m.pos[c as usize], w)
                } else {
                    let src = if fa.is_finite() { a } else { b };
                    phi[src as usize] + w * norm_diff(&m.pos[src as usize], &m.pos[c as usize])
                };
                let old = phi[c as usize];
                if cand < old && (old.is_infinite() || cand < old - 1e-13 * old) {
                    phi[c as usize] = cand;
                    heap.push(Item(cand, c));
                }
            }
        }
    }
    // Paths pay at least the radial cost to leave a ball around x and to
    // enter a ball around y; the Lipschitz constant is only needed outside.
    // Every radius gives a valid bound; keep the best.
    let hx = grid.cell_side(grid.leaves[lx as usize].level);
    let hy = grid.cell_side(grid.leaves[ly as usize].level);
    let dxy = norm_diff(&x, &y);
    let beta = space.beta();
    let (dx, dy) = (space.singular().distance(&x), space.singular().distance(&y));
    let mut best: Option<f64> = None;
    for k in EXCISE {
        let (mut rx, mut ry) = (k * hx, k * hy);
        if rx + ry >= 0.5 * dxy {
            let f = 0.5 * dxy / (rx + ry);
            rx *= f;
            ry *= f;
        }
        if let Some(b) = excised_bound(&m, &phi, x, y, rx, ry, core) {
            let b = b + radial_cost(dx, rx, beta) + radial_cost(dy, ry, beta);
            best = Some(best.map_or(b, |v| v.max(b)));
        }
    }
    best
}

/// `min_{dB_y} psi - max_{dB_x} psi` with `psi = phi / lambda`, `lambda` the
/// largest gradient-to-slowness ratio over core triangles outside both balls.
#[allow(clippy::too_many_arguments)]
fn excised_bound(
    m: &Mesh,
    phi: &[f64],
    x: [f64; 2],
    y: [f64; 2],
    rx: f64,
    ry: f64,
    core: &[bool],
) -> Option<f64> {
    let mut lambda: f64 = 0.0;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    for (ti, t) in m.tris.iter().enumerate() {
        let pts = t.map(|v| m.pos[v as usize]);
        let vals = t.map(|v| phi[v as usize]);
        if !vals.iter().all(|v| v.is_finite()) {
            continue;
        }
        let (nx, fx) = tri_range(&pts, &x);
        let (ny, fy) = tri_range(&pts, &y);
        if nx <= rx && rx <= fx {
            max_x = max_x.max(vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        }
        if ny <= ry && ry <= fy {
            min_y = min_y.min(vals.iter().cloned().fold(f64::INFINITY, f64::min));
        }
        if fx <= rx || fy <= ry || !core[m.tri_leaf[ti] as usize] {
            continue;
        }
        let [a, b, c] = pts;
        let [va, vb, vc] = vals;
        let (e1, e2) = ([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        if det == 0.0 {
            continue;
        }
        let (d1, d2) = (vb - va, vc - va);
        let gx = (d1 * e2[1] - d2 * e1[1]) / det;
        let gy = (e1[0] * d2 - e2[0] * d1) / det;
        lambda = lambda.max(gx.hypot(gy) / m.slow[ti]);
    }
    if !(lambda > 0.0 && lambda.is_finite()) || !max_x.is_finite() {
        return None;
    }
    if !min_y.is_finite() {
        return Some(f64::INFINITY);
    }
    Some(((min_y - max_x) / lambda).max(0.0))
}

const EXCISE: [f64; 4] = [4.0, 8.0, 16.0, 32.0];


/// Smallest and largest distance from `p` to the triangle.
fn tri_range(t: &[[f64; 2]; 3], p: &[f64; 2]) -> (f64, f64) {
    let far = t.iter().map(|v| norm_diff(v, p)).fold(0.0, f64::max);
    if barycentric(*p, t[0], t[1], t[2]).is_some() {
        return (0.0, far);
    }
    let seg = |a: [f64; 2], b: [f64; 2]| {
        let u = [b[0] - a[0], b[1] - a[1]];
        let uu = u[0] * u[0] + u[1] * u[1];
        let s = if uu > 0.0 { (((p[0] - a[0]) * u[0] + (p[1] - a[1]) * u[1]) / uu).clamp(0.0, 1.0) } else { 0.0 };
        (p[0] - a[0] - s * u[0]).hypot(p[1] - a[1] - s * u[1])
    };
    let near = seg(t[0], t[1]).min(seg(t[1], t[2])).min(seg(t[0], t[2]));
    (near, far)
}
