//! Local shortening of discrete paths. Every accepted move strictly decreases
//! the Grushin length (by more than `1e-12` relative).

use super::GrushinSpace;
use crate::geom::{norm_diff, Aabb};

const ACCEPT: f64 = 1e-12;

struct Shortener<'a> {
    space: &'a GrushinSpace,
    window: &'a Aabb,
}

impl Shortener<'_> {
    fn seg(&self, a: &[f64], b: &[f64]) -> f64 {
        self.space.segment_integral(a, b, 1e-10).0
    }

    fn length(&self, p: &[Vec<f64>]) -> f64 {
        p.windows(2).map(|w| self.seg(&w[0], &w[1])).sum()
    }

    /// Greedy string pulling: jump to the farthest vertex whose chord is shorter.
    fn pull(&self, p: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        if p.len() <= 2 {
            return p;
        }
        let mut pref = vec![0.0];
        for w in p.windows(2) {
            let last = *pref.last().expect("nonempty");
            pref.push(last + self.seg(&w[0], &w[1]));
        }
        let last = p.len() - 1;
        let mut out = vec![p[0].clone()];
        let mut i = 0;
        while i < last {
            let mut best = i + 1;
            let mut fails = 0;
            for j in i + 2..=last {
                let along = pref[j] - pref[i];
                if self.seg(&p[i], &p[j]) < along * (1.0 - ACCEPT) {
                    best = j;
                    fails = 0;
                } else {
                    fails += 1;
                    if fails >= 8 {
                        break;
                    }
                }
            }
            out.push(p[best].clone());
            i = best;
        }
        out
    }

    fn clamp(&self, v: &mut [f64]) {
        for (i, c) in v.iter_mut().enumerate() {
            *c = c.clamp(self.window.min[i], self.window.max[i]);
        }
    }

    /// Pattern search on each interior vertex; returns the total decrease.
    fn relax(&self, p: &mut [Vec<f64>], sweeps: usize) -> f64 {
        let n = p.len();
        if n < 3 {
            return 0.0;
        }
        let dim = p[0].len();
        let mut steps: Vec<f64> = (1..n - 1)
            .map(|k| 0.25 * norm_diff(&p[k - 1], &p[k]).min(norm_diff(&p[k], &p[k + 1])))
            .collect();
        let mut gained = 0.0;
        for _ in 0..sweeps {
            let mut sweep_gain = 0.0;
            let mut active = false;
            for k in 1..n - 1 {
                let h = steps[k - 1];
                let scale = norm_diff(&p[k - 1], &p[k + 1]).max(1e-300);
                if h < 1e-10 * scale {
                    continue;
                }
                active = true;
                let (a, b) = (p[k - 1].clone(), p[k + 1].clone());
                let f = |v: &[f64]| self.seg(&a, v) + self.seg(v, &b);
                let v0 = p[k].clone();
                let f0 = f(&v0);
                let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(2 * dim + 1);
                let eps = 1e-3 * h;
                let mut g = vec![0.0; dim];
                for i in 0..dim {
                    let mut vp = v0.clone();
                    vp[i] += eps;
                    let mut vm = v0.clone();
                    vm[i] -= eps;
                    g[i] = (f(&vp) - f(&vm)) / (2.0 * eps);
                }
                let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if gn.is_finite() && gn > 0.0 {
                    dirs.push(g.iter().map(|x| -x / gn).collect());
                }
                for i in 0..dim {
                    for s in [1.0, -1.0] {
                        let mut e = vec![0.0; dim];
                        e[i] = s;
                        dirs.push(e);
                    }
                }
                let mut moved = false;
                for d in &dirs {
                    let mut v: Vec<f64> = v0.iter().zip(d).map(|(x, d)| x + h * d).collect();
                    self.clamp(&mut v);
                    let fv = f(&v);
                    if fv < f0 - ACCEPT * f0 {
                        sweep_gain += f0 - fv;
                        p[k] = v;
                        moved = true;
                        break;
                    }
                }
                steps[k - 1] = if moved { h * 1.5 } else { h * 0.5 };
            }
            gained += sweep_gain;
            if !active {
                break;
            }
        }
        gained
    }
}

/// Shortens `path` (first and last vertices fixed) by string pulling and
/// coarse-to-fine vertex relaxation.
pub(crate) fn shorten(space: &GrushinSpace, path: Vec<Vec<f64>>, window: &Aabb, max_vertices: usize) -> Vec<Vec<f64>> {
    let s = Shortener { space, window };
    let mut p: Vec<Vec<f64>> = Vec::with_capacity(path.len());
    for v in path {
        if p.last() != Some(&v) {
            p.push(v);
        }
    }
    if p.len() < 2 {
        return vec![p[0].clone(), p[0].clone()];
    }
    let mut p = s.pull(p);
    let mut len = s.length(&p);
    s.relax(&mut p, 200);
    loop {
        if 2 * p.len() - 1 > max_vertices.max(3) {
            break;
        }
        let mut q = Vec::with_capacity(2 * p.len());
        for w in p.windows(2) {
            q.push(w[0].clone());
            q.push(w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect());
        }
        q.push(p.last().expect("nonempty").clone());
        s.relax(&mut q, 200);
        let nl = s.length(&q);
        if nl < len * (1.0 - ACCEPT) {
            let gain = (len - nl) / len;
            p = q;
            len = nl;
            if gain < 1e-9 {
                break;
            }
        } else {
            break;
        }
    }
    let p2 = s.pull(p.clone());
    if s.length(&p2) < len {
        p2
    } else {
        p
    }
}
