//! Element-pair integrals
//! `I_ab = ∬_{T×T'} (φ_a(x)−φ_a(y))(φ_b(x)−φ_b(y)) |x−y|^{-d-2s} dy dx`.
//!
//! Pairs that touch are reduced with the homogeneity of the integrand: the
//! radial direction of a cone over the singular point is integrated exactly
//! and the remaining compact face integrals are smooth. Separated pairs use
//! tensor Gauss rules whose order grows as the pair gets closer, after
//! splitting the larger cell until the pair is well separated.

use super::simplex::{simplex_distance, Simplex};
use crate::quadrature::{GaussRule, TriangleRule};

pub(crate) const MAX_ORDER: usize = 24;

/// Local pair matrix over at most six union nodes, row-major `m × m`.
#[derive(Clone, Debug)]
pub(crate) struct Local {
    pub m: usize,
    pub val: [f64; 36],
}

impl Local {
    fn new(m: usize) -> Self {
        Self { m, val: [0.0; 36] }
    }

    fn add_outer(&mut self, n: &[f64], w: f64) {
        let m = self.m;
        for a in 0..m {
            let na = w * n[a];
            for b in 0..m {
                self.val[a * m + b] += na * n[b];
            }
        }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.val[a * self.m + b]
    }
}

pub(crate) struct Rules {
    gauss: Vec<GaussRule>,
    tri: Vec<TriangleRule>,
}

impl Rules {
    pub fn new() -> Self {
        Self {
            gauss: (1..=MAX_ORDER).map(GaussRule::new).collect(),
            tri: (1..=MAX_ORDER).map(TriangleRule::collapsed).collect(),
        }
    }

    pub fn gauss(&self, q: usize) -> &GaussRule {
        &self.gauss[q.clamp(1, MAX_ORDER) - 1]
    }

    pub fn tri(&self, q: usize) -> &TriangleRule {
        &self.tri[q.clamp(1, MAX_ORDER) - 1]
    }
}

fn kernel(w: [f64; 2], exponent: f64) -> f64 {
    (w[0] * w[0] + w[1] * w[1]).powf(-0.5 * exponent)
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// `T = T'`, local order of `T`.
pub(crate) fn identical(t: &Simplex, s: f64, rules: &Rules, q: usize) -> Local {
    let m = t.nv();
    let mut out = Local::new(m);
    if t.d == 1 {
        let h = t.measure;
        let c = 2.0 * h.powf(3.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s));
        for a in 0..2 {
            for b in 0..2 {
                out.val[a * 2 + b] = c * t.g[a][0] * t.g[b][0];
            }
        }
        return out;
    }
    // difference body T − T is a hexagon; the overlap of T with T + z is a
    // homothetic triangle of area |T|(1 − ρ(z))²
    let e = [sub(t.p[1], t.p[0]), sub(t.p[2], t.p[1]), sub(t.p[0], t.p[2])];
    let mut hex: Vec<[f64; 2]> = e.iter().flat_map(|v| [*v, [-v[0], -v[1]]]).collect();
    hex.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
    let beta = 2.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s) * (4.0 - 2.0 * s));
    let g = rules.gauss(q);
    let mut n = [0.0; 3];
    for k in 0..6 {
        let v0 = hex[k];
        let v1 = hex[(k + 1) % 6];
        let w_face = cross(v0, v1);
        for (tq, wq) in g.iter() {
            let p = [v0[0] + tq * (v1[0] - v0[0]), v0[1] + tq * (v1[1] - v0[1])];
            for (a, na) in n.iter_mut().enumerate() {
                *na = t.g[a][0] * p[0] + t.g[a][1] * p[1];
            }
            out.add_outer(&n, w_face * wq * kernel(p, 2.0 + 2.0 * s));
        }
    }
    out.val.iter_mut().for_each(|v| *v *= t.measure * beta);
    out
}

/// Cells sharing exactly the vertex `o`. `t = (o, p1[, p2])`, `tp = (o, q1[, q2])`.
/// Union order: `o, p1[, p2], q1[, q2]`.
pub(crate) fn vertex(t: &Simplex, tp: &Simplex, s: f64, rules: &Rules, q: usize) -> Local {
    let d = t.d;
    let m = 2 * d + 1;
    let mut out = Local::new(m);
    let o = t.p[0];
    let ep: Vec<[f64; 2]> = (1..=d).map(|i| sub(t.p[i], o)).collect();
    let eq: Vec<[f64; 2]> = (1..=d).map(|i| sub(tp.p[i], o)).collect();
    let exponent = d as f64 + 2.0 * s;
    let mut n = [0.0; 5];
    let mut add = |u: &[f64], v: &[f64], w: f64, out: &mut Local| {
        let mut wv = [0.0; 2];
        for i in 0..d {
            wv[0] += u[i] * ep[i][0] - v[i] * eq[i][0];
            wv[1] += u[i] * ep[i][1] - v[i] * eq[i][1];
        }
        let su: f64 = u.iter().sum();
        let sv: f64 = v.iter().sum();
        n[0] = sv - su;
        for i in 0..d {
            n[1 + i] = u[i];
            n[1 + d + i] = -v[i];
        }
        out.add_outer(&n[..m], w * kernel(wv, exponent));
    };
    let g = rules.gauss(q);
    if d == 1 {
        for (x, w) in g.iter() {
            add(&[1.0], &[x], w, &mut out);
            add(&[x], &[1.0], w, &mut out);
        }
    } else {
        let tri = rules.tri(q);
        for (tq, wt) in g.iter() {
            let face = [1.0 - tq, tq];
            for (r, wr) in tri.iter() {
                add(&face, &r, wt * wr, &mut out);
                add(&r, &face, wt * wr, &mut out);
            }
        }
    }
    let jac = |c: &Simplex| if d == 1 { c.measure } else { 2.0 * c.measure };
    let scale = jac(t) * jac(tp) / (d as f64 + 2.0 - 2.0 * s);
    out.val.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Triangles sharing the edge `(o, p)`: `t = (o, p, q)`, `tp = (o, p, q')`.
/// Union order: `o, p, q, q'`.
pub(crate) fn edge(t: &Simplex, tp: &Simplex, s: f64, rules: &Rules, q: usize) -> Local {
    let mut out = Local::new(4);
    let o = t.p[0];
    let e = sub(t.p[1], o);
    let f = sub(t.p[2], o);
    let g_vec = sub(tp.p[2], o);
    let exponent = 2.0 + 2.0 * s;
    let gauss = rules.gauss(q);
    let tri = rules.tri(q);
    // half where x runs ahead of y along the shared edge; the other half swaps the roles
    for (ff, gg, iq, iqp) in [(f, g_vec, 2, 3), (g_vec, f, 3, 2)] {
        let eval = |delta: f64, a: f64, b: f64, w: f64, out: &mut Local| {
            let wv = [delta * e[0] + a * ff[0] - b * gg[0], delta * e[1] + a * ff[1] - b * gg[1]];
            let mut n = [0.0; 4];
            n[0] = -delta - a + b;
            n[1] = delta;
            n[iq] = a;
            n[iqp] = -b;
            out.add_outer(&n, w * kernel(wv, exponent));
        };
        for (r, w) in tri.iter() {
            eval(r[0], r[1], 1.0, w, &mut out);
        }
        for (tq, wt) in gauss.iter() {
            for (b, wb) in gauss.iter() {
                eval(tq, 1.0 - tq, b, wt * wb, &mut out);
            }
        }
    }
    let scale = 4.0 * t.measure * tp.measure / ((3.0 - 2.0 * s) * (4.0 - 2.0 * s));
    out.val.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Gauss order for a pair at separation ratio `rho` (distance over diameter).
pub(crate) fn far_order(rho: f64, q_far: usize, tol: f64) -> usize {
    let q = (tol.recip().ln() / (2.0 * (1.0 + 2.0 * rho).ln())).ceil() as usize;
    q.clamp(q_far, MAX_ORDER)
}

/// Separated cells. Union order: vertices of `t`, then vertices of `tp`.
pub(crate) fn far(t: &Simplex, tp: &Simplex, s: f64, rules: &Rules, q_far: usize, tol: f64) -> Local {
    let mut out = Local::new(t.nv() + tp.nv());
    far_rec(t, t, tp, tp, s, rules, q_far, tol, 0, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn far_rec(
    t: &Simplex,
    x: &Simplex,
    tp: &Simplex,
    y: &Simplex,
    s: f64,
    rules: &Rules,
    q_far: usize,
    tol: f64,
    depth: usize,
    out: &mut Local,
) {
    let dx = x.diameter();
    let dy = y.diameter();
    let rho = simplex_distance(x, y) / dx.max(dy);
    if rho < 1.0 && depth < 16 {
        if dx >= dy {
            for c in x.split() {
                far_rec(t, &c, tp, y, s, rules, q_far, tol, depth + 1, out);
            }
        } else {
            for c in y.split() {
                far_rec(t, x, tp, &c, s, rules, q_far, tol, depth + 1, out);
            }
        }
        return;
    }
    let q = far_order(rho, q_far, tol);
    let xs = points(x, t, rules, q);
    let ys = points(y, tp, rules, q);
    let exponent = t.d as f64 + 2.0 * s;
    let nt = t.nv();
    let ntp = tp.nv();
    let m = out.m;
    let mut col = vec![0.0; ys.len()];
    for (px, wx, lx) in &xs {
        let mut row = 0.0;
        let mut cross_row = [0.0; 3];
        for (j, (py, wy, ly)) in ys.iter().enumerate() {
            let k = wx * wy * kernel(sub(*px, *py), exponent);
            row += k;
            col[j] += k;
            for b in 0..ntp {
                cross_row[b] += k * ly[b];
            }
        }
        for a in 0..nt {
            for b in 0..nt {
                out.val[a * m + b] += row * lx[a] * lx[b];
            }
            for b in 0..ntp {
                let v = lx[a] * cross_row[b];
                out.val[a * m + nt + b] -= v;
                out.val[(nt + b) * m + a] -= v;
            }
        }
    }
    for ((_, _, ly), c) in ys.iter().zip(&col) {
        for a in 0..ntp {
            for b in 0..ntp {
                out.val[(nt + a) * m + nt + b] += c * ly[a] * ly[b];
            }
        }
    }
}

/// Quadrature points on the piece `c` of cell `parent` with the parent's barycentrics.
fn points(c: &Simplex, parent: &Simplex, rules: &Rules, q: usize) -> Vec<([f64; 2], f64, [f64; 3])> {
    if c.d == 1 {
        rules.gauss(q).iter().map(|(u, w)| {
            let x = c.map([u, 0.0]);
            (x, w * c.measure, parent.bary(x))
        })
        .collect()
    } else {
        rules.tri(q).iter().map(|(r, w)| {
            let x = c.map(r);
            (x, 2.0 * w * c.measure, parent.bary(x))
        })
        .collect()
    }
}
