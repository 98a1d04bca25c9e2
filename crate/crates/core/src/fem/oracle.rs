//! Brute-force reference values for the fractional stiffness matrix.
//!
//! Independent of the assembler: every cell pair `(T, T')` is
//! integrated as an outer adaptive integral over `x ∈ T` of an inner
//! integral over `y ∈ T'` written in polar coordinates around `x`. Along each
//! ray the integrand is a polynomial in `r` times `r^{-1-2s}`, so the radial
//! integrals are exact; the angular integral is adaptive Gauss–Kronrod split
//! at the vertex directions. The exterior term is integrated by iterated
//! adaptive Gauss–Kronrod.
//!
//! This is slow and meant for small meshes only.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::simplex::Simplex;
use crate::error::Result;
use crate::geometry::{Discretization, NodeClass, SimplicialMesh};
use crate::quadrature::{global_gk, power_integral, Adaptive};
use crate::spectral::FracParams;

/// Tolerances of the oracle integrators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleTolerance {
    pub outer: Adaptive,
    pub angular: Adaptive,
}

impl Default for OracleTolerance {
    fn default() -> Self {
        Self {
            outer: Adaptive { abs: 1e-15, rel: 1e-6, max_depth: 50 },
            angular: Adaptive { abs: 1e-16, rel: 1e-8, max_depth: 50 },
        }
    }
}

struct Pair<'a> {
    t: &'a Simplex,
    tp: &'a Simplex,
    // local index into the union for each vertex of T and T'
    in_t: Vec<usize>,
    in_tp: Vec<usize>,
    m: usize,
    same: bool,
    s: f64,
}

impl Pair<'_> {
    /// Ray `x + r·dir` inside `T'`, as `[r0, r1]`.
    fn clip(&self, lam: &[f64; 3], dir: [f64; 2]) -> Option<(f64, f64)> {
        let (mut r0, mut r1) = (0.0f64, f64::INFINITY);
        for i in 0..self.tp.nv() {
            let c = self.tp.g[i][0] * dir[0] + self.tp.g[i][1] * dir[1];
            if c > 0.0 {
                r0 = r0.max(-lam[i] / c);
            } else if c < 0.0 {
                r1 = r1.min(-lam[i] / c);
            } else if lam[i] < 0.0 {
                return None;
            }
        }
        (r1 > r0).then_some((r0, r1))
    }

    /// Adds the radial integral along `dir` to `out`.
    fn ray(&self, alpha: &[f64], lam_tp: &[f64; 3], dir: [f64; 2], out: &mut [f64]) {
        let Some((r0, r1)) = self.clip(lam_tp, dir) else { return };
        let s = self.s;
        let p_aa = if self.same { 0.0 } else { power_integral(-1.0 - 2.0 * s, r0, r1) };
        let p_ab = if self.same { 0.0 } else { power_integral(-2.0 * s, r0, r1) };
        let p_bb = power_integral(1.0 - 2.0 * s, r0, r1);
        let mut beta = [0.0; 6];
        for (j, &c) in self.in_tp.iter().enumerate() {
            beta[c] = self.tp.g[j][0] * dir[0] + self.tp.g[j][1] * dir[1];
        }
        let m = self.m;
        for a in 0..m {
            for b in 0..m {
                out[a * m + b] += alpha[a] * alpha[b] * p_aa
                    - (alpha[a] * beta[b] + alpha[b] * beta[a]) * p_ab
                    + beta[a] * beta[b] * p_bb;
            }
        }
    }

    /// Inner integral over `y ∈ T'` for fixed `x ∈ T`.
    fn inner(&self, x: [f64; 2], out: &mut [f64], tol: Adaptive) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let lam_t = self.t.bary(x);
        let lam_tp = self.tp.bary(x);
        let mut alpha = [0.0; 6];
        if !self.same {
            for (i, &c) in self.in_t.iter().enumerate() {
                alpha[c] += lam_t[i];
            }
            for (j, &c) in self.in_tp.iter().enumerate() {
                alpha[c] -= lam_tp[j];
            }
        }
        if self.t.d == 1 {
            for sigma in [1.0, -1.0] {
                self.ray(&alpha, &lam_tp, [sigma, 0.0], out);
            }
            return;
        }
        // angular sectors bounded by the vertex directions of T'
        let verts = self.tp.vertices();
        let mut cuts: Vec<f64>;
        if self.same {
            cuts = verts.iter().map(|v| (v[1] - x[1]).atan2(v[0] - x[0])).collect();
            cuts.sort_by(f64::total_cmp);
            cuts.push(cuts[0] + 2.0 * PI);
        } else {
            let c = self.tp.centroid();
            let psi = (c[1] - x[1]).atan2(c[0] - x[0]);
            cuts = verts
                .iter()
                .map(|v| {
                    let mut a = (v[1] - x[1]).atan2(v[0] - x[0]) - psi;
                    while a > PI {
                        a -= 2.0 * PI;
                    }
                    while a <= -PI {
                        a += 2.0 * PI;
                    }
                    psi + a
                })
                .collect();
            cuts.sort_by(f64::total_cmp);
        }
        let m2 = self.m * self.m;
        for w in cuts.windows(2) {
            let part = global_gk(
                |theta, v| {
                    v.iter_mut().for_each(|e| *e = 0.0);
                    self.ray(&alpha, &lam_tp, [theta.cos(), theta.sin()], v);
                },
                w[0],
                w[1],
                m2,
                tol,
                MAX_PIECES,
            );
            out.iter_mut().zip(&part).for_each(|(o, p)| *o += p);
        }
    }
}

const MAX_PIECES: usize = 4000;

/// Iterated globally adaptive integral over a triangle in the coordinates
/// `x = p0 + u (p1 − p0) + v (p2 − p0)`, `0 ≤ v ≤ 1 − u`; every edge sits at an
/// endpoint of one of the two one-dimensional integrals.
fn over_triangle(f: &mut impl FnMut([f64; 2], &mut [f64]), t: &Simplex, m: usize, tol: Adaptive) -> Vec<f64> {
    let inner = Adaptive { rel: 0.1 * tol.rel, abs: 0.1 * tol.abs, ..tol };
    let mut out = global_gk(
        |u, v| {
            let row = global_gk(|w, e| f(t.map([u, w]), e), 0.0, 1.0 - u, m, inner, MAX_PIECES);
            v.copy_from_slice(&row);
        },
        0.0,
        1.0,
        m,
        tol,
        MAX_PIECES,
    );
    let jac = 2.0 * t.measure;
    out.iter_mut().for_each(|e| *e *= jac);
    out
}

fn union_of(a: &[usize], b: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut nodes: Vec<usize> = a.to_vec();
    let in_a: Vec<usize> = (0..a.len()).collect();
    let mut in_b = Vec::with_capacity(b.len());
    for &v in b {
        match nodes.iter().position(|&n| n == v) {
            Some(k) => in_b.push(k),
            None => {
                nodes.push(v);
                in_b.push(nodes.len() - 1);
            }
        }
    }
    (nodes, in_a, in_b)
}

/// `(C_{d,s}/2) ∬_{Ω̃×Ω̃} (φ_z(x)−φ_z(y))(φ_w(x)−φ_w(y)) |x−y|^{-d-2s}` for all node pairs.
pub fn double_integral(mesh: &SimplicialMesh, params: &FracParams, tol: OracleTolerance) -> Result<DMatrix<f64>> {
    let n = mesh.num_nodes();
    let cells: Vec<Simplex> = (0..mesh.num_cells()).map(|c| Simplex::new(&mesh.cell_points(c))).collect();
    let mut a = DMatrix::zeros(n, n);
    for (i, t) in cells.iter().enumerate() {
        // the integrand is invariant under x ↔ y, so (T', T) equals (T, T')
        for (j, tp) in cells.iter().enumerate().skip(i) {
            let (nodes, in_t, in_tp) = union_of(mesh.cell(i), mesh.cell(j));
            let m = nodes.len();
            let pair = Pair { t, tp, in_t, in_tp, m, same: i == j, s: params.s() };
            let mut buf = vec![0.0; m * m];
            let mut f = |x: [f64; 2], v: &mut [f64]| {
                pair.inner(x, &mut buf, tol.angular);
                v.copy_from_slice(&buf);
            };
            let local = if t.d == 1 {
                let (x0, x1) = (t.p[0][0].min(t.p[1][0]), t.p[0][0].max(t.p[1][0]));
                global_gk(|x, v| f([x, 0.0], v), x0, x1, m * m, tol.outer, MAX_PIECES)
            } else {
                over_triangle(&mut f, t, m * m, tol.outer)
            };
            let scale = if i == j { 0.5 } else { 1.0 } * params.constant();
            for (p, &zp) in nodes.iter().enumerate() {
                for (q, &zq) in nodes.iter().enumerate() {
                    a[(zp, zq)] += scale * local[p * m + q];
                }
            }
        }
    }
    Ok(a)
}

/// `C_{d,s} ∫ φ_z φ_w κ` for node pairs off the outer boundary, with `κ` the
/// exact exterior integral (d = 1) or its radial model `(π/s) δ^{-2s}` (d = 2).
pub fn complement(mesh: &SimplicialMesh, params: &FracParams, tol: OracleTolerance) -> Result<DMatrix<f64>> {
    let n = mesh.num_nodes();
    let s = params.s();
    let mut a = DMatrix::zeros(n, n);
    let xs = mesh.vertices().iter().map(|p| p[0]);
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
    let kappa = |x: [f64; 2]| {
        if mesh.dim() == 1 {
            ((x[0] - lo).powf(-2.0 * s) + (hi - x[0]).powf(-2.0 * s)) / (2.0 * s)
        } else {
            PI / s * mesh.distance_to_boundary(x).powf(-2.0 * s)
        }
    };
    let inner_tol = Adaptive { rel: 1e-10, ..tol.angular };
    for c in 0..mesh.num_cells() {
        let t = Simplex::new(&mesh.cell_points(c));
        let keep: Vec<usize> =
            (0..t.nv()).filter(|&i| mesh.node_class(mesh.cell(c)[i]) != NodeClass::OuterBoundary).collect();
        if keep.is_empty() {
            continue;
        }
        let m = t.nv();
        let integrand = |x: [f64; 2], v: &mut [f64]| {
            let l = t.bary(x);
            let k = kappa(x);
            v.iter_mut().for_each(|e| *e = 0.0);
            for &i in &keep {
                for &j in &keep {
                    v[i * m + j] = l[i] * l[j] * k;
                }
            }
        };
        let mut integrand = integrand;
        let local = if t.d == 1 {
            let (x0, x1) = (t.p[0][0].min(t.p[1][0]), t.p[0][0].max(t.p[1][0]));
            global_gk(|x, v| integrand([x, 0.0], v), x0, x1, m * m, inner_tol, MAX_PIECES)
        } else {
            over_triangle(&mut integrand, &t, m * m, inner_tol)
        };
        let ids = mesh.cell(c);
        for &i in &keep {
            for &j in &keep {
                a[(ids[i], ids[j])] += params.constant() * local[i * m + j];
            }
        }
    }
    Ok(a)
}

/// Reference stiffness matrix: both parts, outer-boundary rows and columns zeroed.
pub fn stiffness(mesh: &SimplicialMesh, params: &FracParams, tol: OracleTolerance) -> Result<DMatrix<f64>> {
    let mut a = double_integral(mesh, params, tol)? + complement(mesh, params, tol)?;
    super::eliminate_outer(mesh, &mut a);
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_gk;

    #[test]
    fn single_interval_matches_closed_form() {
        // T = [0, h] alone: ∬ (φ_a(x)−φ_a(y))(φ_b(x)−φ_b(y))|x−y|^{-1-2s}
        // = g_a g_b · 2h^{3−2s}/((2−2s)(3−2s))
        let h = 0.7;
        let s = 0.35;
        let t = Simplex::new(&[[0.0, 0.0], [h, 0.0]]);
        let pair = Pair { t: &t, tp: &t, in_t: vec![0, 1], in_tp: vec![0, 1], m: 2, same: true, s };
        let mut buf = vec![0.0; 4];
        let tol = OracleTolerance {
            outer: Adaptive { abs: 1e-16, rel: 1e-11, max_depth: 50 },
            angular: Adaptive { abs: 1e-16, rel: 1e-12, max_depth: 50 },
        };
        let v = adaptive_gk(
            |x, out| {
                pair.inner([x, 0.0], &mut buf, tol.angular);
                out.copy_from_slice(&buf);
            },
            0.0,
            h,
            4,
            tol.outer,
        );
        let exact = 2.0 * h.powf(3.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s)) / (h * h);
        assert!((v[0] - exact).abs() < 1e-9 * exact);
        assert!((v[1] + exact).abs() < 1e-9 * exact);
    }
}
