//! Interaction with the exterior of the meshed region, `C ∫ φ_z φ_w κ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::simplex::Simplex;
use crate::error::Result;
use crate::geometry::{Discretization, NodeClass, SimplicialMesh};
use crate::quadrature::{adaptive_triangle, power_integral, Adaptive, TriangleRule};
use crate::spectral::FracParams;

pub(crate) fn assemble(mesh: &SimplicialMesh, params: &FracParams) -> Result<DMatrix<f64>> {
    let n = mesh.num_nodes();
    let s = params.s();
    let locals: Vec<(Vec<usize>, Vec<f64>)> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let ids = mesh.cell(c);
            let keep: Vec<usize> =
                (0..ids.len()).filter(|&i| mesh.node_class(ids[i]) != NodeClass::OuterBoundary).collect();
            if keep.is_empty() {
                return (keep, Vec::new());
            }
            let local = if mesh.dim() == 1 { interval_cell(mesh, c, s, &keep) } else { triangle_cell(mesh, c, s, &keep) };
            (keep, local)
        })
        .collect();
    let mut a = DMatrix::zeros(n, n);
    for (c, (keep, local)) in locals.iter().enumerate() {
        let ids = mesh.cell(c);
        let m = ids.len();
        for &i in keep {
            for &j in keep {
                a[(ids[i], ids[j])] += params.constant() * local[i * m + j];
            }
        }
    }
    Ok(a)
}

/// Exact integrals against `((x−lo)^{-2s} + (hi−x)^{-2s}) / (2s)`.
fn interval_cell(mesh: &SimplicialMesh, c: usize, s: f64, keep: &[usize]) -> Vec<f64> {
    let xs = mesh.vertices().iter().map(|p| p[0]);
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
    let p = mesh.cell_points(c);
    let x = [p[0][0], p[1][0]];
    let mut out = vec![0.0; 4];
    // in the distance t from each end, λ_i(t) = (t − t_other) / (t_i − t_other)
    for t in [[x[0] - lo, x[1] - lo], [hi - x[0], hi - x[1]]] {
        let (t0, t1) = (t[0].min(t[1]), t[0].max(t[1]));
        for &i in keep {
            for &j in keep {
                let (ti, oi) = (t[i], t[1 - i]);
                let (tj, oj) = (t[j], t[1 - j]);
                let scale = 1.0 / ((ti - oi) * (tj - oj));
                // (t − oi)(t − oj) = t² − (oi + oj) t + oi oj
                let coeffs = [oi * oj, -(oi + oj), 1.0];
                let mut v = 0.0;
                for (k, &ck) in coeffs.iter().enumerate() {
                    if ck != 0.0 {
                        v += ck * power_integral(k as f64 - 2.0 * s, t0, t1);
                    }
                }
                out[i * 2 + j] += scale * v / (2.0 * s);
            }
        }
    }
    out
}

/// Integrals against the radial model `(π/s) δ^{-2s}`: one Gauss rule for
/// cells well inside, adaptive subdivision with a cell-wide error budget near
/// the boundary.
fn triangle_cell(mesh: &SimplicialMesh, c: usize, s: f64, keep: &[usize]) -> Vec<f64> {
    let t = Simplex::new(&mesh.cell_points(c));
    let rule = TriangleRule::collapsed(8);
    let f = |x: [f64; 2], v: &mut [f64]| {
        let l = t.bary(x);
        let k = PI / s * mesh.distance_to_boundary(x).powf(-2.0 * s);
        v.iter_mut().for_each(|e| *e = 0.0);
        for &i in keep {
            for &j in keep {
                v[i * 3 + j] = l[i] * l[j] * k;
            }
        }
    };
    let clearance = t.vertices().iter().map(|&p| mesh.distance_to_boundary(p)).fold(f64::INFINITY, f64::min);
    let diam = t.diameter();
    let single = Adaptive { abs: f64::INFINITY, rel: 0.0, max_depth: 0 };
    let rough = adaptive_triangle(f, t.p, 9, &rule, single);
    if clearance > 3.0 * diam {
        return rough;
    }
    let size = rough.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    adaptive_triangle(f, t.p, 9, &rule, Adaptive { abs: 1e-9 * size, rel: 0.0, max_depth: 6 })
}
