//! Empirical growth of the largest Rayleigh quotient `vᵀAv / vᵀM_h v`.

use super::{assemble_fractional_stiffness, QuadratureSpec};
use crate::error::{invalid, Result};
use crate::geometry::{Discretization, NodeClass, SimplicialMesh};
use crate::spectral::FracParams;

/// Per-level values of `sqrt(max vᵀAv / Σ β_z v_z²)` and the fitted exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseEstimate {
    pub h: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Least-squares slope of `ln ratio` against `ln(1/h)`; needs two levels.
    pub exponent: Option<f64>,
}

/// Largest eigenvalue of the symmetric positive semidefinite matrix `b` by power iteration.
pub(crate) fn power_iteration(b: &nalgebra::DMatrix<f64>, tol: f64, max_iter: usize) -> f64 {
    let n = b.nrows();
    // deterministic start with components in every mode
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i as f64) * 0.7).sin());
    v.normalize_mut();
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = b * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - lambda).abs() <= tol * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

pub fn inverse_estimate_probe(meshes: &[SimplicialMesh], s: f64, quad: &QuadratureSpec) -> Result<InverseEstimate> {
    if meshes.is_empty() {
        return Err(invalid("meshes", "need at least one mesh"));
    }
    let mut h = Vec::with_capacity(meshes.len());
    let mut ratios = Vec::with_capacity(meshes.len());
    for mesh in meshes {
        let params = FracParams::new(s, mesh.dim(), 1)?;
        let a = assemble_fractional_stiffness(mesh, &params, quad)?;
        let beta = mesh.lumped_weights()?;
        let free = mesh.nodes_of_class(NodeClass::Interior);
        if free.is_empty() {
            return Err(invalid("mesh", "no interior nodes"));
        }
        let scale: Vec<f64> = free.iter().map(|&z| beta.weight(z).sqrt().recip()).collect();
        let b = nalgebra::DMatrix::from_fn(free.len(), free.len(), |i, j| {
            scale[i] * a.matrix()[(free[i], free[j])] * scale[j]
        });
        h.push(mesh.h_max());
        ratios.push(power_iteration(&b, 1e-12, 100_000).sqrt());
    }
    let exponent = (meshes.len() >= 2).then(|| {
        let xs: Vec<f64> = h.iter().map(|v| -v.ln()).collect();
        let ys: Vec<f64> = ratios.iter().map(|v| v.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    });
    Ok(InverseEstimate { h, ratios, exponent })
}
