//! Standard P1 mass and Laplace stiffness matrices.

use super::simplex::Simplex;
use crate::geometry::{Discretization, SimplicialMesh};
use crate::linalg::CsrMatrix;

/// Consistent mass matrix `∫ φ_z φ_w`.
pub fn mass_matrix(mesh: &SimplicialMesh) -> CsrMatrix {
    let d = mesh.dim() as f64;
    let mut triplets = Vec::new();
    for c in 0..mesh.num_cells() {
        let ids = mesh.cell(c);
        let base = mesh.cell_measure(c) / ((d + 1.0) * (d + 2.0));
        for (i, &zi) in ids.iter().enumerate() {
            for (j, &zj) in ids.iter().enumerate() {
                triplets.push((zi, zj, if i == j { 2.0 * base } else { base }));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_nodes(), triplets)
}

/// Laplace stiffness matrix `∫ ∇φ_z · ∇φ_w`.
pub fn laplace_matrix(mesh: &SimplicialMesh) -> CsrMatrix {
    let mut triplets = Vec::new();
    for c in 0..mesh.num_cells() {
        let ids = mesh.cell(c);
        let t = Simplex::new(&mesh.cell_points(c));
        for (i, &zi) in ids.iter().enumerate() {
            for (j, &zj) in ids.iter().enumerate() {
                let g = t.g[i][0] * t.g[j][0] + t.g[i][1] * t.g[j][1];
                triplets.push((zi, zj, t.measure * g));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_nodes(), triplets)
}
