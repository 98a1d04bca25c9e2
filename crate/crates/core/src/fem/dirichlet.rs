//! Fractional powers of the Dirichlet Laplacian through the discrete eigenbasis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::p1::{laplace_matrix, mass_matrix};
use crate::error::{invalid, Error, Result};
use crate::geometry::{NodalField, NodeClass, SimplicialMesh};

/// Largest number of interior nodes handled by the dense eigen-decomposition.
pub const MAX_DIRICHLET_NODES: usize = 2000;

/// Eigenpairs of `K ϕ = λ M ϕ` on the interior nodes, `ϕ` M-orthonormal.
#[derive(Clone, Debug)]
pub struct DirichletSpectralOp {
    nodes: Vec<usize>,
    n_total: usize,
    mass: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    s: f64,
}

/// Builds the operator `(−Δ_Ω)^s` on the interior nodes of `mesh`.
pub fn dirichlet_spectral_power(mesh: &SimplicialMesh, s: f64) -> Result<DirichletSpectralOp> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(invalid("s", format!("power must be non-negative, got {s}")));
    }
    let nodes = mesh.nodes_of_class(NodeClass::Interior);
    if nodes.is_empty() {
        return Err(invalid("mesh", "no interior nodes"));
    }
    if nodes.len() > MAX_DIRICHLET_NODES {
        return Err(invalid("mesh", format!("{} interior nodes exceed the limit {MAX_DIRICHLET_NODES}", nodes.len())));
    }
    let k = laplace_matrix(mesh).submatrix(&nodes);
    let mass = mass_matrix(mesh).submatrix(&nodes);
    let chol = mass.clone().cholesky().ok_or_else(|| Error::Eigen("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    // C = L⁻¹ K L⁻ᵀ
    let linv_k = l.solve_lower_triangular(&k).ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&linv_k.transpose())
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(nodes.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    if eigenvalues[0] <= 0.0 {
        return Err(Error::Eigen(format!("non-positive eigenvalue {:e}", eigenvalues[0])));
    }
    let y = DMatrix::from_fn(nodes.len(), nodes.len(), |r, col| eig.eigenvectors[(r, order[col])]);
    // ϕ = L⁻ᵀ y
    let eigenvectors = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    Ok(DirichletSpectralOp { nodes, n_total: mesh.vertices().len(), mass, eigenvalues, eigenvectors, s })
}

impl DirichletSpectralOp {
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Eigenvector `k` as a nodal field on the whole mesh (zero off the interior).
    pub fn eigenfunction(&self, k: usize) -> NodalField {
        let mut f = NodalField::zeros(self.n_total, 1);
        for (r, &z) in self.nodes.iter().enumerate() {
            f.get_mut(z)[0] = self.eigenvectors[(r, k)];
        }
        f
    }

    fn coefficients(&self, u: &NodalField, c: usize) -> DVector<f64> {
        let u0 = DVector::from_iterator(self.nodes.len(), self.nodes.iter().map(|&z| u.get(z)[c]));
        self.eigenvectors.transpose() * (&self.mass * u0)
    }

    /// `Σ_k λ_k^s (ϕ_kᵀ M u) ϕ_k` with the operator's own power.
    pub fn apply(&self, u: &NodalField) -> Result<NodalField> {
        self.apply_power(u, self.s)
    }

    /// Same with an arbitrary non-negative power.
    pub fn apply_power(&self, u: &NodalField, s: f64) -> Result<NodalField> {
        if u.num_nodes() != self.n_total {
            return Err(Error::SizeMismatch { expected: self.n_total, found: u.num_nodes() });
        }
        let mut out = NodalField::zeros(self.n_total, u.dim());
        for c in 0..u.dim() {
            let mut coef = self.coefficients(u, c);
            for (k, v) in coef.iter_mut().enumerate() {
                *v *= self.eigenvalues[k].powf(s);
            }
            let r = &self.eigenvectors * coef;
            for (i, &z) in self.nodes.iter().enumerate() {
                out.get_mut(z)[c] = r[i];
            }
        }
        Ok(out)
    }

    /// `(Σ_k λ_k^s u_k²)^{1/2}` summed over components.
    pub fn seminorm(&self, u: &NodalField) -> Result<f64> {
        if u.num_nodes() != self.n_total {
            return Err(Error::SizeMismatch { expected: self.n_total, found: u.num_nodes() });
        }
        let mut sum = 0.0;
        for c in 0..u.dim() {
            let coef = self.coefficients(u, c);
            sum += coef.iter().enumerate().map(|(k, v)| self.eigenvalues[k].powf(self.s) * v * v).sum::<f64>();
        }
        Ok(sum.sqrt())
    }
}
