//! Semi-implicit L²-gradient flow for the fractional energy of sphere-valued
//! maps, with the unit-length constraint linearized at every node.
//!
//! One step solves for `d_t u ∈ F_h[u]` (nodally orthogonal to `u`)
//! `(d_t u, v) + a(u + τ d_t u, v) = 0` for all `v ∈ F_h[u]`, then sets
//! `u ← u + τ d_t u`. There is no projection back to the sphere.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::fem::{discrete_frac_laplacian, fem_energy, p1, FracStiffness};
use crate::geometry::{unit_violation, Discretization, LumpedMass, NodalField, NodeClass, SimplicialMesh};
use crate::linalg::{conjugate_gradient, CsrMatrix};

/// Tolerance of the frame-reduced conjugate-gradient solve.
pub const CG_TOLERANCE: f64 = 1e-10;

/// Orthonormal bases of `u(z)^⊥` at the free nodes.
#[derive(Clone, Debug)]
pub struct TangentFrame {
    dim: usize,
    nodes: Vec<usize>,
    // per node, dim − 1 vectors of length dim
    vectors: Vec<f64>,
}

impl TangentFrame {
    /// Frames at `nodes`. For `N = 3`, `t₁ = (e_m × u)/|e_m × u|` with `m` the
    /// smallest component of `u` and `t₂ = u × t₁ / |u|`; for `N = 2`, `t₁` is
    /// `u/|u|` turned by a right angle.
    pub fn new(u: &NodalField, nodes: &[usize]) -> Result<Self> {
        let dim = u.dim();
        if dim != 2 && dim != 3 {
            return Err(invalid("u", format!("tangent frames need 2 or 3 components, got {dim}")));
        }
        let mut vectors = Vec::with_capacity(nodes.len() * (dim - 1) * dim);
        for &z in nodes {
            let v = u.get(z);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm >= 0.5) {
                return Err(Error::DegenerateFrame { node: z, norm });
            }
            if dim == 2 {
                vectors.extend_from_slice(&[-v[1] / norm, v[0] / norm]);
                continue;
            }
            let m = (0..3).min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
            let mut e = [0.0; 3];
            e[m] = 1.0;
            let t1 = normalize(cross(e, [v[0], v[1], v[2]]));
            let t2 = cross([v[0] / norm, v[1] / norm, v[2] / norm], t1);
            vectors.extend_from_slice(&t1);
            vectors.extend_from_slice(&t2);
        }
        Ok(Self { dim, nodes: nodes.to_vec(), vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Tangent vector `i` at the `k`-th frame node.
    pub fn vector(&self, k: usize, i: usize) -> &[f64] {
        let n = self.dim;
        let start = (k * (n - 1) + i) * n;
        &self.vectors[start..start + n]
    }

    /// Number of reduced unknowns `(N − 1)·|nodes|`.
    pub fn dofs(&self) -> usize {
        self.nodes.len() * (self.dim - 1)
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Mass matrix used in `(d_t u, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MassKind {
    Consistent,
    Lumped,
}

/// Mass matrix, lumped weights and the free (interior) nodes of a mesh.
#[derive(Clone, Debug)]
pub struct FlowMass {
    kind: MassKind,
    matrix: CsrMatrix,
    beta: LumpedMass,
    free: Vec<usize>,
}

impl FlowMass {
    pub fn new(mesh: &SimplicialMesh, kind: MassKind) -> Result<Self> {
        let beta = mesh.lumped_weights()?;
        let matrix = match kind {
            MassKind::Consistent => p1::mass_matrix(mesh),
            MassKind::Lumped => {
                CsrMatrix::from_triplets(mesh.num_nodes(), (0..mesh.num_nodes()).map(|z| (z, z, beta.weight(z))).collect())
            }
        };
        let free = mesh.nodes_of_class(NodeClass::Interior);
        if free.is_empty() {
            return Err(invalid("mesh", "no interior nodes"));
        }
        Ok(Self { kind, matrix, beta, free })
    }

    pub fn kind(&self) -> MassKind {
        self.kind
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn beta(&self) -> &LumpedMass {
        &self.beta
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    /// `Σ_c v_cᵀ M v_c`.
    pub fn norm_sq(&self, v: &NodalField) -> f64 {
        let mut sum = 0.0;
        let mut y = vec![0.0; v.num_nodes()];
        for c in 0..v.dim() {
            let x = v.component(c);
            self.matrix.mul_vec(&x, &mut y);
            sum += x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        }
        sum
    }

    /// Lumped `L²_h` norm over the free nodes.
    pub fn l2h_norm(&self, v: &NodalField) -> f64 {
        self.free
            .iter()
            .map(|&z| self.beta.weight(z) * v.get(z).iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Diagnostics of one flow step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub energy_before: f64,
    pub energy_after: f64,
    /// `‖d_t u‖` in the lumped `L²_h` norm.
    pub dtu_norm: f64,
    /// `(d_t u, d_t u)` with the flow's mass matrix.
    pub dtu_mass_sq: f64,
    /// `a(d_t u, d_t u)`.
    pub dtu_energy_sq: f64,
    /// `(d_t u, d_t u) + (E_after − E_before)/τ + (τ/2) a(d_t u, d_t u)`; zero up to the solver tolerance.
    pub identity_defect: f64,
    /// Largest `|d_t u(z) · u(z)|`.
    pub orthogonality_defect: f64,
    pub cg_iters: usize,
    pub cg_residual: f64,
}

fn check_inputs(u: &NodalField, tau: f64, a: &FracStiffness, mass: &FlowMass) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid("tau", format!("time step must be positive, got {tau}")));
    }
    if u.num_nodes() != a.n() {
        return Err(Error::SizeMismatch { expected: a.n(), found: u.num_nodes() });
    }
    if mass.matrix.n() != a.n() {
        return Err(Error::SizeMismatch { expected: a.n(), found: mass.matrix.n() });
    }
    Ok(())
}

/// `M + τA` on the free nodes.
fn shifted_block(tau: f64, a: &FracStiffness, mass: &FlowMass) -> DMatrix<f64> {
    let free = &mass.free;
    let m = mass.matrix.submatrix(free);
    DMatrix::from_fn(free.len(), free.len(), |i, j| m[(i, j)] + tau * a.matrix()[(free[i], free[j])])
}

/// Dense frame-reduced system matrix `T^T (M + τA) T` in the ordering
/// `(node, tangent)`, for inspection on small meshes.
pub fn reduced_system(u: &NodalField, tau: f64, a: &FracStiffness, mass: &FlowMass) -> Result<DMatrix<f64>> {
    check_inputs(u, tau, a, mass)?;
    let frame = TangentFrame::new(u, &mass.free)?;
    let b = shifted_block(tau, a, mass);
    let k = frame.dim - 1;
    let n = frame.dofs();
    Ok(DMatrix::from_fn(n, n, |r, c| {
        let (zr, ir) = (r / k, r % k);
        let (zc, ic) = (c / k, c % k);
        let dot: f64 = frame.vector(zr, ir).iter().zip(frame.vector(zc, ic)).map(|(x, y)| x * y).sum();
        b[(zr, zc)] * dot
    }))
}

/// One step of the constrained flow; returns `(u_next, d_t u, report)`.
pub fn heat_flow_step(
    u_prev: &NodalField,
    tau: f64,
    a: &FracStiffness,
    mass: &FlowMass,
) -> Result<(NodalField, NodalField, StepReport)> {
    check_inputs(u_prev, tau, a, mass)?;
    let b = shifted_block(tau, a, mass);
    step_with_block(u_prev, tau, a, mass, &b)
}

fn step_with_block(
    u_prev: &NodalField,
    tau: f64,
    a: &FracStiffness,
    mass: &FlowMass,
    b: &DMatrix<f64>,
) -> Result<(NodalField, NodalField, StepReport)> {
    let free = &mass.free;
    let frame = TangentFrame::new(u_prev, free)?;
    let n = frame.dim;
    let k = n - 1;
    let au = a.apply(u_prev)?;
    let mut rhs = vec![0.0; frame.dofs()];
    for (p, &z) in free.iter().enumerate() {
        for i in 0..k {
            rhs[p * k + i] = -frame.vector(p, i).iter().zip(au.get(z)).map(|(t, g)| t * g).sum::<f64>();
        }
    }
    let diag: Vec<f64> = (0..frame.dofs()).map(|r| b[(r / k, r / k)]).collect();
    let expand = |c: &[f64]| {
        let mut d = DMatrix::zeros(free.len(), n);
        for p in 0..free.len() {
            for i in 0..k {
                for (j, t) in frame.vector(p, i).iter().enumerate() {
                    d[(p, j)] += c[p * k + i] * t;
                }
            }
        }
        d
    };
    let apply = |c: &[f64], y: &mut [f64]| {
        let bd = b * expand(c);
        for p in 0..free.len() {
            for i in 0..k {
                y[p * k + i] = frame.vector(p, i).iter().enumerate().map(|(j, t)| t * bd[(p, j)]).sum();
            }
        }
    };
    let mut coef = vec![0.0; frame.dofs()];
    let cg = conjugate_gradient(apply, &diag, &rhs, &mut coef, CG_TOLERANCE, 20 * frame.dofs() + 200)?;
    let d = expand(&coef);
    let mut dtu = NodalField::zeros(u_prev.num_nodes(), n);
    for (p, &z) in free.iter().enumerate() {
        for j in 0..n {
            dtu.get_mut(z)[j] = d[(p, j)];
        }
    }
    let u_next = u_prev.add_scaled(tau, &dtu)?;
    let energy_before = fem_energy(u_prev, a)?;
    let energy_after = fem_energy(&u_next, a)?;
    let dtu_mass_sq = mass.norm_sq(&dtu);
    let dtu_energy_sq = a.bilinear(&dtu, &dtu)?;
    let orthogonality_defect = free
        .iter()
        .map(|&z| dtu.get(z).iter().zip(u_prev.get(z)).map(|(x, y)| x * y).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let report = StepReport {
        energy_before,
        energy_after,
        dtu_norm: mass.l2h_norm(&dtu),
        dtu_mass_sq,
        dtu_energy_sq,
        identity_defect: dtu_mass_sq + (energy_after - energy_before) / tau + 0.5 * tau * dtu_energy_sq,
        orthogonality_defect,
        cg_iters: cg.iterations,
        cg_residual: cg.residual,
    };
    Ok((u_next, dtu, report))
}

/// Norm of `d_t u` compared against the stopping tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StopNorm {
    /// Lumped `L²_h` norm.
    #[default]
    L2,
    /// `(‖d_t u‖²_{L²_h} + a(d_t u, d_t u))^{1/2}`.
    Energy,
}

/// One row of the flow history.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowRecord {
    pub k: usize,
    pub t: f64,
    pub energy: f64,
    pub dtu_norm: f64,
    pub violation: f64,
    pub cg_iters: usize,
    pub cg_residual: f64,
    /// `τ Σ_{ℓ ≤ k} (d_t u^ℓ, d_t u^ℓ)`.
    pub dissipation: f64,
}

/// History of a flow run; `records[k − 1]` describes step `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrace {
    pub tau: f64,
    pub initial_energy: f64,
    pub initial_violation: f64,
    pub records: Vec<FlowRecord>,
    pub converged: bool,
}

impl FlowTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `k,t,energy,dtu_norm,violation,cg_iters`, starting with the initial state at `k = 0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,t,energy,dtu_norm,violation,cg_iters\n");
        let _ = writeln!(out, "0,0.0,{:?},0.0,{:?},0", self.initial_energy, self.initial_violation);
        for r in &self.records {
            let _ = writeln!(out, "{},{:?},{:?},{:?},{:?},{}", r.k, r.t, r.energy, r.dtu_norm, r.violation, r.cg_iters);
        }
        out
    }
}

/// Options of [`run_heat_flow_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOptions {
    pub tau: f64,
    pub stop_tol: f64,
    pub max_steps: usize,
    pub stop_norm: StopNorm,
}

/// Runs the flow until `‖d_t u‖_{L²_h} < stop_tol` or `max_steps` steps.
pub fn run_heat_flow(
    u0: &NodalField,
    tau: f64,
    a: &FracStiffness,
    mass: &FlowMass,
    stop_tol: f64,
    max_steps: usize,
) -> Result<(NodalField, FlowTrace)> {
    let opts = FlowOptions { tau, stop_tol, max_steps, stop_norm: StopNorm::L2 };
    run_heat_flow_with(u0, a, mass, &opts, |_, _| Ok(()))
}

/// Same as [`run_heat_flow`]; `observe(k, u^k)` is called after every step.
pub fn run_heat_flow_with(
    u0: &NodalField,
    a: &FracStiffness,
    mass: &FlowMass,
    opts: &FlowOptions,
    mut observe: impl FnMut(usize, &NodalField) -> Result<()>,
) -> Result<(NodalField, FlowTrace)> {
    check_inputs(u0, opts.tau, a, mass)?;
    if !(opts.stop_tol > 0.0) {
        return Err(invalid("stop_tol", format!("must be positive, got {}", opts.stop_tol)));
    }
    let b = shifted_block(opts.tau, a, mass);
    let mut trace = FlowTrace {
        tau: opts.tau,
        initial_energy: fem_energy(u0, a)?,
        initial_violation: unit_violation(u0, &mass.beta),
        records: Vec::new(),
        converged: false,
    };
    let mut u = u0.clone();
    let mut dissipation = 0.0;
    for k in 1..=opts.max_steps {
        let (next, _, report) = step_with_block(&u, opts.tau, a, mass, &b)?;
        u = next;
        dissipation += opts.tau * report.dtu_mass_sq;
        trace.records.push(FlowRecord {
            k,
            t: k as f64 * opts.tau,
            energy: report.energy_after,
            dtu_norm: report.dtu_norm,
            violation: unit_violation(&u, &mass.beta),
            cg_iters: report.cg_iters,
            cg_residual: report.cg_residual,
            dissipation,
        });
        observe(k, &u)?;
        let size = match opts.stop_norm {
            StopNorm::L2 => report.dtu_norm,
            StopNorm::Energy => (report.dtu_norm.powi(2) + report.dtu_energy_sq).sqrt(),
        };
        if size < opts.stop_tol {
            trace.converged = true;
            break;
        }
    }
    Ok((u, trace))
}

/// `L²_h` norm of the nodewise tangential part of `(−Δ)^s_h u`.
pub fn harmonic_residual(u: &NodalField, a: &FracStiffness, beta: &LumpedMass) -> Result<f64> {
    let y = discrete_frac_laplacian(u, a, beta)?;
    let mut sum = 0.0;
    for z in beta.constrained_nodes() {
        let v = u.get(z);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm >= 0.5) {
            return Err(Error::DegenerateFrame { node: z, norm });
        }
        let yz = y.get(z);
        let along: f64 = yz.iter().zip(v).map(|(p, q)| p * q).sum::<f64>() / (norm * norm);
        let tangential: f64 = yz.iter().zip(v).map(|(p, q)| (p - along * q).powi(2)).sum();
        sum += beta.weight(z) * tangential;
    }
    Ok(sum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_are_orthonormal() {
        let u = NodalField::from_values(3, vec![1.0, 0.0, 0.0, 0.3, -0.4, 0.8, 0.0, 0.0, -0.6]).unwrap();
        let f = TangentFrame::new(&u, &[0, 1, 2]).unwrap();
        for k in 0..3 {
            let uz = u.get(k);
            for i in 0..2 {
                let t = f.vector(k, i);
                assert!(t.iter().zip(uz).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-12);
                for j in 0..2 {
                    let d: f64 = t.iter().zip(f.vector(k, j)).map(|(a, b)| a * b).sum();
                    assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
        }
        let u2 = NodalField::from_values(2, vec![0.6, 0.8]).unwrap();
        let f2 = TangentFrame::new(&u2, &[0]).unwrap();
        assert!((f2.vector(0, 0)[0] * 0.6 + f2.vector(0, 0)[1] * 0.8).abs() < 1e-15);
    }

    #[test]
    fn short_vectors_have_no_frame() {
        let u = NodalField::from_values(3, vec![0.2, 0.2, 0.2]).unwrap();
        assert!(matches!(TangentFrame::new(&u, &[0]), Err(Error::DegenerateFrame { node: 0, .. })));
    }
}
