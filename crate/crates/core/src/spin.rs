//! Midpoint (Crank–Nicolson) integrator for fractional spin dynamics
//! `∂_t u = −u × (−Δ)^s u` of maps into the unit sphere of ℝ³.
//!
//! One step solves `d_t u = −r × L r` with `r = (u_prev + u_next)/2` by the
//! fixed-point iteration `r^ℓ = u_prev + (τ/2) L r^{ℓ−1} × r^ℓ`, which is a
//! 3×3 linear solve per node with a closed-form inverse.

use crate::error::{invalid, Error, Result};
use crate::fem::{discrete_frac_laplacian, fem_energy, FracStiffness};
use crate::geometry::{max_unit_defect, Discretization, LumpedMass, NodalField, PeriodicGrid};
use crate::rng;
use crate::spectral::{random_trig_poly, SpectralLaplacian};

/// Iterations without a new smallest iterate difference that count as divergence.
pub const NON_CONTRACTION_LIMIT: usize = 5;

/// Discrete fractional Laplacian driving the dynamics.
#[derive(Clone, Debug)]
pub enum SpinBackend {
    /// Fourier multiplier `|k|^{2s}` on the periodic grid.
    Spectral { op: SpectralLaplacian, weights: LumpedMass },
    /// `(A w)(z)/β_z` at interior mesh nodes; other nodes stay fixed.
    Fem { a: FracStiffness, beta: LumpedMass },
}

impl SpinBackend {
    pub fn spectral(grid: &PeriodicGrid, s: f64) -> Result<Self> {
        Ok(Self::Spectral { op: SpectralLaplacian::new(grid, s)?, weights: grid.lumped_weights()? })
    }

    pub fn fem(a: FracStiffness, beta: LumpedMass) -> Result<Self> {
        if beta.len() != a.n() {
            return Err(Error::SizeMismatch { expected: a.n(), found: beta.len() });
        }
        Ok(Self::Fem { a, beta })
    }

    pub fn num_nodes(&self) -> usize {
        self.weights().len()
    }

    pub fn weights(&self) -> &LumpedMass {
        match self {
            Self::Spectral { weights, .. } => weights,
            Self::Fem { beta, .. } => beta,
        }
    }

    pub fn apply(&self, u: &NodalField) -> Result<NodalField> {
        match self {
            Self::Spectral { op, .. } => op.apply(u),
            Self::Fem { a, beta } => discrete_frac_laplacian(u, a, beta),
        }
    }

    /// `½ ‖(−Δ)^{s/2} u‖²` in the backend's discretization.
    pub fn energy(&self, u: &NodalField) -> Result<f64> {
        match self {
            Self::Spectral { op, .. } => op.energy(u),
            Self::Fem { a, .. } => fem_energy(u, a),
        }
    }

    /// `L²_h` norm over the constrained nodes.
    pub fn norm(&self, v: &NodalField) -> f64 {
        let w = self.weights();
        w.constrained_nodes()
            .map(|z| w.weight(z) * v.get(z).iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct SpinConfig {
    pub tau: f64,
    /// Bound on `‖r^ℓ − r^{ℓ−1}‖_h` that ends the fixed-point loop.
    pub tol: f64,
    pub max_iters: usize,
    pub backend: SpinBackend,
}

impl SpinConfig {
    /// Defaults: tolerance `τ²`, at most 100 fixed-point iterations.
    pub fn new(tau: f64, backend: SpinBackend) -> Result<Self> {
        let cfg = Self { tau, tol: tau * tau, max_iters: 100, backend };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Result<Self> {
        self.tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Result<Self> {
        self.max_iters = max_iters;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(invalid("tau", format!("time step must be positive, got {}", self.tau)));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", format!("fixed-point tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinStepReport {
    pub iterations: usize,
    /// `‖r^ℓ − r^{ℓ−1}‖_h` for `ℓ = 1, …, iterations`.
    pub differences: Vec<f64>,
    /// Largest `| |u_next(z)| − 1 |`.
    pub unit_defect: f64,
    pub energy_before: f64,
    pub energy_after: f64,
}

impl SpinStepReport {
    pub fn final_difference(&self) -> f64 {
        self.differences.last().copied().unwrap_or(0.0)
    }

    /// Largest ratio of consecutive iterate differences, ignoring pairs
    /// whose first member is already at rounding level.
    pub fn contraction_ratio(&self) -> Option<f64> {
        self.differences
            .windows(2)
            .filter(|w| w[0] > 1e-14)
            .map(|w| w[1] / w[0])
            .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
    }
}

/// `r` with `r − c (w × r) = u`.
#[inline]
fn midpoint_solve(u: &[f64], w: &[f64], c: f64, r: &mut [f64]) {
    let wu = [w[1] * u[2] - w[2] * u[1], w[2] * u[0] - w[0] * u[2], w[0] * u[1] - w[1] * u[0]];
    let wdotu = w[0] * u[0] + w[1] * u[1] + w[2] * u[2];
    let ww = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    let den = 1.0 + c * c * ww;
    for i in 0..3 {
        r[i] = (u[i] + c * wu[i] + c * c * w[i] * wdotu) / den;
    }
}

fn step_signed(u_prev: &NodalField, tau: f64, cfg: &SpinConfig) -> Result<(NodalField, SpinStepReport)> {
    if u_prev.dim() != 3 {
        return Err(invalid("u", format!("spin dynamics needs 3 components, got {}", u_prev.dim())));
    }
    let backend = &cfg.backend;
    if u_prev.num_nodes() != backend.num_nodes() {
        return Err(Error::SizeMismatch { expected: backend.num_nodes(), found: u_prev.num_nodes() });
    }
    let c = 0.5 * tau;
    let mut r = u_prev.clone();
    let mut next = u_prev.clone();
    let mut differences = Vec::new();
    // iterations since the smallest difference so far
    let mut stalled = 0;
    let mut best = f64::INFINITY;
    loop {
        let w = backend.apply(&r)?;
        for z in 0..u_prev.num_nodes() {
            midpoint_solve(u_prev.get(z), w.get(z), c, next.get_mut(z));
        }
        let delta = next.add_scaled(-1.0, &r)?;
        let diff = backend.norm(&delta);
        std::mem::swap(&mut r, &mut next);
        if diff < best {
            best = diff;
            stalled = 0;
        } else {
            stalled += 1;
        }
        differences.push(diff);
        if diff <= cfg.tol {
            break;
        }
        if stalled >= NON_CONTRACTION_LIMIT {
            return Err(Error::NotContracting { iterations: differences.len(), difference: diff });
        }
        if differences.len() >= cfg.max_iters {
            return Err(Error::MaxIterations { max_iters: cfg.max_iters, difference: diff });
        }
    }
    let u_next = r.scaled(2.0).add_scaled(-1.0, u_prev)?;
    let report = SpinStepReport {
        iterations: differences.len(),
        differences,
        unit_defect: max_unit_defect(&u_next, backend.weights()),
        energy_before: backend.energy(u_prev)?,
        energy_after: backend.energy(&u_next)?,
    };
    Ok((u_next, report))
}

/// One midpoint step of length `cfg.tau`.
pub fn spin_step(u_prev: &NodalField, cfg: &SpinConfig) -> Result<(NodalField, SpinStepReport)> {
    cfg.validate()?;
    step_signed(u_prev, cfg.tau, cfg)
}

/// One midpoint step of length `−cfg.tau`; inverts [`spin_step`] up to the solver tolerance.
pub fn spin_step_backward(u_next: &NodalField, cfg: &SpinConfig) -> Result<(NodalField, SpinStepReport)> {
    cfg.validate()?;
    step_signed(u_next, -cfg.tau, cfg)
}

/// Number of steps `K = ⌈T/τ⌉`, insensitive to rounding when `T/τ` is an integer.
pub fn num_steps(t_end: f64, tau: f64) -> usize {
    let q = t_end / tau;
    let nearest = q.round();
    if (q - nearest).abs() <= 1e-9 * q.max(1.0) {
        nearest as usize
    } else {
        q.ceil() as usize
    }
}

/// Per-step history of a spin run.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinTrace {
    pub tau: f64,
    pub initial_energy: f64,
    /// `E^k` for `k = 1, …, K`.
    pub energies: Vec<f64>,
    pub unit_defects: Vec<f64>,
    pub fp_iters: Vec<usize>,
    /// Largest contraction ratio of each step, if it had two or more iterations.
    pub contraction: Vec<Option<f64>>,
}

impl SpinTrace {
    /// `max_k |E^k − E^0| / E^0`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.initial_energy;
        self.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs().max(f64::MIN_POSITIVE)
    }

    pub fn max_unit_defect(&self) -> f64 {
        self.unit_defects.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_fp_iters(&self) -> usize {
        self.fp_iters.iter().copied().max().unwrap_or(0)
    }

    pub fn median_fp_iters(&self) -> f64 {
        let mut v = self.fp_iters.clone();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_unstable();
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2] as f64
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2]) as f64
        }
    }

    pub fn conservation(&self) -> ConservationReport {
        ConservationReport {
            energy_drift: self.energy_drift(),
            max_unit_defect: self.max_unit_defect(),
            max_fp_iters: self.max_fp_iters(),
        }
    }

    /// `k,t,energy,unit_defect,fp_iters`, starting with `k = 0`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("k,t,energy,unit_defect,fp_iters\n");
        let _ = writeln!(out, "0,0.0,{:?},0.0,0", self.initial_energy);
        for (i, e) in self.energies.iter().enumerate() {
            let k = i + 1;
            let _ =
                writeln!(out, "{k},{:?},{e:?},{:?},{}", k as f64 * self.tau, self.unit_defects[i], self.fp_iters[i]);
        }
        out
    }
}

/// Summary of the conserved quantities of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservationReport {
    pub energy_drift: f64,
    pub max_unit_defect: f64,
    pub max_fp_iters: usize,
}

impl ConservationReport {
    pub fn to_json(&self) -> String {
        format!(
            "{{\"energy_drift\":{:?},\"max_unit_defect\":{:?},\"max_fp_iters\":{}}}",
            self.energy_drift, self.max_unit_defect, self.max_fp_iters
        )
    }
}

/// Runs `⌈T/τ⌉` steps and returns the final state.
pub fn run_spin(u0: &NodalField, t_end: f64, cfg: &SpinConfig) -> Result<(NodalField, SpinTrace)> {
    run_spin_with(u0, t_end, cfg, |_, _| Ok(()))
}

/// Same as [`run_spin`]; `observe(k, u^k)` runs for `k = 0, …, K`.
pub fn run_spin_with(
    u0: &NodalField,
    t_end: f64,
    cfg: &SpinConfig,
    mut observe: impl FnMut(usize, &NodalField) -> Result<()>,
) -> Result<(NodalField, SpinTrace)> {
    cfg.validate()?;
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(invalid("T", format!("final time must be non-negative, got {t_end}")));
    }
    let steps = num_steps(t_end, cfg.tau);
    let mut trace = SpinTrace {
        tau: cfg.tau,
        initial_energy: cfg.backend.energy(u0)?,
        energies: Vec::with_capacity(steps),
        unit_defects: Vec::with_capacity(steps),
        fp_iters: Vec::with_capacity(steps),
        contraction: Vec::with_capacity(steps),
    };
    observe(0, u0)?;
    let mut u = u0.clone();
    for k in 1..=steps {
        let (next, report) = step_signed(&u, cfg.tau, cfg)?;
        u = next;
        trace.energies.push(report.energy_after);
        trace.unit_defects.push(report.unit_defect);
        trace.fp_iters.push(report.iterations);
        trace.contraction.push(report.contraction_ratio());
        observe(k, &u)?;
    }
    Ok((u, trace))
}

/// `u⁰(x) = (v, √(1−v²) cos x, √(1−v²) sin x)`.
pub fn make_traveling_wave(grid: &PeriodicGrid, v: f64) -> Result<NodalField> {
    if !(v.abs() < 1.0) {
        return Err(invalid("v", format!("speed must satisfy |v| < 1, got {v}")));
    }
    Ok(traveling_wave_at(grid, v, 0.0))
}

/// Exact traveling-wave solution `u⁰(x − vt)`.
pub fn traveling_wave_at(grid: &PeriodicGrid, v: f64, t: f64) -> NodalField {
    let a = (1.0 - v * v).sqrt();
    NodalField::from_fn(grid.m(), 3, |j, out| {
        let x = grid.node(j) - v * t;
        out.copy_from_slice(&[v, a * x.cos(), a * x.sin()]);
    })
}

/// Degree of the random trigonometric perturbation.
pub const PERTURBATION_DEGREE: usize = 4;

/// Default perturbation size `‖ξ‖_∞`.
pub const DEFAULT_AMPLITUDE: f64 = 0.05;

/// `Π[(0, cos x, sin x) + ξ]` with a seeded random trigonometric `ξ`
/// scaled to `max_x |ξ(x)| = amplitude`.
pub fn make_perturbed_map(grid: &PeriodicGrid, seed: u64, amplitude: f64) -> Result<NodalField> {
    if !(0.0..=0.5).contains(&amplitude) {
        return Err(invalid("amplitude", format!("must lie in [0, 1/2], got {amplitude}")));
    }
    let mut rng = rng::seeded(seed);
    let xi: Vec<Vec<f64>> = (0..3).map(|_| random_trig_poly(grid, PERTURBATION_DEGREE, true, &mut rng)).collect();
    let size = (0..grid.m())
        .map(|j| (xi[0][j].powi(2) + xi[1][j].powi(2) + xi[2][j].powi(2)).sqrt())
        .fold(0.0, f64::max);
    let scale = if size > 0.0 { amplitude / size } else { 0.0 };
    let raw = NodalField::from_fn(grid.m(), 3, |j, out| {
        let x = grid.node(j);
        out[0] = scale * xi[0][j];
        out[1] = x.cos() + scale * xi[1][j];
        out[2] = x.sin() + scale * xi[2][j];
    });
    crate::geometry::project_sphere(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_solve_inverts_the_skew_system() {
        let u = [0.3, -0.5, 0.81];
        let w = [2.0, -1.0, 0.5];
        let c = 0.37;
        let mut r = [0.0; 3];
        midpoint_solve(&u, &w, c, &mut r);
        let wr = [w[1] * r[2] - w[2] * r[1], w[2] * r[0] - w[0] * r[2], w[0] * r[1] - w[1] * r[0]];
        for i in 0..3 {
            assert!((r[i] - c * wr[i] - u[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn step_count_is_robust_to_rounding() {
        let h = 2.0 * std::f64::consts::PI / 32.0;
        assert_eq!(num_steps(4.0 * std::f64::consts::PI, h / 10.0), 640);
        assert_eq!(num_steps(1.0, 0.3), 4);
        assert_eq!(num_steps(0.0, 0.3), 0);
    }
}
