//! Fourier multipliers on the periodic grid.
//!
//! With `x_j = 2πj/M` the coefficients are `ṽ_k = (2π/M) Σ_j e^{-ikx_j} v(x_j)`
//! for `k = -M/2 .. M/2-1`, and the synthesis is `v(x_j) = (1/2π) Σ_k ṽ_k e^{ikx_j}`.
//! The fractional Laplacian of order `s` multiplies `ṽ_k` by `|k|^{2s}`.
//! The Nyquist mode `k = -M/2` keeps its multiplier `(M/2)^{2s}`; its
//! coefficient is real for real data, so the output stays real.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::geometry::{NodalField, PeriodicGrid};

/// Imaginary parts above this (relative to the output size) signal broken
/// conjugate symmetry.
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

/// Fractional order and dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FracParams {
    s: f64,
    d: usize,
    n: usize,
    constant: f64,
}

impl FracParams {
    pub fn new(s: f64, d: usize, n: usize) -> Result<Self> {
        check_order(s)?;
        if d == 0 || d > 3 {
            return Err(invalid("d", format!("spatial dimension must be 1, 2 or 3, got {d}")));
        }
        if n == 0 {
            return Err(invalid("N", "target dimension must be positive"));
        }
        Ok(Self { s, d, n, constant: frac_constant(d, s) })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Normalization `C_{d,s}` of the integral kernel.
    pub fn constant(&self) -> f64 {
        self.constant
    }
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid("s", format!("fractional order must lie in (0, 1), got {s}")));
    }
    Ok(())
}

/// `C_{d,s} = s 2^{2s} Γ((2s+d)/2) / (π^{d/2} Γ(1-s))`.
pub fn frac_constant(d: usize, s: f64) -> f64 {
    let d = d as f64;
    s * 4f64.powf(s) * gamma((2.0 * s + d) / 2.0) / (PI.powf(d / 2.0) * gamma(1.0 - s))
}

/// Signed wavenumber stored at FFT index `idx`.
pub fn wavenumber(idx: usize, m: usize) -> i64 {
    if idx < m / 2 {
        idx as i64
    } else {
        idx as i64 - m as i64
    }
}

/// FFT index holding wavenumber `k`.
fn index_of(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

/// Multiplier `|k|^{2s}` (zero at `k = 0`).
pub fn multiplier(k: i64, s: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        (k.unsigned_abs() as f64).powf(2.0 * s)
    }
}

/// Fourier coefficients of an `N`-vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    m: usize,
    // per component, FFT index order
    coeffs: Vec<Vec<Complex64>>,
}

impl FourierField {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn wavenumbers(&self) -> impl Iterator<Item = i64> {
        let half = (self.m / 2) as i64;
        -half..half
    }

    /// Coefficient `ṽ_k` of component `comp`.
    pub fn coeff(&self, k: i64, comp: usize) -> Complex64 {
        self.coeffs[comp][index_of(k, self.m)]
    }

    pub fn set_coeff(&mut self, k: i64, comp: usize, value: Complex64) {
        let idx = index_of(k, self.m);
        self.coeffs[comp][idx] = value;
    }

    /// Zero coefficients on `M` modes with `N` components.
    pub fn zeros(m: usize, dim: usize) -> Self {
        Self { m, coeffs: vec![vec![Complex64::new(0.0, 0.0); m]; dim] }
    }
}

/// Cached FFT plans for one grid size.
#[derive(Clone)]
pub struct Transform {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("m", &self.m).finish()
    }
}

impl Transform {
    pub fn new(grid: &PeriodicGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m: grid.m(),
            forward: planner.plan_fft_forward(grid.m()),
            inverse: planner.plan_fft_inverse(grid.m()),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn check(&self, v: &NodalField) -> Result<()> {
        if v.num_nodes() != self.m {
            return Err(Error::SizeMismatch { expected: self.m, found: v.num_nodes() });
        }
        Ok(())
    }

    pub fn forward(&self, v: &NodalField) -> Result<FourierField> {
        self.check(v)?;
        let scale = 2.0 * PI / self.m as f64;
        let coeffs = (0..v.dim())
            .map(|c| {
                let mut buf: Vec<Complex64> =
                    v.nodes().map(|x| Complex64::new(x[c], 0.0)).collect();
                self.forward.process(&mut buf);
                buf.iter_mut().for_each(|z| *z *= scale);
                buf
            })
            .collect();
        Ok(FourierField { m: self.m, coeffs })
    }

    pub fn inverse(&self, f: &FourierField) -> Result<NodalField> {
        if f.m != self.m {
            return Err(Error::SizeMismatch { expected: self.m, found: f.m });
        }
        let mut components = Vec::with_capacity(f.dim());
        for coeffs in &f.coeffs {
            let mut buf = coeffs.clone();
            self.inverse.process(&mut buf);
            components.push(real_part(&buf, 1.0 / (2.0 * PI))?);
        }
        NodalField::from_components(&components)
    }

    /// Applies the multiplier `m(k)` to every component.
    pub fn apply_multiplier(&self, v: &NodalField, mult: impl Fn(i64) -> f64) -> Result<NodalField> {
        self.check(v)?;
        let weights: Vec<f64> = (0..self.m).map(|i| mult(wavenumber(i, self.m))).collect();
        let mut out = NodalField::zeros(self.m, v.dim());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        for c in 0..v.dim() {
            for (b, x) in buf.iter_mut().zip(v.nodes()) {
                *b = Complex64::new(x[c], 0.0);
            }
            self.forward.process(&mut buf);
            for (b, w) in buf.iter_mut().zip(&weights) {
                *b *= *w;
            }
            self.inverse.process(&mut buf);
            let re = real_part(&buf, 1.0 / self.m as f64)?;
            for (z, r) in re.into_iter().enumerate() {
                out.get_mut(z)[c] = r;
            }
        }
        Ok(out)
    }
}

fn real_part(buf: &[Complex64], scale: f64) -> Result<Vec<f64>> {
    let size = buf.iter().map(|z| z.re.abs()).fold(1.0, f64::max);
    let residue = buf.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / size;
    if residue > IMAGINARY_TOLERANCE {
        return Err(Error::ImaginaryResidue { residue });
    }
    Ok(buf.iter().map(|z| z.re * scale).collect())
}

/// `(−Δ)^s` on the torus with cached plans and multipliers.
#[derive(Clone, Debug)]
pub struct SpectralLaplacian {
    transform: Transform,
    s: f64,
    weights: Vec<f64>,
}

impl SpectralLaplacian {
    pub fn new(grid: &PeriodicGrid, s: f64) -> Result<Self> {
        check_order(s)?;
        let m = grid.m();
        Ok(Self {
            transform: Transform::new(grid),
            s,
            weights: (0..m).map(|i| multiplier(wavenumber(i, m), s)).collect(),
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn m(&self) -> usize {
        self.transform.m
    }

    pub fn apply(&self, v: &NodalField) -> Result<NodalField> {
        let m = self.transform.m;
        self.transform.apply_multiplier(v, |k| self.weights[index_of(k, m)])
    }

    /// `½ ‖(−Δ)^{s/2} v‖²` via Parseval.
    pub fn energy(&self, v: &NodalField) -> Result<f64> {
        let f = self.transform.forward(v)?;
        Ok(parseval_energy(&f, &self.weights))
    }
}

fn parseval_energy(f: &FourierField, weights: &[f64]) -> f64 {
    let sum: f64 = f
        .coeffs
        .iter()
        .map(|c| c.iter().zip(weights).map(|(z, w)| w * z.norm_sqr()).sum::<f64>())
        .sum();
    0.5 * sum / (2.0 * PI)
}

pub fn dft_forward(v: &NodalField, grid: &PeriodicGrid) -> Result<FourierField> {
    Transform::new(grid).forward(v)
}

pub fn dft_inverse(f: &FourierField, grid: &PeriodicGrid) -> Result<NodalField> {
    Transform::new(grid).inverse(f)
}

/// `(−Δ)_M^s v`.
pub fn frac_laplacian_spectral(v: &NodalField, grid: &PeriodicGrid, s: f64) -> Result<NodalField> {
    SpectralLaplacian::new(grid, s)?.apply(v)
}

/// `½ (1/2π) Σ_k |k|^{2s} |ṽ_k|²`.
pub fn frac_energy(v: &NodalField, grid: &PeriodicGrid, s: f64) -> Result<f64> {
    SpectralLaplacian::new(grid, s)?.energy(v)
}

/// Spectral derivative `d/dx` (the Nyquist mode is dropped).
pub fn spectral_derivative(v: &NodalField, grid: &PeriodicGrid) -> Result<NodalField> {
    let t = Transform::new(grid);
    let mut f = t.forward(v)?;
    let half = (grid.m() / 2) as i64;
    for c in 0..f.dim() {
        for k in -half..half {
            let z = f.coeff(k, c);
            let d = if k == -half { Complex64::new(0.0, 0.0) } else { z * Complex64::new(0.0, k as f64) };
            f.set_coeff(k, c, d);
        }
    }
    t.inverse(&f)
}

/// `H_s(f, φ) = L(fφ) − f Lφ − (Lf)φ` with `L = (−Δ)^{s/2}`.
///
/// `φ` is scalar (applied to every component of `f`) or has as many
/// components as `f` (componentwise products).
pub fn leibniz_defect(f: &NodalField, phi: &NodalField, grid: &PeriodicGrid, s: f64) -> Result<NodalField> {
    check_order(s)?;
    if phi.num_nodes() != f.num_nodes() {
        return Err(Error::SizeMismatch { expected: f.num_nodes(), found: phi.num_nodes() });
    }
    if phi.dim() != 1 && phi.dim() != f.dim() {
        return Err(Error::SizeMismatch { expected: f.dim(), found: phi.dim() });
    }
    let half = SpectralLaplacian::new(grid, s / 2.0)?;
    let phi_at = |z: usize, c: usize| if phi.dim() == 1 { phi.get(z)[0] } else { phi.get(z)[c] };
    let product = NodalField::from_fn(f.num_nodes(), f.dim(), |z, out| {
        for (c, o) in out.iter_mut().enumerate() {
            *o = f.get(z)[c] * phi_at(z, c);
        }
    });
    let l_prod = half.apply(&product)?;
    let l_phi = half.apply(phi)?;
    let l_f = half.apply(f)?;
    Ok(NodalField::from_fn(f.num_nodes(), f.dim(), |z, out| {
        for (c, o) in out.iter_mut().enumerate() {
            let lp = if phi.dim() == 1 { l_phi.get(z)[0] } else { l_phi.get(z)[c] };
            *o = l_prod.get(z)[c] - f.get(z)[c] * lp - l_f.get(z)[c] * phi_at(z, c);
        }
    }))
}

/// Terms of the Leibniz-defect bound for scalar `g` and `φ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefectBound {
    /// `‖H_s(g, φ)‖_{L²}`.
    pub defect: f64,
    /// `(‖φ‖_∞ + ‖φ'‖_∞)(‖g‖_{L²} + ‖(−Δ)^{t/2} g‖_{L²})`, `t = s/2`.
    pub bound: f64,
}

impl DefectBound {
    pub fn ratio(&self) -> f64 {
        self.defect / self.bound
    }
}

pub fn leibniz_defect_bound(g: &NodalField, phi: &NodalField, grid: &PeriodicGrid, s: f64) -> Result<DefectBound> {
    let h = leibniz_defect(g, phi, grid, s)?;
    let l2 = |v: &NodalField| (grid.h() * v.values().iter().map(|x| x * x).sum::<f64>()).sqrt();
    let sup = |v: &NodalField| v.values().iter().map(|x| x.abs()).fold(0.0, f64::max);
    let dphi = spectral_derivative(phi, grid)?;
    let lg = frac_laplacian_spectral(g, grid, s / 4.0)?;
    Ok(DefectBound { defect: l2(&h), bound: (sup(phi) + sup(&dphi)) * (l2(g) + l2(&lg)) })
}

/// Real trigonometric polynomial `Σ_{1≤k≤degree} a_k cos kx + b_k sin kx`
/// (plus `a_0` if `with_mean`) with standard normal coefficients.
pub fn random_trig_poly<R: Rng + ?Sized>(
    grid: &PeriodicGrid,
    degree: usize,
    with_mean: bool,
    rng: &mut R,
) -> Vec<f64> {
    let a0: f64 = if with_mean { rng.sample(StandardNormal) } else { 0.0 };
    let coeffs: Vec<(f64, f64)> =
        (0..degree).map(|_| (rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    grid.nodes()
        .map(|x| {
            a0 + coeffs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let k = (i + 1) as f64;
                    a * (k * x).cos() + b * (k * x).sin()
                })
                .sum::<f64>()
        })
        .collect()
}

/// Direct `O(M²)` evaluation of the defining sums, used to cross-check the FFT path.
pub mod dense {
    use super::*;

    /// `ṽ_k` for `k = -M/2 .. M/2-1`, in that order.
    pub fn forward(v: &[f64]) -> Vec<Complex64> {
        let m = v.len();
        let half = (m / 2) as i64;
        (-half..half)
            .map(|k| {
                let sum: Complex64 = v
                    .iter()
                    .enumerate()
                    .map(|(j, &vj)| {
                        let x = 2.0 * PI * j as f64 / m as f64;
                        Complex64::from_polar(vj, -(k as f64) * x)
                    })
                    .sum();
                sum * (2.0 * PI / m as f64)
            })
            .collect()
    }

    /// `(1/2π) Σ_k c_k e^{ikx_j}` with `c` ordered as in [`forward`]; returns the complex values.
    pub fn inverse(c: &[Complex64]) -> Vec<Complex64> {
        let m = c.len();
        let half = (m / 2) as i64;
        (0..m)
            .map(|j| {
                let x = 2.0 * PI * j as f64 / m as f64;
                let sum: Complex64 = (-half..half)
                    .zip(c)
                    .map(|(k, ck)| ck * Complex64::from_polar(1.0, k as f64 * x))
                    .sum();
                sum / (2.0 * PI)
            })
            .collect()
    }

    /// `(−Δ)_M^s v` for a scalar sequence.
    pub fn frac_laplacian(v: &[f64], s: f64) -> Vec<f64> {
        let half = (v.len() / 2) as i64;
        let c: Vec<Complex64> =
            forward(v).into_iter().zip(-half..half).map(|(z, k)| z * multiplier(k, s)).collect();
        inverse(&c).into_iter().map(|z| z.re).collect()
    }

    /// `H_s(f, φ)` for scalar sequences.
    pub fn leibniz_defect(f: &[f64], phi: &[f64], s: f64) -> Vec<f64> {
        let prod: Vec<f64> = f.iter().zip(phi).map(|(a, b)| a * b).collect();
        let lp = frac_laplacian(&prod, s / 2.0);
        let lphi = frac_laplacian(phi, s / 2.0);
        let lf = frac_laplacian(f, s / 2.0);
        (0..f.len()).map(|j| lp[j] - f[j] * lphi[j] - lf[j] * phi[j]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{lumped_inner, lumped_weights, nodal_interpolation};
    use crate::rng::seeded;

    fn scalar(grid: &PeriodicGrid, f: impl Fn(f64) -> f64) -> NodalField {
        nodal_interpolation(grid, 1, |x, v| v[0] = f(x[0]))
    }

    #[test]
    fn constant_matches_closed_forms() {
        // d = 1, s = 1/2: Γ(1)/(√π Γ(1/2)) · (1/2) · 2 = 1/π
        assert!((frac_constant(1, 0.5) - 1.0 / PI).abs() < 1e-14);
        // d = 2, s = 1/2: (1/2)·2·Γ(3/2)/(π Γ(1/2)) = 1/(2π)
        assert!((frac_constant(2, 0.5) - 0.5 / PI).abs() < 1e-14);
        assert!(FracParams::new(1.0, 1, 3).is_err());
        assert!(FracParams::new(0.0, 1, 3).is_err());
    }

    #[test]
    fn cosine_coefficients() {
        let grid = PeriodicGrid::new(8).unwrap();
        let f = dft_forward(&scalar(&grid, f64::cos), &grid).unwrap();
        let oracle = dense::forward(&scalar(&grid, f64::cos).component(0));
        for (k, o) in f.wavenumbers().zip(&oracle) {
            let z = f.coeff(k, 0);
            assert!((z - o).norm() < 1e-13);
            let expected = if k.abs() == 1 { PI } else { 0.0 };
            assert!((z.re - expected).abs() < 1e-13 && z.im.abs() < 1e-13, "k={k} {z}");
        }
    }

    #[test]
    fn constant_coefficient() {
        let grid = PeriodicGrid::new(8).unwrap();
        let f = dft_forward(&scalar(&grid, |_| 1.5), &grid).unwrap();
        assert!((f.coeff(0, 0).re - 3.0 * PI).abs() < 1e-13);
        for k in f.wavenumbers().filter(|&k| k != 0) {
            assert!(f.coeff(k, 0).norm() < 1e-13);
        }
    }

    #[test]
    fn round_trip() {
        let grid = PeriodicGrid::new(16).unwrap();
        let mut rng = seeded(3);
        let v = NodalField::from_fn(16, 3, |_, out| out.iter_mut().for_each(|o| *o = rng.random::<f64>() - 0.5));
        let back = dft_inverse(&dft_forward(&v, &grid).unwrap(), &grid).unwrap();
        assert!(back.max_abs_diff(&v).unwrap() < 1e-12);
    }

    #[test]
    fn broken_symmetry_is_reported() {
        let grid = PeriodicGrid::new(8).unwrap();
        let mut f = FourierField::zeros(8, 1);
        f.set_coeff(1, 0, Complex64::new(1.0, 0.0));
        assert!(matches!(dft_inverse(&f, &grid), Err(Error::ImaginaryResidue { .. })));
        f.set_coeff(-1, 0, Complex64::new(1.0, 0.0));
        assert!(dft_inverse(&f, &grid).is_ok());
    }

    #[test]
    fn multiplier_examples() {
        let grid = PeriodicGrid::new(32).unwrap();
        let out = frac_laplacian_spectral(&scalar(&grid, |x| (2.0 * x).cos()), &grid, 0.5).unwrap();
        let expected = scalar(&grid, |x| 2.0 * (2.0 * x).cos());
        assert!(out.max_abs_diff(&expected).unwrap() < 1e-13);

        let out = frac_laplacian_spectral(&scalar(&grid, |_| 4.0), &grid, 0.3).unwrap();
        assert!(out.values().iter().all(|v| v.abs() < 1e-13));

        let v = scalar(&grid, |x| (3.0 * x).sin());
        let out = frac_laplacian_spectral(&v, &grid, 0.75).unwrap();
        let oracle = dense::frac_laplacian(&v.component(0), 0.75);
        for (z, o) in out.nodes().zip(&oracle) {
            assert!((z[0] - o).abs() < 1e-12);
        }
        let expected = scalar(&grid, |x| 3f64.powf(1.5) * (3.0 * x).sin());
        assert!(out.max_abs_diff(&expected).unwrap() < 1e-12);
        assert!((3f64.powf(1.5) - 5.19615).abs() < 1e-5);
    }

    #[test]
    fn energies() {
        let grid = PeriodicGrid::new(32).unwrap();
        assert!(frac_energy(&scalar(&grid, |_| 1.0), &grid, 0.5).unwrap().abs() < 1e-14);
        let e = frac_energy(&scalar(&grid, |x| (3.0 * x).sin()), &grid, 0.5).unwrap();
        assert!((e - 1.5 * PI).abs() < 1e-12);
        let v = 0.5f64;
        let a = (1.0 - v * v).sqrt();
        let u0 = nodal_interpolation(&grid, 3, |x, out| out.copy_from_slice(&[v, a * x[0].cos(), a * x[0].sin()]));
        let e = frac_energy(&u0, &grid, 0.5).unwrap();
        assert!((e - 0.75 * PI).abs() < 1e-12);
    }

    #[test]
    fn energy_matches_lumped_product() {
        let grid = PeriodicGrid::new(16).unwrap();
        let w = lumped_weights(&grid).unwrap();
        let mut rng = seeded(11);
        let v = NodalField::from_values(1, random_trig_poly(&grid, 5, true, &mut rng)).unwrap();
        let lv = frac_laplacian_spectral(&v, &grid, 0.4).unwrap();
        let e = frac_energy(&v, &grid, 0.4).unwrap();
        assert!((e - 0.5 * lumped_inner(&lv, &v, &w).unwrap()).abs() < 1e-11 * e);
    }

    #[test]
    fn leibniz_examples() {
        let grid = PeriodicGrid::new(32).unwrap();
        let c = scalar(&grid, |_| 2.0);
        let phi = scalar(&grid, |x| (x.sin()).exp());
        let h = leibniz_defect(&c, &phi, &grid, 0.5).unwrap();
        assert!(h.values().iter().all(|v| v.abs() < 1e-12));
        let h = leibniz_defect(&phi, &c, &grid, 0.5).unwrap();
        assert!(h.values().iter().all(|v| v.abs() < 1e-12));

        let f = scalar(&grid, f64::cos);
        let g = scalar(&grid, f64::sin);
        let h = leibniz_defect(&f, &g, &grid, 0.5).unwrap();
        let oracle = dense::leibniz_defect(&f.component(0), &g.component(0), 0.5);
        for (z, o) in h.nodes().zip(&oracle) {
            assert!((z[0] - o).abs() < 1e-12);
        }
        // cos x sin x = sin(2x)/2, so H = √2 sin(2x)/2 − 2 cos x sin x
        let expected = scalar(&grid, |x| (2f64.sqrt() / 2.0 - 1.0) * (2.0 * x).sin());
        assert!(h.max_abs_diff(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn derivative_of_sine() {
        let grid = PeriodicGrid::new(16).unwrap();
        let d = spectral_derivative(&scalar(&grid, |x| (3.0 * x).sin()), &grid).unwrap();
        assert!(d.max_abs_diff(&scalar(&grid, |x| 3.0 * (3.0 * x).cos())).unwrap() < 1e-12);
    }
}
