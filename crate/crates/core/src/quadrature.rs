//! Gauss–Legendre rules and collapsed product rules on the reference triangle.

use std::f64::consts::PI;

/// Gauss–Legendre rule on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point rule, exact for polynomials of degree `2n − 1`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "a Gauss rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            // Newton on P_n starting from the Chebyshev-like guess
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] to [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let len = b - a;
        self.iter().map(|(x, w)| w * f(a + len * x)).sum::<f64>() * len
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Quadrature on the reference triangle `{(u, v) : u, v ≥ 0, u + v ≤ 1}` with
/// weights summing to 1/2.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed (Stroud) product of two `n`-point Gauss rules.
    pub fn collapsed(n: usize) -> Self {
        let g = GaussRule::new(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (a, wa) in g.iter() {
            for (b, wb) in g.iter() {
                points.push([a, b * (1.0 - a)]);
                weights.push(wa * wb * (1.0 - a));
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights at GK_NODES[1], [3], [5], [7]
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for the adaptive integrators. A piece is accepted when its error
/// estimate is below `max(abs, rel · |piece|)` or at `max_depth`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adaptive {
    pub abs: f64,
    pub rel: f64,
    pub max_depth: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self { abs: 1e-14, rel: 1e-11, max_depth: 40 }
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn gk15(f: &mut impl FnMut(f64, &mut [f64]), a: f64, b: f64, m: usize, kronrod: &mut [f64], gauss: &mut [f64]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut val = vec![0.0; m];
    kronrod.iter_mut().for_each(|v| *v = 0.0);
    gauss.iter_mut().for_each(|v| *v = 0.0);
    for (i, (&x, &wk)) in GK_NODES.iter().zip(&GK_WEIGHTS).enumerate() {
        let signs: &[f64] = if x == 0.0 { &[1.0] } else { &[1.0, -1.0] };
        for &sg in signs {
            f(c + sg * h * x, &mut val);
            for j in 0..m {
                kronrod[j] += wk * h * val[j];
                if i % 2 == 1 {
                    gauss[j] += G7_WEIGHTS[i / 2] * h * val[j];
                }
            }
        }
    }
}

/// Adaptive Gauss–Kronrod (7/15) integration of a vector-valued function on `[a, b]`.
pub fn adaptive_gk(mut f: impl FnMut(f64, &mut [f64]), a: f64, b: f64, m: usize, tol: Adaptive) -> Vec<f64> {
    let mut out = vec![0.0; m];
    if a == b {
        return out;
    }
    let mut k = vec![0.0; m];
    let mut g = vec![0.0; m];
    gk15(&mut f, a, b, m, &mut k, &mut g);
    gk_recurse(&mut f, a, b, m, tol, 0, k, &g, &mut out);
    out
}

struct Piece {
    err: f64,
    a: f64,
    b: f64,
    depth: usize,
    value: Vec<f64>,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod: always bisects the piece with the largest
/// error estimate until the summed estimate is below `max(abs, rel·|I|)`.
/// Pieces at `max_depth` are frozen; at most `max_pieces` pieces are kept.
pub fn global_gk(
    mut f: impl FnMut(f64, &mut [f64]),
    a: f64,
    b: f64,
    m: usize,
    tol: Adaptive,
    max_pieces: usize,
) -> Vec<f64> {
    let mut total = vec![0.0; m];
    if a == b {
        return total;
    }
    let mut k = vec![0.0; m];
    let mut g = vec![0.0; m];
    let mut eval = |f: &mut dyn FnMut(f64, &mut [f64]), lo: f64, hi: f64, depth: usize| {
        let mut ff = |x: f64, v: &mut [f64]| f(x, v);
        gk15(&mut ff, lo, hi, m, &mut k, &mut g);
        let err = k.iter().zip(&g).fold(0.0, |e: f64, (x, y)| e.max((x - y).abs()));
        Piece { err, a: lo, b: hi, depth, value: k.clone() }
    };
    let mut heap = std::collections::BinaryHeap::new();
    let mut frozen = vec![0.0; m];
    let mut err_sum;
    let root = eval(&mut f, a, b, 0);
    total.copy_from_slice(&root.value);
    err_sum = root.err;
    heap.push(root);
    while err_sum > tol.abs.max(tol.rel * sup(&total)) && heap.len() < max_pieces {
        let Some(worst) = heap.pop() else { break };
        if worst.depth >= tol.max_depth {
            frozen.iter_mut().zip(&worst.value).for_each(|(o, v)| *o += v);
            err_sum -= worst.err;
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = eval(&mut f, worst.a, mid, worst.depth + 1);
        let right = eval(&mut f, mid, worst.b, worst.depth + 1);
        for j in 0..m {
            total[j] += left.value[j] + right.value[j] - worst.value[j];
        }
        err_sum += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn gk_recurse(
    f: &mut impl FnMut(f64, &mut [f64]),
    a: f64,
    b: f64,
    m: usize,
    tol: Adaptive,
    depth: usize,
    kronrod: Vec<f64>,
    gauss: &[f64],
    out: &mut [f64],
) {
    let err = kronrod.iter().zip(gauss).fold(0.0, |e: f64, (k, g)| e.max((k - g).abs()));
    if err <= tol.abs.max(tol.rel * sup(&kronrod)) || depth >= tol.max_depth {
        out.iter_mut().zip(&kronrod).for_each(|(o, k)| *o += k);
        return;
    }
    let mid = 0.5 * (a + b);
    let sub = Adaptive { abs: 0.5 * tol.abs, ..tol };
    for (lo, hi) in [(a, mid), (mid, b)] {
        let mut k = vec![0.0; m];
        let mut g = vec![0.0; m];
        gk15(f, lo, hi, m, &mut k, &mut g);
        gk_recurse(f, lo, hi, m, sub, depth + 1, k, &g, out);
    }
}

/// Adaptive integration of a vector-valued function over a physical triangle
/// by recursive four-way subdivision; the error estimate compares a piece
/// with the sum over its children.
pub fn adaptive_triangle(
    mut f: impl FnMut([f64; 2], &mut [f64]),
    tri: [[f64; 2]; 3],
    m: usize,
    rule: &TriangleRule,
    tol: Adaptive,
) -> Vec<f64> {
    let mut out = vec![0.0; m];
    let root = triangle_rule_apply(&mut f, &tri, m, rule);
    tri_recurse(&mut f, tri, m, rule, tol, 0, root, &mut out);
    out
}

fn triangle_rule_apply(
    f: &mut impl FnMut([f64; 2], &mut [f64]),
    t: &[[f64; 2]; 3],
    m: usize,
    rule: &TriangleRule,
) -> Vec<f64> {
    let e1 = [t[1][0] - t[0][0], t[1][1] - t[0][1]];
    let e2 = [t[2][0] - t[0][0], t[2][1] - t[0][1]];
    let jac = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
    let mut acc = vec![0.0; m];
    let mut val = vec![0.0; m];
    for (p, w) in rule.iter() {
        let x = [t[0][0] + p[0] * e1[0] + p[1] * e2[0], t[0][1] + p[0] * e1[1] + p[1] * e2[1]];
        f(x, &mut val);
        for j in 0..m {
            acc[j] += w * jac * val[j];
        }
    }
    acc
}

pub(crate) fn split_triangle(t: &[[f64; 2]; 3]) -> [[[f64; 2]; 3]; 4] {
    let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let m01 = mid(t[0], t[1]);
    let m12 = mid(t[1], t[2]);
    let m20 = mid(t[2], t[0]);
    [[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m12, m20, m01]]
}

#[allow(clippy::too_many_arguments)]
fn tri_recurse(
    f: &mut impl FnMut([f64; 2], &mut [f64]),
    t: [[f64; 2]; 3],
    m: usize,
    rule: &TriangleRule,
    tol: Adaptive,
    depth: usize,
    value: Vec<f64>,
    out: &mut [f64],
) {
    if depth >= tol.max_depth {
        out.iter_mut().zip(&value).for_each(|(o, v)| *o += v);
        return;
    }
    let children = split_triangle(&t);
    let vals: Vec<Vec<f64>> = children.iter().map(|c| triangle_rule_apply(f, c, m, rule)).collect();
    let mut sum = vec![0.0; m];
    for v in &vals {
        sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
    }
    let err = sum.iter().zip(&value).fold(0.0, |e: f64, (a, b)| e.max((a - b).abs()));
    if err <= tol.abs.max(tol.rel * sup(&sum)) {
        out.iter_mut().zip(&sum).for_each(|(o, s)| *o += s);
        return;
    }
    let sub = Adaptive { abs: 0.25 * tol.abs, ..tol };
    for (c, v) in children.into_iter().zip(vals) {
        tri_recurse(f, c, m, rule, sub, depth + 1, v, out);
    }
}

/// `∫_{r0}^{r1} r^p dr` for `0 ≤ r0 ≤ r1`, including the logarithmic case.
pub fn power_integral(p: f64, r0: f64, r1: f64) -> f64 {
    if r1 <= r0 {
        return 0.0;
    }
    let q = p + 1.0;
    if r0 == 0.0 {
        return r1.powf(q) / q;
    }
    let l = (r1 / r0).ln();
    if q == 0.0 {
        l
    } else {
        r0.powf(q) * (q * l).exp_m1() / q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_monomials() {
        for n in 1..=20 {
            let g = GaussRule::new(n);
            for k in 0..2 * n {
                let q: f64 = g.iter().map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = 1.0 / (k as f64 + 1.0);
                assert!((q - exact).abs() < 1e-14, "n={n} k={k} q={q}");
            }
        }
    }

    #[test]
    fn gauss_nodes_sorted_inside() {
        let g = GaussRule::new(9);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes[0] > 0.0 && g.nodes[8] < 1.0);
        assert!((g.nodes[4] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn power_integrals() {
        assert!((power_integral(-1.0, 1.0, 2.0_f64.exp()) - 2.0).abs() < 1e-14);
        assert!((power_integral(1.0, 0.0, 2.0) - 2.0).abs() < 1e-14);
        assert!((power_integral(-2.0, 1.0, 2.0) - 0.5).abs() < 1e-14);
        // nearly logarithmic exponent stays accurate
        let p = -1.0 + 1e-9;
        assert!((power_integral(p, 1.0, 2.0) - 2f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn kronrod_rule_exactness() {
        // the 15-point rule integrates degree 22, the embedded 7-point rule degree 13
        for k in 0..=22 {
            let mut kr = vec![0.0];
            let mut ga = vec![0.0];
            gk15(&mut |x, v: &mut [f64]| v[0] = x.powi(k), -1.0, 1.0, 1, &mut kr, &mut ga);
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((kr[0] - exact).abs() < 1e-14, "k={k}");
            if k <= 13 {
                assert!((ga[0] - exact).abs() < 1e-14, "k={k}");
            }
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let tol = Adaptive { abs: 1e-13, rel: 1e-12, max_depth: 60 };
        let v = adaptive_gk(|x, out| out[0] = x.powf(-0.5), 0.0, 1.0, 1, tol);
        assert!((v[0] - 2.0).abs() < 1e-8, "{}", v[0]);
    }

    #[test]
    fn adaptive_triangle_kink() {
        // ∫ |x - y| over the unit right triangle = 1/6 by symmetry splitting
        let rule = TriangleRule::collapsed(3);
        let tol = Adaptive { abs: 1e-13, rel: 1e-12, max_depth: 12 };
        let v = adaptive_triangle(|p, out| out[0] = (p[0] - p[1]).abs(), [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 1, &rule, tol);
        assert!((v[0] - 1.0 / 6.0).abs() < 1e-9, "{}", v[0]);
    }

    #[test]
    fn triangle_integrates_monomials() {
        // ∫_K u^a v^b = a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        let t = TriangleRule::collapsed(5);
        for a in 0..5u32 {
            for b in 0..(5 - a) {
                let q: f64 = t.iter().map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-15, "a={a} b={b}");
            }
        }
    }
}
