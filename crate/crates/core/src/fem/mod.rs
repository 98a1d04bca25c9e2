//! Galerkin discretization of the integral fractional Laplacian with P1
//! elements on the extended domain.
//!
//! The stiffness matrix represents
//! `a(f, g) = (C/2) ∬_{Ω̃×Ω̃} (f(x)−f(y))(g(x)−g(y)) |x−y|^{-d-2s} + C ∫_{Ω̃} f g κ`
//! with `κ(x) = ∫_{ℝ^d∖Ω̃} |x−y|^{-d-2s} dy`, i.e. the full-space form for
//! functions vanishing outside Ω̃. In one dimension `κ` is exact; in two
//! dimensions it is replaced by `(π/s) δ(x)^{-2s}`, `δ` the distance to the
//! boundary of the meshed region, which overestimates the exterior
//! interaction. Rows and columns of outer-boundary nodes are zeroed.

mod complement;
mod dirichlet;
pub mod oracle;
pub mod p1;
mod pairs;
mod probe;
mod simplex;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Discretization, LumpedMass, NodalField, NodeClass, SimplicialMesh};
use crate::spectral::FracParams;

pub use dirichlet::{dirichlet_spectral_power, DirichletSpectralOp};
pub use probe::{inverse_estimate_probe, InverseEstimate};

use pairs::{Local, Rules};
use simplex::Simplex;

/// Smallest admissible order of the touching-pair rules.
pub const MIN_SING_ORDER: usize = 3;

/// Quadrature orders for element pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss order of the face rules for cells that share a vertex or edge.
    pub q_sing: usize,
    /// Minimum Gauss order for separated cells.
    pub q_far: usize,
    /// Target relative accuracy used to raise the order of close separated pairs.
    pub far_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { q_sing: 12, q_far: 3, far_tol: 1e-8 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.q_sing < MIN_SING_ORDER {
            return Err(Error::QuadratureOrder { rule: "touching pairs", order: self.q_sing, minimum: MIN_SING_ORDER });
        }
        if self.q_far < 1 {
            return Err(Error::QuadratureOrder { rule: "separated pairs", order: self.q_far, minimum: 1 });
        }
        if self.q_sing > pairs::MAX_ORDER || self.q_far > pairs::MAX_ORDER {
            return Err(invalid("quadrature", format!("orders above {} are not supported", pairs::MAX_ORDER)));
        }
        if !(self.far_tol > 0.0 && self.far_tol < 1.0) {
            return Err(invalid("far_tol", format!("must lie in (0, 1), got {}", self.far_tol)));
        }
        Ok(())
    }
}

/// Assembled stiffness matrix in mesh node order.
#[derive(Clone, Debug)]
pub struct FracStiffness {
    matrix: DMatrix<f64>,
    params: FracParams,
    quad: QuadratureSpec,
    classes: Vec<NodeClass>,
    truncation_radius: f64,
}

impl FracStiffness {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn params(&self) -> &FracParams {
        &self.params
    }

    pub fn s(&self) -> f64 {
        self.params.s()
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.classes
    }

    /// Largest distance of a mesh node from the origin.
    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    fn check(&self, u: &NodalField) -> Result<()> {
        if u.num_nodes() != self.n() {
            return Err(Error::SizeMismatch { expected: self.n(), found: u.num_nodes() });
        }
        Ok(())
    }

    /// `A u` applied to every component.
    pub fn apply(&self, u: &NodalField) -> Result<NodalField> {
        self.check(u)?;
        let n = self.n();
        let dim = u.dim();
        let mut out = NodalField::zeros(n, dim);
        let vals = u.values();
        let res = out.values_mut();
        for w in 0..n {
            let col = self.matrix.column(w);
            let uw = &vals[w * dim..(w + 1) * dim];
            if uw.iter().all(|&x| x == 0.0) {
                continue;
            }
            for (z, a) in col.iter().enumerate() {
                if *a != 0.0 {
                    for c in 0..dim {
                        res[z * dim + c] += a * uw[c];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `a(u, v) = Σ_c u_cᵀ A v_c`.
    pub fn bilinear(&self, u: &NodalField, v: &NodalField) -> Result<f64> {
        u.check_same_shape(v)?;
        let av = self.apply(v)?;
        Ok(u.values().iter().zip(av.values()).map(|(a, b)| a * b).sum())
    }
}

/// Zeroes rows and columns of outer-boundary nodes.
pub(crate) fn eliminate_outer(mesh: &SimplicialMesh, a: &mut DMatrix<f64>) {
    for z in mesh.nodes_of_class(NodeClass::OuterBoundary) {
        a.row_mut(z).fill(0.0);
        a.column_mut(z).fill(0.0);
    }
}

fn check_mesh(mesh: &SimplicialMesh, params: &FracParams) -> Result<()> {
    if params.d() != mesh.dim() {
        return Err(invalid("d", format!("parameters are for d = {}, mesh has d = {}", params.d(), mesh.dim())));
    }
    Ok(())
}

enum PairKind {
    Identical,
    // reordered cells and union node ids
    Vertex(Simplex, Simplex, Vec<usize>),
    Edge(Simplex, Simplex, Vec<usize>),
    Far(Vec<usize>),
}

fn classify(mesh: &SimplicialMesh, i: usize, j: usize) -> PairKind {
    if i == j {
        return PairKind::Identical;
    }
    let a = mesh.cell(i);
    let b = mesh.cell(j);
    let shared: Vec<usize> = a.iter().copied().filter(|v| b.contains(v)).collect();
    let pts = |ids: &[usize]| -> Vec<[f64; 2]> { ids.iter().map(|&v| mesh.vertices()[v]).collect() };
    match shared.len() {
        0 => PairKind::Far(a.iter().chain(b).copied().collect()),
        1 => {
            let o = shared[0];
            let mut ta = vec![o];
            ta.extend(a.iter().copied().filter(|&v| v != o));
            let mut tb = vec![o];
            tb.extend(b.iter().copied().filter(|&v| v != o));
            let mut nodes = ta.clone();
            nodes.extend_from_slice(&tb[1..]);
            PairKind::Vertex(Simplex::new(&pts(&ta)), Simplex::new(&pts(&tb)), nodes)
        }
        2 => {
            let (o, p) = (shared[0], shared[1]);
            let q = *a.iter().find(|v| !shared.contains(v)).unwrap();
            let qp = *b.iter().find(|v| !shared.contains(v)).unwrap();
            PairKind::Edge(
                Simplex::new(&pts(&[o, p, q])),
                Simplex::new(&pts(&[o, p, qp])),
                vec![o, p, q, qp],
            )
        }
        _ => unreachable!("distinct conforming cells share at most a facet"),
    }
}

fn pair_local(
    mesh: &SimplicialMesh,
    cells: &[Simplex],
    i: usize,
    j: usize,
    s: f64,
    quad: &QuadratureSpec,
    rules: &Rules,
) -> (Local, Vec<usize>, f64) {
    match classify(mesh, i, j) {
        PairKind::Identical => (pairs::identical(&cells[i], s, rules, quad.q_sing), mesh.cell(i).to_vec(), 0.5),
        PairKind::Vertex(t, tp, nodes) => (pairs::vertex(&t, &tp, s, rules, quad.q_sing), nodes, 1.0),
        PairKind::Edge(t, tp, nodes) => (pairs::edge(&t, &tp, s, rules, quad.q_sing), nodes, 1.0),
        PairKind::Far(nodes) => {
            (pairs::far(&cells[i], &cells[j], s, rules, quad.q_far, quad.far_tol), nodes, 1.0)
        }
    }
}

// Fixed number of row blocks; the reduction order depends on it, not on the thread count.
const CHUNKS: usize = 64;

fn chunk_bounds(nc: usize) -> Vec<(usize, usize)> {
    let total = nc * (nc + 1) / 2;
    let target = total.div_ceil(CHUNKS).max(1);
    let mut bounds = Vec::new();
    let mut start = 0;
    let mut acc = 0;
    for i in 0..nc {
        acc += nc - i;
        if acc >= target || i + 1 == nc {
            bounds.push((start, i + 1));
            start = i + 1;
            acc = 0;
        }
    }
    bounds
}

/// `(C_{d,s}/2) ∬_{Ω̃×Ω̃}` part for all node pairs, without elimination.
pub fn assemble_double_integral(mesh: &SimplicialMesh, params: &FracParams, quad: &QuadratureSpec) -> Result<DMatrix<f64>> {
    check_mesh(mesh, params)?;
    quad.validate()?;
    let n = mesh.num_nodes();
    let nc = mesh.num_cells();
    let cells: Vec<Simplex> = (0..nc).map(|c| Simplex::new(&mesh.cell_points(c))).collect();
    let rules = Rules::new();
    let s = params.s();
    let c = params.constant();
    let bounds = chunk_bounds(nc);
    let wave = rayon::current_num_threads().max(1);
    let mut a = DMatrix::zeros(n, n);
    for group in bounds.chunks(wave) {
        let parts: Vec<DMatrix<f64>> = group
            .par_iter()
            .map(|&(lo, hi)| {
                let mut acc = DMatrix::zeros(n, n);
                for i in lo..hi {
                    for j in i..nc {
                        let (local, nodes, factor) = pair_local(mesh, &cells, i, j, s, quad, &rules);
                        for (p, &zp) in nodes.iter().enumerate() {
                            for (q, &zq) in nodes.iter().enumerate() {
                                acc[(zp, zq)] += factor * c * local.get(p, q);
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        for part in parts {
            a += part;
        }
    }
    // exact symmetry regardless of rounding in the local rules
    let at = a.transpose();
    a = (a + at) * 0.5;
    Ok(a)
}

/// `C_{d,s} ∫_{Ω̃} φ_z φ_w κ` for nodes off the outer boundary.
pub fn assemble_complement(mesh: &SimplicialMesh, params: &FracParams) -> Result<DMatrix<f64>> {
    check_mesh(mesh, params)?;
    complement::assemble(mesh, params)
}

/// Full stiffness matrix with outer-boundary rows and columns eliminated.
pub fn assemble_fractional_stiffness(
    mesh: &SimplicialMesh,
    params: &FracParams,
    quad: &QuadratureSpec,
) -> Result<FracStiffness> {
    let mut a = assemble_double_integral(mesh, params, quad)? + assemble_complement(mesh, params)?;
    eliminate_outer(mesh, &mut a);
    let truncation_radius = mesh.vertices().iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
    Ok(FracStiffness { matrix: a, params: *params, quad: *quad, classes: mesh.classes().to_vec(), truncation_radius })
}

/// `y(z) = (A w)(z) / β_z` at interior nodes, zero elsewhere.
pub fn discrete_frac_laplacian(w: &NodalField, a: &FracStiffness, beta: &LumpedMass) -> Result<NodalField> {
    if beta.len() != a.n() {
        return Err(Error::SizeMismatch { expected: a.n(), found: beta.len() });
    }
    let aw = a.apply(w)?;
    let mut y = NodalField::zeros(w.num_nodes(), w.dim());
    for z in beta.constrained_nodes() {
        let b = beta.weight(z);
        if b <= 0.0 {
            return Err(invalid("beta", format!("lumped weight at node {z} is {b}")));
        }
        for (yc, ac) in y.get_mut(z).iter_mut().zip(aw.get(z)) {
            *yc = ac / b;
        }
    }
    Ok(y)
}

/// `½ Σ_c u_cᵀ A u_c`.
pub fn fem_energy(u: &NodalField, a: &FracStiffness) -> Result<f64> {
    Ok(0.5 * a.bilinear(u, u)?)
}

/// Largest `|A_zw − A_wz|`.
pub fn symmetry_defect(a: &DMatrix<f64>) -> f64 {
    (a - a.transpose()).amax()
}

/// Convenience: check the mesh node count against a field.
pub fn check_field(mesh: &SimplicialMesh, u: &NodalField) -> Result<()> {
    if u.num_nodes() != mesh.num_nodes() {
        return Err(Error::SizeMismatch { expected: mesh.num_nodes(), found: u.num_nodes() });
    }
    Ok(())
}
