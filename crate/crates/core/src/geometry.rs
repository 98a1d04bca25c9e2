//! Spatial discretizations, nodal vector fields and lumped-mass quadrature.
//!
//! Two discretizations are supported: the uniform periodic grid on the torus
//! `[0, 2π)` used by the Fourier-side operators, and conforming simplicial
//! meshes (intervals or triangles) of an extended domain whose nodes carry an
//! [`NodeClass`] tag. Interior nodes are the ones where the unit-length
//! constraint is imposed; exterior nodes carry Dirichlet data and nodes on the
//! outer boundary are held at zero.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Node coordinates. One-dimensional meshes leave the second entry at zero.
pub type Point = [f64; 2];

/// Role of a mesh node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeClass {
    /// Inside the constraint domain; unknown of the flows.
    Interior,
    /// In the extended domain but outside the constraint domain; Dirichlet data.
    Exterior,
    /// On the boundary of the extended domain; zero extension.
    OuterBoundary,
}

impl NodeClass {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(NodeClass::Interior),
            1 => Some(NodeClass::Exterior),
            2 => Some(NodeClass::OuterBoundary),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            NodeClass::Interior => 0,
            NodeClass::Exterior => 1,
            NodeClass::OuterBoundary => 2,
        }
    }
}

/// Common view on the periodic grid and simplicial meshes.
pub trait Discretization {
    /// Spatial dimension `d`.
    fn dim(&self) -> usize;
    fn num_nodes(&self) -> usize;
    fn point(&self, z: usize) -> Point;
    fn node_class(&self, z: usize) -> NodeClass;
    /// Integrals of the nodal basis functions.
    fn lumped_weights(&self) -> Result<LumpedMass>;

    /// Whether the unit-length constraint is imposed at `z`.
    fn is_constrained(&self, z: usize) -> bool {
        self.node_class(z) == NodeClass::Interior
    }
}

/// Uniform grid `x_j = 2πj/M`, `j = 0..M-1`, on the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodicGrid {
    m: usize,
}

impl PeriodicGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 4 || m % 2 != 0 {
            return Err(invalid("M", format!("grid size must be even and at least 4, got {m}")));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        2.0 * PI / self.m as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.m as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(|j| self.node(j))
    }

    /// Length of the torus, `2π`.
    pub fn length(&self) -> f64 {
        2.0 * PI
    }
}

impl Discretization for PeriodicGrid {
    fn dim(&self) -> usize {
        1
    }

    fn num_nodes(&self) -> usize {
        self.m
    }

    fn point(&self, z: usize) -> Point {
        [self.node(z), 0.0]
    }

    fn node_class(&self, _z: usize) -> NodeClass {
        NodeClass::Interior
    }

    fn lumped_weights(&self) -> Result<LumpedMass> {
        Ok(LumpedMass {
            weights: vec![self.h(); self.m],
            constrained: vec![true; self.m],
            region: Region::Torus,
        })
    }
}

/// Conforming mesh of intervals (`dim = 1`) or triangles (`dim = 2`).
#[derive(Clone, Debug)]
pub struct SimplicialMesh {
    dim: usize,
    vertices: Vec<Point>,
    classes: Vec<NodeClass>,
    // flat cell connectivity, stride dim + 1
    cells: Vec<usize>,
    measures: Vec<f64>,
    boundary_facets: Vec<Vec<usize>>,
}

impl SimplicialMesh {
    /// Builds and validates a mesh. Cells are given by `dim + 1` zero-based
    /// vertex indices in any orientation.
    pub fn new(
        dim: usize,
        vertices: Vec<Point>,
        classes: Vec<NodeClass>,
        cells: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(invalid("dim", format!("only 1 and 2 are supported, got {dim}")));
        }
        if classes.len() != vertices.len() {
            return Err(Error::SizeMismatch { expected: vertices.len(), found: classes.len() });
        }
        if cells.is_empty() {
            return Err(invalid("cells", "mesh has no cells"));
        }
        if vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(invalid("vertices", "non-finite coordinate"));
        }
        let stride = dim + 1;
        let mut flat = Vec::with_capacity(cells.len() * stride);
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() != stride {
                return Err(Error::NonConforming(format!(
                    "cell {c} has {} vertices, expected {stride}",
                    cell.len()
                )));
            }
            for (i, &v) in cell.iter().enumerate() {
                if v >= vertices.len() {
                    return Err(Error::NonConforming(format!(
                        "cell {c} references vertex {v} but there are {} vertices",
                        vertices.len()
                    )));
                }
                if cell[..i].contains(&v) {
                    return Err(Error::NonConforming(format!("cell {c} repeats vertex {v}")));
                }
            }
            flat.extend_from_slice(cell);
        }

        let mut measures = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            let measure = simplex_measure(&pts);
            let diam = simplex_diameter(&pts);
            if !(measure > 1e-12 * diam.powi(dim as i32)) {
                return Err(Error::DegenerateCell { cell: c, measure });
            }
            measures.push(measure);
        }

        // every facet may be shared by at most two cells
        let mut facet_count: HashMap<Vec<usize>, (usize, Vec<usize>)> = HashMap::new();
        for cell in &cells {
            for skip in 0..stride {
                let facet: Vec<usize> =
                    cell.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &v)| v).collect();
                let mut key = facet.clone();
                key.sort_unstable();
                let entry = facet_count.entry(key).or_insert((0, facet));
                entry.0 += 1;
            }
        }
        let mut boundary_facets = Vec::new();
        for (key, (count, facet)) in facet_count {
            if count > 2 {
                return Err(Error::NonConforming(format!(
                    "facet {key:?} is shared by {count} cells"
                )));
            }
            if count == 1 {
                boundary_facets.push(facet);
            }
        }
        boundary_facets.sort();

        Ok(Self { dim, vertices, classes, cells: flat, measures, boundary_facets })
    }

    pub fn num_cells(&self) -> usize {
        self.measures.len()
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let stride = self.dim + 1;
        &self.cells[c * stride..(c + 1) * stride]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks(self.dim + 1)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.classes
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_measure(&self, c: usize) -> f64 {
        self.measures[c]
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        simplex_diameter(&self.cell_points(c))
    }

    /// Largest cell diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_diameter(c)).fold(0.0, f64::max)
    }

    /// Largest ratio of cell diameter to inscribed-ball diameter (1 in 1D).
    pub fn shape_regularity(&self) -> f64 {
        if self.dim == 1 {
            return 1.0;
        }
        (0..self.num_cells())
            .map(|c| {
                let p = self.cell_points(c);
                let perimeter = dist(p[0], p[1]) + dist(p[1], p[2]) + dist(p[2], p[0]);
                let inradius = 2.0 * self.measures[c] / perimeter;
                simplex_diameter(&p) / (2.0 * inradius)
            })
            .fold(0.0, f64::max)
    }

    /// Total measure of the meshed region.
    pub fn measure(&self) -> f64 {
        self.measures.iter().sum()
    }

    /// Facets that belong to exactly one cell, i.e. the boundary of the meshed region.
    pub fn boundary_facets(&self) -> &[Vec<usize>] {
        &self.boundary_facets
    }

    pub fn nodes_of_class(&self, class: NodeClass) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&z| self.classes[z] == class).collect()
    }

    /// Distance from `x` to the boundary of the meshed region.
    pub fn distance_to_boundary(&self, x: Point) -> f64 {
        self.boundary_facets
            .iter()
            .map(|f| match f.len() {
                1 => (x[0] - self.vertices[f[0]][0]).abs(),
                _ => point_segment_distance(x, self.vertices[f[0]], self.vertices[f[1]]),
            })
            .fold(f64::INFINITY, f64::min)
    }
}

impl Discretization for SimplicialMesh {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_nodes(&self) -> usize {
        self.vertices.len()
    }

    fn point(&self, z: usize) -> Point {
        self.vertices[z]
    }

    fn node_class(&self, z: usize) -> NodeClass {
        self.classes[z]
    }

    fn lumped_weights(&self) -> Result<LumpedMass> {
        let share = 1.0 / (self.dim as f64 + 1.0);
        let mut weights = vec![0.0; self.vertices.len()];
        for c in 0..self.num_cells() {
            for &v in self.cell(c) {
                weights[v] += self.measures[c] * share;
            }
        }
        if let Some(z) = weights.iter().position(|&b| b <= 0.0) {
            return Err(invalid("mesh", format!("vertex {z} belongs to no cell")));
        }
        Ok(LumpedMass {
            weights,
            constrained: self.classes.iter().map(|&c| c == NodeClass::Interior).collect(),
            region: Region::Mesh,
        })
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub(crate) fn point_segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ax = [x[0] - a[0], x[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = ((ax[0] * ab[0] + ax[1] * ab[1]) / len2).clamp(0.0, 1.0);
    dist(x, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

pub(crate) fn simplex_measure(p: &[Point]) -> f64 {
    match p.len() {
        2 => (p[1][0] - p[0][0]).abs(),
        3 => {
            0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
                .abs()
        }
        _ => unreachable!("simplices have 2 or 3 vertices"),
    }
}

pub(crate) fn simplex_diameter(p: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            d = d.max(dist(p[i], p[j]));
        }
    }
    d
}

/// Vector-valued nodal values of a P1 (or trigonometric) field.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField {
    dim: usize,
    values: Vec<f64>,
}

impl NodalField {
    pub fn zeros(num_nodes: usize, dim: usize) -> Self {
        assert!(dim > 0, "target dimension must be positive");
        Self { dim, values: vec![0.0; num_nodes * dim] }
    }

    /// Wraps node-major values (`values[z * dim + i]`).
    pub fn from_values(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(Error::SizeMismatch { expected: dim, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("field", "non-finite nodal value"));
        }
        Ok(Self { dim, values })
    }

    pub fn from_fn(num_nodes: usize, dim: usize, mut f: impl FnMut(usize, &mut [f64])) -> Self {
        let mut field = Self::zeros(num_nodes, dim);
        for z in 0..num_nodes {
            f(z, field.get_mut(z));
        }
        field
    }

    /// Target dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn get(&self, z: usize) -> &[f64] {
        &self.values[z * self.dim..(z + 1) * self.dim]
    }

    pub fn get_mut(&mut self, z: usize) -> &mut [f64] {
        &mut self.values[z * self.dim..(z + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim)
    }

    /// Component `i` as a scalar sequence over the nodes.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.nodes().map(|v| v[i]).collect()
    }

    pub fn from_components(components: &[Vec<f64>]) -> Result<Self> {
        let dim = components.len();
        let n = components.first().map_or(0, Vec::len);
        if let Some(bad) = components.iter().find(|c| c.len() != n) {
            return Err(Error::SizeMismatch { expected: n, found: bad.len() });
        }
        Ok(Self::from_fn(n, dim, |z, out| {
            for (i, c) in components.iter().enumerate() {
                out[i] = c[z];
            }
        }))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { dim: self.dim, values: self.values.iter().map(|v| alpha * v).collect() }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &NodalField) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            dim: self.dim,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + alpha * b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &NodalField) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    pub(crate) fn check_same_shape(&self, other: &NodalField) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::SizeMismatch { expected: self.dim, found: other.dim });
        }
        if self.values.len() != other.values.len() {
            return Err(Error::SizeMismatch {
                expected: self.num_nodes(),
                found: other.num_nodes(),
            });
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Which region the lumped weights integrate over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// The periodic torus; every node is constrained.
    Torus,
    /// The whole meshed (extended) domain. Sums are restricted to the
    /// constrained nodes, whose hat functions are supported in the
    /// constraint domain.
    Mesh,
}

/// Lumped-mass weights `β_z = ∫ φ_z`.
#[derive(Clone, Debug, PartialEq)]
pub struct LumpedMass {
    weights: Vec<f64>,
    constrained: Vec<bool>,
    region: Region,
}

impl LumpedMass {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, z: usize) -> f64 {
        self.weights[z]
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn is_constrained(&self, z: usize) -> bool {
        self.constrained[z]
    }

    pub fn constrained_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.weights.len()).filter(|&z| self.constrained[z])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Sum of all weights, the measure of the integration region.
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn check(&self, field: &NodalField) -> Result<()> {
        if field.num_nodes() != self.weights.len() {
            return Err(Error::SizeMismatch { expected: self.weights.len(), found: field.num_nodes() });
        }
        Ok(())
    }
}

/// `β_z = ∫ φ_z` for every node of the discretization.
pub fn lumped_weights<D: Discretization + ?Sized>(disc: &D) -> Result<LumpedMass> {
    disc.lumped_weights()
}

/// Discrete inner product `Σ_z β_z y(z)·v(z)` over the constrained nodes.
pub fn lumped_inner(y: &NodalField, v: &NodalField, w: &LumpedMass) -> Result<f64> {
    y.check_same_shape(v)?;
    w.check(y)?;
    Ok(w.constrained_nodes().map(|z| w.weights[z] * dot(y.get(z), v.get(z))).sum())
}

/// `(Σ_z β_z |v(z)|^p)^{1/p}` over the constrained nodes.
pub fn discrete_lp_norm(v: &NodalField, p: f64, w: &LumpedMass) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid("p", format!("exponent must lie in [1, ∞), got {p}")));
    }
    w.check(v)?;
    let sum: f64 = w.constrained_nodes().map(|z| w.weights[z] * norm(v.get(z)).powf(p)).sum();
    Ok(sum.powf(1.0 / p))
}

/// `Σ_{z ∈ N_h} β_z | |u(z)|² − 1 |`.
pub fn unit_violation(u: &NodalField, w: &LumpedMass) -> f64 {
    assert_eq!(u.num_nodes(), w.len(), "field and weights live on different discretizations");
    w.constrained_nodes().map(|z| w.weights[z] * (dot(u.get(z), u.get(z)) - 1.0).abs()).sum()
}

/// Largest nodal deviation `| |u(z)| − 1 |` over the constrained nodes.
pub fn max_unit_defect(u: &NodalField, w: &LumpedMass) -> f64 {
    w.constrained_nodes().map(|z| (norm(u.get(z)) - 1.0).abs()).fold(0.0, f64::max)
}

/// Nodewise normalization onto the unit sphere.
pub fn project_sphere(v: &NodalField) -> Result<NodalField> {
    let mut out = v.clone();
    for z in 0..v.num_nodes() {
        let n = norm(v.get(z));
        if n == 0.0 {
            return Err(Error::ZeroVector { node: z });
        }
        out.get_mut(z).iter_mut().for_each(|c| *c /= n);
    }
    Ok(out)
}

/// Nodal interpolant `I_h f` of a vector-valued function.
pub fn nodal_interpolation<D: Discretization + ?Sized>(
    disc: &D,
    dim: usize,
    f: impl Fn(&[f64], &mut [f64]),
) -> NodalField {
    let d = disc.dim();
    NodalField::from_fn(disc.num_nodes(), dim, |z, out| {
        let p = disc.point(z);
        f(&p[..d], out)
    })
}

/// Copy of `base` with the values at nodes of class `class` replaced by `f`.
pub fn interpolate_on_class<D: Discretization + ?Sized>(
    base: &NodalField,
    disc: &D,
    class: NodeClass,
    f: impl Fn(&[f64], &mut [f64]),
) -> Result<NodalField> {
    if base.num_nodes() != disc.num_nodes() {
        return Err(Error::SizeMismatch { expected: disc.num_nodes(), found: base.num_nodes() });
    }
    let d = disc.dim();
    let mut out = base.clone();
    for z in (0..disc.num_nodes()).filter(|&z| disc.node_class(z) == class) {
        let p = disc.point(z);
        f(&p[..d], out.get_mut(z));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval_mesh() -> SimplicialMesh {
        SimplicialMesh::new(
            1,
            vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]],
            vec![NodeClass::Interior; 3],
            vec![vec![0, 1], vec![1, 2]],
        )
        .unwrap()
    }

    fn unit_square() -> SimplicialMesh {
        SimplicialMesh::new(
            2,
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![NodeClass::Interior; 4],
            vec![vec![0, 1, 2], vec![0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn torus_weights_are_h() {
        let grid = PeriodicGrid::new(4).unwrap();
        let w = lumped_weights(&grid).unwrap();
        for &b in w.weights() {
            assert!((b - PI / 2.0).abs() < 1e-15);
        }
        assert!((w.total() - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn grid_rejects_odd_and_small() {
        assert!(PeriodicGrid::new(7).is_err());
        assert!(PeriodicGrid::new(2).is_err());
        let g = PeriodicGrid::new(8).unwrap();
        let xs: Vec<f64> = g.nodes().collect();
        for w in xs.windows(2) {
            assert!((w[1] - w[0] - g.h()).abs() < 1e-15);
        }
    }

    #[test]
    fn interval_weights() {
        let w = lumped_weights(&interval_mesh()).unwrap();
        assert_eq!(w.weights(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn square_weights_match_exact_hat_integrals() {
        // oracle: integrate each hat with a 3-point edge-midpoint rule, exact for quadratics
        let mesh = unit_square();
        let w = lumped_weights(&mesh).unwrap();
        let mut oracle = vec![0.0; 4];
        for c in 0..mesh.num_cells() {
            let area = mesh.cell_measure(c);
            for (local, &z) in mesh.cell(c).iter().enumerate() {
                // barycentric coordinate of vertex `local` at the edge midpoints
                let mids = [(0, 1), (1, 2), (2, 0)];
                let sum: f64 = mids
                    .iter()
                    .map(|&(a, b)| if a == local || b == local { 0.5 } else { 0.0 })
                    .sum();
                oracle[z] += area * sum / 3.0;
            }
        }
        for z in 0..4 {
            assert!((w.weight(z) - oracle[z]).abs() < 1e-15, "node {z}");
        }
        assert!((w.weight(0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((w.weight(1) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_cell_is_rejected() {
        let err = SimplicialMesh::new(
            2,
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            vec![NodeClass::Interior; 3],
            vec![vec![0, 1, 2]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateCell { cell: 0, .. }));
    }

    #[test]
    fn overshared_facet_is_rejected() {
        let err = SimplicialMesh::new(
            2,
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [1.0, 1.0]],
            vec![NodeClass::Interior; 5],
            vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 1, 4]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonConforming(_)));
    }

    #[test]
    fn inner_products_and_norms() {
        let grid = PeriodicGrid::new(8).unwrap();
        let w = lumped_weights(&grid).unwrap();
        let one = NodalField::from_fn(8, 1, |_, v| v[0] = 1.0);
        assert!((lumped_inner(&one, &one, &w).unwrap() - 2.0 * PI).abs() < 1e-14);

        let a = NodalField::from_fn(8, 2, |_, v| v.copy_from_slice(&[1.0, 0.0]));
        let b = NodalField::from_fn(8, 2, |_, v| v.copy_from_slice(&[0.0, 3.0]));
        assert_eq!(lumped_inner(&a, &b, &w).unwrap(), 0.0);

        let unit = NodalField::from_fn(8, 3, |z, v| {
            let x = grid.node(z);
            v.copy_from_slice(&[0.0, x.cos(), x.sin()]);
        });
        let n2 = discrete_lp_norm(&unit, 2.0, &w).unwrap();
        assert!((n2 - (2.0 * PI).sqrt()).abs() < 1e-14);

        let mut spike = NodalField::zeros(8, 2);
        spike.get_mut(3).copy_from_slice(&[3.0, 4.0]);
        assert!((discrete_lp_norm(&spike, 1.0, &w).unwrap() - 5.0 * grid.h()).abs() < 1e-14);
        assert!(discrete_lp_norm(&spike, 0.5, &w).is_err());
    }

    #[test]
    fn violation_of_scaled_field() {
        let grid = PeriodicGrid::new(16).unwrap();
        let w = lumped_weights(&grid).unwrap();
        let u = nodal_interpolation(&grid, 3, |x, v| v.copy_from_slice(&[0.0, x[0].cos(), x[0].sin()]));
        assert!(unit_violation(&u, &w) < 1e-14);
        assert!((unit_violation(&u.scaled(2.0), &w) - 6.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn sphere_projection() {
        let v = NodalField::from_values(3, vec![0.0, 0.0, 2.0, 3.0, 4.0, 0.0]).unwrap();
        let p = project_sphere(&v).unwrap();
        assert_eq!(p.get(0), &[0.0, 0.0, 1.0]);
        assert!((p.get(1)[0] - 0.6).abs() < 1e-15 && (p.get(1)[1] - 0.8).abs() < 1e-15);
        assert_eq!(project_sphere(&p).unwrap(), p);
        let zero = NodalField::from_values(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(project_sphere(&zero), Err(Error::ZeroVector { node: 1 })));
    }

    #[test]
    fn interpolation_is_exact_at_nodes() {
        let grid = PeriodicGrid::new(32).unwrap();
        let f = nodal_interpolation(&grid, 1, |x, v| v[0] = x[0].sin());
        for (z, v) in f.nodes().enumerate() {
            assert_eq!(v[0], grid.node(z).sin());
        }
    }

    #[test]
    fn affine_interpolant_reproduces_barycenters() {
        let mesh = unit_square();
        let f = nodal_interpolation(&mesh, 1, |x, v| v[0] = 2.0 * x[0] - 3.0 * x[1] + 0.5);
        for c in 0..mesh.num_cells() {
            let p = mesh.cell_points(c);
            let bary = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
            let interp: f64 = mesh.cell(c).iter().map(|&z| f.get(z)[0]).sum::<f64>() / 3.0;
            assert!((interp - (2.0 * bary[0] - 3.0 * bary[1] + 0.5)).abs() < 1e-14);
        }
    }

    #[test]
    fn class_restricted_interpolation_keeps_other_nodes() {
        let mesh = SimplicialMesh::new(
            1,
            vec![[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
            vec![NodeClass::Exterior, NodeClass::Interior, NodeClass::Exterior],
            vec![vec![0, 1], vec![1, 2]],
        )
        .unwrap();
        let base = NodalField::from_values(1, vec![7.0, 7.0, 7.0]).unwrap();
        let out = interpolate_on_class(&base, &mesh, NodeClass::Exterior, |x, v| v[0] = x[0]).unwrap();
        assert_eq!(out.values(), &[-1.0, 7.0, 1.0]);
    }

    #[test]
    fn boundary_distance() {
        let mesh = unit_square();
        assert_eq!(mesh.boundary_facets().len(), 4);
        assert!((mesh.distance_to_boundary([0.5, 0.25]) - 0.25).abs() < 1e-15);
        assert!((interval_mesh().distance_to_boundary([0.3, 0.0]) - 0.3).abs() < 1e-15);
    }
}
