//! Structured meshes of an extended domain with node tags.
//!
//! Node classes: `0` inside the constraint domain, `1` in the extended domain
//! outside it (including the interface), `2` on the outer boundary.
//! The output is plain data; [`MeshData::to_mesh_text`] renders the text
//! format read by `fraqmap::io::parse_mesh`.

use std::fmt::Write as _;

pub const INTERIOR: u8 = 0;
pub const EXTERIOR: u8 = 1;
pub const OUTER: u8 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct MeshData {
    pub dim: usize,
    pub vertices: Vec<[f64; 2]>,
    pub classes: Vec<u8>,
    pub cells: Vec<Vec<usize>>,
}

impl MeshData {
    pub fn count_class(&self, class: u8) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn to_mesh_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {} {}", self.dim, self.vertices.len(), self.cells.len()).unwrap();
        for (p, c) in self.vertices.iter().zip(&self.classes) {
            if self.dim == 1 {
                writeln!(out, "{:?} {c}", p[0]).unwrap();
            } else {
                writeln!(out, "{:?} {:?} {c}", p[0], p[1]).unwrap();
            }
        }
        for cell in &self.cells {
            let line: Vec<String> = cell.iter().map(usize::to_string).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        out
    }
}

/// Coordinates `-outer..outer` with `n_ring` cells on each side of the
/// inner interval `(-inner, inner)`, which gets `n_inner` cells.
fn graded_axis(inner: f64, outer: f64, n_inner: usize, n_ring: usize) -> Vec<f64> {
    let mut xs = Vec::with_capacity(n_inner + 2 * n_ring + 1);
    for j in 0..n_ring {
        xs.push(-outer + (outer - inner) * j as f64 / n_ring as f64);
    }
    for j in 0..n_inner {
        xs.push(-inner + 2.0 * inner * j as f64 / n_inner as f64);
    }
    for j in 0..=n_ring {
        xs.push(inner + (outer - inner) * j as f64 / n_ring as f64);
    }
    xs
}

/// Interval `(-outer, outer)` around the constraint domain `(-inner, inner)`.
pub fn interval(inner: f64, outer: f64, n_inner: usize, n_ring: usize) -> MeshData {
    assert!(0.0 < inner && inner < outer, "need 0 < inner < outer");
    assert!(n_inner >= 1 && n_ring >= 1, "need at least one cell per part");
    let xs = graded_axis(inner, outer, n_inner, n_ring);
    let last = xs.len() - 1;
    let classes = (0..xs.len())
        .map(|j| {
            if j == 0 || j == last {
                OUTER
            } else if j > n_ring && j < n_ring + n_inner {
                INTERIOR
            } else {
                EXTERIOR
            }
        })
        .collect();
    MeshData {
        dim: 1,
        vertices: xs.iter().map(|&x| [x, 0.0]).collect(),
        classes,
        cells: (0..last).map(|j| vec![j, j + 1]).collect(),
    }
}

/// Square `(-inner, inner)²` inside the disk of radius `outer`.
///
/// A tensor grid of the square `(-outer, outer)²` is bent so that the square
/// of sup-radius `ρ ≥ inner` lands on a curve that blends linearly from the
/// inner square to the circle of radius `outer`. The inner square keeps its
/// uniform grid with `n_inner` cells per side.
pub fn square_in_disk(inner: f64, outer: f64, n_inner: usize, n_ring: usize) -> MeshData {
    assert!(0.0 < inner && inner < outer, "need 0 < inner < outer");
    assert!(n_inner >= 1 && n_ring >= 1, "need at least one cell per part");
    let xs = graded_axis(inner, outer, n_inner, n_ring);
    let n = xs.len();
    let last = n - 1;
    let mut vertices = Vec::with_capacity(n * n);
    let mut classes = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let q = [xs[i], xs[j]];
            let rho = q[0].abs().max(q[1].abs());
            let p = if rho > inner {
                let theta = (rho - inner) / (outer - inner);
                let r2 = (q[0] * q[0] + q[1] * q[1]).sqrt();
                let f = (1.0 - theta) + theta * rho / r2;
                [q[0] * f, q[1] * f]
            } else {
                q
            };
            vertices.push(p);
            let ring = |k: usize| k <= n_ring || k >= n_ring + n_inner;
            classes.push(if i == 0 || j == 0 || i == last || j == last {
                OUTER
            } else if ring(i) || ring(j) {
                EXTERIOR
            } else {
                INTERIOR
            });
        }
    }
    let centre = last as f64 / 2.0;
    let mut cells = Vec::with_capacity(2 * last * last);
    for j in 0..last {
        for i in 0..last {
            let v00 = j * n + i;
            let v10 = v00 + 1;
            let v01 = v00 + n;
            let v11 = v01 + 1;
            // diagonals point away from the centre so the mesh is mirror symmetric
            let dx = i as f64 + 0.5 - centre;
            let dy = j as f64 + 0.5 - centre;
            if dx * dy > 0.0 {
                cells.push(vec![v00, v10, v11]);
                cells.push(vec![v00, v11, v01]);
            } else {
                cells.push(vec![v00, v10, v01]);
                cells.push(vec![v10, v11, v01]);
            }
        }
    }
    MeshData { dim: 2, vertices, classes, cells }
}

/// Uniform grid of `(-half, half)²` with `n` cells per side; boundary nodes are
/// outer-boundary nodes, all others interior.
pub fn square_grid(half: f64, n: usize) -> MeshData {
    assert!(n >= 2, "need at least two cells per side");
    let m = n + 1;
    let mut vertices = Vec::with_capacity(m * m);
    let mut classes = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            vertices.push([-half + 2.0 * half * i as f64 / n as f64, -half + 2.0 * half * j as f64 / n as f64]);
            classes.push(if i == 0 || j == 0 || i == n || j == n { OUTER } else { INTERIOR });
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = j * m + i;
            cells.push(vec![v00, v00 + 1, v00 + m + 1]);
            cells.push(vec![v00, v00 + m + 1, v00 + m]);
        }
    }
    MeshData { dim: 2, vertices, classes, cells }
}

/// Eight triangles: two interior nodes at `(±0.4, 0)` inside a hexagon of
/// radius 1.5 whose corners are outer-boundary nodes.
pub fn hexagon8() -> MeshData {
    let mut vertices = vec![[-0.4, 0.0], [0.4, 0.0]];
    for k in 0..6 {
        let phi = std::f64::consts::PI / 3.0 * k as f64;
        vertices.push([1.5 * phi.cos(), 1.5 * phi.sin()]);
    }
    let (a, b) = (0, 1);
    let v = |k: usize| 2 + k;
    let cells = vec![
        vec![b, v(5), v(0)],
        vec![b, v(0), v(1)],
        vec![b, v(1), v(2)],
        vec![b, v(2), a],
        vec![a, v(2), v(3)],
        vec![a, v(3), v(4)],
        vec![a, v(4), v(5)],
        vec![a, v(5), b],
    ];
    let mut classes = vec![INTERIOR, INTERIOR];
    classes.extend([OUTER; 6]);
    MeshData { dim: 2, vertices, classes, cells }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signed_area(m: &MeshData, c: &[usize]) -> f64 {
        let [p, q, r] = [m.vertices[c[0]], m.vertices[c[1]], m.vertices[c[2]]];
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    #[test]
    fn interval_classes() {
        let m = interval(0.5, 1.5, 2, 2);
        assert_eq!(m.vertices.len(), 7);
        assert_eq!(m.classes, vec![2, 1, 1, 0, 1, 1, 2]);
        let xs: Vec<f64> = m.vertices.iter().map(|p| p[0]).collect();
        for w in xs.windows(2) {
            assert!((w[1] - w[0] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn disk_mesh_is_valid() {
        let m = square_in_disk(0.5, 1.5, 10, 5);
        assert_eq!(m.count_class(INTERIOR), 81);
        let total: f64 = m.cells.iter().map(|c| signed_area(&m, c)).sum();
        for c in &m.cells {
            assert!(signed_area(&m, c) > 0.0);
        }
        // polygonal disk, slightly smaller than the circle
        let circle = std::f64::consts::PI * 1.5 * 1.5;
        assert!(total < circle && total > 0.97 * circle, "area {total}");
        for (p, &c) in m.vertices.iter().zip(&m.classes) {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if c == OUTER {
                assert!((r - 1.5).abs() < 1e-12);
            }
            if c == INTERIOR {
                assert!(p[0].abs() < 0.5 && p[1].abs() < 0.5);
            }
        }
    }

    #[test]
    fn hexagon_is_positively_oriented() {
        let m = hexagon8();
        let total: f64 = m.cells.iter().map(|c| signed_area(&m, c)).sum();
        for c in &m.cells {
            assert!(signed_area(&m, c) > 0.0);
        }
        assert!((total - 1.5 * 3f64.sqrt() * 1.5 * 1.5).abs() < 1e-12);
    }

    #[test]
    fn grid_counts() {
        let m = square_grid(0.5, 11);
        assert_eq!(m.count_class(INTERIOR), 100);
        assert_eq!(m.cells.len(), 242);
    }

    #[test]
    fn text_header() {
        let text = interval(0.5, 1.5, 2, 2).to_mesh_text();
        assert!(text.starts_with("1 7 6\n-1.5 2\n"));
    }
}
