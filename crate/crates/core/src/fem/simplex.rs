use crate::geometry::{dist, Point};

/// Affine cell with barycentric gradients.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Simplex {
    pub d: usize,
    pub p: [Point; 3],
    pub g: [[f64; 2]; 3],
    pub measure: f64,
}

impl Simplex {
    pub fn new(pts: &[Point]) -> Self {
        match pts.len() {
            2 => {
                let len = pts[1][0] - pts[0][0];
                Self {
                    d: 1,
                    p: [pts[0], pts[1], [0.0; 2]],
                    g: [[-1.0 / len, 0.0], [1.0 / len, 0.0], [0.0; 2]],
                    measure: len.abs(),
                }
            }
            3 => {
                let [p0, p1, p2] = [pts[0], pts[1], pts[2]];
                let area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
                let grad = |a: Point, b: Point| [(a[1] - b[1]) / area2, (b[0] - a[0]) / area2];
                Self {
                    d: 2,
                    p: [p0, p1, p2],
                    g: [grad(p1, p2), grad(p2, p0), grad(p0, p1)],
                    measure: 0.5 * area2.abs(),
                }
            }
            _ => unreachable!("simplices have 2 or 3 vertices"),
        }
    }

    pub fn nv(&self) -> usize {
        self.d + 1
    }

    pub fn vertices(&self) -> &[Point] {
        &self.p[..self.d + 1]
    }

    /// Barycentric coordinates, extended affinely outside the cell.
    pub fn bary(&self, x: Point) -> [f64; 3] {
        let dx = [x[0] - self.p[0][0], x[1] - self.p[0][1]];
        let mut l = [0.0; 3];
        for i in 1..=self.d {
            l[i] = self.g[i][0] * dx[0] + self.g[i][1] * dx[1];
        }
        l[0] = 1.0 - l[1] - l[2];
        l
    }

    /// Image of reference coordinates (`u` for intervals, `(u, v)` for triangles).
    pub fn map(&self, r: [f64; 2]) -> Point {
        let mut x = self.p[0];
        for i in 0..self.d {
            x[0] += r[i] * (self.p[i + 1][0] - self.p[0][0]);
            x[1] += r[i] * (self.p[i + 1][1] - self.p[0][1]);
        }
        x
    }

    pub fn diameter(&self) -> f64 {
        let v = self.vertices();
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(dist(v[i], v[j]));
            }
        }
        d
    }

    /// Children of a uniform refinement (2 intervals or 4 triangles).
    pub fn split(&self) -> Vec<Simplex> {
        let mid = |a: Point, b: Point| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        if self.d == 1 {
            let m = mid(self.p[0], self.p[1]);
            vec![Simplex::new(&[self.p[0], m]), Simplex::new(&[m, self.p[1]])]
        } else {
            crate::quadrature::split_triangle(&self.p).iter().map(|t| Simplex::new(t)).collect()
        }
    }

    pub fn centroid(&self) -> Point {
        let v = self.vertices();
        let n = v.len() as f64;
        [v.iter().map(|p| p[0]).sum::<f64>() / n, v.iter().map(|p| p[1]).sum::<f64>() / n]
    }
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let sub = |p: Point, q: Point| [p[0] - q[0], p[1] - q[1]];
    let d1 = cross(sub(b, a), sub(c, a));
    let d2 = cross(sub(b, a), sub(d, a));
    let d3 = cross(sub(d, c), sub(a, c));
    let d4 = cross(sub(d, c), sub(b, c));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Distance between two simplices with disjoint interiors.
pub(crate) fn simplex_distance(a: &Simplex, b: &Simplex) -> f64 {
    if a.d == 1 {
        let (a0, a1) = (a.p[0][0].min(a.p[1][0]), a.p[0][0].max(a.p[1][0]));
        let (b0, b1) = (b.p[0][0].min(b.p[1][0]), b.p[0][0].max(b.p[1][0]));
        return (b0 - a1).max(a0 - b1).max(0.0);
    }
    let edges = |s: &Simplex| [(s.p[0], s.p[1]), (s.p[1], s.p[2]), (s.p[2], s.p[0])];
    let mut best = f64::INFINITY;
    for (p, q) in edges(a) {
        for (r, t) in edges(b) {
            if segments_intersect(p, q, r, t) {
                return 0.0;
            }
            for (x, (u, v)) in [(p, (r, t)), (q, (r, t)), (r, (p, q)), (t, (p, q))] {
                best = best.min(crate::geometry::point_segment_distance(x, u, v));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barycentrics_reproduce_vertices() {
        let s = Simplex::new(&[[0.3, -0.1], [1.2, 0.4], [-0.2, 0.9]]);
        for (i, &p) in s.vertices().iter().enumerate() {
            let l = s.bary(p);
            for j in 0..3 {
                assert!((l[j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let s = Simplex::new(&[[1.0, 0.0], [0.5, 0.0]]);
        assert!((s.bary([0.75, 0.0])[0] - 0.5).abs() < 1e-15);
        assert_eq!(s.measure, 0.5);
    }

    #[test]
    fn distances() {
        let a = Simplex::new(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let b = Simplex::new(&[[2.0, 0.0], [3.0, 0.0], [2.0, 1.0]]);
        assert!((simplex_distance(&a, &b) - 1.0).abs() < 1e-15);
        let c = Simplex::new(&[[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert_eq!(simplex_distance(&a, &c), 0.0);
        let i = Simplex::new(&[[0.0, 0.0], [1.0, 0.0]]);
        let j = Simplex::new(&[[2.5, 0.0], [1.5, 0.0]]);
        assert_eq!(simplex_distance(&i, &j), 0.5);
    }
}
