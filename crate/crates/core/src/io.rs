//! Plain-text readers and writers: meshes, nodal fields, matrix triplets,
//! spectra and legacy VTK.
//!
//! Readers never panic on malformed input; every failure is a
//! [`Error::Parse`] carrying the one-based line number.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Discretization, NodalField, NodeClass, SimplicialMesh};
use crate::spectral::FourierField;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Non-empty lines with `#` comments stripped, paired with line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn number<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

fn float(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = number(tok, line, what)?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite {what} `{tok}`")));
    }
    Ok(v)
}

/// Reads the mesh format
///
/// ```text
/// dim N_vertices N_cells
/// x [y] class        (N_vertices lines, class 0/1/2)
/// i0 i1 [i2]         (N_cells lines, zero-based)
/// ```
pub fn parse_mesh(text: &str) -> Result<SimplicialMesh> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty mesh file"))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 3 {
        return Err(parse_err(ln, "header must be `dim N_vertices N_cells`"));
    }
    let dim: usize = number(tok[0], ln, "dimension")?;
    let nv: usize = number(tok[1], ln, "vertex count")?;
    let nc: usize = number(tok[2], ln, "cell count")?;
    if dim != 1 && dim != 2 {
        return Err(parse_err(ln, format!("dimension must be 1 or 2, got {dim}")));
    }
    let mut vertices = Vec::new();
    let mut classes = Vec::new();
    for k in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, format!("expected {nv} vertices, found {k}")))?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() != dim + 1 {
            return Err(parse_err(ln, format!("vertex line needs {} fields, found {}", dim + 1, tok.len())));
        }
        let mut p = [0.0; 2];
        for (i, t) in tok[..dim].iter().enumerate() {
            p[i] = float(t, ln, "coordinate")?;
        }
        let code: u8 = number(tok[dim], ln, "class")?;
        let class = NodeClass::from_code(code).ok_or_else(|| parse_err(ln, format!("unknown class {code}")))?;
        vertices.push(p);
        classes.push(class);
    }
    let mut cells = Vec::new();
    for k in 0..nc {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, format!("expected {nc} cells, found {k}")))?;
        let ids = l.split_whitespace().map(|t| number::<usize>(t, ln, "vertex index")).collect::<Result<Vec<_>>>()?;
        if ids.len() != dim + 1 {
            return Err(parse_err(ln, format!("cell line needs {} indices, found {}", dim + 1, ids.len())));
        }
        cells.push(ids);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content after the last cell"));
    }
    SimplicialMesh::new(dim, vertices, classes, cells)
}

pub fn write_mesh(mesh: &SimplicialMesh) -> String {
    let d = mesh.dim();
    let mut out = format!("{} {} {}\n", d, mesh.num_nodes(), mesh.num_cells());
    for (p, c) in mesh.vertices().iter().zip(mesh.classes()) {
        for x in &p[..d] {
            let _ = write!(out, "{x:?} ");
        }
        let _ = writeln!(out, "{}", c.code());
    }
    for cell in mesh.cells() {
        let ids: Vec<String> = cell.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", ids.join(" "));
    }
    out
}

/// Reads a field CSV with header `u1,...,uN` and one row per node.
pub fn parse_field_csv(text: &str) -> Result<NodalField> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty field file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    for (i, c) in cols.iter().enumerate() {
        if *c != format!("u{}", i + 1) {
            return Err(parse_err(ln, format!("column {} must be `u{}`, found `{c}`", i + 1, i + 1)));
        }
    }
    let dim = cols.len();
    let mut values = Vec::new();
    for (ln, l) in lines {
        let row: Vec<&str> = l.split(',').map(str::trim).collect();
        if row.len() != dim {
            return Err(parse_err(ln, format!("expected {dim} values, found {}", row.len())));
        }
        for t in row {
            values.push(float(t, ln, "value")?);
        }
    }
    if values.is_empty() {
        return Err(parse_err(ln, "field has no rows"));
    }
    NodalField::from_values(dim, values)
}

fn field_header(dim: usize) -> String {
    (1..=dim).map(|i| format!("u{i}")).collect::<Vec<_>>().join(",")
}

pub fn write_field_csv(u: &NodalField) -> String {
    let mut out = field_header(u.dim());
    out.push('\n');
    for row in u.nodes() {
        let vals: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&vals.join(","));
        out.push('\n');
    }
    out
}

/// Field CSV with the node coordinates in front: `x,u1,...,uN` or `x,y,u1,...,uN`.
pub fn write_snapshot_csv<D: Discretization + ?Sized>(disc: &D, u: &NodalField) -> String {
    let d = disc.dim().min(2);
    let mut out = String::from(if d == 2 { "x,y," } else { "x," });
    out.push_str(&field_header(u.dim()));
    out.push('\n');
    for (z, row) in u.nodes().enumerate() {
        let p = disc.point(z);
        let _ = write!(out, "{:?}", p[0]);
        if d == 2 {
            let _ = write!(out, ",{:?}", p[1]);
        }
        for v in row {
            let _ = write!(out, ",{v:?}");
        }
        out.push('\n');
    }
    out
}

/// Sparse matrix in triplet form with its fractional order.
#[derive(Clone, Debug, PartialEq)]
pub struct Triplets {
    pub n: usize,
    pub s: f64,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    /// Non-zero entries of a dense matrix in row-major order.
    pub fn from_dense(a: &DMatrix<f64>, s: f64) -> Self {
        let mut entries = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    entries.push((i, j, a[(i, j)]));
                }
            }
        }
        Self { n: a.nrows(), s, entries }
    }

    /// Dense matrix, summing duplicate entries.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            a[(i, j)] += v;
        }
        a
    }
}

/// Header `n nnz s`, then `row col value` lines.
pub fn write_triplets(t: &Triplets) -> String {
    let mut out = format!("{} {} {:?}\n", t.n, t.entries.len(), t.s);
    for (i, j, v) in &t.entries {
        let _ = writeln!(out, "{i} {j} {v:?}");
    }
    out
}

pub fn parse_triplets(text: &str) -> Result<Triplets> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty matrix file"))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 3 {
        return Err(parse_err(ln, "header must be `n nnz s`"));
    }
    let n: usize = number(tok[0], ln, "dimension")?;
    let nnz: usize = number(tok[1], ln, "entry count")?;
    let s = float(tok[2], ln, "order")?;
    let mut entries = Vec::new();
    for (ln, l) in lines {
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() != 3 {
            return Err(parse_err(ln, "entry must be `row col value`"));
        }
        let i: usize = number(tok[0], ln, "row")?;
        let j: usize = number(tok[1], ln, "column")?;
        if i >= n || j >= n {
            return Err(parse_err(ln, format!("index ({i}, {j}) outside a {n} × {n} matrix")));
        }
        entries.push((i, j, float(tok[2], ln, "value")?));
    }
    if entries.len() != nnz {
        return Err(parse_err(ln, format!("header announces {nnz} entries, found {}", entries.len())));
    }
    Ok(Triplets { n, s, entries })
}

/// One component of a spectrum as `k,Re,Im` rows in wavenumber order.
pub fn write_spectrum_csv(f: &FourierField, comp: usize) -> String {
    let mut out = String::from("k,Re,Im\n");
    let mut ks: Vec<i64> = f.wavenumbers().collect();
    ks.sort_unstable();
    for k in ks {
        let c = f.coeff(k, comp);
        let _ = writeln!(out, "{k},{:?},{:?}", c.re, c.im);
    }
    out
}

/// Reads `k,Re,Im` rows into a scalar spectrum on `m` modes.
pub fn parse_spectrum_csv(text: &str, m: usize) -> Result<FourierField> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty spectrum file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["k", "Re", "Im"] {
        return Err(parse_err(ln, "header must be `k,Re,Im`"));
    }
    if m < 2 || m % 2 != 0 {
        return Err(parse_err(ln, format!("mode count must be even and at least 2, got {m}")));
    }
    let half = (m / 2) as i64;
    let mut f = FourierField::zeros(m, 1);
    for (ln, l) in lines {
        let tok: Vec<&str> = l.split(',').map(str::trim).collect();
        if tok.len() != 3 {
            return Err(parse_err(ln, "row must be `k,Re,Im`"));
        }
        let k: i64 = number(tok[0], ln, "wavenumber")?;
        if k < -half || k >= half {
            return Err(parse_err(ln, format!("wavenumber {k} outside [{}, {half})", -half)));
        }
        f.set_coeff(k, 0, Complex64::new(float(tok[1], ln, "real part")?, float(tok[2], ln, "imaginary part")?));
    }
    Ok(f)
}

/// Legacy ASCII VTK unstructured grid with the field as point data.
pub fn write_vtk(mesh: &SimplicialMesh, u: &NodalField, name: &str) -> Result<String> {
    if u.num_nodes() != mesh.num_nodes() {
        return Err(Error::SizeMismatch { expected: mesh.num_nodes(), found: u.num_nodes() });
    }
    let n = mesh.num_nodes();
    let nc = mesh.num_cells();
    let stride = mesh.dim() + 1;
    let mut out = String::from("# vtk DataFile Version 3.0\nfraqmap\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {n} double");
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:?} {:?} 0", p[0], p[1]);
    }
    let _ = writeln!(out, "CELLS {nc} {}", nc * (stride + 1));
    for cell in mesh.cells() {
        let ids: Vec<String> = cell.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{stride} {}", ids.join(" "));
    }
    let _ = writeln!(out, "CELL_TYPES {nc}");
    let kind = if mesh.dim() == 1 { 3 } else { 5 };
    for _ in 0..nc {
        let _ = writeln!(out, "{kind}");
    }
    let _ = writeln!(out, "POINT_DATA {n}");
    if u.dim() == 3 {
        let _ = writeln!(out, "VECTORS {name} double");
        for row in u.nodes() {
            let _ = writeln!(out, "{:?} {:?} {:?}", row[0], row[1], row[2]);
        }
    } else {
        for c in 0..u.dim() {
            let _ = writeln!(out, "SCALARS {name}_{} double 1\nLOOKUP_TABLE default", c + 1);
            for row in u.nodes() {
                let _ = writeln!(out, "{:?}", row[c]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "2 4 2\n0 0 0\n1 0 1\n1 1 2\n0 1 1\n0 1 2\n0 2 3\n";

    #[test]
    fn mesh_round_trip() {
        let m = parse_mesh(SQUARE).unwrap();
        assert_eq!(m.num_cells(), 2);
        assert_eq!(m.classes()[2], NodeClass::OuterBoundary);
        let again = parse_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(again.vertices(), m.vertices());
        assert_eq!(write_mesh(&again), write_mesh(&m));
    }

    #[test]
    fn mesh_errors_carry_lines() {
        let bad = "2 4 2\n0 0 0\n1 0 7\n1 1 2\n0 1 1\n0 1 2\n0 2 3\n";
        match parse_mesh(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_mesh("2 4 2\n0 0 0\n").is_err());
        assert!(parse_mesh("1 2 1\n0 0\n1 0\n0 5\n").is_err());
        assert!(parse_mesh("").is_err());
    }

    #[test]
    fn field_round_trip() {
        let u = NodalField::from_values(3, vec![1.0, 0.0, 0.0, 0.1, -0.2, 1e-300]).unwrap();
        let text = write_field_csv(&u);
        assert!(text.starts_with("u1,u2,u3\n"));
        assert_eq!(parse_field_csv(&text).unwrap(), u);
        assert!(parse_field_csv("u1,u3\n1,2\n").is_err());
        assert!(parse_field_csv("u1,u2\n1\n").is_err());
    }

    #[test]
    fn triplets_round_trip() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, -0.5, -0.5, 1.0 / 3.0]);
        let t = Triplets::from_dense(&a, 0.3);
        let back = parse_triplets(&write_triplets(&t)).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_dense(), a);
        assert!(parse_triplets("2 1 0.5\n2 0 1.0\n").is_err());
        assert!(parse_triplets("2 2 0.5\n0 0 1.0\n").is_err());
    }

    #[test]
    fn spectrum_round_trip() {
        let mut f = FourierField::zeros(8, 1);
        f.set_coeff(-3, 0, Complex64::new(0.5, -1.0));
        f.set_coeff(-4, 0, Complex64::new(2.0, 0.0));
        let text = write_spectrum_csv(&f, 0);
        assert!(text.starts_with("k,Re,Im\n-4,2.0,0.0\n-3,0.5,-1.0\n"));
        let g = parse_spectrum_csv(&text, 8).unwrap();
        assert_eq!(write_spectrum_csv(&g, 0), text);
        assert!(parse_spectrum_csv("k,Re,Im\n4,0,0\n", 8).is_err());
    }
}
