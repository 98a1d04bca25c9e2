#![allow(dead_code)]

use fraqmap::geometry::{NodeClass, SimplicialMesh};
use fraqmap_meshgen::MeshData;

pub fn mesh(data: &MeshData) -> SimplicialMesh {
    let classes = data.classes.iter().map(|&c| NodeClass::from_code(c).unwrap()).collect();
    SimplicialMesh::new(data.dim, data.vertices.clone(), classes, data.cells.clone()).unwrap()
}

pub fn rel_diff(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax()
}
