mod common;

use std::f64::consts::PI;

use fraqmap::geometry::{
    discrete_lp_norm, lumped_inner, lumped_weights, max_unit_defect, project_sphere, unit_violation, Discretization,
    NodalField, PeriodicGrid,
};
use proptest::prelude::*;

fn values(n: usize, dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, n * dim)
}

// Σ over cells of |T|·(number of cell vertices at z)/(d+1), summed independently of the library.
fn hat_integrals(mesh: &fraqmap::geometry::SimplicialMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.num_nodes()];
    for c in 0..mesh.num_cells() {
        let p = mesh.cell_points(c);
        let measure = if mesh.dim() == 1 {
            (p[1][0] - p[0][0]).abs()
        } else {
            0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs()
        };
        for &z in mesh.cell(c) {
            w[z] += measure / (mesh.dim() + 1) as f64;
        }
    }
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weights_partition_the_domain(n_inner in 1usize..8, n_ring in 1usize..5, two_d in any::<bool>()) {
        let data = if two_d {
            fraqmap_meshgen::square_in_disk(0.5, 1.5, n_inner + 1, n_ring)
        } else {
            fraqmap_meshgen::interval(0.5, 1.5, n_inner, n_ring)
        };
        let mesh = common::mesh(&data);
        let beta = mesh.lumped_weights().unwrap();
        let oracle = hat_integrals(&mesh);
        for z in 0..mesh.num_nodes() {
            prop_assert!((beta.weight(z) - oracle[z]).abs() <= 1e-14 * oracle[z].max(1e-3));
        }
        prop_assert!((beta.total() - mesh.measure()).abs() <= 1e-12 * mesh.measure());
    }

    #[test]
    fn torus_weights_sum_to_two_pi(h in 2usize..64) {
        let grid = PeriodicGrid::new(2 * h).unwrap();
        let w = lumped_weights(&grid).unwrap();
        prop_assert!((w.total() - 2.0 * PI).abs() <= 1e-12 * 2.0 * PI);
    }

    #[test]
    fn lumped_product_is_symmetric_positive(a in values(16, 3), b in values(16, 3)) {
        let grid = PeriodicGrid::new(16).unwrap();
        let w = lumped_weights(&grid).unwrap();
        let u = NodalField::from_values(3, a).unwrap();
        let v = NodalField::from_values(3, b).unwrap();
        let uv = lumped_inner(&u, &v, &w).unwrap();
        prop_assert!((uv - lumped_inner(&v, &u, &w).unwrap()).abs() <= 1e-14 * uv.abs().max(1.0));
        let oracle: f64 = (0..16).map(|z| grid.h() * u.get(z).iter().zip(v.get(z)).map(|(p, q)| p * q).sum::<f64>()).sum();
        prop_assert!((uv - oracle).abs() <= 1e-13 * oracle.abs().max(1.0));
        let uu = lumped_inner(&u, &u, &w).unwrap();
        prop_assert!(uu >= 0.0);
        if u.values().iter().any(|&x| x != 0.0) {
            prop_assert!(uu > 0.0);
        }
        let n2 = discrete_lp_norm(&u, 2.0, &w).unwrap();
        prop_assert!((n2 * n2 - uu).abs() <= 1e-12 * uu.max(1.0));
    }

    #[test]
    fn projection_lands_on_the_sphere(a in values(12, 3)) {
        prop_assume!(a.chunks(3).all(|c| c.iter().map(|x| x * x).sum::<f64>() > 1e-6));
        let grid = PeriodicGrid::new(12).unwrap();
        let w = lumped_weights(&grid).unwrap();
        let u = project_sphere(&NodalField::from_values(3, a).unwrap()).unwrap();
        prop_assert!(max_unit_defect(&u, &w) <= 1e-15);
        prop_assert!(unit_violation(&u, &w) <= 1e-14);
        let again = project_sphere(&u).unwrap();
        prop_assert!(again.max_abs_diff(&u).unwrap() <= 1e-15);
    }

    #[test]
    fn scaled_unit_field_violation(alpha in 0.1f64..3.0, h in 2usize..32) {
        let grid = PeriodicGrid::new(2 * h).unwrap();
        let w = lumped_weights(&grid).unwrap();
        let u = NodalField::from_fn(2 * h, 3, |j, v| {
            let x = grid.node(j);
            v.copy_from_slice(&[alpha * x.cos(), alpha * x.sin(), 0.0]);
        });
        let expect = 2.0 * PI * (alpha * alpha - 1.0).abs();
        prop_assert!((unit_violation(&u, &w) - expect).abs() <= 1e-12 * expect.max(1.0));
    }
}
