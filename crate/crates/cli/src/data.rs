//! Initial and exterior data of the heat-flow experiment.

use fraqmap::geometry::{Discretization, NodalField, NodeClass, SimplicialMesh};
use fraqmap::{rng, Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Radius below which `x/|x|` is mollified to `x/ρ`.
pub const EXTERIOR_MOLLIFICATION: f64 = 0.1;

/// `x/max(|x|, ρ)` on every node outside the constraint domain, zero inside.
/// Extra target components beyond the spatial dimension are zero.
pub fn make_exterior_data(mesh: &SimplicialMesh, components: usize, rho: f64) -> Result<NodalField> {
    let d = mesh.dim();
    if components < d {
        return Err(Error::InvalidParameter {
            name: "components",
            reason: format!("exterior data x/|x| needs at least {d} components, got {components}"),
        });
    }
    let mut u = NodalField::zeros(mesh.num_nodes(), components);
    for z in 0..mesh.num_nodes() {
        if mesh.node_class(z) == NodeClass::Interior {
            continue;
        }
        let p = mesh.point(z);
        let r = p[..d].iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = r.max(rho);
        if scale == 0.0 {
            return Err(Error::ZeroVector { node: z });
        }
        for (i, x) in p[..d].iter().enumerate() {
            u.get_mut(z)[i] = x / scale;
        }
    }
    Ok(u)
}

/// Exterior data from [`make_exterior_data`] and normalized Gaussian vectors
/// at the interior nodes.
pub fn make_random_interior(mesh: &SimplicialMesh, components: usize, seed: u64) -> Result<NodalField> {
    let mut u = make_exterior_data(mesh, components, EXTERIOR_MOLLIFICATION)?;
    let mut rng = rng::seeded(seed);
    for z in 0..mesh.num_nodes() {
        if mesh.node_class(z) != NodeClass::Interior {
            continue;
        }
        let v = loop {
            let v: Vec<f64> = (0..components).map(|_| rng.sample(StandardNormal)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                break v.into_iter().map(|x| x / n).collect::<Vec<_>>();
            }
        };
        u.get_mut(z).copy_from_slice(&v);
    }
    Ok(u)
}
