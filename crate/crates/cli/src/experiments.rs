//! The four experiments and their on-disk artifacts.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::Instant;

use fraqmap::fem::{assemble_fractional_stiffness, oracle, symmetry_defect};
use fraqmap::geometry::{unit_violation, Discretization, NodalField, NodeClass, PeriodicGrid, SimplicialMesh};
use fraqmap::heatflow::{harmonic_residual, run_heat_flow_with, FlowMass, FlowOptions};
use fraqmap::io::{parse_mesh, write_snapshot_csv, write_triplets, write_vtk, Triplets};
use fraqmap::spectral::FracParams;
use fraqmap::spin::{
    make_perturbed_map, make_traveling_wave, num_steps, run_spin_with, traveling_wave_at, SpinBackend, SpinConfig,
};
use nalgebra::{DMatrix, SymmetricEigen};
use serde_json::{json, Map, Value};

use crate::config::{Config, Experiment};
use crate::data::make_random_interior;
use crate::CliError;

/// Largest mesh on which assemble-check computes the full spectrum.
const EIGEN_NODE_LIMIT: usize = 200;

/// Result of a run: the summary written to `summary.json` and, for
/// assemble-check, whether the acceptance test passed.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: Value,
    pub passed: Option<bool>,
}

/// Runs `cfg` and writes its artifacts below `out`.
pub fn run(cfg: &Config, out: &Path, vtk: bool) -> Result<Outcome, CliError> {
    let start = Instant::now();
    fs::create_dir_all(out.join("snapshots")).map_err(|e| output_error(out, e))?;
    let (mut fields, passed) = match cfg.experiment {
        Experiment::SpinTravel | Experiment::SpinPerturbed => (spin(cfg, out, vtk)?, None),
        Experiment::HeatflowDefect => (heat_flow(cfg, out, vtk)?, None),
        Experiment::AssembleCheck => {
            let (f, ok) = assemble_check(cfg, out)?;
            (f, Some(ok))
        }
    };
    fields.insert("config".into(), cfg.to_json());
    fields.insert("wall_time_s".into(), start.elapsed().as_secs_f64().into());
    if let Some(p) = passed {
        fields.insert("passed".into(), p.into());
    }
    let summary = Value::Object(fields);
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Output(e.to_string()))?;
    write(out, "summary.json", &(text + "\n"))?;
    Ok(Outcome { summary, passed })
}

fn output_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

fn write(out: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = out.join(name);
    fs::write(&path, text).map_err(|e| output_error(&path, e))
}

pub fn load_mesh(path: &str) -> Result<SimplicialMesh, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read mesh `{path}`: {e}")))?;
    parse_mesh(&text).map_err(|e| CliError::Config(format!("mesh `{path}`: {e}")))
}

/// Open polyline through the grid nodes, for VTK output of periodic fields.
fn grid_polyline(grid: &PeriodicGrid) -> Result<SimplicialMesh, CliError> {
    let m = grid.m();
    let vertices = (0..m).map(|j| [grid.node(j), 0.0]).collect();
    let cells = (0..m - 1).map(|j| vec![j, j + 1]).collect();
    Ok(SimplicialMesh::new(1, vertices, vec![NodeClass::Interior; m], cells)?)
}

/// Step indices `round(ℓK/n)`, `ℓ = 0..n`; only the ends when `n = 0`.
fn snapshot_steps(total: usize, n: usize) -> BTreeSet<usize> {
    let mut set: BTreeSet<usize> = [0, total].into();
    for l in 0..=n {
        set.insert(((l * total) as f64 / n.max(1) as f64).round() as usize);
    }
    set
}

/// `L²_h` norm of the nodewise tangential part of `w`.
fn tangential_norm(u: &NodalField, w: &NodalField, weights: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (z, &b) in weights.iter().enumerate() {
        let v = u.get(z);
        let n2: f64 = v.iter().map(|x| x * x).sum();
        let along: f64 = w.get(z).iter().zip(v).map(|(p, q)| p * q).sum::<f64>() / n2;
        sum += b * w.get(z).iter().zip(v).map(|(p, q)| (p - along * q).powi(2)).sum::<f64>();
    }
    sum.sqrt()
}

fn spin(cfg: &Config, out: &Path, vtk: bool) -> Result<Map<String, Value>, CliError> {
    let grid = PeriodicGrid::new(cfg.m)?;
    let h = grid.h();
    let tau = cfg.time_step(h);
    let threshold = h.powf(2.0 * cfg.s) / (2.0 * std::f64::consts::PI).sqrt();
    if tau >= threshold {
        eprintln!(
            "warning: tau = {tau:e} is at or above h^(2s)/sqrt(2 pi) = {threshold:e}; the fixed-point iteration may not contract"
        );
    }
    let t_end = cfg.t_end.unwrap_or(0.0);
    let u0 = match cfg.experiment {
        Experiment::SpinTravel => make_traveling_wave(&grid, cfg.velocity)?,
        _ => make_perturbed_map(&grid, cfg.seed, cfg.amplitude)?,
    };
    let backend = SpinBackend::spectral(&grid, cfg.s)?;
    let scfg = SpinConfig::new(tau, backend)?.with_tolerance(cfg.fp_tol.unwrap_or(tau * tau))?.with_max_iters(cfg.max_iters)?;
    let steps = num_steps(t_end, tau);
    let snaps = snapshot_steps(steps, cfg.snapshots);
    let line = if vtk { Some(grid_polyline(&grid)?) } else { None };
    let (u, trace) = run_spin_with(&u0, t_end, &scfg, |k, u| {
        if snaps.contains(&k) {
            snapshot(out, k, &grid, u, line.as_ref()).map_err(|e| fraqmap::Error::Io(std::io::Error::other(e.to_string())))?;
        }
        Ok(())
    })?;
    write(out, "trace.csv", &trace.to_csv())?;
    write(out, "conservation.json", &(trace.conservation().to_json() + "\n"))?;

    let weights = scfg.backend.weights();
    let lu = scfg.backend.apply(&u)?;
    let mut m = Map::new();
    m.insert("h".into(), h.into());
    m.insert("tau".into(), tau.into());
    m.insert("steps".into(), steps.into());
    m.insert("initial_energy".into(), trace.initial_energy.into());
    m.insert("final_energy".into(), trace.energies.last().copied().unwrap_or(trace.initial_energy).into());
    m.insert("energy_drift".into(), trace.energy_drift().into());
    m.insert("violation".into(), unit_violation(&u, weights).into());
    m.insert("max_unit_defect".into(), trace.max_unit_defect().into());
    m.insert("max_fp_iters".into(), trace.max_fp_iters().into());
    m.insert("median_fp_iters".into(), trace.median_fp_iters().into());
    let worst = trace.contraction.iter().flatten().copied().fold(None, |a: Option<f64>, q| Some(a.map_or(q, |a| a.max(q))));
    m.insert("max_contraction_ratio".into(), worst.map_or(Value::Null, Value::from));
    m.insert("residual".into(), tangential_norm(&u, &lu, weights.weights()).into());
    if cfg.experiment == Experiment::SpinTravel {
        let exact = traveling_wave_at(&grid, cfg.velocity, steps as f64 * tau);
        m.insert("exact_error".into(), u.max_abs_diff(&exact)?.into());
        m.insert("return_error".into(), u.max_abs_diff(&u0)?.into());
    }
    Ok(m)
}

fn snapshot<D: Discretization>(
    out: &Path,
    k: usize,
    disc: &D,
    u: &NodalField,
    vtk_mesh: Option<&SimplicialMesh>,
) -> Result<(), CliError> {
    write(out, &format!("snapshots/step_{k}.csv"), &write_snapshot_csv(disc, u))?;
    if let Some(mesh) = vtk_mesh {
        write(out, &format!("snapshots/step_{k}.vtk"), &write_vtk(mesh, u, "u")?)?;
    }
    Ok(())
}

fn heat_flow(cfg: &Config, out: &Path, vtk: bool) -> Result<Map<String, Value>, CliError> {
    let mesh = load_mesh(&cfg.mesh)?;
    if mesh.dim() != 2 {
        return Err(CliError::Config(format!("heatflow-defect needs a 2D mesh, `{}` is {}D", cfg.mesh, mesh.dim())));
    }
    let params = FracParams::new(cfg.s, 2, cfg.components)?;
    let a = assemble_fractional_stiffness(&mesh, &params, &cfg.quadrature())?;
    let mass = FlowMass::new(&mesh, cfg.mass)?;
    let u0 = make_random_interior(&mesh, cfg.components, cfg.seed)?;
    let h = mesh.h_max();
    let tau = cfg.time_step(h);
    let opts = FlowOptions {
        tau,
        stop_tol: cfg.stop_tol.unwrap_or(1e-6),
        max_steps: cfg.max_steps,
        stop_norm: cfg.stop_norm,
    };
    let vtk_mesh = vtk.then_some(&mesh);
    snapshot(out, 0, &mesh, &u0, vtk_mesh)?;
    let mut last_written = 0;
    let (u, trace) = run_heat_flow_with(&u0, &a, &mass, &opts, |k, u| {
        if cfg.snapshots > 0 && k % cfg.snapshots == 0 {
            snapshot(out, k, &mesh, u, vtk_mesh).map_err(|e| fraqmap::Error::Io(std::io::Error::other(e.to_string())))?;
            last_written = k;
        }
        Ok(())
    })?;
    if last_written != trace.len() {
        snapshot(out, trace.len(), &mesh, &u, vtk_mesh)?;
    }
    write(out, "trace.csv", &trace.to_csv())?;

    let mut energies = vec![trace.initial_energy];
    energies.extend(trace.records.iter().map(|r| r.energy));
    let decreasing = energies.windows(2).all(|w| w[1] < w[0]);
    let (clusters, location) = defect_clusters(&mesh, &u);
    let mut m = Map::new();
    m.insert("h".into(), h.into());
    m.insert("tau".into(), tau.into());
    m.insert("steps".into(), trace.len().into());
    m.insert("converged".into(), trace.converged.into());
    m.insert("initial_energy".into(), trace.initial_energy.into());
    m.insert("final_energy".into(), energies.last().copied().unwrap_or(trace.initial_energy).into());
    m.insert("energy_strictly_decreasing".into(), decreasing.into());
    m.insert("violation".into(), unit_violation(&u, mass.beta()).into());
    m.insert("residual".into(), harmonic_residual(&u, &a, mass.beta())?.into());
    m.insert("defect_clusters".into(), clusters.into());
    m.insert("defect_location".into(), json!(location));
    Ok(m)
}

/// Connected groups of interior nodes whose largest difference to a
/// neighbour is at least half the maximum over the mesh, and the node with
/// that maximum.
pub fn defect_clusters(mesh: &SimplicialMesh, u: &NodalField) -> (usize, [f64; 2]) {
    let n = mesh.num_nodes();
    let mut neighbours: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for cell in mesh.cells() {
        for &p in cell {
            for &q in cell {
                if p != q {
                    neighbours[p].insert(q);
                }
            }
        }
    }
    let variation: Vec<f64> = (0..n)
        .map(|z| {
            if mesh.node_class(z) != NodeClass::Interior {
                return 0.0;
            }
            neighbours[z]
                .iter()
                .map(|&w| u.get(z).iter().zip(u.get(w)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                .fold(0.0, f64::max)
        })
        .collect();
    let (peak, top) = variation.iter().enumerate().fold((0, 0.0), |(i, m), (j, &v)| if v > m { (j, v) } else { (i, m) });
    if top == 0.0 {
        return (0, mesh.point(peak));
    }
    let marked: Vec<bool> = variation.iter().map(|&v| v >= 0.5 * top).collect();
    let mut seen = vec![false; n];
    let mut clusters = 0;
    for start in 0..n {
        if !marked[start] || seen[start] {
            continue;
        }
        clusters += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(z) = stack.pop() {
            for &w in &neighbours[z] {
                if marked[w] && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    (clusters, mesh.point(peak))
}

/// Largest entrywise relative deviation, entries below `1e-12·max|b|` measured against that floor.
pub fn max_relative_deviation(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let floor = 1e-12 * b.amax();
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs() / y.abs().max(floor)).fold(0.0, f64::max)
}

fn assemble_check(cfg: &Config, out: &Path) -> Result<(Map<String, Value>, bool), CliError> {
    let mesh = load_mesh(&cfg.mesh)?;
    let params = FracParams::new(cfg.s, mesh.dim(), 1)?;
    let a = assemble_fractional_stiffness(&mesh, &params, &cfg.quadrature())?;
    let reference = oracle::stiffness(&mesh, &params, Default::default())?;
    let deviation = max_relative_deviation(a.matrix(), &reference);
    let symmetry = symmetry_defect(a.matrix());
    let min_eig = (mesh.num_nodes() <= EIGEN_NODE_LIMIT)
        .then(|| SymmetricEigen::new(a.matrix().clone()).eigenvalues.min());
    println!("max oracle deviation: {deviation:e}");
    write(out, "stiffness.triplets", &write_triplets(&Triplets::from_dense(a.matrix(), cfg.s)))?;
    write(out, "oracle.triplets", &write_triplets(&Triplets::from_dense(&reference, cfg.s)))?;
    let passed = deviation <= cfg.oracle_tol && symmetry == 0.0 && min_eig.is_none_or(|l| l >= -1e-10);
    let mut m = Map::new();
    m.insert("nodes".into(), mesh.num_nodes().into());
    m.insert("max_oracle_deviation".into(), deviation.into());
    m.insert("symmetry_defect".into(), symmetry.into());
    m.insert("min_eigenvalue".into(), min_eig.map_or(Value::Null, Value::from));
    Ok((m, passed))
}
