//! Experiment configuration: built-in defaults, a flat JSON file and
//! `--key=value` overrides, applied in that order.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use fraqmap::heatflow::{MassKind, StopNorm};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    SpinTravel,
    SpinPerturbed,
    HeatflowDefect,
    AssembleCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 4] =
        [Experiment::SpinTravel, Experiment::SpinPerturbed, Experiment::HeatflowDefect, Experiment::AssembleCheck];

    pub fn name(self) -> &'static str {
        match self {
            Self::SpinTravel => "spin-travel",
            Self::SpinPerturbed => "spin-perturbed",
            Self::HeatflowDefect => "heatflow-defect",
            Self::AssembleCheck => "assemble-check",
        }
    }

    pub fn is_spin(self) -> bool {
        matches!(self, Self::SpinTravel | Self::SpinPerturbed)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment `{s}`")))
    }
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub experiment: Experiment,
    pub s: f64,
    pub seed: u64,
    /// Grid size of the spin experiments.
    pub m: usize,
    pub velocity: f64,
    pub amplitude: f64,
    pub mesh: String,
    /// Target dimension of the heat flow.
    pub components: usize,
    pub mass: MassKind,
    pub stop_norm: StopNorm,
    /// Absolute time step; overrides `tau_factor`.
    pub tau: Option<f64>,
    /// Time step as a multiple of the mesh size.
    pub tau_factor: f64,
    pub t_end: Option<f64>,
    pub stop_tol: Option<f64>,
    pub max_steps: usize,
    /// Fixed-point tolerance; `τ²` when unset.
    pub fp_tol: Option<f64>,
    pub max_iters: usize,
    pub quad_sing_order: usize,
    pub quad_far_order: usize,
    pub far_tol: f64,
    pub oracle_tol: f64,
    /// Spin: number of equal snapshot intervals. Heat flow: snapshot every this many steps (0: first and last only).
    pub snapshots: usize,
}

const KEYS: [&str; 22] = [
    "amplitude",
    "components",
    "far_tol",
    "fp_tol",
    "mass",
    "max_iters",
    "max_steps",
    "mesh",
    "m",
    "oracle_tol",
    "quad_far_order",
    "quad_sing_order",
    "s",
    "seed",
    "snapshots",
    "stop_norm",
    "stop_tol",
    "t_end",
    "tau",
    "tau_factor",
    "velocity",
    "experiment",
];

impl Config {
    pub fn defaults(experiment: Experiment) -> Self {
        let q = fraqmap::fem::QuadratureSpec::default();
        let mut c = Self {
            experiment,
            s: 0.5,
            seed: 0,
            m: 32,
            velocity: 0.5,
            amplitude: fraqmap::spin::DEFAULT_AMPLITUDE,
            mesh: "data/meshes/square_disk_h0.1.mesh".into(),
            components: 2,
            mass: MassKind::Consistent,
            stop_norm: StopNorm::L2,
            tau: None,
            tau_factor: 0.1,
            t_end: None,
            stop_tol: None,
            max_steps: 10_000,
            fp_tol: None,
            max_iters: 100,
            quad_sing_order: q.q_sing,
            quad_far_order: q.q_far,
            far_tol: q.far_tol,
            oracle_tol: 1e-6,
            snapshots: 5,
        };
        match experiment {
            Experiment::SpinTravel => c.t_end = Some(4.0 * PI),
            Experiment::SpinPerturbed => {
                c.m = 64;
                c.t_end = Some(4.0);
            }
            Experiment::HeatflowDefect => {
                c.s = 0.2;
                c.tau_factor = 2.0;
                c.stop_tol = Some(1e-6);
                c.snapshots = 0;
            }
            Experiment::AssembleCheck => c.mesh = "data/meshes/interval_6.mesh".into(),
        }
        c
    }

    /// Defaults, then the keys of `file` (a flat JSON object), then `overrides`.
    pub fn resolve(experiment: Experiment, file: Option<&str>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut c = Self::defaults(experiment);
        if let Some(text) = file {
            let value: Value =
                serde_json::from_str(text).map_err(|e| CliError::Config(format!("config file is not valid JSON: {e}")))?;
            let Value::Object(map) = value else {
                return Err(CliError::Config("config file must hold a JSON object".into()));
            };
            for (key, v) in &map {
                c.set(key, v)?;
            }
        }
        for (key, raw) in overrides {
            // bare words are strings, everything else is read as JSON
            let v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
            c.set(key, &v)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, key: &str, v: &Value) -> Result<(), CliError> {
        match key {
            "experiment" => {
                let name = string(key, v)?;
                if name != self.experiment.name() {
                    return Err(bad(key, format!("config is for `{name}` but `{}` was requested", self.experiment)));
                }
            }
            "s" => self.s = float(key, v)?,
            "seed" => self.seed = uint(key, v)?,
            "m" => self.m = uint(key, v)? as usize,
            "velocity" => self.velocity = float(key, v)?,
            "amplitude" => self.amplitude = float(key, v)?,
            "mesh" => self.mesh = string(key, v)?,
            "components" => self.components = uint(key, v)? as usize,
            "mass" => {
                self.mass = match string(key, v)?.as_str() {
                    "consistent" => MassKind::Consistent,
                    "lumped" => MassKind::Lumped,
                    other => return Err(bad(key, format!("expected `consistent` or `lumped`, got `{other}`"))),
                }
            }
            "stop_norm" => {
                self.stop_norm = match string(key, v)?.as_str() {
                    "l2" => StopNorm::L2,
                    "energy" => StopNorm::Energy,
                    other => return Err(bad(key, format!("expected `l2` or `energy`, got `{other}`"))),
                }
            }
            "tau" => self.tau = optional(key, v, float)?,
            "tau_factor" => self.tau_factor = float(key, v)?,
            "t_end" => self.t_end = optional(key, v, float)?,
            "stop_tol" => self.stop_tol = optional(key, v, float)?,
            "max_steps" => self.max_steps = uint(key, v)? as usize,
            "fp_tol" => self.fp_tol = optional(key, v, float)?,
            "max_iters" => self.max_iters = uint(key, v)? as usize,
            "quad_sing_order" => self.quad_sing_order = uint(key, v)? as usize,
            "quad_far_order" => self.quad_far_order = uint(key, v)? as usize,
            "far_tol" => self.far_tol = float(key, v)?,
            "oracle_tol" => self.oracle_tol = float(key, v)?,
            "snapshots" => self.snapshots = uint(key, v)? as usize,
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |key: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(bad(key, format!("must be positive, got {x}")))
            }
        };
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(bad("s", format!("must lie in (0, 1), got {}", self.s)));
        }
        if let Some(t) = self.tau {
            positive("tau", t)?;
        }
        positive("tau_factor", self.tau_factor)?;
        positive("oracle_tol", self.oracle_tol)?;
        if let Some(t) = self.fp_tol {
            positive("fp_tol", t)?;
        }
        if self.max_iters == 0 {
            return Err(bad("max_iters", "must be at least 1"));
        }
        if self.experiment.is_spin() {
            if self.stop_tol.is_some() {
                return Err(bad("stop_tol", "spin experiments terminate at t_end"));
            }
            match self.t_end {
                Some(t) if t >= 0.0 && t.is_finite() => {}
                Some(t) => return Err(bad("t_end", format!("must be non-negative, got {t}"))),
                None => return Err(bad("t_end", "spin experiments need a final time")),
            }
            if self.m < 4 || self.m % 2 == 1 {
                return Err(bad("m", format!("must be even and at least 4, got {}", self.m)));
            }
            if !(self.velocity.abs() < 1.0) {
                return Err(bad("velocity", format!("must satisfy |v| < 1, got {}", self.velocity)));
            }
            if !(0.0..=0.5).contains(&self.amplitude) {
                return Err(bad("amplitude", format!("must lie in [0, 1/2], got {}", self.amplitude)));
            }
        }
        if self.experiment == Experiment::HeatflowDefect {
            if self.t_end.is_some() {
                return Err(bad("t_end", "heat flow terminates on stop_tol"));
            }
            match self.stop_tol {
                Some(t) => positive("stop_tol", t)?,
                None => return Err(bad("stop_tol", "heat flow needs a stopping tolerance")),
            }
            if self.max_steps == 0 {
                return Err(bad("max_steps", "must be at least 1"));
            }
            if self.components != 2 && self.components != 3 {
                return Err(bad("components", format!("must be 2 or 3, got {}", self.components)));
            }
        }
        if !self.experiment.is_spin() {
            self.quadrature().validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn quadrature(&self) -> fraqmap::fem::QuadratureSpec {
        fraqmap::fem::QuadratureSpec { q_sing: self.quad_sing_order, q_far: self.quad_far_order, far_tol: self.far_tol }
    }

    /// Time step for mesh size `h`.
    pub fn time_step(&self, h: f64) -> f64 {
        self.tau.unwrap_or(self.tau_factor * h)
    }

    /// Every key with its resolved value, keys sorted.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        let opt = |x: Option<f64>| x.map_or(Value::Null, Value::from);
        m.insert("experiment".into(), self.experiment.name().into());
        m.insert("s".into(), self.s.into());
        m.insert("seed".into(), self.seed.into());
        m.insert("m".into(), self.m.into());
        m.insert("velocity".into(), self.velocity.into());
        m.insert("amplitude".into(), self.amplitude.into());
        m.insert("mesh".into(), self.mesh.clone().into());
        m.insert("components".into(), self.components.into());
        m.insert(
            "mass".into(),
            match self.mass {
                MassKind::Consistent => "consistent",
                MassKind::Lumped => "lumped",
            }
            .into(),
        );
        m.insert(
            "stop_norm".into(),
            match self.stop_norm {
                StopNorm::L2 => "l2",
                StopNorm::Energy => "energy",
            }
            .into(),
        );
        m.insert("tau".into(), opt(self.tau));
        m.insert("tau_factor".into(), self.tau_factor.into());
        m.insert("t_end".into(), opt(self.t_end));
        m.insert("stop_tol".into(), opt(self.stop_tol));
        m.insert("max_steps".into(), self.max_steps.into());
        m.insert("fp_tol".into(), opt(self.fp_tol));
        m.insert("max_iters".into(), self.max_iters.into());
        m.insert("quad_sing_order".into(), self.quad_sing_order.into());
        m.insert("quad_far_order".into(), self.quad_far_order.into());
        m.insert("far_tol".into(), self.far_tol.into());
        m.insert("oracle_tol".into(), self.oracle_tol.into());
        m.insert("snapshots".into(), self.snapshots.into());
        debug_assert!(m.keys().all(|k| KEYS.contains(&k.as_str())));
        Value::Object(m)
    }
}

fn bad(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("invalid value for `{key}`: {}", reason.into()))
}

fn float(key: &str, v: &Value) -> Result<f64, CliError> {
    v.as_f64().ok_or_else(|| bad(key, format!("expected a number, got {v}")))
}

fn uint(key: &str, v: &Value) -> Result<u64, CliError> {
    v.as_u64().ok_or_else(|| bad(key, format!("expected a non-negative integer, got {v}")))
}

fn string(key: &str, v: &Value) -> Result<String, CliError> {
    v.as_str().map(str::to_owned).ok_or_else(|| bad(key, format!("expected a string, got {v}")))
}

fn optional<T>(key: &str, v: &Value, f: fn(&str, &Value) -> Result<T, CliError>) -> Result<Option<T>, CliError> {
    if v.is_null() {
        Ok(None)
    } else {
        f(key, v).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_is_cli_then_file_then_defaults() {
        let file = r#"{"s": 0.3, "m": 48, "seed": 7}"#;
        let over = vec![("s".to_string(), "0.4".to_string())];
        let c = Config::resolve(Experiment::SpinPerturbed, Some(file), &over).unwrap();
        assert_eq!(c.s, 0.4);
        assert_eq!(c.m, 48);
        assert_eq!(c.seed, 7);
        assert_eq!(c.t_end, Some(4.0));
        assert_eq!(c.amplitude, 0.05);
    }

    #[test]
    fn bad_keys_name_the_offender() {
        for (file, key) in [
            (r#"{"bogus": 1}"#, "bogus"),
            (r#"{"s": 1.5}"#, "s"),
            (r#"{"m": 7}"#, "m"),
            (r#"{"stop_tol": 1e-6}"#, "stop_tol"),
            (r#"{"mass": "heavy"}"#, "mass"),
        ] {
            let err = Config::resolve(Experiment::SpinTravel, Some(file), &[]).unwrap_err();
            assert!(err.to_string().contains(&format!("`{key}`")), "{err}");
        }
        assert!(Config::resolve(Experiment::HeatflowDefect, Some(r#"{"t_end": 1}"#), &[]).is_err());
        assert!(Config::resolve(Experiment::HeatflowDefect, Some("[1]"), &[]).is_err());
        assert!(Config::resolve(Experiment::AssembleCheck, None, &[("quad_sing_order".into(), "1".into())]).is_err());
    }

    #[test]
    fn echo_covers_every_key() {
        let json = Config::defaults(Experiment::HeatflowDefect).to_json();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        let mut all = KEYS.to_vec();
        all.sort_unstable();
        assert_eq!(keys, all);
        let back = Config::resolve(Experiment::HeatflowDefect, Some(&json.to_string()), &[]).unwrap();
        assert_eq!(back, Config::defaults(Experiment::HeatflowDefect));
    }
}
