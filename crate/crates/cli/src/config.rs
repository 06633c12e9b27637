//! Scenario configuration: a sectioned TOML file with flat keys per section.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use cornerflow::{EosFamily, EosModel};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub eos: EosFamily,
    pub flow: FlowConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_name() -> String {
    "custom".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    /// Inflow speed; give either this or `u0_over_c0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0_over_c0: Option<f64>,
    pub tau0: f64,
    /// Wall inclination, radians in (−π/2, 0).
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Segments per boundary characteristic.
    pub n: usize,
    /// Vacuum when c < c_vac·c₀.
    #[serde(default = "tiny")]
    pub c_vac: f64,
    /// Vacuum when ρ < rho_vac·ρ₀.
    #[serde(default = "tiny")]
    pub rho_vac: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Accepted φ mismatch between the two paths, in units of c₀².
    #[serde(default = "default_phi_tol")]
    pub phi_tol: f64,
    /// Worker threads for the march; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
}

fn tiny() -> f64 {
    1e-4
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    50
}
fn default_phi_tol() -> f64 {
    1e-2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    /// Box margin; defaults to 0.05·δ̄(τ₀).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    /// Cut α − β > ε₂; defaults to 0.1·(α₀ + π/2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps2: Option<f64>,
    /// Largest exponent tried for the M₂ scan.
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    /// Number of level curves checked against the slope bound.
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_n_max() -> u32 {
    200
}
fn default_levels() -> usize {
    8
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self { eps1: None, eps2: None, n_max: default_n_max(), levels: default_levels() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    /// Nested resolutions for the refinement study; empty means n/4, n/2, n.
    #[serde(default)]
    pub resolutions: Vec<usize>,
    #[serde(default = "default_pde_ceiling")]
    pub pde_ceiling: f64,
    #[serde(default = "default_dec_ceiling")]
    pub decomposition_ceiling: f64,
    #[serde(default = "default_second_ceiling")]
    pub second_order_ceiling: f64,
}

fn default_pde_ceiling() -> f64 {
    5e-2
}
fn default_dec_ceiling() -> f64 {
    1e-2
}
fn default_second_ceiling() -> f64 {
    5e-2
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            resolutions: Vec::new(),
            pde_ceiling: default_pde_ceiling(),
            decomposition_ceiling: default_dec_ceiling(),
            second_order_ceiling: default_second_ceiling(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Grid,
    Vacuum,
    Audit,
    Boundaries,
    LevelCurves,
    Hypothesis,
    Residuals,
    Report,
}

impl Target {
    pub const ALL: [Target; 8] = [
        Target::Grid,
        Target::Vacuum,
        Target::Audit,
        Target::Boundaries,
        Target::LevelCurves,
        Target::Hypothesis,
        Target::Residuals,
        Target::Report,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "all_targets")]
    pub targets: Vec<Target>,
}

fn default_dir() -> String {
    "out".into()
}
fn all_targets() -> Vec<Target> {
    Target::ALL.to_vec()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir(), targets: all_targets() }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn eos_model(&self) -> Result<EosModel, CliError> {
        EosModel::from_family(&self.eos).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Inflow speed in absolute units.
    pub fn u0(&self, eos: &EosModel) -> Result<f64, CliError> {
        let c0 = eos.sound_speed(self.flow.tau0).map_err(|e| CliError::Config(e.to_string()))?;
        match (self.flow.u0, self.flow.u0_over_c0) {
            (Some(u), None) => Ok(u),
            (None, Some(r)) => Ok(r * c0),
            _ => Err(CliError::Config("give exactly one of flow.u0 and flow.u0_over_c0".into())),
        }
    }

    /// Checks every invariant that can be decided without solving.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let eos = self.eos_model()?;
        let f = &self.flow;
        if !(f.tau0.is_finite() && f.tau0 > eos.tau_min) {
            return bad(format!("flow.tau0 = {} must exceed the validity bound {}", f.tau0, eos.tau_min));
        }
        if !(f.theta > -FRAC_PI_2 && f.theta < 0.0) {
            return bad(format!("flow.theta = {} must lie in (-pi/2, 0)", f.theta));
        }
        let c0 = eos.c(f.tau0);
        let u0 = self.u0(&eos)?;
        if !(u0 > c0) {
            return bad(format!("u0 = {u0} must exceed the sound speed {c0}"));
        }
        let g = &self.grid;
        if g.n < 8 {
            return bad(format!("grid.n = {} must be at least 8", g.n));
        }
        for (name, v) in [("grid.c_vac", g.c_vac), ("grid.rho_vac", g.rho_vac), ("grid.tol", g.tol), ("grid.phi_tol", g.phi_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if g.rho_vac >= 1.0 || g.c_vac >= 1.0 {
            return bad("grid.c_vac and grid.rho_vac are fractions of the inflow values and must be below 1".into());
        }
        if g.max_iter == 0 {
            return bad("grid.max_iter must be positive".into());
        }
        for (name, v) in [("monitor.eps1", self.monitor.eps1), ("monitor.eps2", self.monitor.eps2)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return bad(format!("{name} = {v} must be positive"));
                }
            }
        }
        let r = &self.validation.resolutions;
        if !r.is_empty() {
            if r.len() < 3 {
                return bad("validation.resolutions needs at least 3 entries".into());
            }
            if r.iter().any(|&n| n < 8) || r.windows(2).any(|w| w[1] != 2 * w[0]) {
                return bad(format!("validation.resolutions {r:?} must double at each step from at least 8"));
            }
        }
        if self.output.targets.is_empty() {
            return bad("output.targets is empty".into());
        }
        Ok(())
    }

    /// Refinement resolutions, defaulting to n/4, n/2, n.
    pub fn resolutions(&self) -> Vec<usize> {
        if self.validation.resolutions.is_empty() {
            let n = self.grid.n.max(32);
            vec![n / 4, n / 2, n / 4 * 4]
        } else {
            self.validation.resolutions.clone()
        }
    }
}
