//! Run configuration: a JSON document with strict key checking.

use conetip_core::cap::{BoundaryCondition, CapGeometry, MaterialSpec, MeshParams};
use conetip_core::spectrum::DEFAULT_LINE_TOL;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Spectrum,
    Interval,
    Aleph,
    Basis,
    Trajectory,
    Blowup,
    Weights,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Spectrum => "spectrum",
            Subcommand::Interval => "interval",
            Subcommand::Aleph => "aleph",
            Subcommand::Basis => "basis",
            Subcommand::Trajectory => "trajectory",
            Subcommand::Blowup => "blowup",
            Subcommand::Weights => "weights",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Internal,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub kind: GeometryKind,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_outer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_bc: Option<BoundaryCondition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    #[serde(default = "one")]
    pub sigma_plus: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "default_elements")]
    pub elements: usize,
    #[serde(default = "default_order")]
    pub order: u32,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            elements: default_elements(),
            order: default_order(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Contrast range of the `interval` scan.
    #[serde(default = "default_kappa_min")]
    pub kappa_min: f64,
    #[serde(default = "default_kappa_max")]
    pub kappa_max: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_bisect_tol")]
    pub bisect_tol: f64,
    /// Decreasing dissipation values of the `trajectory` command.
    #[serde(default = "default_delta_grid")]
    pub delta_grid: Vec<f64>,
    /// Cutoff radius of singular fields.
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default = "default_blowup_n")]
    pub blowup_n: Vec<u32>,
    /// Aperture list of the `aleph` command; empty means the geometry's alpha.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alphas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kappa_min: default_kappa_min(),
            kappa_max: default_kappa_max(),
            grid: default_grid(),
            bisect_tol: default_bisect_tol(),
            delta_grid: default_delta_grid(),
            rho: 1.0,
            blowup_n: default_blowup_n(),
            alphas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<Subcommand>,
    pub geometry: GeometryConfig,
    pub material: MaterialConfig,
    #[serde(default = "default_modes")]
    pub modes: Vec<u32>,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default = "default_line_tol")]
    pub line_tol: f64,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> f64 {
    1.0
}
fn default_elements() -> usize {
    64
}
fn default_order() -> u32 {
    2
}
fn default_modes() -> Vec<u32> {
    (0..=4).collect()
}
fn default_line_tol() -> f64 {
    DEFAULT_LINE_TOL
}
fn default_kappa_min() -> f64 {
    -6.0
}
fn default_kappa_max() -> f64 {
    -0.05
}
fn default_grid() -> usize {
    40
}
fn default_bisect_tol() -> f64 {
    1e-3
}
fn default_delta_grid() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
}
fn default_blowup_n() -> Vec<u32> {
    vec![20, 40, 60, 80]
}

impl RunConfig {
    pub fn geometry(&self) -> Result<CapGeometry, CliError> {
        let g = &self.geometry;
        let geometry = match g.kind {
            GeometryKind::Internal => {
                if g.alpha_outer.is_some() || g.outer_bc.is_some() {
                    return Err(CliError::Config(
                        "internal tips take neither alpha_outer nor outer_bc".into(),
                    ));
                }
                CapGeometry::internal(g.alpha)?
            }
            GeometryKind::Boundary => {
                let (Some(outer), Some(bc)) = (g.alpha_outer, g.outer_bc) else {
                    return Err(CliError::Config("boundary tips need alpha_outer and outer_bc".into()));
                };
                CapGeometry::boundary(g.alpha, outer, bc)?
            }
        };
        Ok(geometry)
    }

    pub fn material(&self) -> Result<MaterialSpec, CliError> {
        let m = &self.material;
        let spec = match (m.sigma_minus, m.kappa) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give exactly one of material.sigma_minus and material.kappa, not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "material needs one of sigma_minus or kappa".into(),
                ))
            }
            (Some(sm), None) => MaterialSpec::new(m.sigma_plus, sm)?,
            (None, Some(k)) => MaterialSpec::new(m.sigma_plus, k * m.sigma_plus)?,
        };
        if m.delta != 0.0 {
            return Ok(spec.with_delta(m.delta)?);
        }
        Ok(spec)
    }

    pub fn mesh(&self) -> MeshParams {
        MeshParams {
            elements: self.mesh.elements,
            order: self.mesh.order,
        }
    }

    /// Re-checks every guard of the numerical modules.
    pub fn validate(&self) -> Result<(), CliError> {
        let geometry = self.geometry()?;
        let material = self.material()?;
        conetip_core::cap::build_cap(geometry, material, 0, self.mesh.elements, self.mesh.order)?;
        if self.modes.is_empty() {
            return Err(CliError::Config("modes must not be empty".into()));
        }
        let mut sorted = self.modes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.modes.len() {
            return Err(CliError::Config("modes must not repeat".into()));
        }
        if !(self.line_tol > 0.0) {
            return Err(CliError::Config("line_tol must be positive".into()));
        }
        let s = &self.sweep;
        if !(s.kappa_min < s.kappa_max && s.kappa_max < 0.0) {
            return Err(CliError::Config(
                "sweep.kappa_min < sweep.kappa_max < 0 is required".into(),
            ));
        }
        if s.grid < 2 || !(s.bisect_tol > 0.0) {
            return Err(CliError::Config("sweep.grid >= 2 and sweep.bisect_tol > 0 are required".into()));
        }
        if s.delta_grid.is_empty()
            || s.delta_grid.iter().any(|&d| !(d > 0.0))
            || s.delta_grid.windows(2).any(|w| w[0] <= w[1])
        {
            return Err(CliError::Config(
                "sweep.delta_grid must be positive and strictly decreasing".into(),
            ));
        }
        if !(s.rho > 0.0) {
            return Err(CliError::Config("sweep.rho must be positive".into()));
        }
        if s.blowup_n.len() < 4 || s.blowup_n.windows(2).any(|w| w[0] >= w[1]) || s.blowup_n[0] == 0 {
            return Err(CliError::Config(
                "sweep.blowup_n needs at least 4 increasing positive integers".into(),
            ));
        }
        Ok(())
    }

    /// Canonical JSON text (defaults filled in).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}
