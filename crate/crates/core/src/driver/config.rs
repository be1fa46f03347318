//! JSON run configuration. Every section has defaults, so `{}` is a
//! complete configuration of the reference wall-corner scenario.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::DriverError;
use crate::climate::{load_climate, ClimateSeries};
use crate::constitutive::TransportInputs;
use crate::ice::{IceContentModel, IceParams, PoreSizeDistribution};
use crate::mechanics::{MechOptions, MechParams};
use crate::mesh::{generate_lshape, load_mesh, Mesh};
use crate::transport::{TransportOptions, VaporExchange};

const PSD_SPEC01: &str = include_str!("../../data/psd_spec01.csv");
const PSD_SPEC02: &str = include_str!("../../data/psd_spec02.csv");
const CLIMATE_WINTER: &str = include_str!("../../data/climate_synthetic_winter.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    /// L-shaped corner from the built-in generator.
    Lshape { outer: f64, thickness: f64, h: f64 },
    /// Mesh text file, relative to the configuration file.
    File(PathBuf),
}

impl Default for MeshSource {
    fn default() -> Self {
        MeshSource::Lshape { outer: 1.0, thickness: 0.4, h: 0.045 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IceSection {
    pub gamma_li: f64,
    pub delta_s_m: f64,
    /// Total porosity; taken from the pore size distribution when absent.
    pub porosity: Option<f64>,
    pub p_l: f64,
    /// `spec01`, `spec02` or a CSV path.
    pub psd: String,
    pub content_model: IceContentModel,
}

impl Default for IceSection {
    fn default() -> Self {
        let p = IceParams::default();
        Self {
            gamma_li: p.gamma_li,
            delta_s_m: p.delta_s_m,
            porosity: None,
            p_l: p.p_l,
            psd: "spec01".into(),
            content_model: IceContentModel::FreezableFraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ambient {
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceSection {
    pub alpha_h: f64,
    pub beta_v: f64,
    pub alpha_swr: f64,
    pub vapor_exchange: VaporExchange,
}

impl Default for SurfaceSection {
    fn default() -> Self {
        Self { alpha_h: 8.0, beta_v: 5.6e-8, alpha_swr: 0.6, vapor_exchange: VaporExchange::PartialPressure }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    /// Step length [s].
    pub dt: f64,
    pub steps: usize,
    pub gamma: f64,
    /// How often a failed transport step may be retried with half the step.
    pub max_halvings: u32,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: 3600.0, steps: 744, gamma: 0.5, max_halvings: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ProbeSpec {
    Node { node: usize },
    Point { x: f64, y: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory, relative to the configuration file.
    pub dir: PathBuf,
    /// Steps between field snapshots; 0 disables snapshots. The final
    /// step is always written when snapshots are enabled.
    pub snapshot_every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("output"), snapshot_every: 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub mesh: MeshSource,
    pub transport: TransportInputs,
    pub ice: IceSection,
    pub mechanics: MechParams,
    pub mechanics_solver: MechOptions,
    pub transport_solver: TransportOptions,
    /// `synthetic-winter` or a CSV path.
    pub climate: String,
    pub interior: Ambient,
    pub initial: Ambient,
    pub surface: SurfaceSection,
    pub time: TimeSection,
    pub probes: Vec<ProbeSpec>,
    pub output: OutputSection,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            mesh: MeshSource::default(),
            transport: TransportInputs::default(),
            ice: IceSection::default(),
            mechanics: MechParams::default(),
            mechanics_solver: MechOptions::default(),
            transport_solver: TransportOptions::default(),
            climate: "synthetic-winter".into(),
            interior: Ambient { theta: 24.0, phi: 0.6 },
            initial: Ambient { theta: 14.0, phi: 0.5 },
            surface: SurfaceSection::default(),
            time: TimeSection::default(),
            probes: [0.0, 0.05, 0.1, 0.2, 0.4].iter().map(|&s| ProbeSpec::Point { x: s, y: s }).collect(),
            output: OutputSection::default(),
        }
    }
}

fn config_error(message: impl Into<String>) -> DriverError {
    DriverError::Config(message.into())
}

fn read_text(path: &Path) -> Result<String, DriverError> {
    std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self, DriverError> {
        serde_json::from_str(text).map_err(|e| config_error(format!("invalid configuration: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Reads a configuration file; relative paths inside it resolve against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf), DriverError> {
        let text = read_text(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_json(&text)?, base))
    }

    pub(crate) fn check_scalars(&self) -> Result<(), DriverError> {
        let t = &self.time;
        if !(t.dt > 0.0 && t.dt.is_finite()) {
            return Err(config_error(format!("time.dt must be positive, got {}", t.dt)));
        }
        if t.steps == 0 {
            return Err(config_error("time.steps must be at least 1"));
        }
        if !(0.0..=1.0).contains(&t.gamma) {
            return Err(config_error(format!("time.gamma must lie in [0, 1], got {}", t.gamma)));
        }
        let s = &self.surface;
        for (name, v) in [("alpha_h", s.alpha_h), ("beta_v", s.beta_v), ("alpha_swr", s.alpha_swr)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(config_error(format!("surface.{name} must be non-negative, got {v}")));
            }
        }
        for (name, a) in [("interior", self.interior), ("initial", self.initial)] {
            if !(0.0..=1.0).contains(&a.phi) {
                return Err(config_error(format!("{name}.phi = {} outside [0, 1]", a.phi)));
            }
            if !a.theta.is_finite() {
                return Err(config_error(format!("{name}.theta must be finite")));
            }
        }
        self.transport_solver
            .picard
            .validate()
            .map_err(|e| config_error(e.to_string()))?;
        Ok(())
    }

    pub(crate) fn build_mesh(&self, base: &Path) -> Result<Mesh, DriverError> {
        let mesh = match &self.mesh {
            MeshSource::Lshape { outer, thickness, h } => generate_lshape(*outer, *thickness, *h),
            MeshSource::File(p) => load_mesh(&read_text(&base.join(p))?),
        };
        mesh.map_err(|e| config_error(format!("mesh: {e}")))
    }

    pub(crate) fn build_psd(&self, base: &Path) -> Result<PoreSizeDistribution, DriverError> {
        let text = match self.ice.psd.as_str() {
            "spec01" => PSD_SPEC01.to_owned(),
            "spec02" => PSD_SPEC02.to_owned(),
            path => read_text(&base.join(path))?,
        };
        PoreSizeDistribution::from_csv(&text).map_err(|e| config_error(format!("ice.psd: {e}")))
    }

    pub(crate) fn ice_params(&self, psd: &PoreSizeDistribution) -> IceParams {
        IceParams {
            gamma_li: self.ice.gamma_li,
            delta_s_m: self.ice.delta_s_m,
            n: self.ice.porosity.unwrap_or(psd.porosity()),
            p_l: self.ice.p_l,
        }
    }

    pub(crate) fn build_climate(&self, base: &Path) -> Result<ClimateSeries, DriverError> {
        let text = match self.climate.as_str() {
            "synthetic-winter" => CLIMATE_WINTER.to_owned(),
            path => read_text(&base.join(path))?,
        };
        load_climate(&text).map_err(|e| config_error(e.to_string()))
    }

    pub(crate) fn resolve_probes(&self, mesh: &Mesh) -> Result<Vec<usize>, DriverError> {
        self.probes
            .iter()
            .map(|p| match *p {
                ProbeSpec::Node { node } if node < mesh.node_count() => Ok(node),
                ProbeSpec::Node { node } => Err(config_error(format!(
                    "probe node {node} does not exist (mesh has {} nodes)",
                    mesh.node_count()
                ))),
                ProbeSpec::Point { x, y } => Ok(mesh.nearest_node(x, y)),
            })
            .collect()
    }
}
