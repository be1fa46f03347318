//! Staggered simulation: per step, transport, then ice pressure from the
//! new temperature, then mechanics. Nothing flows back into transport.

mod config;
mod output;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{Ambient, IceSection, MeshSource, OutputSection, ProbeSpec, SimulationConfig, SurfaceSection, TimeSection};
pub use output::{
    read_probe_csv, render_vtk, write_field_snapshot, write_material_curves, write_probe_csv, ProbeRecord, ProbeValue,
    SnapshotFields, PROBE_HEADER,
};

use crate::climate::{ClimateSample, ClimateSeries};
use crate::ice::IceModel;
use crate::mechanics::{MechReport, MechState, MechanicsModel};
use crate::mesh::{BoundaryTag, Mesh};
use crate::transport::{BoundaryConditions, KunzelMaterial, SurfaceCondition, TransportModel, TransportState};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl DriverError {
    /// Process exit code for the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            DriverError::Config(_) => 2,
            DriverError::Solver(_) => 3,
            DriverError::Io { .. } => 4,
        }
    }
}

/// What an observer sees after each completed step.
pub struct StepView<'a> {
    pub step: usize,
    pub time_h: f64,
    pub climate: ClimateSample,
    pub transport: &'a TransportState,
    pub mechanics: &'a MechState,
    pub mech_report: &'a MechReport,
    /// Per element [Pa].
    pub p_p: &'a [f64],
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub transport: TransportState,
    pub mechanics: MechState,
    pub probes: Vec<ProbeRecord>,
    pub probe_nodes: Vec<usize>,
    /// Linear solves summed over all transport steps.
    pub picard_solves: usize,
    /// Steps that needed at least one halving.
    pub halved_steps: usize,
    /// Steps whose damage iteration hit its limit.
    pub unconverged_mechanics: usize,
    pub files: Vec<PathBuf>,
}

/// Validated inputs of one run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: SimulationConfig,
    pub mesh: Mesh,
    pub material: KunzelMaterial,
    pub climate: ClimateSeries,
    pub probe_nodes: Vec<usize>,
    /// Directory against which relative output paths resolve.
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn prepare(config: SimulationConfig, base_dir: &Path) -> Result<Self, DriverError> {
        config.check_scalars()?;
        let mesh = config.build_mesh(base_dir)?;
        let params = config.transport.build().map_err(|e| DriverError::Config(format!("transport: {e}")))?;
        let psd = config.build_psd(base_dir)?;
        let ice_params = config.ice_params(&psd);
        let ice = IceModel::new(ice_params, psd, config.ice.content_model)
            .map_err(|e| DriverError::Config(format!("ice: {e}")))?;
        config.mechanics.validate().map_err(|e| DriverError::Config(e.to_string()))?;
        let climate = config.build_climate(base_dir)?;
        let probe_nodes = config.resolve_probes(&mesh)?;
        Ok(Self {
            config,
            mesh,
            material: KunzelMaterial { params, ice: Some(ice) },
            climate,
            probe_nodes,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn porosity(&self) -> f64 {
        self.ice().params().n
    }

    pub fn ice(&self) -> &IceModel {
        self.material.ice.as_ref().expect("scenario always carries an ice model")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.config.output.dir)
    }

    /// Surface conditions at time `t` [s].
    pub fn boundary(&self, t: f64) -> (BoundaryConditions, ClimateSample) {
        let s = &self.config.surface;
        let c = self.climate.sample(t);
        let mut bc = BoundaryConditions { vapor: s.vapor_exchange, ..Default::default() };
        bc.set(
            BoundaryTag::Ext,
            SurfaceCondition {
                theta_ambient: c.theta,
                phi_ambient: c.phi,
                alpha_h: s.alpha_h,
                beta_v: s.beta_v,
                heat_flux: s.alpha_swr * c.swr,
                moisture_flux: c.rain,
            },
        );
        let int = self.config.interior;
        bc.set(
            BoundaryTag::Int,
            SurfaceCondition {
                theta_ambient: int.theta,
                phi_ambient: int.phi,
                alpha_h: s.alpha_h,
                beta_v: s.beta_v,
                heat_flux: 0.0,
                moisture_flux: 0.0,
            },
        );
        (bc, c)
    }

    /// Pore pressure per element from centroid temperatures.
    pub fn pore_pressures(&self, theta: &[f64]) -> Vec<f64> {
        let centroid = self.mesh.centroid_values(theta);
        let ice = self.ice();
        self.config.transport_solver.execution.map_range(centroid.len(), |e| ice.pore_pressure(centroid[e]))
    }

    fn advance(
        &self,
        model: &TransportModel<'_, KunzelMaterial>,
        state: &TransportState,
        step: usize,
    ) -> Result<(TransportState, usize, bool), DriverError> {
        let time = &self.config.time;
        let mut last_error = None;
        for level in 0..=time.max_halvings {
            let parts = 1usize << level;
            let h = time.dt / parts as f64;
            let mut s = state.clone();
            let mut solves = 0;
            let mut failed = false;
            for k in 1..=parts {
                let t_end = if k == parts { state.t + time.dt } else { state.t + k as f64 * h };
                let (bc, _) = self.boundary(t_end);
                match model.step(&s, t_end - s.t, time.gamma, &bc) {
                    Ok((next, report)) => {
                        solves += report.iterations;
                        s = next;
                    }
                    Err(e) => {
                        last_error = Some(e);
                        failed = true;
                        break;
                    }
                }
            }
            if !failed {
                return Ok((s, solves, level > 0));
            }
        }
        Err(DriverError::Solver(format!(
            "transport step {step} (t = {} h) failed after {} halvings: {}",
            (state.t + time.dt) / 3600.0,
            time.max_halvings,
            last_error.map(|e| e.to_string()).unwrap_or_default()
        )))
    }

    fn probe_record(&self, time_h: f64, tr: &TransportState, mech: &MechState, p_p: &[f64]) -> ProbeRecord {
        let probes = self
            .probe_nodes
            .iter()
            .map(|&node| ProbeValue {
                node,
                theta: tr.theta[node],
                phi: tr.phi[node],
                p_p: self.mesh.node_average(node, p_p),
                d_w: self.mesh.node_average(node, &mech.d_w),
                u_mag: mech.displacement_magnitude(node),
            })
            .collect();
        ProbeRecord { time_h, probes }
    }

    /// Runs all steps. With `out_dir`, writes `probes.csv` and VTK
    /// snapshots there.
    pub fn run(
        &self,
        out_dir: Option<&Path>,
        mut observer: impl FnMut(&StepView<'_>),
    ) -> Result<RunSummary, DriverError> {
        let cfg = &self.config;
        let mesh = &self.mesh;
        let model = TransportModel::new(mesh, &self.material, cfg.transport_solver.clone());
        let mut mech_model = MechanicsModel::new(mesh, cfg.mechanics.clone(), self.porosity(), cfg.mechanics_solver.clone())
            .map_err(|e| DriverError::Config(e.to_string()))?;

        let mut transport = TransportState::uniform(mesh.node_count(), cfg.initial.theta, cfg.initial.phi);
        let (bc0, _) = self.boundary(0.0);
        transport.rdot = model
            .consistent_rate(&transport, &bc0)
            .map_err(|e| DriverError::Solver(format!("initial rate: {e}")))?;
        let mut mech = MechState::undeformed(mesh.node_count(), mesh.element_count());

        if let Some(dir) = out_dir {
            std::fs::create_dir_all(dir).map_err(|source| DriverError::Io { path: dir.to_path_buf(), source })?;
        }
        let mut files = Vec::new();
        let mut probes = Vec::with_capacity(cfg.time.steps);
        let (mut picard_solves, mut halved_steps, mut unconverged_mechanics) = (0, 0, 0);

        for step in 1..=cfg.time.steps {
            let (next, solves, halved) = self.advance(&model, &transport, step)?;
            transport = next;
            picard_solves += solves;
            halved_steps += usize::from(halved);

            let p_p = self.pore_pressures(&transport.theta);
            let (next_mech, report) = mech_model
                .solve_equilibrium(&transport.theta, cfg.initial.theta, &p_p, &mech)
                .map_err(|e| DriverError::Solver(format!("mechanics at step {step}: {e}")))?;
            mech = next_mech;
            unconverged_mechanics += usize::from(!report.converged);

            let time_h = transport.t / 3600.0;
            probes.push(self.probe_record(time_h, &transport, &mech, &p_p));
            let (_, climate) = self.boundary(transport.t);
            observer(&StepView {
                step,
                time_h,
                climate,
                transport: &transport,
                mechanics: &mech,
                mech_report: &report,
                p_p: &p_p,
            });

            let every = cfg.output.snapshot_every;
            if let Some(dir) = out_dir {
                if every > 0 && (step % every == 0 || step == cfg.time.steps) {
                    let path = dir.join(format!("field_{step:04}.vtk"));
                    let fields = SnapshotFields {
                        time_h,
                        theta: &transport.theta,
                        phi: &transport.phi,
                        u: &mech.u,
                        p_p: &p_p,
                        d_w: &mech.d_w,
                        kappa: &mech.kappa,
                    };
                    write_field_snapshot(mesh, &fields, &path)?;
                    files.push(path);
                }
            }
        }

        if let Some(dir) = out_dir {
            let path = dir.join("probes.csv");
            write_probe_csv(&probes, &path)?;
            files.push(path);
        }
        Ok(RunSummary {
            steps: cfg.time.steps,
            transport,
            mechanics: mech,
            probes,
            probe_nodes: self.probe_nodes.clone(),
            picard_solves,
            halved_steps,
            unconverged_mechanics,
            files,
        })
    }
}

/// Prepares and runs a configuration without an observer.
pub fn run(config: SimulationConfig, base_dir: &Path, out_dir: Option<&Path>) -> Result<RunSummary, DriverError> {
    Scenario::prepare(config, base_dir)?.run(out_dir, |_| {})
}
