use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use frostsim_core::driver::{self, DriverError, Scenario, SimulationConfig};
use frostsim_core::mechanics::biot_coefficient;
use frostsim_core::mesh::{generate_lshape, write_mesh};

#[derive(Parser)]
#[command(name = "frostsim", version, about = "Frost damage in porous mortar under climatic loading")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation.
    Run {
        /// JSON configuration; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory, overriding the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write an L-shaped corner mesh.
    MakeMesh {
        #[arg(long, default_value_t = 1.0)]
        outer: f64,
        #[arg(long, default_value_t = 0.4)]
        thickness: f64,
        #[arg(long, default_value_t = 0.045)]
        h: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the transport material functions.
    MaterialCurves {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a configuration and print derived quantities.
    CheckConfig { config: PathBuf },
}

fn load(config: Option<&Path>) -> Result<(SimulationConfig, PathBuf), DriverError> {
    match config {
        Some(path) => SimulationConfig::load(path),
        None => Ok((SimulationConfig::default(), PathBuf::from("."))),
    }
}

fn execute(command: Command) -> Result<(), DriverError> {
    match command {
        Command::Run { config, out } => {
            let (cfg, base) = load(config.as_deref())?;
            let scenario = Scenario::prepare(cfg, &base)?;
            let out = out.unwrap_or_else(|| scenario.output_dir());
            let summary = scenario.run(Some(&out), |_| {})?;
            let peak = summary.mechanics.d_w.iter().copied().fold(0.0, f64::max);
            println!(
                "{} steps, {} transport solves, {} halved steps, peak d_w = {peak:.4}",
                summary.steps, summary.picard_solves, summary.halved_steps
            );
            if summary.unconverged_mechanics > 0 {
                eprintln!("warning: damage iteration hit its limit in {} steps", summary.unconverged_mechanics);
            }
            println!("wrote {} files to {}", summary.files.len(), out.display());
        }
        Command::MakeMesh { outer, thickness, h, out } => {
            let mesh = generate_lshape(outer, thickness, h).map_err(|e| DriverError::Config(e.to_string()))?;
            std::fs::write(&out, write_mesh(&mesh)).map_err(|source| DriverError::Io { path: out.clone(), source })?;
            println!("{} nodes, {} elements -> {}", mesh.node_count(), mesh.element_count(), out.display());
        }
        Command::MaterialCurves { config, out } => {
            let (cfg, _) = load(config.as_deref())?;
            let params = cfg.transport.build().map_err(|e| DriverError::Config(e.to_string()))?;
            for path in driver::write_material_curves(&params, &out)? {
                println!("{}", path.display());
            }
        }
        Command::CheckConfig { config } => {
            let (cfg, base) = SimulationConfig::load(&config)?;
            let scenario = Scenario::prepare(cfg, &base)?;
            let n = scenario.porosity();
            let b = biot_coefficient(n).map_err(|e| DriverError::Config(e.to_string()))?;
            println!("configuration ok");
            println!("mesh: {} nodes, {} elements", scenario.mesh.node_count(), scenario.mesh.element_count());
            println!("b_phi = {}", scenario.material.params.b_phi);
            println!("eps_0 = {}", scenario.config.mechanics.eps_0());
            println!("porosity n = {n}");
            println!("biot b = {b}");
            println!("probe nodes: {:?}", scenario.probe_nodes);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
