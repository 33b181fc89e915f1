use std::path::PathBuf;
use std::process::ExitCode;

use blockade_cli::commands::{self, GridFormat, Settings};
use blockade_cli::output::emit;
use blockade_cli::{verify, CliResult};
use blockade_core::experiments::FamilyKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Symmetry analysis, steady states and synchronization measures for driven
/// dissipative few-level systems.
#[derive(Parser)]
#[command(name = "blockade", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Spin,
    Su3,
}

impl From<FamilyArg> for FamilyKind {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Spin => FamilyKind::Spin,
            FamilyArg::Su3 => FamilyKind::Su3,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Model config (sweep spec for `sweep`).
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Gauss-Legendre nodes per polar angle.
    #[arg(long)]
    quad_theta: Option<usize>,
    /// Uniform phase samples per phase for maximization.
    #[arg(long)]
    phase_grid: Option<usize>,
    /// Coherent family, overriding the config.
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
}

impl Common {
    fn settings(&self) -> Settings {
        Settings {
            theta_nodes: self.quad_theta,
            phase_grid: self.phase_grid,
            family: self.family.map(Into::into),
            ..Settings::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Connectivity blocks, Lie closures and blockade feasibility.
    Symmetry {
        #[command(flatten)]
        common: Common,
        /// Count drive terms as part of the Hamiltonian.
        #[arg(long)]
        include_drives: bool,
    },
    /// Steady-state density matrix with solver diagnostics.
    Steady {
        #[command(flatten)]
        common: Common,
    },
    /// Synchronization measures of the steady state.
    Sync {
        #[command(flatten)]
        common: Common,
        /// Blockade threshold on S_max.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Husimi function of the steady state on a grid.
    Qfunc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 60)]
        theta_points: usize,
        #[arg(long, default_value_t = 120)]
        phi_points: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: GridFormat,
    },
    /// Parameter sweep to CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Adds a 0/1 `blockade` column for S_max at or below this value.
        #[arg(long)]
        threshold: Option<f64>,
        /// JSON metadata sidecar.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Built-in consistency checks.
    Verify,
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Symmetry { common, include_drives } => {
            let cfg = commands::load_config(&common.config)?;
            let s = Settings {
                include_drives,
                ..common.settings()
            };
            emit(&commands::symmetry(&cfg, &s)?, common.out.as_deref())?;
        }
        Command::Steady { common } => {
            let cfg = commands::load_config(&common.config)?;
            emit(&commands::steady(&cfg)?, common.out.as_deref())?;
        }
        Command::Sync { common, threshold } => {
            let cfg = commands::load_config(&common.config)?;
            let s = Settings {
                threshold,
                ..common.settings()
            };
            emit(&commands::sync(&cfg, &s)?, common.out.as_deref())?;
        }
        Command::Qfunc {
            common,
            theta_points,
            phi_points,
            format,
        } => {
            let cfg = commands::load_config(&common.config)?;
            let text = commands::qfunc(&cfg, &common.settings(), theta_points, phi_points, format)?;
            emit(&text, common.out.as_deref())?;
        }
        Command::Sweep {
            common,
            workers,
            threshold,
            meta,
        } => {
            let spec = commands::read_text(&common.config)?;
            let s = Settings {
                workers,
                threshold,
                ..common.settings()
            };
            let out = commands::sweep(&spec, &s)?;
            emit(&out.csv, common.out.as_deref())?;
            if let Some(path) = meta {
                emit(&out.metadata, Some(&path))?;
            }
        }
        Command::Verify => {
            let (text, pass) = verify::run()?;
            print!("{text}");
            return Ok(pass);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
