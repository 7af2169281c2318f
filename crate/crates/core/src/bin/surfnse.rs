use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use surfnse::experiments::{run_convergence, run_energy, run_penalty_sweep, ExperimentConfig, TauRule};
use surfnse::{CaseId, NonlinearForm, SolverBackend};

#[derive(Parser)]
#[command(name = "surfnse", version, about = "Trace FEM for surface Navier-Stokes on the unit sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error norms and observed rates over a range of levels.
    Convergence {
        /// Inclusive range `a..b` or comma list.
        #[arg(long, default_value = "1..3")]
        levels: String,
        #[arg(long, default_value = "exact1")]
        case: CaseId,
        /// `h-K` for tau = h^-K, or a number.
        #[arg(long = "tau-rule", default_value = "h-2")]
        tau: TauRule,
        /// Fixed time step; defaults to 2^(1-level)/10.
        #[arg(long)]
        dt: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Errors as a function of the penalty parameter tau = 2^k.
    PenaltySweep {
        #[arg(long, default_value_t = 3)]
        level: u32,
        #[arg(long, default_value_t = 0.02)]
        dt: f64,
        #[arg(long, default_value = "sol2b")]
        case: CaseId,
        /// Inclusive range `a..b` or comma list.
        #[arg(long = "tau-exponents", default_value = "0..16")]
        tau_exponents: String,
        #[command(flatten)]
        common: Common,
    },
    /// Kinetic energy history.
    Energy {
        #[arg(long, default_value_t = 3)]
        level: u32,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        #[arg(long, default_value = "killing")]
        case: CaseId,
        #[arg(long = "tau-rule", default_value = "h-2")]
        tau: TauRule,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long, default_value = "convective")]
    form: NonlinearForm,
    /// `direct` or `gmres`; by default GMRES from level 3 on.
    #[arg(long)]
    solver: Option<SolverBackend>,
    #[arg(long = "quad-degree", default_value_t = 4)]
    quad_degree: usize,
    /// Permit levels above 4.
    #[arg(long = "allow-large")]
    allow_large: bool,
    /// Write VTK snapshots of the final state.
    #[arg(long)]
    vtk: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_range<T: TryFrom<i64>>(s: &str) -> Result<Vec<T>, String> {
    let one = |x: &str| x.trim().parse::<i64>().map_err(|_| format!("bad number {x:?}"));
    let values: Vec<i64> = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (one(a)?, one(b)?);
        if a > b {
            return Err(format!("empty range {s}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(one).collect::<Result<_, _>>()?
    };
    values
        .into_iter()
        .map(|v| T::try_from(v).map_err(|_| format!("{v} out of range")))
        .collect()
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn config(common: &Common, defaults: (f64, f64)) -> ExperimentConfig {
    ExperimentConfig {
        nu: common.nu.unwrap_or(defaults.0),
        t_end: common.tmax.unwrap_or(defaults.1),
        form: common.form,
        backend: common.solver,
        quad_degree: common.quad_degree,
        allow_large: common.allow_large,
        vtk: common.vtk,
        out_dir: Some(common.out.clone()),
        ..Default::default()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    surfnse::configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Convergence { levels, case, tau, dt, common } => {
            let levels = match parse_range(&levels) {
                Ok(l) => l,
                Err(e) => return usage_error(&e),
            };
            let cfg = ExperimentConfig {
                levels,
                case,
                tau,
                dt,
                ..config(&common, (1.0, 1.0))
            };
            run_convergence(&cfg).map(|r| (r.csv, r.path))
        }
        Command::PenaltySweep { level, dt, case, tau_exponents, common } => {
            let tau_exponents = match parse_range(&tau_exponents) {
                Ok(k) => k,
                Err(e) => return usage_error(&e),
            };
            let cfg = ExperimentConfig {
                levels: vec![level],
                dt: Some(dt),
                case,
                tau_exponents,
                ..config(&common, (1.0, 1.0))
            };
            run_penalty_sweep(&cfg).map(|r| (r.csv, r.path))
        }
        Command::Energy { level, dt, case, tau, common } => {
            let cfg = ExperimentConfig {
                levels: vec![level],
                dt: Some(dt),
                case,
                tau,
                ..config(&common, (0.0, 10.0))
            };
            run_energy(&cfg).map(|r| (r.csv, r.path))
        }
    };
    match result {
        Ok((csv, path)) => {
            print!("{csv}");
            if let Some(p) = path {
                log::info!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
