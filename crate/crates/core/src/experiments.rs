//! The three experiment drivers (convergence study, penalty sweep, energy
//! history) and their CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::assembly::{mesh_size, Discretization, NonlinearForm, SolverParams, SURFACE_QUAD_DEGREE};
use crate::cases::{CaseId, ManufacturedCase};
use crate::diagnostics::{convergence_rates, field_errors, ErrorAccumulator, ErrorNorms};
use crate::error::{Error, Result};
use crate::solver::SolverBackend;
use crate::time::Simulation;
use crate::vtk;

/// Highest level accepted without `allow_large`.
pub const DEFAULT_MAX_LEVEL: u32 = 4;

/// Penalty parameter, either literal or `h^-k` on each level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauRule {
    Fixed(f64),
    /// `tau = h^-k`.
    InversePower(i32),
}

impl TauRule {
    pub fn resolve(self, h: f64) -> f64 {
        match self {
            TauRule::Fixed(t) => t,
            TauRule::InversePower(k) => h.powi(-k),
        }
    }
}

impl FromStr for TauRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(k) = s.strip_prefix("h-") {
            return k
                .parse::<i32>()
                .map(TauRule::InversePower)
                .map_err(|_| Error::InvalidParameter(format!("tau rule {s:?}")));
        }
        s.parse::<f64>()
            .map(TauRule::Fixed)
            .map_err(|_| Error::InvalidParameter(format!("tau rule {s:?}")))
    }
}

impl std::fmt::Display for TauRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TauRule::Fixed(t) => write!(f, "{t}"),
            TauRule::InversePower(k) => write!(f, "h-{k}"),
        }
    }
}

/// Time step `2^(1 - level) / 10` of the convergence study.
pub fn refinement_dt(level: u32) -> f64 {
    f64::powi(2.0, 1 - level as i32) / 10.0
}

/// Resolved settings of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub levels: Vec<u32>,
    /// Fixed step, or `None` for [`refinement_dt`].
    pub dt: Option<f64>,
    pub tau: TauRule,
    pub tau_exponents: Vec<i32>,
    pub nu: f64,
    pub case: CaseId,
    pub form: NonlinearForm,
    pub t_end: f64,
    pub quad_degree: usize,
    /// Fixed backend, or `None` for [`SolverBackend::for_level`].
    pub backend: Option<SolverBackend>,
    pub allow_large: bool,
    pub vtk: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            levels: vec![1, 2, 3],
            dt: None,
            tau: TauRule::InversePower(2),
            tau_exponents: (0..=16).collect(),
            nu: 1.0,
            case: CaseId::Exact1,
            form: NonlinearForm::Convective,
            t_end: 1.0,
            quad_degree: SURFACE_QUAD_DEGREE,
            backend: None,
            allow_large: false,
            vtk: false,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidParameter("no levels given".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!("levels {:?} not ascending", self.levels)));
        }
        if let Some(&l) = self.levels.iter().find(|&&l| l > DEFAULT_MAX_LEVEL && !self.allow_large) {
            return Err(Error::InvalidParameter(format!(
                "level {l} exceeds {DEFAULT_MAX_LEVEL}; pass the large-level flag to allow it"
            )));
        }
        for &l in &self.levels {
            self.params(l, self.tau.resolve(mesh_size(l)))?.validate()?;
        }
        Ok(())
    }

    /// Solver parameters at `level` with penalty `tau`.
    pub fn params(&self, level: u32, tau: f64) -> Result<SolverParams> {
        let mut p = SolverParams::for_level(level, self.case);
        p.nu = self.nu;
        p.tau = tau;
        p.dt = self.dt.unwrap_or_else(|| refinement_dt(level));
        p.t_end = self.t_end;
        p.form = self.form;
        if let Some(b) = self.backend {
            p.backend = b;
        }
        p.validate()?;
        Ok(p)
    }

    fn metadata(&self, command: &str) -> String {
        let levels: Vec<String> = self.levels.iter().map(u32::to_string).collect();
        let dt = self.dt.map_or("2^(1-level)/10".to_string(), |d| d.to_string());
        let mut s = String::new();
        let _ = writeln!(s, "# command={command}");
        let _ = writeln!(s, "# case={}", self.case);
        let _ = writeln!(s, "# levels={}", levels.join(";"));
        let _ = writeln!(s, "# dt={dt}");
        let _ = writeln!(s, "# tau={}", self.tau);
        let _ = writeln!(s, "# nu={}", self.nu);
        let _ = writeln!(s, "# form={}", self.form);
        let _ = writeln!(s, "# t_end={}", self.t_end);
        let _ = writeln!(s, "# rho_u=h");
        let _ = writeln!(s, "# rho_p=h");
        let _ = writeln!(s, "# quad_degree={}", self.quad_degree);
        let backend = self.backend.map_or("auto".to_string(), |b| b.to_string());
        let _ = writeln!(s, "# backend={backend}");
        s
    }

    fn write(&self, name: &str, contents: &str) -> Result<Option<PathBuf>> {
        let Some(dir) = &self.out_dir else {
            return Ok(None);
        };
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        fs::write(&path, contents)?;
        Ok(Some(path))
    }
}

/// Trajectory summary of one time-dependent run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub params: SolverParams,
    pub errors: ErrorNorms,
    /// `(step, time, kinetic energy)` including the initial state.
    pub energy: Vec<(usize, f64, f64)>,
    pub max_balance_residual: f64,
}

/// Run one simulation, accumulating errors on the fly. A VTK snapshot of
/// the final state is written into `vtk_dir` when given.
pub fn run_single(disc: &Discretization, params: SolverParams, with_errors: bool, vtk_dir: Option<&Path>) -> Result<RunSummary> {
    let case = ManufacturedCase::new(params.case);
    let mut sim = Simulation::new(disc, params)?;
    let mut energy = vec![(0, 0.0, sim.initial_kinetic)];
    let mut acc = ErrorAccumulator::default();
    let mut max_res: f64 = 0.0;
    let n = params.n_steps();
    let mut last = None;
    for _ in 0..n {
        let r = sim.advance()?;
        if with_errors {
            acc.add(&field_errors(disc, &case, r.time, &r.u, &r.p)?, params.dt);
        }
        energy.push((r.step, r.time, r.kinetic));
        max_res = max_res.max(r.balance.residual());
        last = Some(r);
    }
    if let (Some(dir), Some(r)) = (vtk_dir, last) {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("surface_{}_l{}.vtk", params.case, params.level));
        let mut file = std::io::BufWriter::new(fs::File::create(path)?);
        vtk::write_surface(&mut file, disc, Some((&r.u, &r.p)))?;
    }
    Ok(RunSummary {
        params,
        errors: acc.finish(),
        energy,
        max_balance_residual: max_res,
    })
}

fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.10e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub level: u32,
    pub h: f64,
    pub dt: f64,
    pub tau: f64,
    pub nu: f64,
    pub errors: ErrorNorms,
}

#[derive(Debug, Clone)]
pub struct ConvergenceResult {
    pub rows: Vec<ConvergenceRow>,
    pub csv: String,
    pub path: Option<PathBuf>,
}

impl ConvergenceResult {
    /// Observed rates of each of the four norms between consecutive levels.
    pub fn rates(&self) -> [Vec<f64>; 4] {
        let col = |i: usize| -> Vec<f64> {
            let e: Vec<f64> = self.rows.iter().map(|r| r.errors.as_array()[i]).collect();
            convergence_rates(&e)
        };
        [col(0), col(1), col(2), col(3)]
    }
}

/// Error norms on each level of `cfg.levels`.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceResult> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &level in &cfg.levels {
        let run = || -> Result<ConvergenceRow> {
            let disc = Discretization::sphere(level, cfg.quad_degree)?;
            let params = cfg.params(level, cfg.tau.resolve(disc.h()))?;
            let vtk_dir = cfg.vtk.then_some(()).and(cfg.out_dir.as_deref());
            let s = run_single(&disc, params, true, vtk_dir)?;
            log::info!("level {level}: {:?}", s.errors);
            Ok(ConvergenceRow {
                level,
                h: disc.h(),
                dt: params.dt,
                tau: params.tau,
                nu: params.nu,
                errors: s.errors,
            })
        };
        rows.push(run().map_err(|e| Error::Level {
            level,
            source: Box::new(e),
        })?);
    }
    let mut result = ConvergenceResult {
        rows,
        csv: String::new(),
        path: None,
    };
    let rates = result.rates();
    let mut csv = cfg.metadata("convergence");
    csv.push_str("level,h,dt,tau,nu,err_LinfL2,err_L2H1,err_uN,err_pL2,rate_LinfL2,rate_L2H1,rate_uN,rate_pL2\n");
    for (i, r) in result.rows.iter().enumerate() {
        let e = r.errors.as_array();
        let _ = write!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.level,
            fmt_float(r.h),
            fmt_float(r.dt),
            fmt_float(r.tau),
            fmt_float(r.nu),
            fmt_float(e[0]),
            fmt_float(e[1]),
            fmt_float(e[2]),
            fmt_float(e[3]),
        );
        for rate in &rates {
            csv.push(',');
            if i > 0 {
                csv.push_str(&fmt_float(rate[i - 1]));
            }
        }
        csv.push('\n');
    }
    result.path = cfg.write("convergence.csv", &csv)?;
    result.csv = csv;
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub exponent: i32,
    pub tau: f64,
    pub errors: ErrorNorms,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub csv: String,
    pub path: Option<PathBuf>,
}

/// Errors for `tau = 2^k` over `cfg.tau_exponents` on the first level of
/// `cfg.levels`.
pub fn run_penalty_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    if cfg.tau_exponents.is_empty() {
        return Err(Error::InvalidParameter("no penalty exponents given".into()));
    }
    cfg.validate()?;
    let level = cfg.levels[0];
    let disc = Discretization::sphere(level, cfg.quad_degree)?;
    let mut rows = Vec::new();
    for &k in &cfg.tau_exponents {
        let tau = f64::powi(2.0, k);
        let params = cfg.params(level, tau)?;
        let s = run_single(&disc, params, true, None).map_err(|e| Error::Level {
            level,
            source: Box::new(e),
        })?;
        log::info!("tau = 2^{k}: {:?}", s.errors);
        rows.push(SweepRow {
            exponent: k,
            tau,
            errors: s.errors,
        });
    }
    let mut csv = cfg.metadata("penalty-sweep");
    csv.push_str("tau,err_LinfL2,err_L2H1,err_pL2\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt_float(r.tau),
            fmt_float(r.errors.err_linf_l2),
            fmt_float(r.errors.err_l2_h1),
            fmt_float(r.errors.err_p_l2)
        );
    }
    let path = cfg.write("penalty_sweep.csv", &csv)?;
    Ok(SweepResult { rows, csv, path })
}

#[derive(Debug, Clone)]
pub struct EnergyResult {
    pub summary: RunSummary,
    pub csv: String,
    pub path: Option<PathBuf>,
}

impl EnergyResult {
    /// Kinetic energies divided by the initial one.
    pub fn normalized(&self) -> Vec<f64> {
        let e0 = self.summary.energy[0].2;
        self.summary.energy.iter().map(|e| e.2 / e0).collect()
    }
}

/// Kinetic energy history on the first level of `cfg.levels`.
pub fn run_energy(cfg: &ExperimentConfig) -> Result<EnergyResult> {
    if !matches!(cfg.case, CaseId::Killing | CaseId::Sol2a) {
        return Err(Error::InvalidParameter(format!(
            "energy runs support cases killing and sol2a, got {}",
            cfg.case
        )));
    }
    cfg.validate()?;
    let level = cfg.levels[0];
    let disc = Discretization::sphere(level, cfg.quad_degree)?;
    let params = cfg.params(level, cfg.tau.resolve(disc.h()))?;
    let vtk_dir = cfg.vtk.then_some(()).and(cfg.out_dir.as_deref());
    let summary = run_single(&disc, params, false, vtk_dir).map_err(|e| Error::Level {
        level,
        source: Box::new(e),
    })?;
    let e0 = summary.energy[0].2;
    let mut csv = cfg.metadata("energy");
    csv.push_str("step,time,kinetic,kinetic_norm\n");
    for &(k, t, e) in &summary.energy {
        let _ = writeln!(csv, "{k},{},{},{}", fmt_float(t), fmt_float(e), fmt_float(e / e0));
    }
    let path = cfg.write("energy.csv", &csv)?;
    Ok(EnergyResult { summary, csv, path })
}
