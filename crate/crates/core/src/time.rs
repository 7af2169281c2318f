//! Semi-implicit BDF time stepping: one BDF1 step, BDF2 afterwards, with the
//! convecting velocity extrapolated from the history.

use crate::assembly::{
    assemble_continuity_rhs, assemble_momentum_rhs, ConvectionOperator, Discretization, SolverParams, StaticBlocks,
};
use crate::cases::ManufacturedCase;
use crate::diagnostics::{energy_balance, kinetic_energy, BalanceInputs, EnergyBalance};
use crate::error::{Error, Result};
use crate::fe::interpolate;
use crate::solver::{solve_step, LinearSolver, SaddleOperator};
use crate::sparse::CsrMatrix;
use crate::Vec3;

/// BDF1 time difference `(u^k - u^{k-1}) / dt`.
pub fn bdf1_derivative(u: f64, u1: f64, dt: f64) -> f64 {
    (u - u1) / dt
}

/// BDF2 time difference `(3 u^k - 4 u^{k-1} + u^{k-2}) / (2 dt)`.
pub fn bdf2_derivative(u: f64, u1: f64, u2: f64, dt: f64) -> f64 {
    (3.0 * u - 4.0 * u1 + u2) / (2.0 * dt)
}

/// History of the discrete solution.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeState {
    pub k: usize,
    pub t: f64,
    pub u_prev: Vec<f64>,
    pub u_prev2: Option<Vec<f64>>,
    pub p_current: Vec<f64>,
}

/// Diagnostics of one accepted step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub kinetic: f64,
    pub balance: EnergyBalance,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
}

/// A time-dependent run on a fixed discretization.
pub struct Simulation<'a> {
    pub disc: &'a Discretization,
    pub params: SolverParams,
    pub case: ManufacturedCase,
    pub blocks: StaticBlocks,
    pub state: TimeState,
    pub initial_kinetic: f64,
    velocity_form: CsrMatrix,
    pressure_stab: CsrMatrix,
    convection: ConvectionOperator,
    operators: [Option<SaddleOperator>; 2],
    solver: LinearSolver,
}

impl<'a> Simulation<'a> {
    pub fn new(disc: &'a Discretization, params: SolverParams) -> Result<Self> {
        params.validate()?;
        let case = ManufacturedCase::new(params.case);
        let blocks = StaticBlocks::assemble(disc)?;
        let state = initialize(disc, &case)?;
        let initial_kinetic = kinetic_energy(&state.u_prev, &blocks.mass);
        Ok(Self {
            disc,
            params,
            case,
            velocity_form: blocks.velocity_form(&params),
            pressure_stab: blocks.pressure_stab(params.rho_p),
            blocks,
            state,
            initial_kinetic,
            convection: ConvectionOperator::new(disc),
            operators: [None, None],
            solver: LinearSolver::new(params.backend),
        })
    }

    /// Replace the initial velocity (interleaved nodal values).
    pub fn set_initial_velocity(&mut self, u0: Vec<f64>) -> Result<()> {
        if u0.len() != self.disc.n_velocity() {
            return Err(Error::DimensionMismatch {
                expected: self.disc.n_velocity(),
                got: u0.len(),
            });
        }
        self.initial_kinetic = kinetic_energy(&u0, &self.blocks.mass);
        self.state = TimeState {
            k: 0,
            t: 0.0,
            u_prev: u0,
            u_prev2: None,
            p_current: vec![0.0; self.disc.n_scalar()],
        };
        Ok(())
    }

    fn ensure_operator(&mut self, bdf2: bool) -> Result<()> {
        let slot = usize::from(bdf2);
        if self.operators[slot].is_none() {
            let dt = self.params.dt;
            let sigma = if bdf2 { 1.5 / dt } else { 1.0 / dt };
            let top = CsrMatrix::linear_combination(&[(sigma, &self.blocks.mass), (1.0, &self.velocity_form)]);
            self.operators[slot] = Some(SaddleOperator::assemble(
                &top,
                &self.blocks.coupling,
                &self.pressure_stab,
                &self.blocks.mean,
                Some(&self.convection.pattern),
            )?);
        }
        Ok(())
    }

    /// Advance by one step.
    pub fn advance(&mut self) -> Result<StepRecord> {
        let k = self.state.k + 1;
        self.step(k).map_err(|e| Error::Step {
            step: k,
            source: Box::new(e),
        })
    }

    fn step(&mut self, k: usize) -> Result<StepRecord> {
        let dt = self.params.dt;
        let t = k as f64 * dt;
        let u1 = &self.state.u_prev;
        let (history, w): (Vec<f64>, Vec<f64>) = match &self.state.u_prev2 {
            None => (u1.iter().map(|v| v / dt).collect(), u1.clone()),
            Some(u2) => (
                u1.iter().zip(u2).map(|(a, b)| (4.0 * a - b) / (2.0 * dt)).collect(),
                u1.iter().zip(u2).map(|(a, b)| 2.0 * a - b).collect(),
            ),
        };
        let bdf2 = self.state.u_prev2.is_some();
        let c = self.convection.assemble(self.disc, &w, self.params.form)?;
        let f = assemble_momentum_rhs(self.disc, &self.case, t, self.params.nu)?;
        let g = assemble_continuity_rhs(self.disc, &self.case, t)?;
        let mut rhs_u = self.blocks.mass.spmv(&history)?;
        for (r, fi) in rhs_u.iter_mut().zip(&f) {
            *r += fi;
        }
        self.ensure_operator(bdf2)?;
        let op = self.operators[usize::from(bdf2)].as_ref().expect("built");
        let kmat = op.with_convection(&c);
        let sol = solve_step(&mut self.solver, op, &kmat, &rhs_u, &g)?;

        let balance = energy_balance(
            &self.blocks,
            &self.params,
            &BalanceInputs {
                u: &sol.u,
                u1: &self.state.u_prev,
                u2: self.state.u_prev2.as_deref(),
                p: &sol.p,
                f: &f,
                g: &g,
            },
        );
        let kinetic = kinetic_energy(&sol.u, &self.blocks.mass);

        let prev = std::mem::replace(&mut self.state.u_prev, sol.u.clone());
        self.state.u_prev2 = Some(prev);
        self.state.p_current = sol.p.clone();
        self.state.k = k;
        self.state.t = t;
        Ok(StepRecord {
            step: k,
            time: t,
            kinetic,
            balance,
            u: sol.u,
            p: sol.p,
        })
    }

    /// Run all `T / dt` steps.
    pub fn run(&mut self) -> Result<Vec<StepRecord>> {
        let n = self.params.n_steps();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.advance()?);
        }
        Ok(out)
    }
}

/// Initial state: nodal interpolant of the exact velocity at `t = 0`.
///
/// The normal extension is undefined at the origin, which is a vertex of the
/// strip on the coarsest meshes; the velocity there is set to zero.
pub fn initialize(disc: &Discretization, case: &ManufacturedCase) -> Result<TimeState> {
    let u = interpolate(&disc.mesh, &disc.dofs, |x| {
        if x.norm() < 1e-14 {
            log::warn!("velocity at the origin set to zero");
            return Ok(Vec3::zeros());
        }
        case.velocity(x, 0.0)
    })?;
    Ok(TimeState {
        k: 0,
        t: 0.0,
        u_prev: u.values,
        u_prev2: None,
        p_current: vec![0.0; disc.n_scalar()],
    })
}
