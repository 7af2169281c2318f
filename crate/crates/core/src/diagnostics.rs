//! Error norms against exact solutions, kinetic energy, the discrete energy
//! identity and observed convergence rates.

use rayon::prelude::*;

use crate::assembly::{eval_scalar, eval_vector, Discretization, SolverParams, StaticBlocks};
use crate::cases::ManufacturedCase;
use crate::error::Result;
use crate::sparse::{dot, CsrMatrix};
use crate::time::StepRecord;
use crate::Mat3;

/// `1/2 u^T M u`.
pub fn kinetic_energy(u: &[f64], mass: &CsrMatrix) -> f64 {
    0.5 * mass.quadratic(u)
}

/// Errors of one velocity/pressure pair at one time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldErrors {
    /// `||u - u_h||^2` on `Gamma_h`.
    pub l2_sq: f64,
    /// `||P (grad u^e - grad u_h) P||^2`.
    pub grad_sq: f64,
    /// `||u_h . n_h||^2`.
    pub normal_sq: f64,
    /// `||p - p_h||^2` after removing the mean of each.
    pub pressure_sq: f64,
}

/// Space-time error norms of a trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorNorms {
    pub err_linf_l2: f64,
    pub err_l2_h1: f64,
    pub err_un: f64,
    pub err_p_l2: f64,
}

impl ErrorNorms {
    pub fn as_array(&self) -> [f64; 4] {
        [self.err_linf_l2, self.err_l2_h1, self.err_un, self.err_p_l2]
    }
}

/// Errors of `(u_h, p_h)` against the exact solution at time `t`.
pub fn field_errors(disc: &Discretization, case: &ManufacturedCase, t: f64, u: &[f64], p: &[f64]) -> Result<FieldErrors> {
    // Means over Gamma_h of both pressures.
    let area = disc.surface.area();
    let means: Vec<Result<(f64, f64)>> = disc
        .surface
        .triangles
        .par_iter()
        .map(|tri| {
            let (_, dofs) = disc.parent(tri);
            let mut s = (0.0, 0.0);
            for q in &tri.quad {
                s.0 += q.weight * case.pressure(&q.point, t)?;
                s.1 += q.weight * eval_scalar(p, dofs, &q.bary);
            }
            Ok(s)
        })
        .collect();
    let (mut pm, mut phm) = (0.0, 0.0);
    for m in means {
        let (a, b) = m?;
        pm += a;
        phm += b;
    }
    pm /= area;
    phm /= area;

    let parts: Vec<Result<FieldErrors>> = disc
        .surface
        .triangles
        .par_iter()
        .map(|tri| {
            let (el, dofs) = disc.parent(tri);
            let mut grad_h = Mat3::zeros();
            for a in 0..4 {
                let i = 3 * dofs[a];
                let ua = crate::Vec3::new(u[i], u[i + 1], u[i + 2]);
                grad_h += ua * el.p1.grads[a].transpose();
            }
            let mut e = FieldErrors::default();
            for q in &tri.quad {
                let uh = eval_vector(u, dofs, &q.bary);
                let ue = case.velocity(&q.point, t)?;
                e.l2_sq += q.weight * (ue - uh).norm_squared();
                let dg = q.projector * (case.velocity_jacobian(&q.point, t)? - grad_h) * q.projector;
                e.grad_sq += q.weight * dg.norm_squared();
                e.normal_sq += q.weight * uh.dot(&q.normal).powi(2);
                let dp = (case.pressure(&q.point, t)? - pm) - (eval_scalar(p, dofs, &q.bary) - phm);
                e.pressure_sq += q.weight * dp * dp;
            }
            Ok(e)
        })
        .collect();
    let mut total = FieldErrors::default();
    for part in parts {
        let e = part?;
        total.l2_sq += e.l2_sq;
        total.grad_sq += e.grad_sq;
        total.normal_sq += e.normal_sq;
        total.pressure_sq += e.pressure_sq;
    }
    Ok(total)
}

/// Accumulates per-step errors into the space-time norms.
#[derive(Debug, Clone, Default)]
pub struct ErrorAccumulator {
    max_l2: f64,
    h1: f64,
    normal: f64,
    pressure: f64,
}

impl ErrorAccumulator {
    pub fn add(&mut self, e: &FieldErrors, dt: f64) {
        self.max_l2 = self.max_l2.max(e.l2_sq.sqrt());
        self.h1 += dt * (e.l2_sq + e.grad_sq);
        self.normal += dt * e.normal_sq;
        self.pressure += dt * e.pressure_sq;
    }

    pub fn finish(&self) -> ErrorNorms {
        ErrorNorms {
            err_linf_l2: self.max_l2,
            err_l2_h1: self.h1.sqrt(),
            err_un: self.normal.sqrt(),
            err_p_l2: self.pressure.sqrt(),
        }
    }
}

/// Space-time errors over the steps `k = 1..N` of a trajectory.
pub fn error_norms(disc: &Discretization, case: &ManufacturedCase, records: &[StepRecord], dt: f64) -> Result<ErrorNorms> {
    let mut acc = ErrorAccumulator::default();
    for r in records {
        acc.add(&field_errors(disc, case, r.time, &r.u, &r.p)?, dt);
    }
    Ok(acc.finish())
}

/// `log2(e_l / e_{l+1})` for consecutive entries; `+inf` when the finer
/// error is zero.
pub fn convergence_rates(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| {
            if w[1] == 0.0 {
                f64::INFINITY
            } else {
                (w[0] / w[1]).log2()
            }
        })
        .collect()
}

/// Both sides of the discrete energy identity of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyBalance {
    pub lhs: f64,
    pub rhs: f64,
}

impl EnergyBalance {
    /// `|lhs - rhs| / max(|lhs|, |rhs|)`, zero when both vanish.
    pub fn residual(&self) -> f64 {
        let scale = self.lhs.abs().max(self.rhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.lhs - self.rhs).abs() / scale
        }
    }
}

/// Fields entering the energy identity of step `k`: the new solution, one or
/// two history levels (BDF1 when `u2` is `None`), and the load vectors.
pub struct BalanceInputs<'a> {
    pub u: &'a [f64],
    pub u1: &'a [f64],
    pub u2: Option<&'a [f64]>,
    pub p: &'a [f64],
    pub f: &'a [f64],
    pub g: &'a [f64],
}

/// Evaluate the energy identity obtained by testing the step equations with
/// the solution itself. The convection term drops out by skew-symmetry and
/// the multiplier term by the mean constraint.
pub fn energy_balance(blocks: &StaticBlocks, params: &SolverParams, x: &BalanceInputs<'_>) -> EnergyBalance {
    let m = &blocks.mass;
    let dt = params.dt;
    let combo = |a: f64, u: &[f64], b: f64, v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(p, q)| a * p + b * q).collect() };
    let dissipation = params.nu * blocks.velocity.viscous.quadratic(x.u)
        + params.tau * blocks.velocity.penalty.quadratic(x.u)
        + params.rho_u * blocks.velocity.stab.quadratic(x.u)
        + params.rho_p * blocks.stiffness.quadratic(x.p);
    let work = dot(x.f, x.u) - dot(x.g, x.p);
    match x.u2 {
        None => {
            let jump = combo(1.0, x.u, -1.0, x.u1);
            EnergyBalance {
                lhs: (m.quadratic(x.u) + m.quadratic(&jump)) / (2.0 * dt) + dissipation,
                rhs: m.quadratic(x.u1) / (2.0 * dt) + work,
            }
        }
        Some(u2) => {
            let ext_new = combo(2.0, x.u, -1.0, x.u1);
            let ext_old = combo(2.0, x.u1, -1.0, u2);
            let second: Vec<f64> = x.u.iter().zip(x.u1).zip(u2).map(|((a, b), c)| a - 2.0 * b + c).collect();
            EnergyBalance {
                lhs: (m.quadratic(x.u) + m.quadratic(&ext_new) + m.quadratic(&second)) / (4.0 * dt) + dissipation,
                rhs: (m.quadratic(x.u1) + m.quadratic(&ext_old)) / (4.0 * dt) + work,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_mass, SURFACE_QUAD_DEGREE};
    use crate::cases::CaseId;
    use crate::fe::{interpolate, interpolate_scalar};

    #[test]
    fn rate_examples() {
        assert_eq!(convergence_rates(&[0.4, 0.2, 0.1]), vec![1.0, 1.0]);
        assert_eq!(convergence_rates(&[0.4, 0.1]), vec![2.0]);
        assert_eq!(convergence_rates(&[0.4, 0.4]), vec![0.0]);
        assert_eq!(convergence_rates(&[0.4, 0.0]), vec![f64::INFINITY]);
        assert!(convergence_rates(&[0.4]).is_empty());
    }

    #[test]
    fn kinetic_energy_of_zero() {
        let m = CsrMatrix::identity(6);
        assert_eq!(kinetic_energy(&[0.0; 6], &m), 0.0);
    }

    #[test]
    fn errors_vanish_for_coinciding_fields() {
        // The exact solution of the static-pressure case is u = 0, p = z;
        // any constant offset of p_h is removed by the mean shift.
        let d = Discretization::sphere(2, SURFACE_QUAD_DEGREE).unwrap();
        let case = ManufacturedCase::new(CaseId::StaticPressure);
        let u = vec![0.0; d.n_velocity()];
        let z = interpolate_scalar(&d.mesh, &d.dofs, |x| Ok(x.z)).unwrap();
        let e = field_errors(&d, &case, 0.0, &u, &z.values).unwrap();
        assert_eq!(e.l2_sq, 0.0);
        assert!(e.grad_sq < 1e-20);
        let shifted: Vec<f64> = z.values.iter().map(|v| v + 3.0).collect();
        let e2 = field_errors(&d, &case, 0.0, &u, &shifted).unwrap();
        assert!((e2.pressure_sq - e.pressure_sq).abs() < 1e-12);
    }

    #[test]
    fn killing_norm_against_zero_field() {
        let d = Discretization::sphere(3, SURFACE_QUAD_DEGREE).unwrap();
        let case = ManufacturedCase::new(CaseId::Killing);
        let e = field_errors(&d, &case, 0.0, &vec![0.0; d.n_velocity()], &vec![0.0; d.n_scalar()]).unwrap();
        assert!((e.l2_sq.sqrt() - 2f64.sqrt()).abs() < 0.02 * 2f64.sqrt());
        let u = interpolate(&d.mesh, &d.dofs, |x| case.velocity(x, 0.0)).unwrap();
        let ke = kinetic_energy(&u.values, &assemble_mass(&d));
        assert!((ke - 1.0).abs() < 0.03, "{ke}");
    }

    #[test]
    fn accumulator_h1_dominates_l2() {
        let mut acc = ErrorAccumulator::default();
        acc.add(&FieldErrors { l2_sq: 0.04, grad_sq: 0.5, normal_sq: 0.01, pressure_sq: 0.2 }, 0.5);
        acc.add(&FieldErrors { l2_sq: 0.09, grad_sq: 0.1, normal_sq: 0.0, pressure_sq: 0.0 }, 0.5);
        let n = acc.finish();
        assert!((n.err_linf_l2 - 0.3).abs() < 1e-15);
        assert!(n.err_l2_h1 >= (0.5f64 * (0.04 + 0.09)).sqrt());
        assert!((n.err_un - 0.005f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn balance_residual_scale_free() {
        let b = EnergyBalance { lhs: 2.0, rhs: 2.0 + 1e-12 };
        let b2 = EnergyBalance { lhs: 8.0, rhs: 8.0 + 4e-12 };
        assert!((b.residual() - b2.residual()).abs() < 1e-16);
        assert_eq!(EnergyBalance::default().residual(), 0.0);
    }
}
