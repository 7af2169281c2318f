//! Exact solutions on the unit sphere and the forcing that makes them solve
//! the surface Navier-Stokes equations.
//!
//! Every field is extended off the sphere as constant along normals,
//! `u^e(x) = u(x / |x|)`. Tangential derivatives are taken by fourth-order
//! central differences of these extensions, so the forcing
//!
//! ```text
//! f = du/dt + (grad_G u) u - nu P div_G E_s(u) + grad_G p
//! ```
//!
//! needs no hand-derived tensor calculus.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::projector;
use crate::{Mat3, Vec3};

/// Default finite-difference step of the derivative oracle.
pub const FD_STEP: f64 = 1e-3;

/// Amplitude of the rigid rotation field, chosen so that
/// `1/2 |xi_z|^2_{L2(S^2)} = 1`.
pub fn killing_amplitude() -> f64 {
    (3.0 / (4.0 * PI)).sqrt()
}

/// Rotation about the z axis, `alpha (-y, x, 0)`.
pub fn killing_field(x: &Vec3) -> Result<Vec3> {
    if x.norm() == 0.0 {
        return Err(Error::UndefinedAtOrigin);
    }
    Ok(killing_amplitude() * Vec3::new(-x.y, x.x, 0.0))
}

/// Local frame of the unit sphere at `x / |x|`.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceFrame {
    pub normal: Vec3,
    pub projector: Mat3,
    /// Shape operator `grad_G n = P / |x|` (evaluated on the sphere).
    pub shape: Mat3,
}

impl SurfaceFrame {
    pub fn at(x: &Vec3) -> Self {
        let r = x.norm();
        let normal = x / r;
        let p = projector(&normal);
        Self {
            normal,
            projector: p,
            shape: p / r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    /// `u = (1 + z(1 - 3 e^{-t})) xi_z`, `p = 0`.
    Exact1,
    /// `u = x (2 + z(4 - 10 e^{-t})) xi_z`, `p = 0`.
    Sol2a,
    /// `u = (1 - e^{1-6t}) P e_x`, `p = x y^3 + z`.
    Sol2b,
    /// `u = xi_z`, `p = 0`, no forcing.
    Killing,
    /// `u = 0`, `p = z`; exercises the pressure-gradient part of the forcing.
    StaticPressure,
}

impl CaseId {
    pub const ALL: [CaseId; 5] = [
        CaseId::Exact1,
        CaseId::Sol2a,
        CaseId::Sol2b,
        CaseId::Killing,
        CaseId::StaticPressure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Exact1 => "exact1",
            CaseId::Sol2a => "sol2a",
            CaseId::Sol2b => "sol2b",
            CaseId::Killing => "killing",
            CaseId::StaticPressure => "static-pressure",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "case",
                value: s.to_string(),
            })
    }
}

/// A manufactured velocity/pressure pair on the unit sphere.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedCase {
    pub id: CaseId,
    /// Finite-difference step used by the derivative oracle.
    pub fd_step: f64,
}

fn on_sphere(x: &Vec3) -> Result<Vec3> {
    let r = x.norm();
    if r < 1e-14 {
        return Err(Error::UndefinedAtOrigin);
    }
    Ok(x / r)
}

impl ManufacturedCase {
    pub fn new(id: CaseId) -> Self {
        Self {
            id,
            fd_step: FD_STEP,
        }
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    pub fn divergence_free(&self) -> bool {
        matches!(self.id, CaseId::Exact1 | CaseId::Killing | CaseId::StaticPressure)
    }

    pub fn zero_forcing(&self) -> bool {
        matches!(self.id, CaseId::Killing)
    }

    // Velocity and its time derivative at a point of the unit sphere.
    fn sphere_velocity(&self, y: &Vec3, t: f64) -> (Vec3, Vec3) {
        let xi = killing_amplitude() * Vec3::new(-y.y, y.x, 0.0);
        match self.id {
            CaseId::Exact1 => {
                let f = 1.0 + y.z * (1.0 - 3.0 * (-t).exp());
                let ft = 3.0 * y.z * (-t).exp();
                (xi * f, xi * ft)
            }
            CaseId::Sol2a => {
                let f = 2.0 + y.z * (4.0 - 10.0 * (-t).exp());
                let ft = 10.0 * y.z * (-t).exp();
                (xi * (y.x * f), xi * (y.x * ft))
            }
            CaseId::Sol2b => {
                let pex = Vec3::x() - y * y.x;
                let f = 1.0 - (1.0 - 6.0 * t).exp();
                let ft = 6.0 * (1.0 - 6.0 * t).exp();
                (pex * f, pex * ft)
            }
            CaseId::Killing => (xi, Vec3::zeros()),
            CaseId::StaticPressure => (Vec3::zeros(), Vec3::zeros()),
        }
    }

    /// Normal extension of the exact velocity.
    pub fn velocity(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        Ok(self.sphere_velocity(&on_sphere(x)?, t).0)
    }

    pub fn velocity_dt(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        Ok(self.sphere_velocity(&on_sphere(x)?, t).1)
    }

    /// Normal extension of the exact pressure.
    pub fn pressure(&self, x: &Vec3, t: f64) -> Result<f64> {
        let y = on_sphere(x)?;
        let _ = t;
        Ok(match self.id {
            CaseId::Sol2b => y.x * y.y.powi(3) + y.z,
            CaseId::StaticPressure => y.z,
            _ => 0.0,
        })
    }

    /// Full gradient `d u^e_i / d x_j` of the extended velocity at any
    /// `x != 0`.
    pub fn velocity_jacobian(&self, x: &Vec3, t: f64) -> Result<Mat3> {
        on_sphere(x)?;
        Ok(fd_jacobian(
            |z| self.sphere_velocity(&(z / z.norm()), t).0,
            x,
            self.fd_step,
        ))
    }

    /// `grad_G u = P grad u^e P` at the closest sphere point to `x`.
    pub fn surface_gradient(&self, x: &Vec3, t: f64) -> Result<Mat3> {
        let y = on_sphere(x)?;
        let p = projector(&y);
        Ok(p * self.velocity_jacobian(&y, t)? * p)
    }

    pub fn divergence(&self, x: &Vec3, t: f64) -> Result<f64> {
        Ok(self.surface_gradient(x, t)?.trace())
    }

    /// Surface rate-of-strain tensor `E_s(u)`.
    pub fn strain(&self, x: &Vec3, t: f64) -> Result<Mat3> {
        let g = self.surface_gradient(x, t)?;
        Ok((g + g.transpose()) * 0.5)
    }

    /// `grad_G p = P grad p^e`.
    pub fn pressure_gradient(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        let y = on_sphere(x)?;
        let g = fd_gradient(
            |z| self.pressure(z, t).unwrap_or(0.0),
            &y,
            self.fd_step,
        );
        Ok(projector(&y) * g)
    }

    /// Row-wise surface divergence of the strain tensor, `div_G E_s(u)`.
    pub fn strain_divergence(&self, x: &Vec3, t: f64) -> Result<Vec3> {
        let y = on_sphere(x)?;
        let p = projector(&y);
        let d = self.fd_step;
        let mut dk = [Mat3::zeros(); 3];
        for (k, dk) in dk.iter_mut().enumerate() {
            let e = Vec3::ith(k, d);
            let s = |m: f64| self.strain(&(y + e * m), t);
            *dk = (s(-2.0)? - s(2.0)? + (s(1.0)? - s(-1.0)?) * 8.0) / (12.0 * d);
        }
        let mut out = Vec3::zeros();
        for i in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    s += p[(j, k)] * dk[k][(i, j)];
                }
            }
            out[i] = s;
        }
        Ok(out)
    }

    /// Momentum forcing at the closest sphere point to `x`, projected onto
    /// the tangent plane.
    pub fn forcing(&self, x: &Vec3, t: f64, nu: f64) -> Result<Vec3> {
        let y = on_sphere(x)?;
        if self.zero_forcing() {
            return Ok(Vec3::zeros());
        }
        let (u, ut) = self.sphere_velocity(&y, t);
        let grad = self.surface_gradient(&y, t)?;
        let mut f = ut + grad * u + self.pressure_gradient(&y, t)?;
        if nu != 0.0 {
            f -= projector(&y) * self.strain_divergence(&y, t)? * nu;
        }
        Ok(projector(&y) * f)
    }
}

/// Fourth-order central difference Jacobian, `J_ij = d f_i / d x_j`.
pub fn fd_jacobian(f: impl Fn(&Vec3) -> Vec3, x: &Vec3, step: f64) -> Mat3 {
    let mut j = Mat3::zeros();
    for k in 0..3 {
        let e = Vec3::ith(k, step);
        let col = (f(&(x - e * 2.0)) - f(&(x + e * 2.0)) + (f(&(x + e)) - f(&(x - e))) * 8.0)
            / (12.0 * step);
        j.set_column(k, &col);
    }
    j
}

pub fn fd_gradient(f: impl Fn(&Vec3) -> f64, x: &Vec3, step: f64) -> Vec3 {
    let mut g = Vec3::zeros();
    for k in 0..3 {
        let e = Vec3::ith(k, step);
        g[k] = (f(&(x - e * 2.0)) - f(&(x + e * 2.0)) + 8.0 * (f(&(x + e)) - f(&(x - e))))
            / (12.0 * step);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_points() -> Vec<Vec3> {
        // Fibonacci lattice, avoiding the poles exactly.
        let n = 40;
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let th = golden * i as f64;
                Vec3::new(r * th.cos(), r * th.sin(), z)
            })
            .collect()
    }

    #[test]
    fn killing_values() {
        assert_eq!(killing_field(&Vec3::z()).unwrap(), Vec3::zeros());
        let v = killing_field(&Vec3::x()).unwrap();
        assert!((v - Vec3::new(0.0, 0.48860251190292, 0.0)).norm() < 1e-12);
        assert!(killing_field(&Vec3::zeros()).is_err());
    }

    #[test]
    fn sol2b_values() {
        let c = ManufacturedCase::new(CaseId::Sol2b);
        // u = f2(0) P e_x at (0,1,0), where P e_x = e_x.
        let u = c.velocity(&Vec3::y(), 0.0).unwrap();
        assert!((u.x - (1.0 - 1f64.exp())).abs() < 1e-14);
        assert!((c.pressure(&Vec3::x(), 0.0).unwrap()).abs() < 1e-15);
        assert!((c.pressure(&Vec3::z(), 0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact1_pole_and_profile() {
        let c = ManufacturedCase::new(CaseId::Exact1);
        assert!(c.velocity(&Vec3::z(), 30.0).unwrap().norm() < 1e-15);
        let x = Vec3::new(0.6, 0.0, 0.8);
        let u = c.velocity(&x, 0.0).unwrap();
        let expect = killing_field(&x).unwrap() * (1.0 - 2.0 * 0.8);
        assert!((u - expect).norm() < 1e-14);
        // Extension is constant along normals.
        assert!((c.velocity(&(x * 1.3), 0.4).unwrap() - c.velocity(&x, 0.4).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn tangential_and_projected_derivatives() {
        for id in CaseId::ALL {
            let c = ManufacturedCase::new(id);
            for x in sphere_points() {
                let t = 0.37;
                let u = c.velocity(&x, t).unwrap();
                assert!(u.dot(&x).abs() < 1e-12, "{id}");
                let p = projector(&x);
                let g = c.surface_gradient(&x, t).unwrap();
                assert!((p * g * p - g).norm() < 1e-8);
                let e = c.strain(&x, t).unwrap();
                assert!((e - e.transpose()).norm() < 1e-12);
                assert!((e * x).norm() < 1e-8);
                assert!((g.trace() - c.divergence(&x, t).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn divergence_free_flags_match_oracle() {
        for id in CaseId::ALL {
            let c = ManufacturedCase::new(id);
            let max_div = sphere_points()
                .iter()
                .map(|x| c.divergence(x, 0.5).unwrap().abs())
                .fold(0.0, f64::max);
            if c.divergence_free() {
                assert!(max_div < 1e-8, "{id}: {max_div}");
            } else {
                assert!(max_div > 0.1, "{id}: {max_div}");
            }
        }
    }

    #[test]
    fn divergence_of_projected_constant() {
        // div_G (P a) = -(a . n) tr H = -2 (a . n) on the unit sphere.
        let c = ManufacturedCase::new(CaseId::Sol2b);
        let t: f64 = 1.0;
        let f2 = 1.0 - (1.0 - 6.0 * t).exp();
        let d = c.divergence(&Vec3::x(), t).unwrap();
        assert!((d - (-2.0 * f2)).abs() < 1e-9);
        for x in sphere_points() {
            let d = c.divergence(&x, t).unwrap();
            assert!((d + 2.0 * f2 * x.x).abs() < 1e-9);
        }
    }

    #[test]
    fn killing_has_zero_strain_and_forcing() {
        let c = ManufacturedCase::new(CaseId::Killing);
        for x in sphere_points() {
            assert!(c.strain(&x, 0.0).unwrap().norm() < 1e-9);
            assert_eq!(c.forcing(&x, 0.0, 1.0).unwrap(), Vec3::zeros());
        }
    }

    #[test]
    fn static_pressure_forcing_is_surface_gradient_of_z() {
        let c = ManufacturedCase::new(CaseId::StaticPressure);
        assert!(c.forcing(&Vec3::z(), 0.0, 1.0).unwrap().norm() < 1e-10);
        assert!((c.forcing(&Vec3::x(), 0.0, 1.0).unwrap() - Vec3::z()).norm() < 1e-10);
        for x in sphere_points() {
            let expect = Vec3::z() - x * x.z;
            assert!((c.forcing(&x, 2.0, 0.3).unwrap() - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn frame_invariants() {
        for x in sphere_points() {
            let f = SurfaceFrame::at(&x);
            assert!((f.shape * f.normal).norm() < 1e-15);
            assert!((f.shape - f.shape.transpose()).norm() < 1e-15);
            assert!((f.shape.trace() - 2.0).abs() < 1e-14);
        }
    }

    // Viscous term of a Killing-type rotation with z-dependent speed
    // checked against a closed form: for u = g(z) xi_z the strain is
    // 1/2 g'(z) (grad_G z xi^T + xi grad_G z^T).
    #[test]
    fn strain_of_exact1_closed_form() {
        let c = ManufacturedCase::new(CaseId::Exact1);
        let t: f64 = 0.3;
        let gp = 1.0 - 3.0 * f64::exp(-t);
        for x in sphere_points() {
            let xi = killing_field(&x).unwrap();
            let gz = Vec3::z() - x * x.z;
            let expect = (gz * xi.transpose() + xi * gz.transpose()) * (0.5 * gp);
            assert!((c.strain(&x, t).unwrap() - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn forcing_step_halving_consistency() {
        for id in [CaseId::Exact1, CaseId::Sol2a, CaseId::Sol2b] {
            let c = ManufacturedCase::new(id);
            let half = c.with_fd_step(FD_STEP / 2.0);
            for x in [Vec3::z(), Vec3::new(0.48, -0.6, 0.64)] {
                let a = c.forcing(&x, 0.0, 1.0).unwrap();
                let b = half.forcing(&x, 0.0, 1.0).unwrap();
                assert!((a - b).norm() <= 1e-6, "{id}: {}", (a - b).norm());
            }
        }
    }

    #[test]
    fn unknown_case_name() {
        assert!("exact1".parse::<CaseId>().is_ok());
        assert!(matches!("nope".parse::<CaseId>(), Err(Error::UnknownName { .. })));
    }
}
