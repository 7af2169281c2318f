//! Discrete spaces on the cut strip and assembly of every bilinear form and
//! load vector of the fully discrete scheme.
//!
//! Velocity unknowns are interleaved, `(i, c) -> 3 i + c`. Rows of a block
//! correspond to test functions and columns to trial functions.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cases::{CaseId, ManufacturedCase};
use crate::error::{Error, Result};
use crate::fe::DofMap;
use crate::geometry::{build_surface_mesh, CutElement, ImplicitSurface, LevelSet, Sphere, SurfaceTriangle};
use crate::mesh::{ActiveSet, BackgroundMesh, BOX_HALF_WIDTH};
use crate::quadrature::TetRule;
use crate::solver::SolverBackend;
use crate::sparse::{CsrMatrix, Triplets};
use crate::Vec3;

/// Degree of the volume rule used for the velocity stabilization.
pub const STAB_QUAD_DEGREE: usize = 2;

/// Default exactness of the surface rule.
pub const SURFACE_QUAD_DEGREE: usize = 4;

/// Mesh size of refinement level `level` on the standard box.
pub fn mesh_size(level: u32) -> f64 {
    2.0 * BOX_HALF_WIDTH / f64::powi(2.0, level as i32 + 1)
}

/// Treatment of the inertia term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NonlinearForm {
    /// `(grad_G u) w`, skew-symmetrized.
    Convective,
    /// `(grad_G u - grad_G u^T) w`, skew-symmetrized. The pressure becomes
    /// the Bernoulli pressure.
    Rotational,
    /// Drop the inertia term (Stokes flow).
    None,
}

impl NonlinearForm {
    pub const ALL: [NonlinearForm; 3] = [
        NonlinearForm::Convective,
        NonlinearForm::Rotational,
        NonlinearForm::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NonlinearForm::Convective => "convective",
            NonlinearForm::Rotational => "rotational",
            NonlinearForm::None => "none",
        }
    }
}

impl fmt::Display for NonlinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NonlinearForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        NonlinearForm::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "nonlinear form",
                value: s.to_string(),
            })
    }
}

/// Physical and numerical parameters of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub nu: f64,
    pub tau: f64,
    pub rho_u: f64,
    pub rho_p: f64,
    pub dt: f64,
    pub t_end: f64,
    pub level: u32,
    pub form: NonlinearForm,
    pub case: CaseId,
    pub backend: SolverBackend,
}

impl SolverParams {
    /// Defaults of the convergence study at `level`: `nu = 1`,
    /// `tau = h^-2`, `rho_u = rho_p = h`, `dt = 2^(1-level) / 10`, `T = 1`,
    /// and the level's default solver backend.
    pub fn for_level(level: u32, case: CaseId) -> Self {
        let h = mesh_size(level);
        Self {
            nu: 1.0,
            tau: h.powi(-2),
            rho_u: h,
            rho_p: h,
            dt: f64::powi(2.0, 1 - level as i32) / 10.0,
            t_end: 1.0,
            level,
            form: NonlinearForm::Convective,
            case,
            backend: SolverBackend::for_level(level),
        }
    }

    pub fn h(&self) -> f64 {
        mesh_size(self.level)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} = {v}")));
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return bad("nu", self.nu);
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau", self.tau);
        }
        if !(self.rho_u >= 0.0 && self.rho_u.is_finite()) {
            return bad("rho_u", self.rho_u);
        }
        if !(self.rho_p > 0.0 && self.rho_p.is_finite()) {
            return bad("rho_p", self.rho_p);
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", self.dt);
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end", self.t_end);
        }
        Ok(())
    }

    /// Number of time steps `T / dt`, rounded down when not an integer.
    pub fn n_steps(&self) -> usize {
        let r = self.t_end / self.dt;
        let n = r.round();
        if (r - n).abs() <= 1e-9 * r.max(1.0) {
            n as usize
        } else {
            log::warn!("T / dt = {r} is not an integer; running {} steps", r.floor());
            r.floor() as usize
        }
    }
}

/// Background mesh, active strip, dof numbering and discrete surface.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: BackgroundMesh,
    pub active: ActiveSet,
    pub dofs: DofMap,
    pub surface: crate::geometry::SurfaceMesh,
    /// Scalar dofs of each active tet, in `ActiveSet` order.
    pub element_dofs: Vec<[usize; 4]>,
}

impl Discretization {
    /// Unit sphere on the level-`level` mesh of the standard box.
    pub fn sphere(level: u32, quad_degree: usize) -> Result<Self> {
        Self::new(BackgroundMesh::new(level)?, &Sphere::unit(), quad_degree)
    }

    pub fn new(mesh: BackgroundMesh, surface: &dyn ImplicitSurface, quad_degree: usize) -> Result<Self> {
        let ls = LevelSet::new(surface, &mesh);
        let active = mesh.select_active(&ls.p1_values)?;
        if active.is_empty() {
            return Err(Error::EmptyActiveSet);
        }
        let dofs = DofMap::new(&mesh, &active);
        let surface = build_surface_mesh(&mesh, &active, &ls, quad_degree)?;
        let element_dofs = active
            .active_tets
            .iter()
            .map(|&t| dofs.tet_dofs(&mesh, t))
            .collect();
        Ok(Self {
            mesh,
            active,
            dofs,
            surface,
            element_dofs,
        })
    }

    pub fn h(&self) -> f64 {
        self.mesh.h
    }

    pub fn n_scalar(&self) -> usize {
        self.dofs.n_scalar()
    }

    pub fn n_velocity(&self) -> usize {
        self.dofs.n_velocity()
    }

    /// Parent element and its dofs of a surface triangle.
    pub fn parent(&self, tri: &SurfaceTriangle) -> (&CutElement, &[usize; 4]) {
        let i = tri.active_index;
        (&self.surface.elements[i], &self.element_dofs[i])
    }
}

/// Value of an interleaved vector field at barycentric coordinates `bary`.
#[inline]
pub fn eval_vector(values: &[f64], dofs: &[usize; 4], bary: &[f64; 4]) -> Vec3 {
    let mut v = Vec3::zeros();
    for a in 0..4 {
        let i = 3 * dofs[a];
        v += Vec3::new(values[i], values[i + 1], values[i + 2]) * bary[a];
    }
    v
}

#[inline]
pub fn eval_scalar(values: &[f64], dofs: &[usize; 4], bary: &[f64; 4]) -> f64 {
    (0..4).map(|a| values[dofs[a]] * bary[a]).sum()
}

type Entries = Vec<(usize, usize, f64)>;

fn assemble_surface<F>(disc: &Discretization, nrows: usize, ncols: usize, local: F) -> CsrMatrix
where
    F: Fn(&SurfaceTriangle, &CutElement, &[usize; 4], &mut Entries) + Sync,
{
    let parts: Vec<Entries> = disc
        .surface
        .triangles
        .par_iter()
        .map(|t| {
            let (el, dofs) = disc.parent(t);
            let mut out = Vec::new();
            local(t, el, dofs, &mut out);
            out
        })
        .collect();
    let mut trip = Triplets::new(nrows, ncols);
    for p in parts {
        trip.entries.extend(p);
    }
    trip.into_csr()
}

fn assemble_volume<F>(disc: &Discretization, nrows: usize, ncols: usize, local: F) -> Result<CsrMatrix>
where
    F: Fn(&CutElement, &[usize; 4], &mut Entries) -> Result<()> + Sync,
{
    let parts: Vec<Result<Entries>> = disc
        .surface
        .elements
        .par_iter()
        .zip(disc.element_dofs.par_iter())
        .map(|(el, dofs)| {
            let mut out = Vec::new();
            local(el, dofs, &mut out)?;
            Ok(out)
        })
        .collect();
    let mut trip = Triplets::new(nrows, ncols);
    for p in parts {
        trip.entries.extend(p?);
    }
    Ok(trip.into_csr())
}

/// Velocity mass matrix `M_(ia, ib) = int psi_a psi_b` on every component.
pub fn assemble_mass(disc: &Discretization) -> CsrMatrix {
    let n = disc.n_velocity();
    assemble_surface(disc, n, n, |tri, _, dofs, out| {
        for q in &tri.quad {
            for a in 0..4 {
                for b in 0..4 {
                    let v = q.weight * q.bary[a] * q.bary[b];
                    for c in 0..3 {
                        out.push((3 * dofs[a] + c, 3 * dofs[b] + c, v));
                    }
                }
            }
        }
    })
}

/// Scalar mass matrix on `Gamma_h`.
pub fn assemble_scalar_mass(disc: &Discretization) -> CsrMatrix {
    let n = disc.n_scalar();
    assemble_surface(disc, n, n, |tri, _, dofs, out| {
        for q in &tri.quad {
            for a in 0..4 {
                for b in 0..4 {
                    out.push((dofs[a], dofs[b], q.weight * q.bary[a] * q.bary[b]));
                }
            }
        }
    })
}

/// Unscaled parts of the velocity form: `int E_s(u):E_s(v)`,
/// `int u_N v_N` and `int_strip (grad u n).(grad v n)`.
#[derive(Debug, Clone)]
pub struct ViscousParts {
    pub viscous: CsrMatrix,
    pub penalty: CsrMatrix,
    pub stab: CsrMatrix,
}

impl ViscousParts {
    /// `nu A_visc + tau A_pen + rho_u A_stab`.
    pub fn combine(&self, nu: f64, tau: f64, rho_u: f64) -> CsrMatrix {
        CsrMatrix::linear_combination(&[(nu, &self.viscous), (tau, &self.penalty), (rho_u, &self.stab)])
    }
}

pub fn assemble_viscous(disc: &Discretization) -> Result<ViscousParts> {
    let n = disc.n_velocity();
    let viscous = assemble_surface(disc, n, n, |tri, el, dofs, out| {
        for q in &tri.quad {
            let pg = el.p1.grads.map(|g| q.projector * g);
            for a in 0..4 {
                for b in 0..4 {
                    let qq = pg[a].dot(&pg[b]);
                    for c in 0..3 {
                        for d in 0..3 {
                            let v = 0.5 * (q.projector[(c, d)] * qq + pg[b][c] * pg[a][d]);
                            out.push((3 * dofs[a] + c, 3 * dofs[b] + d, q.weight * v));
                        }
                    }
                }
            }
        }
    });
    let penalty = assemble_surface(disc, n, n, |tri, _, dofs, out| {
        for q in &tri.quad {
            let nn = q.normal;
            for a in 0..4 {
                for b in 0..4 {
                    let w = q.weight * q.bary[a] * q.bary[b];
                    for c in 0..3 {
                        for d in 0..3 {
                            out.push((3 * dofs[a] + c, 3 * dofs[b] + d, w * nn[c] * nn[d]));
                        }
                    }
                }
            }
        }
    });
    let rule = TetRule::with_degree(STAB_QUAD_DEGREE)?;
    let stab = assemble_volume(disc, n, n, |el, dofs, out| {
        for (x, w) in rule.map(&el.p1.points, el.p1.volume) {
            let normal = el.level_set.normal(&x).ok_or_else(|| Error::DegenerateGradient {
                tet: el.tet,
                magnitude: el.level_set.gradient(&x).norm(),
            })?;
            let dn = el.p1.grads.map(|g| g.dot(&normal));
            for a in 0..4 {
                for b in 0..4 {
                    let v = w * dn[a] * dn[b];
                    for c in 0..3 {
                        out.push((3 * dofs[a] + c, 3 * dofs[b] + c, v));
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(ViscousParts {
        viscous,
        penalty,
        stab,
    })
}

/// `B_(i, (j, c)) = int (P_F grad psi_i)_c psi_j`, so that `b(v, p) = p^T B v`.
/// `P_F` is the projector of the facet, i.e. `P_F grad psi_i` is the
/// tangential gradient on `Gamma_h`.
pub fn assemble_pressure_coupling(disc: &Discretization) -> CsrMatrix {
    assemble_surface(disc, disc.n_scalar(), disc.n_velocity(), |tri, el, dofs, out| {
        let pg = el.p1.grads.map(|g| tri.facet_projector * g);
        for q in &tri.quad {
            for a in 0..4 {
                let pg = pg[a];
                for b in 0..4 {
                    for c in 0..3 {
                        out.push((dofs[a], 3 * dofs[b] + c, q.weight * pg[c] * q.bary[b]));
                    }
                }
            }
        }
    })
}

/// `rho_p int_strip grad p . grad q`.
pub fn assemble_pressure_stab(disc: &Discretization, rho_p: f64) -> CsrMatrix {
    let n = disc.n_scalar();
    assemble_volume(disc, n, n, |el, dofs, out| {
        for a in 0..4 {
            for b in 0..4 {
                let v = rho_p * el.p1.volume * el.p1.grads[a].dot(&el.p1.grads[b]);
                out.push((dofs[a], dofs[b], v));
            }
        }
        Ok(())
    })
    .expect("pressure stabilization cannot fail")
}

/// `m_i = int_{Gamma_h} psi_i`.
pub fn assemble_mean_constraint(disc: &Discretization) -> Vec<f64> {
    let parts: Vec<[(usize, f64); 4]> = disc
        .surface
        .triangles
        .par_iter()
        .map(|t| {
            let (_, dofs) = disc.parent(t);
            let mut loc = [0.0; 4];
            for q in &t.quad {
                for a in 0..4 {
                    loc[a] += q.weight * q.bary[a];
                }
            }
            [0, 1, 2, 3].map(|a| (dofs[a], loc[a]))
        })
        .collect();
    let mut m = vec![0.0; disc.n_scalar()];
    for p in parts {
        for (i, v) in p {
            m[i] += v;
        }
    }
    m
}

/// Time-independent blocks of the step operator, with the velocity form
/// kept in parts and the pressure stabilization unscaled.
#[derive(Debug, Clone)]
pub struct StaticBlocks {
    pub mass: CsrMatrix,
    pub velocity: ViscousParts,
    pub coupling: CsrMatrix,
    /// `int_strip grad p . grad q` (without `rho_p`).
    pub stiffness: CsrMatrix,
    pub mean: Vec<f64>,
}

impl StaticBlocks {
    pub fn assemble(disc: &Discretization) -> Result<Self> {
        Ok(Self {
            mass: assemble_mass(disc),
            velocity: assemble_viscous(disc)?,
            coupling: assemble_pressure_coupling(disc),
            stiffness: assemble_pressure_stab(disc, 1.0),
            mean: assemble_mean_constraint(disc),
        })
    }

    pub fn velocity_form(&self, params: &SolverParams) -> CsrMatrix {
        self.velocity.combine(params.nu, params.tau, params.rho_u)
    }

    pub fn pressure_stab(&self, rho_p: f64) -> CsrMatrix {
        CsrMatrix::linear_combination(&[(rho_p, &self.stiffness)])
    }
}

const LOCAL: usize = 12;

/// Convection matrix with a fixed sparsity pattern, reassembled in place
/// for each extrapolated velocity.
#[derive(Debug, Clone)]
pub struct ConvectionOperator {
    /// All velocity couplings of neighbouring dofs, values zero.
    pub pattern: CsrMatrix,
    // Position in `pattern.values` of local entry `(i, j)`, per active tet.
    slots: Vec<[usize; LOCAL * LOCAL]>,
}

impl ConvectionOperator {
    pub fn new(disc: &Discretization) -> Self {
        let n = disc.n_velocity();
        let mut trip = Triplets::new(n, n);
        for dofs in &disc.element_dofs {
            for i in 0..LOCAL {
                for j in 0..LOCAL {
                    trip.push(3 * dofs[i / 3] + i % 3, 3 * dofs[j / 3] + j % 3, 0.0);
                }
            }
        }
        let pattern = trip.into_csr();
        let slots = disc
            .element_dofs
            .iter()
            .map(|dofs| {
                let mut s = [0usize; LOCAL * LOCAL];
                for i in 0..LOCAL {
                    for j in 0..LOCAL {
                        s[i * LOCAL + j] = pattern
                            .position(3 * dofs[i / 3] + i % 3, 3 * dofs[j / 3] + j % 3)
                            .expect("entry in pattern");
                    }
                }
                s
            })
            .collect();
        Self { pattern, slots }
    }

    /// Skew-symmetrized convection matrix for the extrapolated velocity
    /// `w` (interleaved nodal values).
    pub fn assemble(&self, disc: &Discretization, w: &[f64], form: NonlinearForm) -> Result<CsrMatrix> {
        if w.len() != disc.n_velocity() {
            return Err(Error::DimensionMismatch {
                expected: disc.n_velocity(),
                got: w.len(),
            });
        }
        let mut out = self.pattern.clone();
        if form == NonlinearForm::None {
            return Ok(out);
        }
        let locals: Vec<(usize, [f64; LOCAL * LOCAL])> = disc
            .surface
            .triangles
            .par_iter()
            .map(|tri| {
                let (el, dofs) = disc.parent(tri);
                let mut x = [0.0; LOCAL * LOCAL];
                for q in &tri.quad {
                    let wq = eval_vector(w, dofs, &q.bary);
                    let pw = q.projector * wq;
                    let pg = el.p1.grads.map(|g| q.projector * g);
                    for a in 0..4 {
                        for b in 0..4 {
                            let s = q.weight * q.bary[a];
                            let adv = pg[b].dot(&wq);
                            for c in 0..3 {
                                for d in 0..3 {
                                    let mut v = q.projector[(c, d)] * adv;
                                    if form == NonlinearForm::Rotational {
                                        v -= pg[b][c] * pw[d];
                                    }
                                    x[(3 * a + c) * LOCAL + 3 * b + d] += s * v;
                                }
                            }
                        }
                    }
                }
                let mut skew = [0.0; LOCAL * LOCAL];
                for i in 0..LOCAL {
                    for j in 0..LOCAL {
                        skew[i * LOCAL + j] = 0.5 * (x[i * LOCAL + j] - x[j * LOCAL + i]);
                    }
                }
                (tri.active_index, skew)
            })
            .collect();
        for (ai, local) in locals {
            let slots = &self.slots[ai];
            for k in 0..LOCAL * LOCAL {
                out.values[slots[k]] += local[k];
            }
        }
        Ok(out)
    }
}

/// Convection matrix on a freshly built pattern.
pub fn assemble_convection(disc: &Discretization, w: &[f64], form: NonlinearForm) -> Result<CsrMatrix> {
    ConvectionOperator::new(disc).assemble(disc, w, form)
}

fn assemble_surface_vector<F>(disc: &Discretization, len: usize, local: F) -> Result<Vec<f64>>
where
    F: Fn(&SurfaceTriangle, &CutElement, &[usize; 4], &mut Vec<(usize, f64)>) -> Result<()> + Sync,
{
    let parts: Vec<Result<Vec<(usize, f64)>>> = disc
        .surface
        .triangles
        .par_iter()
        .map(|t| {
            let (el, dofs) = disc.parent(t);
            let mut out = Vec::new();
            local(t, el, dofs, &mut out)?;
            Ok(out)
        })
        .collect();
    let mut v = vec![0.0; len];
    for p in parts {
        for (i, x) in p? {
            v[i] += x;
        }
    }
    Ok(v)
}

/// `F_(i, c) = int f_c psi_i` with the forcing evaluated at the closest
/// sphere point of each quadrature point.
pub fn assemble_momentum_rhs(disc: &Discretization, case: &ManufacturedCase, t: f64, nu: f64) -> Result<Vec<f64>> {
    if case.zero_forcing() {
        return Ok(vec![0.0; disc.n_velocity()]);
    }
    assemble_surface_vector(disc, disc.n_velocity(), |tri, _, dofs, out| {
        for q in &tri.quad {
            let f = case.forcing(&q.point, t, nu)?;
            for a in 0..4 {
                for c in 0..3 {
                    out.push((3 * dofs[a] + c, q.weight * q.bary[a] * f[c]));
                }
            }
        }
        Ok(())
    })
}

/// Continuity source `G_i = int (P_F grad psi_i) . u(t)`, paired with the
/// coupling block; zero for solenoidal cases.
pub fn assemble_continuity_rhs(disc: &Discretization, case: &ManufacturedCase, t: f64) -> Result<Vec<f64>> {
    if case.divergence_free() {
        return Ok(vec![0.0; disc.n_scalar()]);
    }
    assemble_surface_vector(disc, disc.n_scalar(), |tri, el, dofs, out| {
        for q in &tri.quad {
            let u = case.velocity(&q.point, t)?;
            for a in 0..4 {
                out.push((dofs[a], q.weight * (tri.facet_projector * el.p1.grads[a]).dot(&u)));
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::{interpolate, interpolate_scalar};
    use crate::sparse::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn disc(level: u32) -> Discretization {
        Discretization::sphere(level, SURFACE_QUAD_DEGREE).unwrap()
    }

    #[test]
    fn mesh_sizes() {
        assert!((mesh_size(1) - 5.0 / 6.0).abs() < 1e-15);
        assert!((mesh_size(3) - 10.0 / 48.0).abs() < 1e-15);
    }

    #[test]
    fn default_params() {
        let p = SolverParams::for_level(3, CaseId::Exact1);
        assert!((p.dt - 0.025).abs() < 1e-15);
        assert!((p.tau - p.h().powi(-2)).abs() < 1e-9);
        assert_eq!(p.n_steps(), 40);
        p.validate().unwrap();
        let mut q = p;
        q.rho_p = 0.0;
        assert!(q.validate().is_err());
        q = p;
        q.dt = 0.3;
        assert_eq!(q.n_steps(), 3);
    }

    #[test]
    fn form_names_round_trip() {
        for f in NonlinearForm::ALL {
            assert_eq!(f.name().parse::<NonlinearForm>().unwrap(), f);
        }
        assert!("skew".parse::<NonlinearForm>().is_err());
    }

    #[test]
    fn scalar_mass_sums_to_area() {
        let d = disc(2);
        let m = assemble_scalar_mass(&d);
        let total: f64 = m.values.iter().sum();
        assert!((total - d.surface.area()).abs() < 1e-12 * total);
        let mean = assemble_mean_constraint(&d);
        assert!((mean.iter().sum::<f64>() - d.surface.area()).abs() < 1e-12);
    }

    #[test]
    fn mass_is_symmetric_psd() {
        let d = disc(2);
        let m = assemble_mass(&d);
        assert!(m.asymmetry() < 1e-15);
        for s in 0..5 {
            assert!(m.quadratic(&random_vec(m.nrows, s)) >= 0.0);
        }
    }

    #[test]
    fn constants_in_kernel_of_gradient_forms() {
        let d = disc(2);
        let parts = assemble_viscous(&d).unwrap();
        let u: Vec<f64> = (0..d.n_velocity()).map(|i| [0.3, -1.0, 2.0][i % 3]).collect();
        assert!(parts.viscous.spmv(&u).unwrap().iter().all(|v| v.abs() < 1e-12));
        assert!(parts.stab.spmv(&u).unwrap().iter().all(|v| v.abs() < 1e-12));
        assert!(parts.penalty.quadratic(&u) > 1e-3);
        let b = assemble_pressure_coupling(&d);
        let p = vec![1.7; d.n_scalar()];
        assert!(b.spmv_transposed(&p).unwrap().iter().all(|v| v.abs() < 1e-12));
        let s = assemble_pressure_stab(&d, 0.5);
        assert!(s.spmv(&p).unwrap().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn velocity_forms_symmetric_psd() {
        let d = disc(1);
        let parts = assemble_viscous(&d).unwrap();
        for m in [&parts.viscous, &parts.penalty, &parts.stab] {
            assert!(m.asymmetry() < 1e-12 * m.max_abs());
            for s in 0..5 {
                assert!(m.quadratic(&random_vec(m.nrows, s)) >= -1e-12);
            }
        }
    }

    #[test]
    fn pressure_stab_of_linear_is_strip_volume() {
        let d = disc(2);
        let s = assemble_pressure_stab(&d, 0.25);
        let p = interpolate_scalar(&d.mesh, &d.dofs, |x| Ok(x.x)).unwrap();
        let vol = d.active.volume(&d.mesh);
        assert!((s.quadratic(&p.values) - 0.25 * vol).abs() < 1e-12 * vol);
        assert!(s.asymmetry() < 1e-15);
    }

    #[test]
    fn penalty_of_normal_field_is_area() {
        let d = disc(3);
        let parts = assemble_viscous(&d).unwrap();
        let u = interpolate(&d.mesh, &d.dofs, |x| Ok(x / x.norm())).unwrap();
        let e = parts.penalty.quadratic(&u.values);
        assert!((e - 4.0 * PI).abs() < 0.05 * 4.0 * PI, "{e}");
    }

    #[test]
    fn pressure_coupling_sphere_moment() {
        let d = disc(3);
        let b = assemble_pressure_coupling(&d);
        let p = interpolate_scalar(&d.mesh, &d.dofs, |x| Ok(x.z)).unwrap();
        let v = interpolate(&d.mesh, &d.dofs, |_| Ok(Vec3::z())).unwrap();
        let val = b.bilinear(&p.values, &v.values);
        let exact = 8.0 * PI / 3.0;
        assert!((val - exact).abs() < 0.03 * exact, "{val}");
    }

    #[test]
    fn coupling_with_normal_field_decays() {
        let vals: Vec<f64> = [2, 3]
            .into_iter()
            .map(|l| {
                let d = disc(l);
                let b = assemble_pressure_coupling(&d);
                let p = interpolate_scalar(&d.mesh, &d.dofs, |x| Ok(x.x + x.y * x.y + 0.5 * x.z)).unwrap();
                let v = interpolate(&d.mesh, &d.dofs, |x| Ok(x / x.norm())).unwrap();
                b.bilinear(&p.values, &v.values).abs()
            })
            .collect();
        assert!(vals[1] < 0.7 * vals[0], "{vals:?}");
    }

    #[test]
    fn killing_interpolant_nearly_solenoidal() {
        let norms: Vec<f64> = [2, 3]
            .into_iter()
            .map(|l| {
                let d = disc(l);
                let u = interpolate(&d.mesh, &d.dofs, |x| crate::cases::killing_field(&(x / x.norm()))).unwrap();
                let bu = assemble_pressure_coupling(&d).spmv(&u.values).unwrap();
                dot(&bu, &bu).sqrt()
            })
            .collect();
        assert!(norms[1] < norms[0] / 4.0, "{norms:?}");
    }

    #[test]
    fn convection_is_skew() {
        let d = disc(2);
        let op = ConvectionOperator::new(&d);
        let w = random_vec(d.n_velocity(), 7);
        for form in [NonlinearForm::Convective, NonlinearForm::Rotational] {
            let c = op.assemble(&d, &w, form).unwrap();
            assert!(c.skew_defect() <= 1e-14 * c.max_abs());
            let u = random_vec(d.n_velocity(), 11);
            let scale = c.max_abs() * dot(&u, &u);
            assert!(c.quadratic(&u).abs() <= 1e-12 * scale);
        }
        let zero = op.assemble(&d, &vec![0.0; d.n_velocity()], NonlinearForm::Convective).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        assert_eq!(op.assemble(&d, &w, NonlinearForm::None).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn convective_and_rotational_differ() {
        let d = disc(2);
        let w = interpolate(&d.mesh, &d.dofs, |x| {
            let y = x / x.norm();
            Ok(crate::cases::killing_field(&y)? + Vec3::x() - y * y.x)
        })
        .unwrap();
        let c = assemble_convection(&d, &w.values, NonlinearForm::Convective).unwrap();
        let r = assemble_convection(&d, &w.values, NonlinearForm::Rotational).unwrap();
        let diff = CsrMatrix::linear_combination(&[(1.0, &c), (-1.0, &r)]);
        assert!(diff.max_abs() > 1e-3);
    }

    #[test]
    fn convection_matches_triplet_assembly() {
        // Order-independent reference: assemble the unsymmetrized matrix
        // through triplets and skew it globally.
        let d = disc(1);
        let w = random_vec(d.n_velocity(), 3);
        let n = d.n_velocity();
        let x = assemble_surface(&d, n, n, |tri, el, dofs, out| {
            for q in &tri.quad {
                let wq = eval_vector(&w, dofs, &q.bary);
                for a in 0..4 {
                    for b in 0..4 {
                        let adv = (q.projector * el.p1.grads[b]).dot(&wq);
                        for c in 0..3 {
                            for dd in 0..3 {
                                let v = q.weight * q.bary[a] * q.projector[(c, dd)] * adv;
                                out.push((3 * dofs[a] + c, 3 * dofs[b] + dd, v));
                            }
                        }
                    }
                }
            }
        });
        let reference = CsrMatrix::linear_combination(&[(0.5, &x), (-0.5, &x.transpose())]);
        let c = assemble_convection(&d, &w, NonlinearForm::Convective).unwrap();
        let diff = CsrMatrix::linear_combination(&[(1.0, &c), (-1.0, &reference)]);
        assert!(diff.max_abs() < 1e-13 * c.max_abs().max(1.0));
    }

    #[test]
    fn killing_rhs_vanishes() {
        let d = disc(1);
        let case = ManufacturedCase::new(CaseId::Killing);
        assert!(assemble_momentum_rhs(&d, &case, 0.3, 1.0).unwrap().iter().all(|&v| v == 0.0));
        assert!(assemble_continuity_rhs(&d, &case, 0.3).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sol2b_continuity_source_pairings() {
        // sum_i G_i q_i = int (P grad q_h) . u. With u = f2 P e_x on the
        // sphere: q = x gives f2 int (1 - x^2) = f2 8 pi / 3, q = z gives
        // -f2 int x z = 0.
        let case = ManufacturedCase::new(CaseId::Sol2b);
        let exact = (1.0 - 1f64.exp()) * 8.0 * PI / 3.0;
        let errs: Vec<f64> = [2, 3]
            .into_iter()
            .map(|l| {
                let d = disc(l);
                let g = assemble_continuity_rhs(&d, &case, 0.0).unwrap();
                let qx = interpolate_scalar(&d.mesh, &d.dofs, |x| Ok(x.x)).unwrap();
                let qz = interpolate_scalar(&d.mesh, &d.dofs, |x| Ok(x.z)).unwrap();
                assert!(dot(&g, &qz.values).abs() < 0.05 * exact.abs());
                (dot(&g, &qx.values) - exact).abs() / exact.abs()
            })
            .collect();
        assert!(errs[0] < 0.1 && errs[1] < 0.5 * errs[0], "{errs:?}");
    }
}
