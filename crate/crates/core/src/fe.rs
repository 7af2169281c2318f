//! Piecewise-linear finite elements on the active strip.

use crate::error::{Error, Result};
use crate::mesh::{ActiveSet, BackgroundMesh};
use crate::{Mat3, Vec3};

const BARY_TOL: f64 = 1e-12;

/// Affine map data of one tetrahedron: barycentric coordinates and the
/// (constant) gradients of the four P1 shape functions.
#[derive(Debug, Clone, Copy)]
pub struct P1Tet {
    pub points: [Vec3; 4],
    pub grads: [Vec3; 4],
    pub volume: f64,
    inv_jac: Mat3,
}

impl P1Tet {
    pub fn new(points: [Vec3; 4]) -> Result<Self> {
        let jac = Mat3::from_columns(&[
            points[1] - points[0],
            points[2] - points[0],
            points[3] - points[0],
        ]);
        let volume = jac.determinant() / 6.0;
        if !(volume > 0.0) {
            return Err(Error::DegenerateTet { tet: usize::MAX, volume });
        }
        let inv_jac = jac.try_inverse().ok_or(Error::DegenerateTet {
            tet: usize::MAX,
            volume,
        })?;
        let g1: Vec3 = inv_jac.row(0).transpose();
        let g2: Vec3 = inv_jac.row(1).transpose();
        let g3: Vec3 = inv_jac.row(2).transpose();
        Ok(Self {
            points,
            grads: [-(g1 + g2 + g3), g1, g2, g3],
            volume,
            inv_jac,
        })
    }

    pub fn barycentric(&self, x: &Vec3) -> [f64; 4] {
        let l = self.inv_jac * (x - self.points[0]);
        [1.0 - l.x - l.y - l.z, l.x, l.y, l.z]
    }

    /// True when `x` lies in the closed tet up to `1e-12` in barycentric
    /// coordinates.
    pub fn contains(&self, x: &Vec3) -> bool {
        self.barycentric(x)
            .iter()
            .all(|&l| (-BARY_TOL..=1.0 + BARY_TOL).contains(&l))
    }

    pub fn eval(&self, nodal: &[f64; 4], x: &Vec3) -> f64 {
        let l = self.barycentric(x);
        (0..4).map(|i| l[i] * nodal[i]).sum()
    }

    pub fn gradient(&self, nodal: &[f64; 4]) -> Vec3 {
        (0..4).map(|i| self.grads[i] * nodal[i]).sum()
    }
}

/// Value of the P1 interpolant of `nodal_values` at `point`.
pub fn p1_eval(tet_points: &[Vec3; 4], nodal_values: &[f64; 4], point: &Vec3) -> Result<f64> {
    let tet = P1Tet::new(*tet_points)?;
    if !tet.contains(point) {
        return Err(Error::InvalidParameter(format!(
            "point {point:?} outside tetrahedron"
        )));
    }
    Ok(tet.eval(nodal_values, point))
}

pub fn p1_gradient(tet_points: &[Vec3; 4], nodal_values: &[f64; 4]) -> Result<Vec3> {
    Ok(P1Tet::new(*tet_points)?.gradient(nodal_values))
}

/// Numbering of the scalar degrees of freedom: one per vertex of an active
/// tetrahedron. Velocity dof `(i, c)` lives at `3 * i + c`; pressure dof `i`
/// at `i`.
#[derive(Debug, Clone)]
pub struct DofMap {
    vertex_to_dof: Vec<usize>,
    dof_to_vertex: Vec<usize>,
}

const NO_DOF: usize = usize::MAX;

impl DofMap {
    pub fn new(mesh: &BackgroundMesh, active: &ActiveSet) -> Self {
        let mut vertex_to_dof = vec![NO_DOF; mesh.vertices.len()];
        for (d, &v) in active.active_vertices.iter().enumerate() {
            vertex_to_dof[v] = d;
        }
        Self {
            vertex_to_dof,
            dof_to_vertex: active.active_vertices.clone(),
        }
    }

    pub fn n_scalar(&self) -> usize {
        self.dof_to_vertex.len()
    }

    pub fn n_velocity(&self) -> usize {
        3 * self.n_scalar()
    }

    pub fn n_pressure(&self) -> usize {
        self.n_scalar()
    }

    pub fn dof(&self, vertex: usize) -> Option<usize> {
        match self.vertex_to_dof.get(vertex) {
            Some(&d) if d != NO_DOF => Some(d),
            _ => None,
        }
    }

    pub fn vertex(&self, dof: usize) -> usize {
        self.dof_to_vertex[dof]
    }

    /// Scalar dofs of the four vertices of `tet`. Panics if the tet is not
    /// active.
    pub fn tet_dofs(&self, mesh: &BackgroundMesh, tet: usize) -> [usize; 4] {
        mesh.tets[tet].map(|v| self.dof(v).expect("vertex of an inactive tetrahedron"))
    }
}

/// Nodal coefficient vector of a scalar (`components == 1`) or vector
/// (`components == 3`, interleaved) P1 field.
#[derive(Debug, Clone, PartialEq)]
pub struct FeField {
    pub components: usize,
    pub values: Vec<f64>,
}

impl FeField {
    pub fn zeros(dofs: &DofMap, components: usize) -> Self {
        Self {
            components,
            values: vec![0.0; components * dofs.n_scalar()],
        }
    }

    pub fn from_values(components: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len() % components, 0);
        Self { components, values }
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len() / self.components
    }

    pub fn node_vector(&self, dof: usize) -> Vec3 {
        debug_assert_eq!(self.components, 3);
        Vec3::new(
            self.values[3 * dof],
            self.values[3 * dof + 1],
            self.values[3 * dof + 2],
        )
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Nodal interpolation of a vector function at all dof vertices.
pub fn interpolate<F>(mesh: &BackgroundMesh, dofs: &DofMap, f: F) -> Result<FeField>
where
    F: Fn(&Vec3) -> Result<Vec3>,
{
    let mut values = Vec::with_capacity(dofs.n_velocity());
    for d in 0..dofs.n_scalar() {
        let v = dofs.vertex(d);
        let x = mesh.vertices[v];
        let val = f(&x).map_err(|_| Error::UndefinedAtVertex {
            vertex: v,
            x: x.x,
            y: x.y,
            z: x.z,
        })?;
        values.extend_from_slice(val.as_slice());
    }
    Ok(FeField::from_values(3, values))
}

/// Nodal interpolation of a scalar function.
pub fn interpolate_scalar<F>(mesh: &BackgroundMesh, dofs: &DofMap, f: F) -> Result<FeField>
where
    F: Fn(&Vec3) -> Result<f64>,
{
    let mut values = Vec::with_capacity(dofs.n_scalar());
    for d in 0..dofs.n_scalar() {
        let v = dofs.vertex(d);
        let x = mesh.vertices[v];
        values.push(f(&x).map_err(|_| Error::UndefinedAtVertex {
            vertex: v,
            x: x.x,
            y: x.y,
            z: x.z,
        })?);
    }
    Ok(FeField::from_values(1, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> [Vec3; 4] {
        [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()]
    }

    #[test]
    fn constants_and_linears_reproduced() {
        let t = reference();
        let c = [2.5; 4];
        assert!((p1_eval(&t, &c, &Vec3::new(0.1, 0.2, 0.3)).unwrap() - 2.5).abs() < 1e-15);
        assert!(p1_gradient(&t, &c).unwrap().norm() < 1e-15);
        let xs = t.map(|p| p.x);
        assert!((p1_gradient(&t, &xs).unwrap() - Vec3::x()).norm() < 1e-15);
    }

    #[test]
    fn hat_function_at_centroid() {
        let v = p1_eval(&reference(), &[1.0, 0.0, 0.0, 0.0], &Vec3::repeat(0.25)).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn degenerate_tet_rejected() {
        let flat = [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::new(1.0, 1.0, 0.0)];
        assert!(P1Tet::new(flat).is_err());
        let inverted = [Vec3::zeros(), Vec3::y(), Vec3::x(), Vec3::z()];
        assert!(P1Tet::new(inverted).is_err());
    }

    #[test]
    fn point_outside_rejected() {
        assert!(p1_eval(&reference(), &[0.0; 4], &Vec3::new(1.0, 1.0, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn partition_of_unity_and_affine_reproduction(
            a in prop::array::uniform3(-1.0f64..1.0),
            l in prop::array::uniform4(0.0f64..1.0),
            coef in prop::array::uniform4(-3.0f64..3.0),
        ) {
            let pts = [
                Vec3::new(0.1, 0.0, 0.2) + Vec3::from(a) * 0.1,
                Vec3::new(1.3, 0.1, 0.0),
                Vec3::new(0.2, 1.1, -0.1),
                Vec3::new(0.0, 0.3, 0.9),
            ];
            let tet = P1Tet::new(pts).unwrap();
            let s: f64 = l.iter().sum();
            let x: Vec3 = (0..4).map(|i| pts[i] * (l[i] / s)).sum();
            let bary = tet.barycentric(&x);
            prop_assert!((bary.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let g: Vec3 = tet.grads.iter().sum();
            prop_assert!(g.norm() < 1e-12);
            let affine = |p: &Vec3| coef[0] + coef[1] * p.x + coef[2] * p.y + coef[3] * p.z;
            let nodal = pts.map(|p| affine(&p));
            prop_assert!((tet.eval(&nodal, &x) - affine(&x)).abs() < 1e-12);
            prop_assert!((tet.gradient(&nodal) - Vec3::new(coef[1], coef[2], coef[3])).norm() < 1e-11);
        }
    }
}
