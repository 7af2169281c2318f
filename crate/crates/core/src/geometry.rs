//! Level-set description of the surface, its piecewise planar approximation
//! by marching tetrahedra, and quadrature on the resulting triangles.
//!
//! The discrete surface is the zero set of the P1 nodal interpolant of the
//! level set. Normals on it come from the gradient of the P2 nodal
//! interpolant of the level set on each parent tetrahedron, which is one
//! order more accurate than the facet normals.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fe::P1Tet;
use crate::mesh::{snap, ActiveSet, BackgroundMesh};
use crate::quadrature::{triangle_area, TriangleRule};
use crate::{Mat3, Vec3};

/// Smallest admissible `|grad phi_h|` at a quadrature point.
pub const MIN_GRADIENT: f64 = 1e-10;

/// Implicitly defined surface `{x : phi(x) = 0}`.
pub trait ImplicitSurface: Sync {
    fn phi(&self, x: &Vec3) -> f64;
}

/// Sphere `|x - center| = radius` with level set `|x - center| - radius`.
#[derive(Debug, Clone, Copy)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Sphere {
    pub fn unit() -> Self {
        Self {
            center: Vec3::zeros(),
            radius: 1.0,
        }
    }
}

impl ImplicitSurface for Sphere {
    fn phi(&self, x: &Vec3) -> f64 {
        (x - self.center).norm() - self.radius
    }
}

impl<F: Fn(&Vec3) -> f64 + Sync> ImplicitSurface for F {
    fn phi(&self, x: &Vec3) -> f64 {
        self(x)
    }
}

/// A level set sampled on the background mesh.
pub struct LevelSet<'a> {
    pub surface: &'a dyn ImplicitSurface,
    /// Nodal values `phi(vertex)` (the P1 interpolant).
    pub p1_values: Vec<f64>,
}

impl<'a> LevelSet<'a> {
    pub fn new(surface: &'a dyn ImplicitSurface, mesh: &BackgroundMesh) -> Self {
        let p1_values = mesh.vertices.iter().map(|x| surface.phi(x)).collect();
        Self { surface, p1_values }
    }

    pub fn phi(&self, x: &Vec3) -> f64 {
        self.surface.phi(x)
    }

    /// P2 interpolant of the level set on one tetrahedron.
    pub fn p2_on(&self, tet: &P1Tet) -> P2Tet {
        P2Tet::interpolate(*tet, |x| self.surface.phi(x))
    }
}

/// Edges of a tetrahedron in the order used for the P2 edge nodes.
pub const TET_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Quadratic Lagrange interpolant on one tetrahedron (4 vertex and 6 edge
/// midpoint values).
#[derive(Debug, Clone, Copy)]
pub struct P2Tet {
    pub tet: P1Tet,
    pub values: [f64; 10],
}

impl P2Tet {
    pub fn interpolate(tet: P1Tet, f: impl Fn(&Vec3) -> f64) -> Self {
        let mut values = [0.0; 10];
        for i in 0..4 {
            values[i] = f(&tet.points[i]);
        }
        for (e, &(i, j)) in TET_EDGES.iter().enumerate() {
            values[4 + e] = f(&((tet.points[i] + tet.points[j]) * 0.5));
        }
        Self { tet, values }
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        let l = self.tet.barycentric(x);
        let mut v = 0.0;
        for i in 0..4 {
            v += self.values[i] * l[i] * (2.0 * l[i] - 1.0);
        }
        for (e, &(i, j)) in TET_EDGES.iter().enumerate() {
            v += self.values[4 + e] * 4.0 * l[i] * l[j];
        }
        v
    }

    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        let l = self.tet.barycentric(x);
        let g = &self.tet.grads;
        let mut grad = Vec3::zeros();
        for i in 0..4 {
            grad += g[i] * (self.values[i] * (4.0 * l[i] - 1.0));
        }
        for (e, &(i, j)) in TET_EDGES.iter().enumerate() {
            grad += (g[j] * l[i] + g[i] * l[j]) * (4.0 * self.values[4 + e]);
        }
        grad
    }

    /// Unit normal `grad phi_h / |grad phi_h|`, or `None` when the gradient
    /// is below [`MIN_GRADIENT`].
    pub fn normal(&self, x: &Vec3) -> Option<Vec3> {
        let g = self.gradient(x);
        let n = g.norm();
        (n >= MIN_GRADIENT).then(|| g / n)
    }
}

/// Tangential projector `I - n n^T`.
pub fn projector(n: &Vec3) -> Mat3 {
    Mat3::identity() - n * n.transpose()
}

/// Zero set of the linear interpolant of `phi_vals` on a tetrahedron, as
/// 0, 1 or 2 triangles whose geometric normals point toward increasing phi.
///
/// Exactly-zero values count as positive. Triangles with area below
/// `1e-14 * h_T^2` (with `h_T` the longest edge) are dropped.
pub fn cut_tetrahedron(tet_points: &[Vec3; 4], phi_vals: &[f64; 4]) -> Vec<[Vec3; 3]> {
    let phi = phi_vals.map(snap);
    let neg: Vec<usize> = (0..4).filter(|&i| phi[i] < 0.0).collect();
    let pos: Vec<usize> = (0..4).filter(|&i| phi[i] > 0.0).collect();
    let cross = |a: usize, b: usize| {
        let t = phi[a] / (phi[a] - phi[b]);
        tet_points[a] + (tet_points[b] - tet_points[a]) * t
    };

    let mut tris: Vec<[Vec3; 3]> = match (neg.len(), pos.len()) {
        (1, 3) => vec![[cross(neg[0], pos[0]), cross(neg[0], pos[1]), cross(neg[0], pos[2])]],
        (3, 1) => vec![[cross(pos[0], neg[0]), cross(pos[0], neg[1]), cross(pos[0], neg[2])]],
        (2, 2) => {
            // Cyclic order around the quad.
            let q = [
                cross(neg[0], pos[0]),
                cross(neg[0], pos[1]),
                cross(neg[1], pos[1]),
                cross(neg[1], pos[0]),
            ];
            if (q[0] - q[2]).norm_squared() <= (q[1] - q[3]).norm_squared() {
                vec![[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
            } else {
                vec![[q[0], q[1], q[3]], [q[1], q[2], q[3]]]
            }
        }
        _ => Vec::new(),
    };

    // Orient along the gradient of the linear interpolant.
    if let Ok(tet) = P1Tet::new(*tet_points) {
        let grad = tet.gradient(&phi);
        for t in tris.iter_mut() {
            let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
            if n.dot(&grad) < 0.0 {
                t.swap(1, 2);
            }
        }
    }

    let mut h2: f64 = 0.0;
    for &(i, j) in &TET_EDGES {
        h2 = h2.max((tet_points[i] - tet_points[j]).norm_squared());
    }
    tris.retain(|t| triangle_area(t) >= 1e-14 * h2);
    tris
}

/// Quadrature point on the discrete surface.
#[derive(Debug, Clone, Copy)]
pub struct SurfacePoint {
    pub point: Vec3,
    pub weight: f64,
    /// Normal reconstructed from the P2 level-set interpolant.
    pub normal: Vec3,
    pub projector: Mat3,
    /// Barycentric coordinates in the parent tetrahedron.
    pub bary: [f64; 4],
}

/// A planar facet of the discrete surface.
#[derive(Debug, Clone)]
pub struct SurfaceTriangle {
    pub points: [Vec3; 3],
    /// Index into the background mesh tets.
    pub parent: usize,
    /// Index into `ActiveSet::active_tets`.
    pub active_index: usize,
    pub area: f64,
    /// Tangential projector of the planar facet itself.
    pub facet_projector: Mat3,
    pub quad: Vec<SurfacePoint>,
}

/// Per active tetrahedron geometric data.
#[derive(Debug, Clone)]
pub struct CutElement {
    pub tet: usize,
    pub p1: P1Tet,
    pub level_set: P2Tet,
}

/// The piecewise planar surface `Gamma_h` with quadrature.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub triangles: Vec<SurfaceTriangle>,
    /// One entry per active tet, in `ActiveSet` order.
    pub elements: Vec<CutElement>,
    pub quad_degree: usize,
}

impl SurfaceMesh {
    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| t.area).sum()
    }

    pub fn n_quad_points(&self) -> usize {
        self.triangles.iter().map(|t| t.quad.len()).sum()
    }

    /// Integral of `f` over `Gamma_h` with the mesh quadrature.
    pub fn integrate(&self, f: impl Fn(&SurfacePoint) -> f64) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| t.quad.iter())
            .map(|q| q.weight * f(q))
            .sum()
    }
}

/// Build `Gamma_h` from all active tets with a triangle rule of exactness at
/// least `quad_degree`.
pub fn build_surface_mesh(
    mesh: &BackgroundMesh,
    active: &ActiveSet,
    ls: &LevelSet<'_>,
    quad_degree: usize,
) -> Result<SurfaceMesh> {
    if active.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    let rule = TriangleRule::with_degree(quad_degree)?;

    let per_tet: Vec<Result<(CutElement, Vec<SurfaceTriangle>)>> = active
        .active_tets
        .par_iter()
        .enumerate()
        .map(|(ai, &ti)| {
            let pts = mesh.tet_points(ti);
            let p1 = P1Tet::new(pts).map_err(|_| Error::DegenerateTet {
                tet: ti,
                volume: mesh.tet_volume(ti),
            })?;
            let p2 = ls.p2_on(&p1);
            let phi = mesh.tets[ti].map(|v| ls.p1_values[v]);
            let mut tris = Vec::new();
            for tri in cut_tetrahedron(&pts, &phi) {
                let mut quad = Vec::with_capacity(rule.points.len());
                for (point, weight) in rule.map(&tri) {
                    let grad = p2.gradient(&point);
                    let mag = grad.norm();
                    if mag < MIN_GRADIENT {
                        return Err(Error::DegenerateGradient {
                            tet: ti,
                            magnitude: mag,
                        });
                    }
                    let normal = grad / mag;
                    quad.push(SurfacePoint {
                        point,
                        weight,
                        normal,
                        projector: projector(&normal),
                        bary: p1.barycentric(&point),
                    });
                }
                tris.push(SurfaceTriangle {
                    points: tri,
                    parent: ti,
                    active_index: ai,
                    area: triangle_area(&tri),
                    facet_projector: projector(&(tri[1] - tri[0]).cross(&(tri[2] - tri[0])).normalize()),
                    quad,
                });
            }
            Ok((
                CutElement {
                    tet: ti,
                    p1,
                    level_set: p2,
                },
                tris,
            ))
        })
        .collect();

    let mut elements = Vec::with_capacity(per_tet.len());
    let mut triangles = Vec::new();
    for r in per_tet {
        let (e, t) = r?;
        elements.push(e);
        triangles.extend(t);
    }
    Ok(SurfaceMesh {
        triangles,
        elements,
        quad_degree: rule.degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> [Vec3; 4] {
        [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()]
    }

    #[test]
    fn one_negative_vertex_gives_one_triangle_at_midpoints() {
        let tris = cut_tetrahedron(&reference(), &[-1.0, 1.0, 1.0, 1.0]);
        assert_eq!(tris.len(), 1);
        for p in tris[0] {
            // Midpoints of the edges from the origin.
            assert!((p.norm() - 0.5).abs() < 1e-15);
        }
        let n = (tris[0][1] - tris[0][0]).cross(&(tris[0][2] - tris[0][0]));
        assert!(n.dot(&Vec3::repeat(1.0)) > 0.0);
    }

    #[test]
    fn two_two_split_gives_coplanar_quad() {
        let phi = [-1.0, -0.5, 1.0, 2.0];
        let tris = cut_tetrahedron(&reference(), &phi);
        assert_eq!(tris.len(), 2);
        let tet = P1Tet::new(reference()).unwrap();
        let grad = tet.gradient(&phi);
        for t in &tris {
            for p in t {
                assert!(tet.eval(&phi, p).abs() < 1e-14);
            }
            let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
            assert!(n.dot(&grad) > 0.0);
            assert!(n.normalize().cross(&grad.normalize()).norm() < 1e-12);
        }
    }

    #[test]
    fn uniform_sign_gives_nothing() {
        assert!(cut_tetrahedron(&reference(), &[1.0, 2.0, 3.0, 0.0]).is_empty());
        assert!(cut_tetrahedron(&reference(), &[-1.0, -2.0, -3.0, -0.1]).is_empty());
    }

    #[test]
    fn three_negative_vertices() {
        let tris = cut_tetrahedron(&reference(), &[-1.0, -1.0, -1.0, 1.0]);
        assert_eq!(tris.len(), 1);
        let n = (tris[0][1] - tris[0][0]).cross(&(tris[0][2] - tris[0][0]));
        assert!(n.z > 0.0);
    }

    #[test]
    fn p2_reproduces_quadratics() {
        let tet = P1Tet::new([
            Vec3::new(0.1, 0.2, 0.0),
            Vec3::new(1.0, 0.0, 0.3),
            Vec3::new(0.0, 1.2, 0.1),
            Vec3::new(0.2, 0.1, 0.9),
        ])
        .unwrap();
        let f = |x: &Vec3| x.x * x.x - 2.0 * x.y * x.z + 0.5 * x.z + 1.0;
        let df = |x: &Vec3| Vec3::new(2.0 * x.x, -2.0 * x.z, -2.0 * x.y + 0.5);
        let p2 = P2Tet::interpolate(tet, f);
        let x = Vec3::new(0.3, 0.3, 0.2);
        assert!((p2.eval(&x) - f(&x)).abs() < 1e-13);
        assert!((p2.gradient(&x) - df(&x)).norm() < 1e-12);
    }

    #[test]
    fn projector_properties() {
        let n = Vec3::new(0.3, -0.4, 0.5).normalize();
        let p = projector(&n);
        assert!((p * p - p).norm() < 1e-14);
        assert!((p * n).norm() < 1e-15);
        assert!((p.trace() - 2.0).abs() < 1e-14);
        assert!((p - p.transpose()).norm() < 1e-15);
    }
}
