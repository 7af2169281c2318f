//! Symmetric quadrature rules on triangles and tetrahedra.
//!
//! Rules are stored in barycentric coordinates with weights normalized to sum
//! to one; mapping to a physical simplex scales by its measure.

use crate::error::{Error, Result};
use crate::Vec3;

/// Barycentric points and unit-sum weights on the reference triangle.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Cheapest tabulated rule that integrates polynomials of total degree
    /// `degree` exactly. Degrees above 5 are not tabulated.
    pub fn with_degree(degree: usize) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let exact = match degree {
            0 | 1 => {
                points.push([1.0 / 3.0; 3]);
                weights.push(1.0);
                1
            }
            2 => {
                orbit3(&mut points, &mut weights, 1.0 / 6.0, 1.0 / 3.0);
                2
            }
            3 | 4 => {
                orbit3(&mut points, &mut weights, 0.445948490915965, 0.223381589678011);
                orbit3(&mut points, &mut weights, 0.091576213509771, 0.109951743655322);
                4
            }
            5 => {
                points.push([1.0 / 3.0; 3]);
                weights.push(0.225);
                orbit3(&mut points, &mut weights, 0.470142064105115, 0.132394152788506);
                orbit3(&mut points, &mut weights, 0.101286507323456, 0.125939180544827);
                5
            }
            _ => {
                return Err(Error::UnsupportedQuadrature {
                    kind: "triangle",
                    degree,
                })
            }
        };
        Ok(Self {
            degree: exact,
            points,
            weights,
        })
    }

    /// Physical points and weights on the triangle `tri`.
    pub fn map(&self, tri: &[Vec3; 3]) -> Vec<(Vec3, f64)> {
        let area = triangle_area(tri);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(l, &w)| (tri[0] * l[0] + tri[1] * l[1] + tri[2] * l[2], w * area))
            .collect()
    }
}

// Three points (a, a, 1-2a) and permutations.
fn orbit3(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    points.extend([[a, a, b], [a, b, a], [b, a, a]]);
    weights.extend([w; 3]);
}

pub fn triangle_area(tri: &[Vec3; 3]) -> f64 {
    0.5 * (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm()
}

/// Barycentric points and unit-sum weights on the reference tetrahedron.
#[derive(Debug, Clone)]
pub struct TetRule {
    pub degree: usize,
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl TetRule {
    pub fn with_degree(degree: usize) -> Result<Self> {
        let (points, weights) = match degree {
            1 => (vec![[0.25; 4]], vec![1.0]),
            2 => {
                let a = 0.5854101966249685;
                let b = 0.1381966011250105;
                (
                    vec![[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]],
                    vec![0.25; 4],
                )
            }
            3 => {
                let a = 0.5;
                let b = 1.0 / 6.0;
                (
                    vec![
                        [0.25; 4],
                        [a, b, b, b],
                        [b, a, b, b],
                        [b, b, a, b],
                        [b, b, b, a],
                    ],
                    vec![-0.8, 0.45, 0.45, 0.45, 0.45],
                )
            }
            _ => {
                return Err(Error::UnsupportedQuadrature {
                    kind: "tetrahedron",
                    degree,
                })
            }
        };
        Ok(Self {
            degree,
            points,
            weights,
        })
    }

    pub fn map(&self, tet: &[Vec3; 4], volume: f64) -> Vec<(Vec3, f64)> {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(l, &w)| {
                (
                    tet[0] * l[0] + tet[1] * l[1] + tet[2] * l[2] + tet[3] * l[3],
                    w * volume,
                )
            })
            .collect()
    }
}

/// Points and weights of the degree-`degree` rule on `tet`.
pub fn volume_quadrature(tet: &[Vec3; 4], degree: usize) -> Result<Vec<(Vec3, f64)>> {
    let rule = TetRule::with_degree(degree)?;
    let vol = (tet[1] - tet[0]).dot(&(tet[2] - tet[0]).cross(&(tet[3] - tet[0]))) / 6.0;
    Ok(rule.map(tet, vol.abs()))
}
