//! Structured tetrahedral background mesh of the computational box and the
//! set of elements cut by the discrete surface.

use crate::error::{Error, Result};
use crate::Vec3;

/// Half-width of the cube `[-5/3, 5/3]^3` that contains the unit sphere.
pub const BOX_HALF_WIDTH: f64 = 5.0 / 3.0;

/// Nodal level-set values that are exactly zero are replaced by this positive
/// value before any sign decision.
pub const ZERO_SNAP: f64 = 1e-14;

// Refuse meshes above this many tetrahedra (level 7 is ~1.6e7).
const MAX_TETS: u64 = 50_000_000;

/// Snap an exactly-zero level-set value to the positive side.
#[inline]
pub fn snap(phi: f64) -> f64 {
    if phi == 0.0 {
        ZERO_SNAP
    } else {
        phi
    }
}

/// Uniform Kuhn tessellation of a cube: `n^3` sub-cubes, 6 tetrahedra each.
#[derive(Debug, Clone)]
pub struct BackgroundMesh {
    pub level: u32,
    /// Sub-cubes per axis, `2^(level+1)`.
    pub n: usize,
    pub h: f64,
    pub origin: Vec3,
    pub extent: f64,
    pub vertices: Vec<Vec3>,
    /// Positively oriented vertex quadruples.
    pub tets: Vec<[usize; 4]>,
}

impl BackgroundMesh {
    /// Build the level-`level` mesh of `[-5/3, 5/3]^3`.
    pub fn new(level: u32) -> Result<Self> {
        Self::with_box(level, Vec3::repeat(-BOX_HALF_WIDTH), 2.0 * BOX_HALF_WIDTH)
    }

    pub fn with_box(level: u32, origin: Vec3, extent: f64) -> Result<Self> {
        let n64 = 1u64.checked_shl(level + 1).unwrap_or(u64::MAX);
        let tets = n64.saturating_mul(n64).saturating_mul(n64).saturating_mul(6);
        let vertices = (n64 + 1).saturating_pow(3);
        if level > 20 || tets > MAX_TETS {
            return Err(Error::MeshTooLarge {
                level,
                tets,
                vertices,
            });
        }
        let n = n64 as usize;
        let h = extent / n as f64;
        let np = n + 1;

        let mut verts = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    verts.push(origin + Vec3::new(i as f64, j as f64, k as f64) * h);
                }
            }
        }

        let vid = |i: usize, j: usize, k: usize| i + np * (j + np * k);
        // Kuhn subdivision: each tet follows a monotone lattice path from the
        // cube corner (0,0,0) to (1,1,1), one axis per step.
        const PATHS: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let mut tet_list = Vec::with_capacity(6 * n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for path in PATHS {
                        let mut c = [i, j, k];
                        let mut t = [vid(c[0], c[1], c[2]); 4];
                        for (s, &axis) in path.iter().enumerate() {
                            c[axis] += 1;
                            t[s + 1] = vid(c[0], c[1], c[2]);
                        }
                        if signed_volume(&verts, &t) < 0.0 {
                            t.swap(2, 3);
                        }
                        tet_list.push(t);
                    }
                }
            }
        }

        Ok(Self {
            level,
            n,
            h,
            origin,
            extent,
            vertices: verts,
            tets: tet_list,
        })
    }

    pub fn tet_points(&self, tet: usize) -> [Vec3; 4] {
        let t = &self.tets[tet];
        [
            self.vertices[t[0]],
            self.vertices[t[1]],
            self.vertices[t[2]],
            self.vertices[t[3]],
        ]
    }

    pub fn tet_volume(&self, tet: usize) -> f64 {
        signed_volume(&self.vertices, &self.tets[tet])
    }

    /// Tets whose snapped nodal level-set values have mixed signs, in
    /// ascending order.
    pub fn select_active(&self, phi_nodal: &[f64]) -> Result<ActiveSet> {
        if phi_nodal.len() != self.vertices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vertices.len(),
                got: phi_nodal.len(),
            });
        }
        let mut active_tets = Vec::new();
        let mut used = vec![false; self.vertices.len()];
        for (ti, t) in self.tets.iter().enumerate() {
            let neg = t.iter().filter(|&&v| snap(phi_nodal[v]) < 0.0).count();
            if neg > 0 && neg < 4 {
                active_tets.push(ti);
                for &v in t {
                    used[v] = true;
                }
            }
        }
        let active_vertices = used
            .iter()
            .enumerate()
            .filter_map(|(v, &u)| u.then_some(v))
            .collect();
        Ok(ActiveSet {
            active_tets,
            active_vertices,
        })
    }
}

/// The cut elements and the vertices they touch.
#[derive(Debug, Clone, Default)]
pub struct ActiveSet {
    pub active_tets: Vec<usize>,
    pub active_vertices: Vec<usize>,
}

impl ActiveSet {
    pub fn is_empty(&self) -> bool {
        self.active_tets.is_empty()
    }

    /// Total volume of the strip covered by active tets.
    pub fn volume(&self, mesh: &BackgroundMesh) -> f64 {
        self.active_tets.iter().map(|&t| mesh.tet_volume(t)).sum()
    }
}

pub fn signed_volume(vertices: &[Vec3], t: &[usize; 4]) -> f64 {
    let a = vertices[t[0]];
    let e1 = vertices[t[1]] - a;
    let e2 = vertices[t[2]] - a;
    let e3 = vertices[t[3]] - a;
    e1.dot(&e2.cross(&e3)) / 6.0
}
