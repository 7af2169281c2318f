//! Legacy ASCII VTK output of the discrete surface.

use std::io::Write;

use crate::assembly::{eval_scalar, eval_vector, Discretization};
use crate::error::Result;

/// Write `Gamma_h` as an unstructured grid of triangles with the triangle
/// area as cell data. With `fields = Some((u, p))` the discrete velocity and
/// pressure are added as point data. Triangle vertices are not merged.
pub fn write_surface<W: Write>(w: &mut W, disc: &Discretization, fields: Option<(&[f64], &[f64])>) -> Result<()> {
    let tris = &disc.surface.triangles;
    let np = 3 * tris.len();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "surface level {}", disc.mesh.level)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {np} double")?;
    for t in tris {
        for p in &t.points {
            writeln!(w, "{:.12e} {:.12e} {:.12e}", p.x, p.y, p.z)?;
        }
    }
    writeln!(w, "CELLS {} {}", tris.len(), 4 * tris.len())?;
    for i in 0..tris.len() {
        writeln!(w, "3 {} {} {}", 3 * i, 3 * i + 1, 3 * i + 2)?;
    }
    writeln!(w, "CELL_TYPES {}", tris.len())?;
    for _ in tris {
        writeln!(w, "5")?;
    }
    writeln!(w, "CELL_DATA {}", tris.len())?;
    writeln!(w, "SCALARS area double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for t in tris {
        writeln!(w, "{:.12e}", t.area)?;
    }
    if let Some((u, p)) = fields {
        writeln!(w, "POINT_DATA {np}")?;
        writeln!(w, "VECTORS velocity double")?;
        for t in tris {
            let (el, dofs) = disc.parent(t);
            for x in &t.points {
                let v = eval_vector(u, dofs, &el.p1.barycentric(x));
                writeln!(w, "{:.12e} {:.12e} {:.12e}", v.x, v.y, v.z)?;
            }
        }
        writeln!(w, "SCALARS pressure double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for t in tris {
            let (el, dofs) = disc.parent(t);
            for x in &t.points {
                writeln!(w, "{:.12e}", eval_scalar(p, dofs, &el.p1.barycentric(x)))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::SURFACE_QUAD_DEGREE;

    #[test]
    fn counts_in_header() {
        let d = Discretization::sphere(1, SURFACE_QUAD_DEGREE).unwrap();
        let mut buf = Vec::new();
        let u = vec![0.0; d.n_velocity()];
        let p = vec![1.0; d.n_scalar()];
        write_surface(&mut buf, &d, Some((&u, &p))).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let n = d.surface.triangles.len();
        assert!(s.contains(&format!("POINTS {} double", 3 * n)));
        assert!(s.contains(&format!("CELLS {n} {}", 4 * n)));
        assert!(s.contains(&format!("POINT_DATA {}", 3 * n)));
        assert_eq!(s.lines().filter(|l| *l == "5").count(), n);
    }
}
