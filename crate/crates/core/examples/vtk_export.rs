//! Write the discrete surface and a computed state as legacy VTK.

use std::fs::File;
use std::io::BufWriter;

use surfnse::assembly::{Discretization, SolverParams, SURFACE_QUAD_DEGREE};
use surfnse::{vtk, CaseId, Simulation};

fn main() -> surfnse::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "surface.vtk".into());
    let level = 2;
    let disc = Discretization::sphere(level, SURFACE_QUAD_DEGREE)?;
    let mut params = SolverParams::for_level(level, CaseId::Sol2b);
    params.t_end = 0.25;
    let mut sim = Simulation::new(&disc, params)?;
    let last = sim.run()?.pop().expect("at least one step");
    let mut w = BufWriter::new(File::create(&out)?);
    vtk::write_surface(&mut w, &disc, Some((&last.u, &last.p)))?;
    println!("wrote {out}: {} triangles, t = {}", disc.surface.triangles.len(), last.time);
    Ok(())
}
