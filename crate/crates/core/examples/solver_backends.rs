//! Sparse LU against restarted GMRES with ILU(0) on the same time steps.

use std::time::Instant;

use surfnse::assembly::{Discretization, SolverParams, SURFACE_QUAD_DEGREE};
use surfnse::{CaseId, Simulation, SolverBackend};

fn main() -> surfnse::Result<()> {
    let level = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let disc = Discretization::sphere(level, SURFACE_QUAD_DEGREE)?;
    println!("level {level}: {} velocity + {} pressure unknowns", disc.n_velocity(), disc.n_scalar());
    let mut finals = Vec::new();
    for backend in [SolverBackend::Direct, SolverBackend::Gmres] {
        let mut params = SolverParams::for_level(level, CaseId::Exact1);
        params.backend = backend;
        params.t_end = 10.0 * params.dt;
        let start = Instant::now();
        let last = Simulation::new(&disc, params)?.run()?.pop().expect("steps");
        println!("{backend:<7} {:.2?}", start.elapsed());
        finals.push(last.u);
    }
    let diff = finals[0]
        .iter()
        .zip(&finals[1])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("max |u_direct - u_gmres| = {diff:.2e}");
    Ok(())
}
