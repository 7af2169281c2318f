//! Step-by-step driver printing the discrete energy identity residual.

use surfnse::assembly::{Discretization, NonlinearForm, SolverParams, SURFACE_QUAD_DEGREE};
use surfnse::{CaseId, Simulation};

fn main() -> surfnse::Result<()> {
    let disc = Discretization::sphere(2, SURFACE_QUAD_DEGREE)?;
    let mut params = SolverParams::for_level(2, CaseId::Killing);
    params.nu = 0.0;
    params.dt = 0.1;
    params.t_end = 2.0;
    params.form = NonlinearForm::Rotational;
    let mut sim = Simulation::new(&disc, params)?;
    println!("step  time   kinetic    lhs         rhs         residual");
    for _ in 0..params.n_steps() {
        let r = sim.advance()?;
        println!(
            "{:>4}  {:.2}  {:.6}  {:.6e}  {:.6e}  {:.1e}",
            r.step,
            r.time,
            r.kinetic,
            r.balance.lhs,
            r.balance.rhs,
            r.balance.residual()
        );
    }
    Ok(())
}
