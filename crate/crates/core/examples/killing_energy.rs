//! Inviscid rigid rotation of the sphere: kinetic energy lost by each
//! treatment of the inertia term.

use surfnse::experiments::{run_energy, ExperimentConfig};
use surfnse::{CaseId, NonlinearForm};

fn main() -> surfnse::Result<()> {
    env_logger::init();
    let level = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    println!("form         KE(T)/KE(0)");
    for form in NonlinearForm::ALL {
        let cfg = ExperimentConfig {
            levels: vec![level],
            dt: Some(0.1),
            t_end: 10.0,
            nu: 0.0,
            case: CaseId::Killing,
            form,
            ..Default::default()
        };
        let res = run_energy(&cfg)?;
        let last = *res.normalized().last().expect("non-empty history");
        println!("{:<12} {last:.6}", form.name());
    }
    Ok(())
}
