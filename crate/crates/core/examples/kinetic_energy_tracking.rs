//! Kinetic energy of the `sol2a` flow against its closed form
//! `E(t) = (2/35)(44 - 80 e^-t + 100 e^-2t)`.

use surfnse::experiments::{run_energy, ExperimentConfig, TauRule};
use surfnse::CaseId;

fn reference(t: f64) -> f64 {
    2.0 / 35.0 * (44.0 - 80.0 * (-t).exp() + 100.0 * (-2.0 * t).exp())
}

fn main() -> surfnse::Result<()> {
    env_logger::init();
    for tau in [TauRule::InversePower(2), TauRule::Fixed(1.0)] {
        let cfg = ExperimentConfig {
            levels: vec![2],
            dt: Some(0.02),
            t_end: 5.0,
            case: CaseId::Sol2a,
            tau,
            ..Default::default()
        };
        let res = run_energy(&cfg)?;
        let worst = res
            .summary
            .energy
            .iter()
            .map(|&(_, t, e)| (e - reference(t)).abs() / reference(t))
            .fold(0.0, f64::max);
        println!("tau {tau}: max relative deviation {worst:.4}");
        for &(k, t, e) in res.summary.energy.iter().step_by(50) {
            println!("  step {k:>4}  t {t:.2}  E_h {e:.4}  E {:.4}", reference(t));
        }
    }
    Ok(())
}
