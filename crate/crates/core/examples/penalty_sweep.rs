//! Sensitivity of the errors to the tangential penalty `tau = 2^k`.

use surfnse::experiments::{run_penalty_sweep, ExperimentConfig};
use surfnse::CaseId;

fn main() -> surfnse::Result<()> {
    env_logger::init();
    let cfg = ExperimentConfig {
        levels: vec![2],
        dt: Some(0.05),
        case: CaseId::Sol2b,
        tau_exponents: (0..=16).step_by(2).collect(),
        ..Default::default()
    };
    let sweep = run_penalty_sweep(&cfg)?;
    println!("    k  LinfL2      L2H1        pL2");
    for row in &sweep.rows {
        let [linf, h1, _, p] = row.errors.as_array();
        println!("{:>5}  {linf:.3e}  {h1:.3e}  {p:.3e}", row.exponent);
    }
    Ok(())
}
