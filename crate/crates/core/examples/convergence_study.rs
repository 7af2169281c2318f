//! Error norms and observed rates for the smooth exact solution.
//!
//! ```text
//! cargo run --release --example convergence_study -- 0.01
//! ```

use surfnse::experiments::{run_convergence, ExperimentConfig};
use surfnse::CaseId;

fn main() -> surfnse::Result<()> {
    env_logger::init();
    let nu = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let cfg = ExperimentConfig {
        levels: vec![1, 2, 3],
        case: CaseId::Exact1,
        nu,
        ..Default::default()
    };
    let result = run_convergence(&cfg)?;
    print!("{}", result.csv);
    let [linf, h1, un, p] = result.rates();
    println!("\nrates LinfL2 {linf:.2?}  L2H1 {h1:.2?}  uN {un:.2?}  pL2 {p:.2?}");
    Ok(())
}
