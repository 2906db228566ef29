//! Verify, by exact enumeration, that a counterfactually fair predictor with
//! an independent latent can still invert the within-group ordering.
//!
//! ```bash
//! cargo run --example counterexample
//! ```

use fairscm::harness::cmd_demo_counterexample;

fn main() {
    let (report, text) = cmd_demo_counterexample();
    println!("{text}");
    assert_eq!(report.verdicts(), (true, true, false));
    println!("verdicts match the expected (true, true, false)");
}
