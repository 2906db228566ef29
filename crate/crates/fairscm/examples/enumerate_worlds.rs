//! Exact enumeration of a small discrete model: every joint assignment with
//! its probability, plus a marginal check.
//!
//! ```bash
//! cargo run --example enumerate_worlds
//! ```

use fairscm::scm::{NodeRole, NodeSpec, StructuralModel};

fn main() -> fairscm::Result<()> {
    // A biased coin, a three-sided spinner, and a child whose odds depend on
    // both.
    let model = StructuralModel::new(vec![
        NodeSpec::bernoulli("coin", NodeRole::Protected, &[], 0.4054651081081644, &[]), // p = 0.6
        NodeSpec::categorical("spinner", NodeRole::Observed, &[0.5, 0.3, 0.2]),
        NodeSpec::bernoulli(
            "child",
            NodeRole::Outcome,
            &["coin", "spinner"],
            -0.5,
            &[1.0, 0.0, 0.4, -0.4],
        ),
    ]);

    let table = model.enumerate_worlds()?;
    println!("{}", table.node_names.join("  "));
    let mut total = 0.0;
    for world in &table.worlds {
        let cells: Vec<String> = world.values.iter().map(|v| format!("{v}")).collect();
        println!("{}   p = {:.6}", cells.join("     "), world.probability);
        total += world.probability;
    }
    println!("\nsum of probabilities: {total}");

    let p_coin_heads: f64 = table
        .worlds
        .iter()
        .filter(|w| table.value(w, "coin") == Some(1.0))
        .map(|w| w.probability)
        .sum();
    println!("marginal P(coin = 1) = {p_coin_heads:.6} (specified 0.6)");
    Ok(())
}
