//! Run the full experiment pipeline on a shipped config and write
//! `report.json` plus `tables.md` into a temporary directory.
//!
//! ```bash
//! cargo run --release --example fairness_report
//! ```

use std::path::PathBuf;

use fairscm::harness::{cmd_evaluate, ExperimentConfig};

fn main() -> fairscm::Result<()> {
    let config_path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join("law_school.json");
    let out_dir = std::env::temp_dir().join("fairscm_example");
    std::fs::create_dir_all(&out_dir).ok();

    let config = ExperimentConfig {
        model: Some(config_path),
        n: 5000,
        seed: 7,
        epsilons: vec![0.0, 0.05, 0.25],
        ..Default::default()
    };
    let report_path = out_dir.join("report.json");
    let tables_path = out_dir.join("tables.md");
    let report = cmd_evaluate(&config, &report_path, Some(&tables_path))?;

    println!("wrote {}", report_path.display());
    println!("wrote {}\n", tables_path.display());
    println!("{}", std::fs::read_to_string(&tables_path).expect("tables just written"));
    println!(
        "estimators evaluated: {}",
        report
            .estimators
            .iter()
            .map(|e| e.name.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}
