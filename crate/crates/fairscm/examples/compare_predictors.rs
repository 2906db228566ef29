//! Fit all six predictors on the shipped law-school model and print the
//! demographic-parity test, accuracy, and order-preservation summary for
//! each.
//!
//! ```bash
//! cargo run --release --example compare_predictors
//! ```

use fairscm::configs;
use fairscm::estimators::{fit_estimator, EstimatorSpec};
use fairscm::metrics::{dp_test, group_order_report, rmse};

fn main() -> fairscm::Result<()> {
    let data = configs::law_school().sample(5000, 7)?;
    let (train, test) = data.split(0.8, 7)?;

    println!(
        "{:<10} {:>12} {:>12} {:>8} {:>10}",
        "estimator", "H", "p", "rMSE", "preserved"
    );
    for name in ["level1", "level2", "level3", "listing1", "listing2", "full"] {
        let spec: EstimatorSpec = name.parse()?;
        let predictor = fit_estimator(spec, &train)?;
        let kw = dp_test(&predictor, &test)?;
        let predictions = predictor.predict_all(&test)?;
        let err = rmse(&predictions, test.outcome())?;
        let order = group_order_report(test.outcome(), &predictions, test.groups())?;
        println!(
            "{:<10} {:>12.4} {:>12.3e} {:>8.3} {:>10}",
            name, kw.h, kw.p, err, order.all_preserved
        );
    }
    Ok(())
}
