//! Fit the latent-factor model by EM on self-generated data and inspect how
//! well the posterior means recover the true latent draws.
//!
//! ```bash
//! cargo run --release --example latent_inference
//! ```

use fairscm::latent::{fit_em, posterior_means, DEFAULT_MAX_ITER, DEFAULT_TOL};
use fairscm::scm::{NodeRole, NodeSpec, StructuralModel};

fn main() -> fairscm::Result<()> {
    let model = StructuralModel::new(vec![
        NodeSpec::bernoulli("group_a", NodeRole::Protected, &[], 0.0, &[]),
        NodeSpec::gaussian("skill", NodeRole::Latent, &[], 0.0, &[], 1.0),
        NodeSpec::gaussian("test1", NodeRole::Observed, &["group_a", "skill"], 0.0, &[1.0, 1.0], 1.0),
        NodeSpec::gaussian("test2", NodeRole::Observed, &["group_a", "skill"], 0.5, &[0.6, 1.2], 0.8),
        NodeSpec::gaussian("grade", NodeRole::Outcome, &["skill"], 0.0, &[1.0], 0.3),
    ]);
    let data = model.sample(10_000, 2024)?;

    let fit = fit_em(&data, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
    println!(
        "EM converged = {} after {} iterations (log-likelihood {:.3})",
        fit.converged, fit.iterations, fit.log_likelihood
    );
    for f in &fit.params.features {
        println!(
            "  {}: intercept {:+.3}, loading {:+.3}, noise variance {:.3}, offsets {:?}",
            f.name, f.intercept, f.loading, f.noise_variance, f.group_offsets
        );
    }

    let means = posterior_means(&fit.params, &data)?;
    let truth = data.latent("skill").expect("synthetic data keeps latents");
    let n = means.len() as f64;
    let (mm, mt) = (
        means.iter().sum::<f64>() / n,
        truth.iter().sum::<f64>() / n,
    );
    let mut cov = 0.0;
    let mut vm = 0.0;
    let mut vt = 0.0;
    for (m, t) in means.iter().zip(truth) {
        cov += (m - mm) * (t - mt);
        vm += (m - mm) * (m - mm);
        vt += (t - mt) * (t - mt);
    }
    println!(
        "correlation(posterior mean, true latent) = {:.3}",
        cov / (vm.sqrt() * vt.sqrt())
    );
    Ok(())
}
