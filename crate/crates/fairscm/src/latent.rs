//! Closed-form Gaussian latent-variable inference and EM fitting.
//!
//! The generative model per feature j and row i with group a:
//!
//! ```text
//! u_i ~ Normal(0, 1)
//! x_ij = intercept_j + offset_{j,a} + loading_j · u_i + Normal(0, variance_j)
//! ```
//!
//! The unit prior pins the latent scale; offsets use a fixed reference group
//! at 0. Because everything is linear-Gaussian, the E-step is the exact
//! conjugate posterior and the marginal log-likelihood has a closed form, so
//! fitting is deterministic.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linear::solve_system;

pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-8;

/// Generative parameters of one observed feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureParams {
    pub name: String,
    pub intercept: f64,
    /// Additive group offsets; the reference group maps to 0.
    pub group_offsets: BTreeMap<String, f64>,
    pub loading: f64,
    pub noise_variance: f64,
}

/// Full parameter set of the latent-factor model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentModelParams {
    pub reference_group: String,
    pub features: Vec<FeatureParams>,
}

/// Posterior of the scalar latent for one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentPosterior {
    pub mean: f64,
    pub variance: f64,
}

/// Result of an EM run: parameters plus convergence diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmFit {
    pub params: LatentModelParams,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood improvement of the last iteration.
    pub final_delta: f64,
    /// Log-likelihood of the returned parameters.
    pub log_likelihood: f64,
    /// Log-likelihood after each EM iteration (always non-decreasing).
    pub trajectory: Vec<f64>,
    /// True when the factor was collapsed to zero loadings because its
    /// likelihood gain did not cover the BIC allowance for the extra
    /// parameters.
    pub collapsed_to_zero: bool,
}

impl LatentModelParams {
    fn offsets_for(&self, group: &str) -> Result<Vec<f64>> {
        self.features
            .iter()
            .map(|f| {
                f.group_offsets
                    .get(group)
                    .copied()
                    .ok_or_else(|| Error::UnseenGroup(group.to_string()))
            })
            .collect()
    }
}

/// Exact conjugate posterior of the latent given one row's group and
/// features:
///
/// ```text
/// variance = (1 + Σ loadingⱼ² / varianceⱼ)⁻¹
/// mean     = variance · Σ loadingⱼ (xⱼ − interceptⱼ − offsetⱼ) / varianceⱼ
/// ```
pub fn posterior_latent(
    params: &LatentModelParams,
    group: &str,
    features: &[f64],
) -> Result<LatentPosterior> {
    if features.len() != params.features.len() {
        return Err(Error::SchemaMismatch(format!(
            "expected {} features, got {}",
            params.features.len(),
            features.len()
        )));
    }
    if features.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite feature value".into()));
    }
    let offsets = params.offsets_for(group)?;
    let mut precision = 1.0;
    let mut weighted = 0.0;
    for ((f, x), b) in params.features.iter().zip(features).zip(&offsets) {
        precision += f.loading * f.loading / f.noise_variance;
        weighted += f.loading * (x - f.intercept - b) / f.noise_variance;
    }
    let variance = 1.0 / precision;
    Ok(LatentPosterior {
        mean: variance * weighted,
        variance,
    })
}

/// Posterior means for every row of a dataset.
pub fn posterior_means(params: &LatentModelParams, data: &Dataset) -> Result<Vec<f64>> {
    (0..data.n())
        .map(|i| {
            posterior_latent(params, &data.groups()[i], &data.feature_row(i)).map(|p| p.mean)
        })
        .collect()
}

/// Exact marginal log-likelihood with the latent integrated out.
///
/// Per group the features are jointly Gaussian with mean
/// `intercept + offset` and covariance `loading loadingᵀ + diag(variance)`;
/// the rank-one structure gives the inverse and determinant in closed form.
pub fn loglik(params: &LatentModelParams, data: &Dataset) -> Result<f64> {
    let p = params.features.len();
    if data.features().len() != p {
        return Err(Error::SchemaMismatch(format!(
            "expected {} features, got {}",
            p,
            data.features().len()
        )));
    }
    let inv_var: Vec<f64> = params
        .features
        .iter()
        .map(|f| 1.0 / f.noise_variance)
        .collect();
    let kappa: f64 = params
        .features
        .iter()
        .map(|f| f.loading * f.loading / f.noise_variance)
        .sum();
    let logdet: f64 = params
        .features
        .iter()
        .map(|f| f.noise_variance.ln())
        .sum::<f64>()
        + (1.0 + kappa).ln();
    let norm = -0.5 * (p as f64 * (2.0 * std::f64::consts::PI).ln() + logdet);

    let mut offset_cache: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut total = 0.0;
    for i in 0..data.n() {
        let group = data.groups()[i].as_str();
        if !offset_cache.contains_key(group) {
            offset_cache.insert(group, params.offsets_for(group)?);
        }
        let offsets = &offset_cache[group];
        let mut quad_diag = 0.0;
        let mut proj = 0.0;
        for (j, (f, b)) in params.features.iter().zip(offsets).enumerate() {
            let r = data.features()[j].1[i] - f.intercept - b;
            if !r.is_finite() {
                return Err(Error::InvalidInput("non-finite feature value".into()));
            }
            quad_diag += r * r * inv_var[j];
            proj += f.loading * r * inv_var[j];
        }
        let quad = quad_diag - proj * proj / (1.0 + kappa);
        total += norm - 0.5 * quad;
    }
    Ok(total)
}

/// Fit the latent-factor model by EM.
///
/// The E-step is the exact posterior above; the M-step solves, per feature,
/// an augmented least-squares system in (intercept, group offsets, loading)
/// with sufficient statistics E[u] and E[u²], then updates the noise
/// variance. Initialization is deterministic (group means, leading principal
/// direction of group-centered features, residual variances), so the whole
/// fit is reproducible. A factor whose likelihood gain over the zero-loading
/// model stays below the BIC allowance is collapsed to zero loadings; see
/// [`EmFit::collapsed_to_zero`].
pub fn fit_em(data: &Dataset, max_iter: usize, tol: f64) -> Result<EmFit> {
    let p = data.features().len();
    if p == 0 {
        return Err(Error::InvalidInput(
            "latent model needs at least one feature column".into(),
        ));
    }
    let n = data.n();
    let groups = data.distinct_groups();
    let mut group_index: BTreeMap<&str, usize> = BTreeMap::new();
    for (k, g) in groups.iter().enumerate() {
        group_index.insert(g.as_str(), k);
    }
    let row_group: Vec<usize> = data
        .groups()
        .iter()
        .map(|g| group_index[g.as_str()])
        .collect();
    let mut group_sizes = vec![0usize; groups.len()];
    for &g in &row_group {
        group_sizes[g] += 1;
    }
    if let Some(small) = group_sizes.iter().position(|&c| c < 2) {
        return Err(Error::InvalidInput(format!(
            "group `{}` has fewer than 2 rows",
            groups[small]
        )));
    }

    // ── Deterministic initialization ──────────────────────────────────
    // Group means give the intercept and offsets; the leading principal
    // direction of group-centered features seeds the loadings.
    let mut group_means = vec![vec![0.0; groups.len()]; p];
    for (j, (_, col)) in data.features().iter().enumerate() {
        for (i, x) in col.iter().enumerate() {
            group_means[j][row_group[i]] += x;
        }
        for (k, m) in group_means[j].iter_mut().enumerate() {
            *m /= group_sizes[k] as f64;
        }
    }

    let mut centered = DMatrix::<f64>::zeros(n, p);
    for (j, (_, col)) in data.features().iter().enumerate() {
        for (i, x) in col.iter().enumerate() {
            centered[(i, j)] = x - group_means[j][row_group[i]];
        }
    }
    let cov = centered.transpose() * &centered / n as f64;
    let eigen = SymmetricEigen::new(cov.clone());
    let mut lead = 0;
    for k in 1..p {
        if eigen.eigenvalues[k] > eigen.eigenvalues[lead] {
            lead = k;
        }
    }
    let top_value = eigen.eigenvalues[lead].max(0.0);
    let mut direction: Vec<f64> = eigen.eigenvectors.column(lead).iter().copied().collect();
    if let Some(first) = direction.iter().find(|v| v.abs() > 1e-12) {
        if *first < 0.0 {
            direction.iter_mut().for_each(|v| *v = -*v);
        }
    }

    let mut loadings: Vec<f64> = direction
        .iter()
        .map(|v| v * (top_value * 0.5).sqrt())
        .collect();
    let mut variances: Vec<f64> = (0..p)
        .map(|j| (cov[(j, j)] - loadings[j] * loadings[j]).max(cov[(j, j)] * 0.05).max(1e-8))
        .collect();
    let mut intercepts: Vec<f64> = (0..p).map(|j| group_means[j][0]).collect();
    let mut offsets: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            (0..groups.len())
                .map(|k| group_means[j][k] - group_means[j][0])
                .collect()
        })
        .collect();

    let build_params = |intercepts: &[f64],
                        offsets: &[Vec<f64>],
                        loadings: &[f64],
                        variances: &[f64]| LatentModelParams {
        reference_group: groups[0].clone(),
        features: (0..p)
            .map(|j| FeatureParams {
                name: data.features()[j].0.clone(),
                intercept: intercepts[j],
                group_offsets: groups
                    .iter()
                    .enumerate()
                    .map(|(k, g)| (g.clone(), offsets[j][k]))
                    .collect(),
                loading: loadings[j],
                noise_variance: variances[j],
            })
            .collect(),
    };

    let mut params = build_params(&intercepts, &offsets, &loadings, &variances);
    let mut ll = loglik(&params, data)?;
    let mut trajectory = vec![ll];
    let mut converged = false;
    let mut final_delta = f64::INFINITY;
    let mut iterations = 0;

    let g = groups.len();
    let dim = 1 + (g - 1) + 1; // intercept, non-reference offsets, loading

    for _ in 0..max_iter {
        iterations += 1;

        // E-step: shared posterior variance, per-row posterior mean.
        let precision = 1.0
            + loadings
                .iter()
                .zip(&variances)
                .map(|(l, v)| l * l / v)
                .sum::<f64>();
        let post_var = 1.0 / precision;
        let mut post_mean = vec![0.0; n];
        for (j, (_, col)) in data.features().iter().enumerate() {
            let w = loadings[j] / variances[j];
            for (i, x) in col.iter().enumerate() {
                post_mean[i] += w * (x - intercepts[j] - offsets[j][row_group[i]]);
            }
        }
        post_mean.iter_mut().for_each(|m| *m *= post_var);

        // M-step: per feature, augmented least squares with E[u] = m and
        // E[u²] = m² + v in the Gram matrix.
        for j in 0..p {
            let col = &data.features()[j].1;
            let mut gram = DMatrix::<f64>::zeros(dim, dim);
            let mut moment = DVector::<f64>::zeros(dim);
            for i in 0..n {
                let m = post_mean[i];
                let k = row_group[i];
                let x = col[i];
                // slots: 0 = intercept, 1..g-1 = offsets for groups 1.., g = loading
                gram[(0, 0)] += 1.0;
                gram[(0, dim - 1)] += m;
                gram[(dim - 1, dim - 1)] += m * m + post_var;
                moment[0] += x;
                moment[dim - 1] += x * m;
                if k > 0 {
                    let s = k; // offset slot
                    gram[(0, s)] += 1.0;
                    gram[(s, s)] += 1.0;
                    gram[(s, dim - 1)] += m;
                    moment[s] += x;
                }
            }
            for a in 0..dim {
                for b in 0..a {
                    gram[(a, b)] = gram[(b, a)];
                }
            }
            let theta = solve_system(gram, moment, &data.features()[j].0)?;
            intercepts[j] = theta[0];
            offsets[j][0] = 0.0;
            for k in 1..g {
                offsets[j][k] = theta[k];
            }
            loadings[j] = theta[dim - 1];

            let mut sse = 0.0;
            for i in 0..n {
                let r = col[i] - intercepts[j] - offsets[j][row_group[i]]
                    - loadings[j] * post_mean[i];
                sse += r * r + loadings[j] * loadings[j] * post_var;
            }
            variances[j] = (sse / n as f64).max(1e-12);
        }

        params = build_params(&intercepts, &offsets, &loadings, &variances);
        let new_ll = loglik(&params, data)?;
        final_delta = new_ll - ll;
        ll = new_ll;
        trajectory.push(ll);
        if final_delta.abs() < tol {
            converged = true;
            break;
        }
    }

    // The loading/noise split is unidentified along a flat likelihood ridge
    // whenever at most one loading is effectively nonzero (the marginal of a
    // single feature only pins loading² + variance). Resolve the tie toward
    // the zero-loading model when the factor's likelihood gain is below the
    // BIC allowance for its p extra parameters.
    let mut collapsed_to_zero = false;
    {
        let mut within_var = vec![0.0; p];
        for (j, (_, col)) in data.features().iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                let r = x - group_means[j][row_group[i]];
                within_var[j] += r * r;
            }
            within_var[j] = (within_var[j] / n as f64).max(1e-12);
        }
        let zero_offsets: Vec<Vec<f64>> = (0..p)
            .map(|j| {
                (0..groups.len())
                    .map(|k| group_means[j][k] - group_means[j][0])
                    .collect()
            })
            .collect();
        let zero_intercepts: Vec<f64> = (0..p).map(|j| group_means[j][0]).collect();
        let zero_loadings = vec![0.0; p];
        let zero_params =
            build_params(&zero_intercepts, &zero_offsets, &zero_loadings, &within_var);
        let ll_zero = loglik(&zero_params, data)?;
        let bic_gap = 0.5 * p as f64 * (n as f64).ln();
        if ll - ll_zero <= bic_gap {
            params = zero_params;
            ll = ll_zero;
            collapsed_to_zero = true;
        }
    }

    // Sign convention: first loading nonnegative. Flipping every loading
    // flips every posterior mean with it and leaves the likelihood unchanged.
    if params.features[0].loading < 0.0 {
        for f in &mut params.features {
            f.loading = -f.loading;
        }
    }

    Ok(EmFit {
        params,
        iterations,
        converged,
        final_delta,
        log_likelihood: ll,
        trajectory,
        collapsed_to_zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use crate::scm::{NodeRole, NodeSpec, StructuralModel};

    fn single_feature_params(intercept: f64, loading: f64, variance: f64) -> LatentModelParams {
        LatentModelParams {
            reference_group: "a".into(),
            features: vec![FeatureParams {
                name: "x".into(),
                intercept,
                group_offsets: BTreeMap::from([("a".to_string(), 0.0)]),
                loading,
                noise_variance: variance,
            }],
        }
    }

    /// Quadrature oracle: integrate Normal(u; 0, 1) · Π Normal(xⱼ; μⱼ(u), σⱼ²)
    /// over a fine grid to get the posterior mean and variance.
    fn posterior_oracle(params: &LatentModelParams, group: &str, x: &[f64]) -> (f64, f64) {
        let steps = 400_000;
        let (lo, hi) = (-12.0, 12.0);
        let h = (hi - lo) / steps as f64;
        let mut z = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for k in 0..=steps {
            let u = lo + k as f64 * h;
            let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
            let mut log_density = -0.5 * u * u;
            for (f, xi) in params.features.iter().zip(x) {
                let mu = f.intercept + f.group_offsets[group] + f.loading * u;
                log_density += -0.5 * (xi - mu) * (xi - mu) / f.noise_variance;
            }
            let d = w * log_density.exp();
            z += d;
            m1 += d * u;
            m2 += d * u * u;
        }
        let mean = m1 / z;
        (mean, m2 / z - mean * mean)
    }

    #[test]
    fn zero_loading_posterior_is_prior() {
        let params = single_feature_params(3.0, 0.0, 2.0);
        let post = posterior_latent(&params, "a", &[10.0]).unwrap();
        assert_eq!(post.mean, 0.0);
        assert_eq!(post.variance, 1.0);
    }

    #[test]
    fn one_feature_posterior_matches_hand_value_and_oracle() {
        let params = single_feature_params(0.0, 1.0, 1.0);
        let post = posterior_latent(&params, "a", &[2.0]).unwrap();
        assert!((post.mean - 1.0).abs() < 1e-12);
        assert!((post.variance - 0.5).abs() < 1e-12);
        let (om, ov) = posterior_oracle(&params, "a", &[2.0]);
        assert!((post.mean - om).abs() < 1e-6);
        assert!((post.variance - ov).abs() < 1e-6);
    }

    #[test]
    fn two_identical_features_posterior() {
        let params = LatentModelParams {
            reference_group: "a".into(),
            features: (0..2)
                .map(|j| FeatureParams {
                    name: format!("x{j}"),
                    intercept: 0.0,
                    group_offsets: BTreeMap::from([("a".to_string(), 0.0)]),
                    loading: 1.0,
                    noise_variance: 1.0,
                })
                .collect(),
        };
        let post = posterior_latent(&params, "a", &[2.0, 2.0]).unwrap();
        assert!((post.mean - 4.0 / 3.0).abs() < 1e-12);
        assert!((post.variance - 1.0 / 3.0).abs() < 1e-12);
        let (om, ov) = posterior_oracle(&params, "a", &[2.0, 2.0]);
        assert!((post.mean - om).abs() < 1e-6);
        assert!((post.variance - ov).abs() < 1e-6);
    }

    #[test]
    fn posterior_matches_oracle_on_randomized_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(88);
        for _ in 0..10 {
            let p = rng.random_range(1..=3);
            let params = LatentModelParams {
                reference_group: "a".into(),
                features: (0..p)
                    .map(|j| FeatureParams {
                        name: format!("x{j}"),
                        intercept: rng.random_range(-2.0..2.0),
                        group_offsets: BTreeMap::from([
                            ("a".to_string(), 0.0),
                            ("b".to_string(), rng.random_range(-1.0..1.0)),
                        ]),
                        loading: rng.random_range(-2.0..2.0),
                        noise_variance: rng.random_range(0.3..3.0),
                    })
                    .collect(),
            };
            let x: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
            let group = if rng.random::<bool>() { "a" } else { "b" };
            let post = posterior_latent(&params, group, &x).unwrap();
            let (om, ov) = posterior_oracle(&params, group, &x);
            assert!((post.mean - om).abs() < 1e-6, "mean {} vs {}", post.mean, om);
            assert!((post.variance - ov).abs() < 1e-6);
        }
    }

    #[test]
    fn posterior_rejects_unseen_group_and_bad_input() {
        let params = single_feature_params(0.0, 1.0, 1.0);
        assert!(matches!(
            posterior_latent(&params, "zz", &[1.0]),
            Err(Error::UnseenGroup(_))
        ));
        assert!(posterior_latent(&params, "a", &[f64::NAN]).is_err());
        assert!(posterior_latent(&params, "a", &[1.0, 2.0]).is_err());
    }

    fn two_feature_model(loading1: f64, loading2: f64, group_gap: f64) -> StructuralModel {
        StructuralModel::new(vec![
            NodeSpec::bernoulli("a", NodeRole::Protected, &[], 0.0, &[]),
            NodeSpec::gaussian("u", NodeRole::Latent, &[], 0.0, &[], 1.0),
            NodeSpec::gaussian("x1", NodeRole::Observed, &["a", "u"], 0.5, &[group_gap, loading1], 1.0),
            NodeSpec::gaussian("x2", NodeRole::Observed, &["a", "u"], -0.2, &[group_gap * 0.5, loading2], 1.0),
            NodeSpec::gaussian("y", NodeRole::Outcome, &["u"], 0.0, &[1.0], 0.2),
        ])
    }

    #[test]
    fn em_recovers_loadings_and_variances() {
        let data = two_feature_model(1.0, 1.0, 1.0).sample(10_000, 31).unwrap();
        let fit = fit_em(&data, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        for f in &fit.params.features {
            assert!((f.loading - 1.0).abs() < 0.1, "{}: loading {}", f.name, f.loading);
            assert!(
                (f.noise_variance - 1.0).abs() < 0.1,
                "{}: variance {}",
                f.name,
                f.noise_variance
            );
        }
    }

    #[test]
    fn em_finds_no_loading_in_pure_group_effects() {
        // Features are group shifts plus noise: the latent explains nothing.
        let model = StructuralModel::new(vec![
            NodeSpec::bernoulli("a", NodeRole::Protected, &[], 0.0, &[]),
            NodeSpec::gaussian("x1", NodeRole::Observed, &["a"], 0.0, &[2.0], 1.0),
            NodeSpec::gaussian("x2", NodeRole::Observed, &["a"], 1.0, &[-1.5], 1.0),
            NodeSpec::gaussian("y", NodeRole::Outcome, &["a"], 0.0, &[1.0], 0.5),
        ]);
        let data = model.sample(10_000, 77).unwrap();
        let fit = fit_em(&data, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert!(fit.collapsed_to_zero);
        for f in &fit.params.features {
            assert!(f.loading.abs() < 0.05, "{}: loading {}", f.name, f.loading);
        }
    }

    #[test]
    fn em_keeps_a_real_factor() {
        let data = two_feature_model(1.0, 1.0, 0.5).sample(10_000, 41).unwrap();
        let fit = fit_em(&data, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert!(!fit.collapsed_to_zero);
    }

    #[test]
    fn em_loglik_is_monotone() {
        let data = two_feature_model(0.8, 1.2, 0.6).sample(2_000, 5).unwrap();
        let fit = fit_em(&data, 50, 0.0).unwrap();
        for w in fit.trajectory.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "log-likelihood decreased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn posterior_means_track_true_latent() {
        let model = two_feature_model(1.0, 1.0, 1.0);
        let data = model.sample(10_000, 13).unwrap();
        let fit = fit_em(&data, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let means = posterior_means(&fit.params, &data).unwrap();
        let truth = data.latent("u").unwrap();
        let r = pearson(&means, truth);
        assert!(r > 0.7, "correlation {r}");
    }

    #[test]
    fn posterior_means_pass_group_independence() {
        let data = two_feature_model(1.0, 1.0, 1.5).sample(10_000, 17).unwrap();
        let fit = fit_em(&data, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let means = posterior_means(&fit.params, &data).unwrap();
        let kw = metrics::kruskal_wallis(&means, data.groups()).unwrap();
        assert!(kw.p > 0.01, "H = {}, p = {}", kw.h, kw.p);
    }

    #[test]
    fn loglik_zero_loading_factorizes() {
        let params = LatentModelParams {
            reference_group: "a".into(),
            features: vec![
                FeatureParams {
                    name: "x1".into(),
                    intercept: 1.0,
                    group_offsets: BTreeMap::from([("a".to_string(), 0.0)]),
                    loading: 0.0,
                    noise_variance: 2.0,
                },
                FeatureParams {
                    name: "x2".into(),
                    intercept: -1.0,
                    group_offsets: BTreeMap::from([("a".to_string(), 0.0)]),
                    loading: 0.0,
                    noise_variance: 0.5,
                },
            ],
        };
        let data = Dataset::from_columns(
            "g",
            vec!["a".into(), "a".into()],
            vec![
                ("x1".into(), vec![1.5, 0.3]),
                ("x2".into(), vec![-0.2, -1.8]),
            ],
            "y",
            vec![0.0, 0.0],
        )
        .unwrap();
        let got = loglik(&params, &data).unwrap();
        let normal_logpdf = |x: f64, mu: f64, var: f64| {
            -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mu) * (x - mu) / var)
        };
        let want = normal_logpdf(1.5, 1.0, 2.0)
            + normal_logpdf(0.3, 1.0, 2.0)
            + normal_logpdf(-0.2, -1.0, 0.5)
            + normal_logpdf(-1.8, -1.0, 0.5);
        assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn loglik_one_feature_matches_scalar_marginal() {
        let params = LatentModelParams {
            reference_group: "a".into(),
            features: vec![FeatureParams {
                name: "x".into(),
                intercept: 0.7,
                group_offsets: BTreeMap::from([
                    ("a".to_string(), 0.0),
                    ("b".to_string(), 1.1),
                ]),
                loading: 1.3,
                noise_variance: 0.6,
            }],
        };
        let data = Dataset::from_columns(
            "g",
            vec!["a".into(), "b".into(), "b".into()],
            vec![("x".into(), vec![0.1, 2.4, 1.9])],
            "y",
            vec![0.0; 3],
        )
        .unwrap();
        let got = loglik(&params, &data).unwrap();
        // Scalar marginal: x ~ Normal(intercept + offset, loading² + variance)
        let var = 1.3 * 1.3 + 0.6;
        let normal_logpdf = |x: f64, mu: f64| {
            -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mu) * (x - mu) / var)
        };
        let want = normal_logpdf(0.1, 0.7) + normal_logpdf(2.4, 1.8) + normal_logpdf(1.9, 1.8);
        assert!((got - want).abs() < 1e-9);
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (x, y) in a.iter().zip(b) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        cov / (va.sqrt() * vb.sqrt())
    }
}
