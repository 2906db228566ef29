//! Fairness and accuracy measurements: the Kruskal-Wallis H test (used as a
//! one-sided probe of demographic parity and latent independence),
//! approximate counterfactual fairness, rMSE, and within-group order
//! preservation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::Predictor;
use crate::special::chi2_sf;

/// Kruskal-Wallis H test result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KwResult {
    pub h: f64,
    /// Total observations.
    pub n: usize,
    /// Number of groups.
    pub g: usize,
    /// Observations per group.
    pub group_sizes: BTreeMap<String, usize>,
    /// Degrees of freedom, g − 1.
    pub df: usize,
    /// Chi-square survival probability of H.
    pub p: f64,
}

/// Empirical (ε, δ) counterfactual-fairness estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfResult {
    pub epsilon: f64,
    /// Fraction of (row, intervention) pairs whose counterfactual gap
    /// exceeds epsilon.
    pub delta: f64,
    pub rows: usize,
    pub interventions: usize,
}

/// Within-group order agreement between baseline labels and predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupOrderStats {
    pub group: String,
    /// Pairs strictly ordered the same way by baseline and prediction.
    pub concordant: u64,
    /// Pairs strictly ordered oppositely.
    pub discordant: u64,
    /// Baseline-ordered pairs the prediction maps to a tie.
    pub prediction_ties: u64,
    /// (C − D) / (C + D + T); 1 when the group has no comparable pairs.
    pub tau: f64,
    /// True iff no discordant pair exists.
    pub preserved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub per_group: Vec<GroupOrderStats>,
    pub total_concordant: u64,
    pub total_discordant: u64,
    pub all_preserved: bool,
}

/// 1-based ranks with ties receiving the mean of their occupied positions.
pub fn rank_with_ties(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("cannot rank an empty list".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("cannot rank NaN values".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());

    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i+1 ..= j occupied; midrank is their mean.
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = midrank;
        }
        i = j;
    }
    Ok(ranks)
}

/// Kruskal-Wallis H test of `values` partitioned by `groups`.
///
/// H = (N−1) · Σ nᵢ (r̄ᵢ − r̄)² / Σᵢⱼ (rᵢⱼ − r̄)², computed on midranks; the
/// rank-variance denominator already absorbs the tie correction. When every
/// value is identical the statistic degenerates to H = 0, p = 1.
pub fn kruskal_wallis(values: &[f64], groups: &[String]) -> Result<KwResult> {
    if values.len() != groups.len() {
        return Err(Error::InvalidInput(format!(
            "values ({}) and groups ({}) differ in length",
            values.len(),
            groups.len()
        )));
    }
    let n = values.len();
    if n < 3 {
        return Err(Error::InvalidInput(
            "Kruskal-Wallis needs at least 3 observations".into(),
        ));
    }

    let mut group_sizes: BTreeMap<String, usize> = BTreeMap::new();
    for g in groups {
        *group_sizes.entry(g.clone()).or_insert(0) += 1;
    }
    let g = group_sizes.len();
    if g < 2 {
        return Err(Error::InvalidInput(
            "Kruskal-Wallis needs at least 2 groups".into(),
        ));
    }

    let ranks = rank_with_ties(values)?;
    let grand_mean = (n as f64 + 1.0) / 2.0;

    let mut rank_sums: BTreeMap<&str, f64> = BTreeMap::new();
    for (r, grp) in ranks.iter().zip(groups) {
        *rank_sums.entry(grp.as_str()).or_insert(0.0) += r;
    }

    let numerator: f64 = group_sizes
        .iter()
        .map(|(grp, &size)| {
            let mean_rank = rank_sums[grp.as_str()] / size as f64;
            size as f64 * (mean_rank - grand_mean) * (mean_rank - grand_mean)
        })
        .sum();
    let denominator: f64 = ranks
        .iter()
        .map(|r| (r - grand_mean) * (r - grand_mean))
        .sum();

    let df = g - 1;
    let (h, p) = if denominator == 0.0 {
        (0.0, 1.0)
    } else {
        let h = (n as f64 - 1.0) * numerator / denominator;
        (h, chi2_sf(h, df)?)
    };

    Ok(KwResult {
        h,
        n,
        g,
        group_sizes,
        df,
        p,
    })
}

/// Root mean squared error.
pub fn rmse(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "predictions ({}) and labels ({}) differ in length",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidInput("rmse of empty vectors".into()));
    }
    let mse = predictions
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / predictions.len() as f64;
    Ok(mse.sqrt())
}

/// Empirical (ε, δ)-ACF: evaluate every row against every other group label
/// and return the smallest δ consistent with the given ε.
pub fn acf_estimate(pred: &Predictor, data: &Dataset, epsilon: f64) -> Result<AcfResult> {
    if epsilon < 0.0 {
        return Err(Error::InvalidInput(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    let groups = data.distinct_groups();
    let mut pairs = 0usize;
    let mut exceed = 0usize;
    for i in 0..data.n() {
        let factual = pred.predict(data, i)?;
        for alt in &groups {
            if alt == &data.groups()[i] {
                continue;
            }
            let counterfactual = pred.predict_counterfactual(data, i, alt)?;
            pairs += 1;
            if (counterfactual - factual).abs() > epsilon {
                exceed += 1;
            }
        }
    }
    let delta = if pairs == 0 {
        0.0
    } else {
        exceed as f64 / pairs as f64
    };
    Ok(AcfResult {
        epsilon,
        delta,
        rows: data.n(),
        interventions: pairs,
    })
}

/// Kruskal-Wallis test of a predictor's outputs grouped by protected group.
///
/// A small p is evidence against demographic parity, and therefore (via the
/// necessary-condition direction) against counterfactual fairness. The test
/// has one-sided error: matching rank distributions do not prove parity.
pub fn dp_test(pred: &Predictor, data: &Dataset) -> Result<KwResult> {
    let predictions = pred.predict_all(data)?;
    kruskal_wallis(&predictions, data.groups())
}

/// Within each group, compare the ordering of predictions against the
/// ordering of baseline (unfair) labels.
///
/// Pairs tied in the baseline are excluded; baseline-ordered pairs the
/// prediction leaves tied count as neither concordant nor discordant.
pub fn group_order_report(
    baseline: &[f64],
    predictions: &[f64],
    groups: &[String],
) -> Result<OrderReport> {
    if baseline.len() != predictions.len() || baseline.len() != groups.len() {
        return Err(Error::InvalidInput(
            "baseline, predictions, and groups must have equal length".into(),
        ));
    }

    let mut by_group: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        by_group.entry(g.as_str()).or_default().push(i);
    }

    let mut per_group = Vec::new();
    let mut total_c = 0u64;
    let mut total_d = 0u64;
    for (group, rows) in by_group {
        let mut concordant = 0u64;
        let mut discordant = 0u64;
        let mut ties = 0u64;
        for (k, &i) in rows.iter().enumerate() {
            for &j in &rows[k + 1..] {
                if baseline[i] == baseline[j] {
                    continue;
                }
                // Orient so the baseline ascends from lo to hi.
                let (lo, hi) = if baseline[i] < baseline[j] { (i, j) } else { (j, i) };
                if predictions[lo] < predictions[hi] {
                    concordant += 1;
                } else if predictions[lo] > predictions[hi] {
                    discordant += 1;
                } else {
                    ties += 1;
                }
            }
        }
        let comparable = concordant + discordant + ties;
        let tau = if comparable == 0 {
            1.0
        } else {
            (concordant as f64 - discordant as f64) / comparable as f64
        };
        total_c += concordant;
        total_d += discordant;
        per_group.push(GroupOrderStats {
            group: group.to_string(),
            concordant,
            discordant,
            prediction_ties: ties,
            tau,
            preserved: discordant == 0,
        });
    }

    Ok(OrderReport {
        all_preserved: per_group.iter().all(|s| s.preserved),
        total_concordant: total_c,
        total_discordant: total_d,
        per_group,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(spec: &[(&str, usize)]) -> Vec<String> {
        spec.iter()
            .flat_map(|(g, k)| std::iter::repeat_n(g.to_string(), *k))
            .collect()
    }

    /// Classical tie-corrected form of the H statistic; an independent route
    /// to the same quantity as the rank-variance formula.
    fn kw_oracle(values: &[f64], groups: &[String]) -> f64 {
        let ranks = rank_with_ties(values).unwrap();
        let n = values.len() as f64;
        let mut rank_sum: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        for (r, g) in ranks.iter().zip(groups) {
            let e = rank_sum.entry(g.as_str()).or_insert((0.0, 0.0));
            e.0 += r;
            e.1 += 1.0;
        }
        let h0 = 12.0 / (n * (n + 1.0))
            * rank_sum.values().map(|(s, c)| s * s / c).sum::<f64>()
            - 3.0 * (n + 1.0);
        // Tie correction: 1 − Σ(t³ − t)/(N³ − N) over tie runs.
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut tie_term = 0.0;
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            let t = (j - i) as f64;
            tie_term += t * t * t - t;
            i = j;
        }
        let correction = 1.0 - tie_term / (n * n * n - n);
        h0 / correction
    }

    #[test]
    fn ranks_strictly_increasing() {
        assert_eq!(rank_with_ties(&[10.0, 20.0, 30.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn ranks_full_tie() {
        assert_eq!(rank_with_ties(&[5.0, 5.0]).unwrap(), vec![1.5, 1.5]);
    }

    #[test]
    fn ranks_partial_tie() {
        assert_eq!(
            rank_with_ties(&[3.0, 1.0, 3.0, 2.0]).unwrap(),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn rank_rejects_nan() {
        assert!(rank_with_ties(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn kw_symmetric_ranks_give_zero() {
        let r = kruskal_wallis(&[1.0, 4.0, 2.0, 3.0], &labels(&[("a", 2), ("b", 2)])).unwrap();
        assert_eq!(r.h, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn kw_hand_case() {
        let r = kruskal_wallis(&[1.0, 2.0, 3.0, 4.0], &labels(&[("a", 2), ("b", 2)])).unwrap();
        assert!((r.h - 2.4).abs() < 1e-12, "H = {}", r.h);
        assert!((r.p - 0.1213).abs() < 1e-3, "p = {}", r.p);
        assert_eq!(r.df, 1);
    }

    #[test]
    fn kw_all_identical_values() {
        let r = kruskal_wallis(&[7.0; 6], &labels(&[("a", 3), ("b", 3)])).unwrap();
        assert_eq!(r.h, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn kw_rejects_single_group() {
        assert!(kruskal_wallis(&[1.0, 2.0, 3.0], &labels(&[("a", 3)])).is_err());
    }

    #[test]
    fn kw_matches_tie_corrected_oracle_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..50 {
            let g = rng.random_range(2..=4);
            let mut values = Vec::new();
            let mut groups = Vec::new();
            for gi in 0..g {
                let size = rng.random_range(2..=12);
                for _ in 0..size {
                    // Coarse grid forces plenty of ties.
                    values.push(rng.random_range(0..8) as f64);
                    groups.push(format!("g{gi}"));
                }
            }
            let ours = kruskal_wallis(&values, &groups).unwrap().h;
            let oracle = kw_oracle(&values, &groups);
            assert!((ours - oracle).abs() < 1e-10, "ours {ours} oracle {oracle}");
        }
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let r = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((r - 12.5_f64.sqrt()).abs() < 1e-12);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rmse_of_mean_predictor_is_population_std() {
        let labels = [2.0, 4.0, 6.0, 8.0];
        let mean = labels.iter().sum::<f64>() / 4.0;
        let preds = vec![mean; 4];
        let expected = (labels.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / 4.0).sqrt();
        assert!((rmse(&preds, &labels).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn order_report_monotone_transform_preserves() {
        let base = vec![1.0, 3.0, 2.0, 5.0, 4.0];
        let preds: Vec<f64> = base.iter().map(|y| y * 2.0 + 1.0).collect();
        let groups = labels(&[("a", 5)]);
        let r = group_order_report(&base, &preds, &groups).unwrap();
        assert!(r.all_preserved);
        assert_eq!(r.per_group[0].tau, 1.0);
    }

    #[test]
    fn order_report_reversal() {
        let base = vec![1.0, 2.0, 3.0];
        let preds: Vec<f64> = base.iter().map(|y| -y).collect();
        let groups = labels(&[("a", 3)]);
        let r = group_order_report(&base, &preds, &groups).unwrap();
        assert!(!r.all_preserved);
        assert_eq!(r.per_group[0].tau, -1.0);
        assert_eq!(r.per_group[0].discordant, 3);
    }

    #[test]
    fn order_report_baseline_ties_excluded() {
        let base = vec![1.0, 1.0, 2.0];
        let preds = vec![5.0, -5.0, 9.0];
        let groups = labels(&[("a", 3)]);
        let r = group_order_report(&base, &preds, &groups).unwrap();
        // The (1,1) pair is skipped; both 1-vs-2 pairs are concordant.
        assert_eq!(r.per_group[0].concordant, 2);
        assert_eq!(r.per_group[0].discordant, 0);
        assert!(r.all_preserved);
    }

    #[test]
    fn order_report_prediction_ties_are_not_inversions() {
        let base = vec![1.0, 2.0, 3.0];
        let preds = vec![4.0, 4.0, 9.0];
        let groups = labels(&[("a", 3)]);
        let r = group_order_report(&base, &preds, &groups).unwrap();
        assert_eq!(r.per_group[0].prediction_ties, 1);
        assert!(r.all_preserved);
    }

    proptest! {
        #[test]
        fn kw_invariant_under_strictly_increasing_transform(
            values in proptest::collection::vec(-100.0_f64..100.0, 6..40),
            cut in 1usize..5,
        ) {
            let groups: Vec<String> = (0..values.len())
                .map(|i| format!("g{}", i % (cut + 1)))
                .collect();
            let base = kruskal_wallis(&values, &groups).unwrap();
            let transformed: Vec<f64> = values.iter().map(|v| (v / 50.0).exp()).collect();
            let t = kruskal_wallis(&transformed, &groups).unwrap();
            prop_assert!((base.h - t.h).abs() < 1e-9);
        }

        #[test]
        fn kw_invariant_under_joint_permutation(
            values in proptest::collection::vec(-10.0_f64..10.0, 6..30),
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let groups: Vec<String> = (0..values.len()).map(|i| format!("g{}", i % 2)).collect();
            let base = kruskal_wallis(&values, &groups).unwrap();

            let mut idx: Vec<usize> = (0..values.len()).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for i in (1..idx.len()).rev() {
                let j = rng.random_range(0..=i);
                idx.swap(i, j);
            }
            let pv: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
            let pg: Vec<String> = idx.iter().map(|&i| groups[i].clone()).collect();
            let perm = kruskal_wallis(&pv, &pg).unwrap();
            prop_assert!((base.h - perm.h).abs() < 1e-9);
            prop_assert!((base.p - perm.p).abs() < 1e-9);
        }

        #[test]
        fn order_preserved_for_any_per_group_increasing_map(
            values in proptest::collection::vec(-100.0_f64..100.0, 4..30),
            scale in 0.1_f64..5.0,
        ) {
            let groups: Vec<String> = (0..values.len()).map(|i| format!("g{}", i % 3)).collect();
            let preds: Vec<f64> = values
                .iter()
                .zip(&groups)
                .map(|(v, g)| {
                    // Different strictly increasing map per group.
                    match g.as_str() {
                        "g0" => v * scale,
                        "g1" => v.exp_m1(),
                        _ => v * 3.0 + 7.0,
                    }
                })
                .collect();
            let r = group_order_report(&values, &preds, &groups).unwrap();
            prop_assert!(r.all_preserved);
        }
    }
}
