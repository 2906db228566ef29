//! The six predictors under comparison, plus the wrapper that turns any
//! demographic-parity predictor into a counterfactually fair one.
//!
//! - Level 1: linear regression on features only (fairness through
//!   unawareness).
//! - Level 2: latent-factor inference, then regression on the posterior mean
//!   of the latent alone.
//! - Level 3: regression on explanation terms, the residuals of each feature
//!   after removing its per-group mean.
//! - Listing 1: per-group z-score of the observed label mapped onto the
//!   population moments (assumes per-group normality).
//! - Listing 2: per-group quantile of the observed label mapped through the
//!   population empirical CDF (distribution-free).
//! - Full: linear regression on one-hot group indicators plus all features.
//!
//! Listings 1 and 2 are label transforms: they read the row's observed label
//! rather than its features. Their rMSE is still measured against held-out
//! labels like every other estimator.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::latent::{self, LatentModelParams};
use crate::linear::LinearFit;

/// Population and per-group moments of the training labels, using the
/// divide-by-n convention throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub mean: f64,
    pub std: f64,
    pub groups: BTreeMap<String, GroupMoment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMoment {
    pub mean: f64,
    pub std: f64,
}

/// Sorted training labels for the population and per group.
///
/// CDF(x) is the fraction of sample values ≤ x; the quantile function returns
/// the smallest sample value whose CDF reaches q. Equal labels map to equal
/// outputs, so ties are preserved rather than broken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfMap {
    pub population: Vec<f64>,
    pub groups: BTreeMap<String, Vec<f64>>,
}

impl EcdfMap {
    pub fn cdf(sample: &[f64], x: f64) -> f64 {
        // sample is sorted ascending; count of values <= x via partition point
        let count = sample.partition_point(|v| *v <= x);
        count as f64 / sample.len() as f64
    }

    pub fn quantile(sample: &[f64], q: f64) -> f64 {
        let n = sample.len();
        let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
        sample[idx]
    }
}

/// Per-feature group means backing Level 3's explanation terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGroupMeans {
    pub feature: String,
    pub means: BTreeMap<String, f64>,
}

/// A fitted predictor. Prediction is deterministic given the payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predictor {
    Level1 {
        fit: LinearFit,
    },
    Level2 {
        latent: LatentModelParams,
        response: LinearFit,
        em_iterations: usize,
        em_converged: bool,
    },
    Level3 {
        group_means: Vec<FeatureGroupMeans>,
        response: LinearFit,
    },
    Listing1 {
        stats: GroupStats,
        outcome_col: String,
    },
    Listing2 {
        ecdf: EcdfMap,
        outcome_col: String,
    },
    Full {
        groups: Vec<String>,
        fit: LinearFit,
    },
    DpWrapped {
        base: Box<Predictor>,
    },
}

/// Level 1: regress the outcome on features alone.
pub fn fit_level1(train: &Dataset) -> Result<Predictor> {
    require_features(train)?;
    let rows: Vec<Vec<f64>> = (0..train.n()).map(|i| train.feature_row(i)).collect();
    let fit = LinearFit::fit(
        train.feature_names().iter().map(|s| s.to_string()).collect(),
        &rows,
        train.outcome(),
        train.outcome_name(),
    )?;
    Ok(Predictor::Level1 { fit })
}

/// Level 2: infer the latent factor, then regress the outcome on its
/// posterior mean alone.
pub fn fit_level2(train: &Dataset) -> Result<Predictor> {
    require_features(train)?;
    let em = latent::fit_em(train, latent::DEFAULT_MAX_ITER, latent::DEFAULT_TOL)?;
    let means = latent::posterior_means(&em.params, train)?;
    let rows: Vec<Vec<f64>> = means.iter().map(|m| vec![*m]).collect();
    let response = LinearFit::fit(
        vec!["latent_mean".into()],
        &rows,
        train.outcome(),
        train.outcome_name(),
    )?;
    Ok(Predictor::Level2 {
        latent: em.params,
        response,
        em_iterations: em.iterations,
        em_converged: em.converged,
    })
}

/// Level 3: regress each feature on the group (per-group means), keep the
/// residual as that feature's explanation term, then regress the outcome on
/// the explanation terms.
pub fn fit_level3(train: &Dataset) -> Result<Predictor> {
    require_features(train)?;
    let groups = train.distinct_groups();
    let mut group_means = Vec::new();
    for (name, col) in train.features() {
        let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        for (g, x) in train.groups().iter().zip(col) {
            let e = sums.entry(g.as_str()).or_insert((0.0, 0));
            e.0 += x;
            e.1 += 1;
        }
        let means = groups
            .iter()
            .map(|g| (g.clone(), sums[g.as_str()].0 / sums[g.as_str()].1 as f64))
            .collect();
        group_means.push(FeatureGroupMeans {
            feature: name.clone(),
            means,
        });
    }

    let rows: Vec<Vec<f64>> = (0..train.n())
        .map(|i| {
            group_means
                .iter()
                .enumerate()
                .map(|(j, fgm)| train.features()[j].1[i] - fgm.means[&train.groups()[i]])
                .collect()
        })
        .collect();
    let response = LinearFit::fit(
        train.feature_names().iter().map(|s| s.to_string()).collect(),
        &rows,
        train.outcome(),
        train.outcome_name(),
    )?;
    Ok(Predictor::Level3 {
        group_means,
        response,
    })
}

/// Listing 1: store label moments; prediction maps a row's label through its
/// group z-score onto the population moments.
pub fn fit_listing1(train: &Dataset) -> Result<Predictor> {
    let labels = train.outcome();
    let (mean, std) = moments(labels);
    let mut groups = BTreeMap::new();
    for g in train.distinct_groups() {
        let values: Vec<f64> = train
            .groups()
            .iter()
            .zip(labels)
            .filter(|(gi, _)| gi.as_str() == g)
            .map(|(_, y)| *y)
            .collect();
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "group `{g}` needs at least 2 rows for Listing 1"
            )));
        }
        let (gm, gs) = moments(&values);
        if gs == 0.0 {
            return Err(Error::DegenerateGroup(g));
        }
        groups.insert(g, GroupMoment { mean: gm, std: gs });
    }
    Ok(Predictor::Listing1 {
        stats: GroupStats { mean, std, groups },
        outcome_col: train.outcome_name().into(),
    })
}

/// Listing 2: store sorted labels; prediction maps a row's label to its
/// within-group quantile, then to the population value at that quantile.
pub fn fit_listing2(train: &Dataset) -> Result<Predictor> {
    let mut population = train.outcome().to_vec();
    population.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (g, y) in train.groups().iter().zip(train.outcome()) {
        groups.entry(g.clone()).or_default().push(*y);
    }
    for sample in groups.values_mut() {
        sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    Ok(Predictor::Listing2 {
        ecdf: EcdfMap { population, groups },
        outcome_col: train.outcome_name().into(),
    })
}

/// Full linear model: regress the outcome on one-hot group indicators plus
/// all features. No fairness constraint.
pub fn fit_full(train: &Dataset) -> Result<Predictor> {
    let groups = train.distinct_groups();
    let mut columns: Vec<String> = groups.iter().map(|g| format!("group={g}")).collect();
    columns.extend(train.feature_names().iter().map(|s| s.to_string()));
    let rows: Vec<Vec<f64>> = (0..train.n())
        .map(|i| full_design_row(&groups, &train.groups()[i], &train.feature_row(i)).unwrap())
        .collect();
    let fit = LinearFit::fit(columns, &rows, train.outcome(), train.outcome_name())?;
    Ok(Predictor::Full { groups, fit })
}

/// Turn a demographic-parity predictor into a counterfactually fair one: the
/// base prediction becomes the latent estimate u = base(x, a), and the
/// wrapped predictor is the identity on u, so every intervention returns the
/// same value by construction.
pub fn wrap_dp_as_cf(base: Predictor) -> Predictor {
    Predictor::DpWrapped { base: Box::new(base) }
}

fn full_design_row(groups: &[String], group: &str, features: &[f64]) -> Result<Vec<f64>> {
    let idx = groups
        .iter()
        .position(|g| g == group)
        .ok_or_else(|| Error::UnseenGroup(group.to_string()))?;
    let mut row = vec![0.0; groups.len()];
    row[idx] = 1.0;
    row.extend_from_slice(features);
    Ok(row)
}

fn require_features(data: &Dataset) -> Result<()> {
    if data.features().is_empty() {
        Err(Error::SchemaMismatch(
            "estimator needs at least one feature column".into(),
        ))
    } else {
        Ok(())
    }
}

fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Predictor {
    /// Canonical name used in reports and CLI estimator lists.
    pub fn name(&self) -> String {
        match self {
            Predictor::Level1 { .. } => "level1".into(),
            Predictor::Level2 { .. } => "level2".into(),
            Predictor::Level3 { .. } => "level3".into(),
            Predictor::Listing1 { .. } => "listing1".into(),
            Predictor::Listing2 { .. } => "listing2".into(),
            Predictor::Full { .. } => "full".into(),
            Predictor::DpWrapped { base } => format!("dp_wrapped:{}", base.name()),
        }
    }

    /// True for the label-transform estimators (Listings 1 and 2), whose
    /// prediction reads the row's observed label.
    pub fn is_label_transform(&self) -> bool {
        match self {
            Predictor::Listing1 { .. } | Predictor::Listing2 { .. } => true,
            Predictor::DpWrapped { base } => base.is_label_transform(),
            _ => false,
        }
    }

    /// Factual prediction for row `i`.
    pub fn predict(&self, data: &Dataset, i: usize) -> Result<f64> {
        self.predict_with_group(data, i, &data.groups()[i])
    }

    /// Counterfactual prediction for row `i` under the intervention
    /// `A ← group`.
    ///
    /// Level 2, Level 3, and wrapped predictors fix their latent or
    /// explanation estimate from the factual row, so the intervention has no
    /// downstream effect; the remaining predictors re-evaluate with the group
    /// replaced (Level 1 ignores the group entirely).
    pub fn predict_counterfactual(&self, data: &Dataset, i: usize, group: &str) -> Result<f64> {
        match self {
            // Latent/explanation estimates come from the factual (x, a);
            // nothing downstream depends on the intervened group.
            Predictor::Level2 { .. } | Predictor::Level3 { .. } | Predictor::DpWrapped { .. } => {
                self.predict(data, i)
            }
            _ => self.predict_with_group(data, i, group),
        }
    }

    fn predict_with_group(&self, data: &Dataset, i: usize, group: &str) -> Result<f64> {
        match self {
            Predictor::Level1 { fit } => {
                check_features(data, &fit.columns)?;
                fit.predict(&data.feature_row(i))
            }
            Predictor::Level2 { latent, response, .. } => {
                let names: Vec<String> =
                    latent.features.iter().map(|f| f.name.clone()).collect();
                check_features(data, &names)?;
                let post = latent::posterior_latent(latent, group, &data.feature_row(i))?;
                response.predict(&[post.mean])
            }
            Predictor::Level3 {
                group_means,
                response,
            } => {
                let names: Vec<String> =
                    group_means.iter().map(|f| f.feature.clone()).collect();
                check_features(data, &names)?;
                let explanations: Vec<f64> = group_means
                    .iter()
                    .enumerate()
                    .map(|(j, fgm)| {
                        fgm.means
                            .get(group)
                            .map(|m| data.features()[j].1[i] - m)
                            .ok_or_else(|| Error::UnseenGroup(group.to_string()))
                    })
                    .collect::<Result<_>>()?;
                response.predict(&explanations)
            }
            Predictor::Listing1 { stats, outcome_col } => {
                check_outcome(data, outcome_col)?;
                let label = data.outcome()[i];
                let gm = stats
                    .groups
                    .get(group)
                    .ok_or_else(|| Error::UnseenGroup(group.to_string()))?;
                Ok(stats.mean + stats.std * (label - gm.mean) / gm.std)
            }
            Predictor::Listing2 { ecdf, outcome_col } => {
                check_outcome(data, outcome_col)?;
                let label = data.outcome()[i];
                let sample = ecdf
                    .groups
                    .get(group)
                    .ok_or_else(|| Error::UnseenGroup(group.to_string()))?;
                let q = EcdfMap::cdf(sample, label);
                Ok(EcdfMap::quantile(&ecdf.population, q))
            }
            Predictor::Full { groups, fit } => {
                let row = full_design_row(groups, group, &data.feature_row(i))?;
                fit.predict(&row)
            }
            Predictor::DpWrapped { base } => base.predict(data, i),
        }
    }

    /// Factual predictions for every row.
    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<f64>> {
        (0..data.n()).map(|i| self.predict(data, i)).collect()
    }

    /// Posterior latent means on `data` for estimators that have a latent
    /// estimate: Level 2's factor posterior, Level 3's explanation terms
    /// (one per feature), and the wrapped predictor's base output.
    pub fn latent_estimates(&self, data: &Dataset) -> Result<Vec<(String, Vec<f64>)>> {
        match self {
            Predictor::Level2 { latent, .. } => {
                let means = latent::posterior_means(latent, data)?;
                Ok(vec![("latent_mean".into(), means)])
            }
            Predictor::Level3 { group_means, .. } => {
                let mut out = Vec::new();
                for (j, fgm) in group_means.iter().enumerate() {
                    let col: Result<Vec<f64>> = (0..data.n())
                        .map(|i| {
                            fgm.means
                                .get(&data.groups()[i])
                                .map(|m| data.features()[j].1[i] - m)
                                .ok_or_else(|| {
                                    Error::UnseenGroup(data.groups()[i].clone())
                                })
                        })
                        .collect();
                    out.push((format!("explanation_{}", fgm.feature), col?));
                }
                Ok(out)
            }
            Predictor::DpWrapped { base } => {
                let u = base.predict_all(data)?;
                Ok(vec![("base_prediction".into(), u)])
            }
            _ => Ok(Vec::new()),
        }
    }
}

fn check_features(data: &Dataset, expected: &[String]) -> Result<()> {
    let actual = data.feature_names();
    if actual.len() != expected.len()
        || actual.iter().zip(expected).any(|(a, e)| *a != e.as_str())
    {
        return Err(Error::SchemaMismatch(format!(
            "feature columns {actual:?} do not match fitted schema {expected:?}"
        )));
    }
    Ok(())
}

fn check_outcome(data: &Dataset, expected: &str) -> Result<()> {
    if data.outcome_name() != expected {
        return Err(Error::SchemaMismatch(format!(
            "outcome column `{}` does not match fitted schema `{expected}`",
            data.outcome_name()
        )));
    }
    Ok(())
}

/// Parsed estimator request: one of the six base estimators, optionally
/// wrapped by the demographic-parity-to-counterfactual construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub dp_wrapped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Level1,
    Level2,
    Level3,
    Listing1,
    Listing2,
    Full,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::Level1,
        EstimatorKind::Level2,
        EstimatorKind::Level3,
        EstimatorKind::Listing1,
        EstimatorKind::Listing2,
        EstimatorKind::Full,
    ];

    fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Level1 => "level1",
            EstimatorKind::Level2 => "level2",
            EstimatorKind::Level3 => "level3",
            EstimatorKind::Listing1 => "listing1",
            EstimatorKind::Listing2 => "listing2",
            EstimatorKind::Full => "full",
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<EstimatorKind> {
        match s {
            "level1" => Ok(EstimatorKind::Level1),
            "level2" => Ok(EstimatorKind::Level2),
            "level3" => Ok(EstimatorKind::Level3),
            "listing1" => Ok(EstimatorKind::Listing1),
            "listing2" => Ok(EstimatorKind::Listing2),
            "full" => Ok(EstimatorKind::Full),
            other => Err(Error::Config(format!(
                "unknown estimator `{other}` (expected level1|level2|level3|listing1|listing2|full)"
            ))),
        }
    }
}

impl FromStr for EstimatorSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<EstimatorSpec> {
        if let Some(base) = s.strip_prefix("dp_wrapped:") {
            Ok(EstimatorSpec {
                kind: base.parse()?,
                dp_wrapped: true,
            })
        } else {
            Ok(EstimatorSpec {
                kind: s.parse()?,
                dp_wrapped: false,
            })
        }
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dp_wrapped {
            write!(f, "dp_wrapped:{}", self.kind.as_str())
        } else {
            f.write_str(self.kind.as_str())
        }
    }
}

/// Fit the requested estimator on the training data.
pub fn fit_estimator(spec: EstimatorSpec, train: &Dataset) -> Result<Predictor> {
    let base = match spec.kind {
        EstimatorKind::Level1 => fit_level1(train)?,
        EstimatorKind::Level2 => fit_level2(train)?,
        EstimatorKind::Level3 => fit_level3(train)?,
        EstimatorKind::Listing1 => fit_listing1(train)?,
        EstimatorKind::Listing2 => fit_listing2(train)?,
        EstimatorKind::Full => fit_full(train)?,
    };
    Ok(if spec.dp_wrapped {
        wrap_dp_as_cf(base)
    } else {
        base
    })
}
