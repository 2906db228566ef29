//! Config-driven experiment pipeline: load or sample a dataset, fit the
//! requested estimators, measure fairness and accuracy on held-out rows, and
//! emit the report as JSON plus markdown tables. Also produces the
//! rank-trajectory CSV for within-group order-stability plots.
//!
//! Everything downstream of the config is deterministic: the same config
//! produces byte-identical outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counterexample::{self, CounterexampleReport};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{fit_estimator, EstimatorSpec, Predictor};
use crate::metrics::{self, AcfResult, KwResult, OrderReport};
use crate::scm::{stream_seed, StructuralModel};

pub const DEFAULT_TRAIN_FRAC: f64 = 0.8;
pub const DEFAULT_EPSILONS: [f64; 2] = [0.0, 0.1];

/// Everything one evaluation run needs; echoed verbatim into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Model JSON to sample from (exclusive with `data`).
    pub model: Option<PathBuf>,
    /// Dataset CSV to load (exclusive with `model`).
    pub data: Option<PathBuf>,
    /// Rows to sample when a model is given.
    pub n: usize,
    pub seed: u64,
    /// Estimator names; the six base names plus `dp_wrapped:<base>`.
    pub estimators: Vec<String>,
    pub train_frac: f64,
    /// Thresholds for the approximate-counterfactual-fairness sweep.
    pub epsilons: Vec<f64>,
    pub group_col: Option<String>,
    pub outcome_col: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: None,
            data: None,
            n: 5000,
            seed: 7,
            estimators: default_estimators(),
            train_frac: DEFAULT_TRAIN_FRAC,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            group_col: None,
            outcome_col: None,
        }
    }
}

pub fn default_estimators() -> Vec<String> {
    ["level1", "level2", "level3", "listing1", "listing2", "full"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source: String,
    pub n_rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub group_column: String,
    pub group_counts: BTreeMap<String, usize>,
    pub feature_columns: Vec<String>,
    pub outcome_column: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedKw {
    pub variable: String,
    pub kw: KwResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmInfo {
    pub iterations: usize,
    pub converged: bool,
}

/// Per-estimator block of the report. A failed fit leaves `error` set and
/// the metric fields empty so one failure does not void the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub is_label_transform: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction_kw: Option<KwResult>,
    pub latent_kw: Vec<NamedKw>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    pub acf: Vec<AcfResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<OrderReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em: Option<EmInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub toolkit_version: String,
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub notes: Vec<String>,
    pub estimators: Vec<EstimatorReport>,
}

/// Load the config's dataset: sample the model or read the CSV.
pub fn load_dataset(config: &ExperimentConfig) -> Result<(Dataset, String)> {
    match (&config.model, &config.data) {
        (Some(_), Some(_)) => Err(Error::Config(
            "pass either a model or a dataset, not both".into(),
        )),
        (None, None) => Err(Error::Config("pass a model or a dataset".into())),
        (Some(path), None) => {
            let model = StructuralModel::from_file(path)?;
            let data = model.sample(config.n, config.seed)?;
            Ok((data, format!("model:{}", path.display())))
        }
        (None, Some(path)) => {
            let data = Dataset::from_csv_file(
                path,
                config.group_col.as_deref(),
                config.outcome_col.as_deref(),
            )?;
            Ok((data, format!("data:{}", path.display())))
        }
    }
}

/// Run the full evaluation: deterministic split, fit each estimator on the
/// training rows, measure everything on the held-out rows.
pub fn evaluate(config: &ExperimentConfig) -> Result<FairnessReport> {
    let (data, source) = load_dataset(config)?;
    let groups = data.distinct_groups();
    if groups.len() < 2 {
        return Err(Error::Config("fairness tests require >= 2 groups".into()));
    }
    if config.estimators.is_empty() {
        return Err(Error::Config("no estimators requested".into()));
    }
    // Parse every estimator name up front: unknown names are config errors.
    let specs: Vec<EstimatorSpec> = config
        .estimators
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;

    let (train, test) = data.split(config.train_frac, config.seed)?;

    let mut group_counts = BTreeMap::new();
    for g in data.groups() {
        *group_counts.entry(g.clone()).or_insert(0usize) += 1;
    }

    let mut reports = Vec::new();
    for (name, spec) in config.estimators.iter().zip(specs) {
        reports.push(evaluate_one(name, spec, &train, &test, &config.epsilons));
    }

    Ok(FairnessReport {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        dataset: DatasetSummary {
            source,
            n_rows: data.n(),
            n_train: train.n(),
            n_test: test.n(),
            group_column: data.group_name().to_string(),
            group_counts,
            feature_columns: data.feature_names().iter().map(|s| s.to_string()).collect(),
            outcome_column: data.outcome_name().to_string(),
        },
        notes: vec![
            "listing1 and listing2 are label transforms: prediction reads the row's observed label".into(),
            "level2 uses the posterior mean as the latent point estimate".into(),
            "the demographic-parity test is one-sided: a large p does not prove parity".into(),
        ],
        estimators: reports,
    })
}

fn evaluate_one(
    name: &str,
    spec: EstimatorSpec,
    train: &Dataset,
    test: &Dataset,
    epsilons: &[f64],
) -> EstimatorReport {
    match try_evaluate_one(spec, train, test, epsilons) {
        Ok(mut report) => {
            report.name = name.to_string();
            report
        }
        Err(e) => EstimatorReport {
            name: name.to_string(),
            error: Some(e.to_string()),
            is_label_transform: false,
            prediction_kw: None,
            latent_kw: Vec::new(),
            rmse: None,
            acf: Vec::new(),
            order: None,
            em: None,
        },
    }
}

fn try_evaluate_one(
    spec: EstimatorSpec,
    train: &Dataset,
    test: &Dataset,
    epsilons: &[f64],
) -> Result<EstimatorReport> {
    let predictor = fit_estimator(spec, train)?;
    let predictions = predictor.predict_all(test)?;

    let prediction_kw = metrics::kruskal_wallis(&predictions, test.groups())?;
    let rmse = metrics::rmse(&predictions, test.outcome())?;
    let order = metrics::group_order_report(test.outcome(), &predictions, test.groups())?;

    let mut acf = Vec::new();
    for &eps in epsilons {
        acf.push(metrics::acf_estimate(&predictor, test, eps)?);
    }

    let mut latent_kw = Vec::new();
    for (variable, values) in predictor.latent_estimates(test)? {
        latent_kw.push(NamedKw {
            variable,
            kw: metrics::kruskal_wallis(&values, test.groups())?,
        });
    }

    let em = match &predictor {
        Predictor::Level2 {
            em_iterations,
            em_converged,
            ..
        } => Some(EmInfo {
            iterations: *em_iterations,
            converged: *em_converged,
        }),
        _ => None,
    };

    Ok(EstimatorReport {
        name: String::new(),
        error: None,
        is_label_transform: predictor.is_label_transform(),
        prediction_kw: Some(prediction_kw),
        latent_kw,
        rmse: Some(rmse),
        acf,
        order: Some(order),
        em,
    })
}

/// Serialize the report deterministically (pretty JSON plus trailing
/// newline).
pub fn report_to_json(report: &FairnessReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialization cannot fail");
    s.push('\n');
    s
}

/// Format `x` to `digits` significant figures, switching to scientific
/// notation outside a comfortable plain-decimal range.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -3 || exp >= digits as i32 + 3 {
        format!("{:.*e}", digits.saturating_sub(1), x)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    }
}

/// Render the markdown tables: a variable/H/p block (latent estimates first,
/// then predictions) and an rMSE row, all to 3 significant figures.
pub fn render_tables(report: &FairnessReport) -> String {
    let mut out = String::new();
    out.push_str("# Fairness and accuracy tables\n\n");
    out.push_str(&format!(
        "Source: `{}` — {} rows ({} train / {} test), groups: {}\n\n",
        report.dataset.source,
        report.dataset.n_rows,
        report.dataset.n_train,
        report.dataset.n_test,
        report
            .dataset
            .group_counts
            .iter()
            .map(|(g, c)| format!("{g} ({c})"))
            .collect::<Vec<_>>()
            .join(", ")
    ));

    out.push_str("## Kruskal-Wallis H tests\n\n");
    out.push_str("| Variable | H statistic | p-value |\n|---|---|---|\n");
    for est in &report.estimators {
        for named in &est.latent_kw {
            out.push_str(&format!(
                "| {} latent {} | {} | {} |\n",
                est.name,
                named.variable,
                format_sig(named.kw.h, 3),
                format_sig(named.kw.p, 3)
            ));
        }
    }
    for est in &report.estimators {
        match (&est.prediction_kw, &est.error) {
            (Some(kw), _) => out.push_str(&format!(
                "| {} predictions | {} | {} |\n",
                est.name,
                format_sig(kw.h, 3),
                format_sig(kw.p, 3)
            )),
            (None, Some(err)) => {
                out.push_str(&format!("| {} predictions | error | {err} |\n", est.name))
            }
            _ => {}
        }
    }

    out.push_str("\n## Root mean squared error\n\n");
    let names: Vec<&str> = report.estimators.iter().map(|e| e.name.as_str()).collect();
    out.push_str(&format!("| {} |\n", names.join(" | ")));
    out.push_str(&format!("|{}\n", "---|".repeat(names.len())));
    let cells: Vec<String> = report
        .estimators
        .iter()
        .map(|e| match e.rmse {
            Some(r) => format_sig(r, 3),
            None => "error".to_string(),
        })
        .collect();
    out.push_str(&format!("| {} |\n", cells.join(" | ")));

    out.push_str("\n## Approximate counterfactual fairness\n\n");
    out.push_str("| Estimator | epsilon | delta |\n|---|---|---|\n");
    for est in &report.estimators {
        for acf in &est.acf {
            out.push_str(&format!(
                "| {} | {} | {} |\n",
                est.name,
                format_sig(acf.epsilon, 3),
                format_sig(acf.delta, 3)
            ));
        }
    }

    out.push_str("\n## Within-group order preservation\n\n");
    out.push_str("| Estimator | preserved | discordant pairs |\n|---|---|---|\n");
    for est in &report.estimators {
        if let Some(order) = &est.order {
            out.push_str(&format!(
                "| {} | {} | {} |\n",
                est.name, order.all_preserved, order.total_discordant
            ));
        }
    }
    out
}

/// Rank table for the order-stability plot: sampled individuals as rows, one
/// rank column per estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDiffTable {
    pub group: String,
    /// Row index of each sampled individual in the source dataset.
    pub individual_ids: Vec<usize>,
    pub estimators: Vec<String>,
    /// `ranks[e][k]` is the within-sample rank of individual k under
    /// estimator e (midranks on ties).
    pub ranks: Vec<Vec<f64>>,
}

impl RankDiffTable {
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["individual_id".to_string()];
        header.extend(self.estimators.iter().cloned());
        w.write_record(&header).expect("in-memory CSV write");
        for (k, id) in self.individual_ids.iter().enumerate() {
            let mut record = vec![id.to_string()];
            record.extend(self.ranks.iter().map(|col| format!("{}", col[k])));
            w.write_record(&record).expect("in-memory CSV write");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("UTF-8")
    }
}

/// Sample `sample_size` members of `group` from the held-out rows (without
/// replacement, seeded) and rank each estimator's predictions within the
/// sample.
pub fn rankdiff(
    config: &ExperimentConfig,
    group: &str,
    sample_size: usize,
    seed: u64,
) -> Result<RankDiffTable> {
    let (data, _) = load_dataset(config)?;
    let (train_idx, test_idx) = split_indices(data.n(), config.train_frac, config.seed)?;
    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);

    let members: Vec<usize> = (0..test.n())
        .filter(|&i| test.groups()[i] == group)
        .collect();
    if members.is_empty() {
        return Err(Error::Config(format!(
            "group `{group}` not present in the held-out rows (available: {:?})",
            test.distinct_groups()
        )));
    }
    if sample_size == 0 || sample_size > members.len() {
        return Err(Error::Config(format!(
            "sample size must be in 1..={}, got {sample_size}",
            members.len()
        )));
    }

    let mut shuffled = members;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, "rankdiff-sample"));
    for i in (1..shuffled.len()).rev() {
        let j = rng.random_range(0..=i);
        shuffled.swap(i, j);
    }
    shuffled.truncate(sample_size);

    let mut estimators = Vec::new();
    let mut ranks = Vec::new();
    for name in &config.estimators {
        let spec: EstimatorSpec = name.parse()?;
        let predictor = fit_estimator(spec, &train)?;
        let predictions: Vec<f64> = shuffled
            .iter()
            .map(|&i| predictor.predict(&test, i))
            .collect::<Result<_>>()?;
        estimators.push(name.clone());
        ranks.push(metrics::rank_with_ties(&predictions)?);
    }

    Ok(RankDiffTable {
        group: group.to_string(),
        individual_ids: shuffled.iter().map(|&i| test_idx[i]).collect(),
        estimators,
        ranks,
    })
}

/// The deterministic shuffled index split backing `Dataset::split`.
pub fn split_indices(n: usize, train_frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must be in (0, 1), got {train_frac}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 rows to split".into()));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, "train-test-split"));
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
    let train_n = ((n as f64 * train_frac).floor() as usize).clamp(1, n - 1);
    let test = indices.split_off(train_n);
    Ok((indices, test))
}

// ── CLI entry points ──────────────────────────────────────────────────

/// Sample a model and write the dataset CSV.
pub fn cmd_generate(model_path: &Path, n: usize, seed: u64, out: &Path) -> Result<()> {
    let model = StructuralModel::from_file(model_path)?;
    let data = model.sample(n, seed)?;
    data.to_csv_file(out)
}

/// Run the evaluation and write `report.json` and optionally `tables.md`.
pub fn cmd_evaluate(
    config: &ExperimentConfig,
    out: &Path,
    tables: Option<&Path>,
) -> Result<FairnessReport> {
    let report = evaluate(config)?;
    write_text(out, &report_to_json(&report))?;
    if let Some(tables_path) = tables {
        write_text(tables_path, &render_tables(&report))?;
    }
    Ok(report)
}

/// Run the rank-stability sampling and write the CSV.
pub fn cmd_rankdiff(
    config: &ExperimentConfig,
    group: &str,
    sample_size: usize,
    seed: u64,
    out: &Path,
) -> Result<RankDiffTable> {
    let table = rankdiff(config, group, sample_size, seed)?;
    write_text(out, &table.to_csv_string())?;
    Ok(table)
}

/// Render the counterexample table and verdicts; the process should exit 0
/// only when the verdicts match the expected (true, true, false).
pub fn cmd_demo_counterexample() -> (CounterexampleReport, String) {
    let report = counterexample::verify_counterexample();
    let mut out = String::new();
    out.push_str("Charm u and prediction y for each person, world, and height:\n\n");
    out.push_str("person | world | height | u | y | probability\n");
    out.push_str("-------+-------+--------+---+---+------------\n");
    for cell in &report.table {
        out.push_str(&format!(
            "{:<6} | {:<5} | {:<6} | {} | {} | {}/{}\n",
            cell.person,
            cell.world,
            cell.height,
            cell.charm,
            cell.prediction,
            cell.probability.numerator,
            cell.probability.denominator
        ));
    }
    out.push_str(&format!(
        "\ncf_holds={} independence_holds={} order_preserved={}\n",
        report.cf_holds, report.independence_holds, report.order_preserved
    ));
    out.push_str(&format!(
        "Pr(charming and tall) = {}/{}\n",
        report.pr_charming_and_tall.numerator, report.pr_charming_and_tall.denominator
    ));
    (report, out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}
