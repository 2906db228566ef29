//! Column-table datasets: a categorical group column (the realized protected
//! attribute, possibly a Cartesian product of several protected nodes),
//! numeric feature columns, and one numeric outcome column.
//!
//! Synthetic datasets sampled from a model additionally keep the true latent
//! draws in memory for diagnostics; those columns are never written to CSV.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scm::{stream_seed, NodeRole, StructuralModel};

/// Name of the synthesized group column in generated datasets.
pub const GROUP_COLUMN: &str = "group";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    group_name: String,
    groups: Vec<String>,
    /// Original protected columns (in-memory only; the CSV carries the
    /// combined group column).
    protected: Vec<(String, Vec<String>)>,
    features: Vec<(String, Vec<f64>)>,
    outcome_name: String,
    outcome: Vec<f64>,
    /// True latent draws, present only for model-sampled data.
    latents: Vec<(String, Vec<f64>)>,
}

impl Dataset {
    /// Build a dataset from parallel columns.
    pub fn from_columns(
        group_name: &str,
        groups: Vec<String>,
        features: Vec<(String, Vec<f64>)>,
        outcome_name: &str,
        outcome: Vec<f64>,
    ) -> Result<Dataset> {
        let n = groups.len();
        if outcome.len() != n || features.iter().any(|(_, c)| c.len() != n) {
            return Err(Error::SchemaMismatch(
                "all columns must have equal length".into(),
            ));
        }
        Ok(Dataset {
            group_name: group_name.into(),
            groups,
            protected: Vec::new(),
            features,
            outcome_name: outcome_name.into(),
            outcome,
            latents: Vec::new(),
        })
    }

    /// Assemble a dataset from per-node sample columns (model node order).
    pub(crate) fn from_model_sample(
        model: &StructuralModel,
        columns: Vec<Vec<f64>>,
    ) -> Result<Dataset> {
        let n = columns.first().map_or(0, |c| c.len());
        let mut protected: Vec<(String, Vec<String>)> = Vec::new();
        let mut features = Vec::new();
        let mut latents = Vec::new();
        let mut outcome_name = String::new();
        let mut outcome = Vec::new();

        for (node, col) in model.nodes.iter().zip(columns) {
            match node.role {
                NodeRole::Protected => {
                    let labels = col.iter().map(|v| format_label(*v)).collect();
                    protected.push((node.name.clone(), labels));
                }
                NodeRole::Observed => features.push((node.name.clone(), col)),
                NodeRole::Latent => latents.push((node.name.clone(), col)),
                NodeRole::Outcome => {
                    outcome_name = node.name.clone();
                    outcome = col;
                }
            }
        }

        let groups = if protected.is_empty() {
            vec!["all".to_string(); n]
        } else {
            (0..n)
                .map(|i| {
                    protected
                        .iter()
                        .map(|(_, col)| col[i].as_str())
                        .collect::<Vec<_>>()
                        .join("|")
                })
                .collect()
        };

        Ok(Dataset {
            group_name: GROUP_COLUMN.into(),
            groups,
            protected,
            features,
            outcome_name,
            outcome,
            latents,
        })
    }

    pub fn n(&self) -> usize {
        self.groups.len()
    }

    pub fn group_name(&self) -> &str {
        &self.group_name
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    /// Distinct group labels, sorted.
    pub fn distinct_groups(&self) -> Vec<String> {
        let mut g: Vec<String> = self.groups.clone();
        g.sort();
        g.dedup();
        g
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn features(&self) -> &[(String, Vec<f64>)] {
        &self.features
    }

    pub fn feature(&self, name: &str) -> Option<&[f64]> {
        self.features
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }

    /// Feature values of row `i`, in column order.
    pub fn feature_row(&self, i: usize) -> Vec<f64> {
        self.features.iter().map(|(_, c)| c[i]).collect()
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn latent(&self, name: &str) -> Option<&[f64]> {
        self.latents
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }

    pub fn latents(&self) -> &[(String, Vec<f64>)] {
        &self.latents
    }

    pub fn protected_column(&self, name: &str) -> Option<&[String]> {
        self.protected
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let take_num = |col: &[f64]| indices.iter().map(|&i| col[i]).collect::<Vec<_>>();
        let take_str = |col: &[String]| {
            indices
                .iter()
                .map(|&i| col[i].clone())
                .collect::<Vec<_>>()
        };
        Dataset {
            group_name: self.group_name.clone(),
            groups: take_str(&self.groups),
            protected: self
                .protected
                .iter()
                .map(|(n, c)| (n.clone(), take_str(c)))
                .collect(),
            features: self
                .features
                .iter()
                .map(|(n, c)| (n.clone(), take_num(c)))
                .collect(),
            outcome_name: self.outcome_name.clone(),
            outcome: take_num(&self.outcome),
            latents: self
                .latents
                .iter()
                .map(|(n, c)| (n.clone(), take_num(c)))
                .collect(),
        }
    }

    /// Deterministic shuffled split; the first `⌊n·train_frac⌋` shuffled rows
    /// (clamped so both sides are nonempty) form the training set.
    pub fn split(&self, train_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(train_frac > 0.0 && train_frac < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must be in (0, 1), got {train_frac}"
            )));
        }
        let n = self.n();
        if n < 2 {
            return Err(Error::InvalidInput(
                "need at least 2 rows to split".into(),
            ));
        }
        let mut indices: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, "train-test-split"));
        // Fisher-Yates
        for i in (1..n).rev() {
            let j = rand::Rng::random_range(&mut rng, 0..=i);
            indices.swap(i, j);
        }
        let train_n = ((n as f64 * train_frac).floor() as usize).clamp(1, n - 1);
        let train = self.subset(&indices[..train_n]);
        let test = self.subset(&indices[train_n..]);
        Ok((train, test))
    }

    /// Serialize as CSV: group column, feature columns, outcome column.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = vec![&self.group_name];
        header.extend(self.features.iter().map(|(n, _)| n.as_str()));
        header.push(&self.outcome_name);
        w.write_record(&header).expect("in-memory CSV write");
        for i in 0..self.n() {
            let mut record: Vec<String> = vec![self.groups[i].clone()];
            record.extend(self.features.iter().map(|(_, c)| format_float(c[i])));
            record.push(format_float(self.outcome[i]));
            w.write_record(&record).expect("in-memory CSV write");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV flush"))
            .expect("CSV output is UTF-8")
    }

    pub fn to_csv_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    /// Load a CSV dataset.
    ///
    /// `group_col` defaults to a column named `group`, or the unique
    /// non-numeric column. `outcome_col` must name a numeric column. Every
    /// remaining column must be numeric and becomes a feature.
    pub fn from_csv_str(
        text: &str,
        group_col: Option<&str>,
        outcome_col: Option<&str>,
    ) -> Result<Dataset> {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Csv {
                path: "<inline>".into(),
                source: e,
            })?
            .iter()
            .map(|h| h.to_string())
            .collect();

        let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for record in reader.records() {
            let record = record.map_err(|e| Error::Csv {
                path: "<inline>".into(),
                source: e,
            })?;
            if record.len() != headers.len() {
                return Err(Error::SchemaMismatch(format!(
                    "row has {} fields, header has {}",
                    record.len(),
                    headers.len()
                )));
            }
            for (col, field) in raw.iter_mut().zip(record.iter()) {
                col.push(field.to_string());
            }
        }
        if raw.first().is_none_or(|c| c.is_empty()) {
            return Err(Error::SchemaMismatch("dataset has no rows".into()));
        }

        let numeric: Vec<bool> = raw
            .iter()
            .map(|col| col.iter().all(|v| v.parse::<f64>().is_ok()))
            .collect();

        let group_idx = match group_col {
            Some(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("group column `{name}` not found")))?,
            None => {
                if let Some(i) = headers.iter().position(|h| h == GROUP_COLUMN) {
                    i
                } else {
                    let non_numeric: Vec<usize> = (0..headers.len())
                        .filter(|&i| !numeric[i])
                        .collect();
                    match non_numeric.as_slice() {
                        [i] => *i,
                        _ => {
                            return Err(Error::Config(
                                "cannot infer group column; pass it explicitly".into(),
                            ))
                        }
                    }
                }
            }
        };

        let outcome_idx = match outcome_col {
            Some(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("outcome column `{name}` not found")))?,
            None => return Err(Error::Config("outcome column must be specified".into())),
        };
        if outcome_idx == group_idx {
            return Err(Error::Config(
                "group and outcome columns must differ".into(),
            ));
        }
        if !numeric[outcome_idx] {
            return Err(Error::SchemaMismatch(format!(
                "outcome column `{}` is not numeric",
                headers[outcome_idx]
            )));
        }

        let mut features = Vec::new();
        for i in 0..headers.len() {
            if i == group_idx || i == outcome_idx {
                continue;
            }
            if !numeric[i] {
                return Err(Error::SchemaMismatch(format!(
                    "feature column `{}` is not numeric; only the group column may hold labels",
                    headers[i]
                )));
            }
            let col: Vec<f64> = raw[i].iter().map(|v| v.parse::<f64>().unwrap()).collect();
            features.push((headers[i].clone(), col));
        }
        let outcome: Vec<f64> = raw[outcome_idx]
            .iter()
            .map(|v| v.parse::<f64>().unwrap())
            .collect();

        Dataset::from_columns(
            &headers[group_idx],
            std::mem::take(&mut raw[group_idx]),
            features,
            &headers[outcome_idx],
            outcome,
        )
    }

    pub fn from_csv_file(
        path: &Path,
        group_col: Option<&str>,
        outcome_col: Option<&str>,
    ) -> Result<Dataset> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Dataset::from_csv_str(&text, group_col, outcome_col)
    }
}

/// Discrete sampled values print as integer labels ("0", "1", ...).
fn format_label(v: f64) -> String {
    format!("{}", v.round() as i64)
}

/// Shortest round-trip decimal representation (f64 Display).
fn format_float(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::from_columns(
            "group",
            vec!["a".into(), "b".into(), "a".into(), "b".into()],
            vec![("x".into(), vec![1.0, 2.0, 3.0, 4.0])],
            "y",
            vec![10.0, 20.0, 30.0, 40.0],
        )
        .unwrap()
    }

    #[test]
    fn rejects_ragged_columns() {
        let err = Dataset::from_columns(
            "group",
            vec!["a".into()],
            vec![("x".into(), vec![1.0, 2.0])],
            "y",
            vec![1.0],
        );
        assert!(err.is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = toy();
        let text = d.to_csv_string();
        let back = Dataset::from_csv_str(&text, None, Some("y")).unwrap();
        assert_eq!(back.groups(), d.groups());
        assert_eq!(back.feature("x").unwrap(), d.feature("x").unwrap());
        assert_eq!(back.outcome(), d.outcome());
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let d = toy();
        let (tr1, te1) = d.split(0.5, 99).unwrap();
        let (tr2, te2) = d.split(0.5, 99).unwrap();
        assert_eq!(tr1.outcome(), tr2.outcome());
        assert_eq!(te1.outcome(), te2.outcome());
        assert_eq!(tr1.n() + te1.n(), d.n());
        let mut all: Vec<f64> = tr1.outcome().iter().chain(te1.outcome()).copied().collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(all, vec![10.0, 20.0, 30.0, 40.0]);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        assert!(toy().split(0.0, 1).is_err());
        assert!(toy().split(1.0, 1).is_err());
    }

    #[test]
    fn non_numeric_feature_rejected() {
        let text = "group,x,y\na,one,2\nb,3,4\n";
        assert!(Dataset::from_csv_str(text, None, Some("y")).is_err());
    }

    #[test]
    fn group_column_inferred_when_unique_string_column() {
        let text = "cohort,x,y\nred,1,2\nblue,3,4\n";
        let d = Dataset::from_csv_str(text, None, Some("y")).unwrap();
        assert_eq!(d.group_name(), "cohort");
        assert_eq!(d.distinct_groups(), vec!["blue".to_string(), "red".to_string()]);
    }
}
