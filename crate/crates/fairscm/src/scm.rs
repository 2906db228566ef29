//! Structural causal models: typed DAG nodes with generalized-linear
//! governing equations, validation, seeded sampling, exact enumeration of
//! small discrete models, and do-interventions.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Causal role of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    /// Attribute decisions must not unfairly depend on; no parents allowed.
    Protected,
    /// Unmeasured background factor; no parents allowed.
    Latent,
    /// Measured feature.
    Observed,
    /// The label being predicted.
    Outcome,
}

/// Distribution family of a node's governing equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Poisson,
    Bernoulli,
    Categorical,
}

/// Link mapping the linear predictor to the family's mean parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Identity,
    Exp,
    Logit,
}

/// One node of a structural model.
///
/// The mean parameter is `link(intercept + Σ coeff · parent)`, where a
/// categorical parent with k categories expands into k one-hot terms and
/// therefore consumes k consecutive entries of `coeffs`.
///
/// Categorical nodes are parentless; their `coeffs` hold the k category
/// probabilities directly (there is no scalar linear predictor that could
/// parameterize k outcomes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub role: NodeRole,
    pub family: Family,
    pub link: Link,
    #[serde(default)]
    pub parents: Vec<String>,
    #[serde(default)]
    pub intercept: f64,
    #[serde(default)]
    pub coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<usize>,
    /// Set by `intervene`: the node is pinned to this constant and its
    /// incoming edges are severed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<f64>,
}

impl NodeSpec {
    pub fn gaussian(
        name: &str,
        role: NodeRole,
        parents: &[&str],
        intercept: f64,
        coeffs: &[f64],
        noise_variance: f64,
    ) -> Self {
        NodeSpec {
            name: name.into(),
            role,
            family: Family::Gaussian,
            link: Link::Identity,
            parents: parents.iter().map(|p| p.to_string()).collect(),
            intercept,
            coeffs: coeffs.to_vec(),
            noise_variance: Some(noise_variance),
            categories: None,
            fixed: None,
        }
    }

    pub fn bernoulli(
        name: &str,
        role: NodeRole,
        parents: &[&str],
        intercept: f64,
        coeffs: &[f64],
    ) -> Self {
        NodeSpec {
            name: name.into(),
            role,
            family: Family::Bernoulli,
            link: Link::Logit,
            parents: parents.iter().map(|p| p.to_string()).collect(),
            intercept,
            coeffs: coeffs.to_vec(),
            noise_variance: None,
            categories: None,
            fixed: None,
        }
    }

    pub fn poisson(
        name: &str,
        role: NodeRole,
        parents: &[&str],
        intercept: f64,
        coeffs: &[f64],
    ) -> Self {
        NodeSpec {
            name: name.into(),
            role,
            family: Family::Poisson,
            link: Link::Exp,
            parents: parents.iter().map(|p| p.to_string()).collect(),
            intercept,
            coeffs: coeffs.to_vec(),
            noise_variance: None,
            categories: None,
            fixed: None,
        }
    }

    /// Parentless categorical node; `weights` are the category probabilities.
    pub fn categorical(name: &str, role: NodeRole, weights: &[f64]) -> Self {
        NodeSpec {
            name: name.into(),
            role,
            family: Family::Categorical,
            link: Link::Identity,
            parents: Vec::new(),
            intercept: 0.0,
            coeffs: weights.to_vec(),
            noise_variance: None,
            categories: Some(weights.len()),
            fixed: None,
        }
    }
}

/// A structural causal model: nodes listed in topological order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralModel {
    pub nodes: Vec<NodeSpec>,
}

/// One fully specified outcome of a discrete model.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    /// Node values in model order (category indices for discrete nodes).
    pub values: Vec<f64>,
    pub probability: f64,
}

/// Exhaustive joint distribution of a discrete model.
#[derive(Debug, Clone)]
pub struct WorldTable {
    pub node_names: Vec<String>,
    pub worlds: Vec<World>,
}

impl WorldTable {
    /// Value of `node` in world `w`.
    pub fn value(&self, w: &World, node: &str) -> Option<f64> {
        self.node_names
            .iter()
            .position(|n| n == node)
            .map(|i| w.values[i])
    }
}

/// Largest discrete state space `enumerate_worlds` will materialize.
const MAX_WORLDS: usize = 1_000_000;

impl StructuralModel {
    pub fn new(nodes: Vec<NodeSpec>) -> Self {
        StructuralModel { nodes }
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.name == name)
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Number of linear-predictor slots a node contributes as a parent.
    fn parent_width(&self, name: &str) -> Option<usize> {
        self.node(name).map(|p| match p.family {
            Family::Categorical => p.categories.unwrap_or(0),
            _ => 1,
        })
    }

    /// Check every structural rule; `Ok(())` means the model is usable for
    /// sampling. Violations each name the offending node and rule.
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        let mut seen = BTreeSet::new();
        for node in &self.nodes {
            if !seen.insert(node.name.clone()) {
                violations.push(format!("node `{}`: duplicate name", node.name));
            }
        }

        // Cycle detection over the declared edges.
        for node in &self.nodes {
            if node.parents.contains(&node.name) {
                violations.push(format!("node `{}`: cycle (node is its own parent)", node.name));
            }
        }
        if let Some(cycle_node) = self.find_cycle() {
            violations.push(format!("node `{cycle_node}`: cycle in ancestry"));
        }

        for (i, node) in self.nodes.iter().enumerate() {
            for parent in &node.parents {
                match self.index(parent) {
                    None => violations.push(format!(
                        "node `{}`: unknown parent `{parent}`",
                        node.name
                    )),
                    Some(j) if j >= i && parent != &node.name => violations.push(format!(
                        "node `{}`: parent `{parent}` does not precede it",
                        node.name
                    )),
                    _ => {}
                }
            }

            match node.role {
                NodeRole::Protected | NodeRole::Latent if !node.parents.is_empty() => {
                    violations.push(format!(
                        "node `{}`: {:?} node has parent",
                        node.name, node.role
                    ));
                }
                _ => {}
            }

            if node.role == NodeRole::Protected
                && !matches!(node.family, Family::Bernoulli | Family::Categorical)
            {
                violations.push(format!(
                    "node `{}`: Protected node must be Bernoulli or Categorical",
                    node.name
                ));
            }

            let link_ok = match node.family {
                Family::Gaussian => node.link == Link::Identity,
                Family::Poisson => node.link == Link::Exp,
                Family::Bernoulli => node.link == Link::Logit,
                Family::Categorical => node.link == Link::Identity,
            };
            if !link_ok {
                violations.push(format!(
                    "node `{}`: illegal family/link pairing {:?}/{:?}",
                    node.name, node.family, node.link
                ));
            }

            match node.family {
                Family::Gaussian => match node.noise_variance {
                    Some(v) if v >= 0.0 && v.is_finite() => {}
                    Some(v) => violations.push(format!(
                        "node `{}`: noise_variance must be finite and >= 0, got {v}",
                        node.name
                    )),
                    None => violations.push(format!(
                        "node `{}`: Gaussian node requires noise_variance",
                        node.name
                    )),
                },
                _ => {
                    if node.noise_variance.is_some() {
                        violations.push(format!(
                            "node `{}`: {:?} node carries noise_variance",
                            node.name, node.family
                        ));
                    }
                }
            }

            if node.family == Family::Categorical {
                match node.categories {
                    Some(k) if k >= 2 => {
                        if !node.parents.is_empty() {
                            violations.push(format!(
                                "node `{}`: Categorical node must be parentless",
                                node.name
                            ));
                        }
                        if node.coeffs.len() != k {
                            violations.push(format!(
                                "node `{}`: Categorical node needs {k} weights, got {}",
                                node.name,
                                node.coeffs.len()
                            ));
                        } else {
                            let sum: f64 = node.coeffs.iter().sum();
                            if node.coeffs.iter().any(|w| *w < 0.0 || !w.is_finite())
                                || (sum - 1.0).abs() > 1e-9
                            {
                                violations.push(format!(
                                    "node `{}`: category weights must be nonnegative and sum to 1",
                                    node.name
                                ));
                            }
                        }
                    }
                    _ => violations.push(format!(
                        "node `{}`: Categorical node requires categories >= 2",
                        node.name
                    )),
                }
            } else {
                if node.categories.is_some() {
                    violations.push(format!(
                        "node `{}`: categories only valid on Categorical nodes",
                        node.name
                    ));
                }
                let expected: usize = node
                    .parents
                    .iter()
                    .map(|p| self.parent_width(p).unwrap_or(1))
                    .sum();
                if node.coeffs.len() != expected {
                    violations.push(format!(
                        "node `{}`: expected {expected} coefficients for its parents, got {}",
                        node.name,
                        node.coeffs.len()
                    ));
                }
            }

            if !node.intercept.is_finite() || node.coeffs.iter().any(|c| !c.is_finite()) {
                violations.push(format!(
                    "node `{}`: non-finite intercept or coefficient",
                    node.name
                ));
            }
        }

        let outcomes = self
            .nodes
            .iter()
            .filter(|n| n.role == NodeRole::Outcome)
            .count();
        if outcomes != 1 {
            violations.push(format!("model: expected exactly one Outcome node, found {outcomes}"));
        }

        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    /// Returns the name of some node on a directed cycle, if one exists.
    fn find_cycle(&self) -> Option<String> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.nodes.len()];
        let index: BTreeMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.as_str(), i))
            .collect();

        fn visit(
            model: &StructuralModel,
            index: &BTreeMap<&str, usize>,
            state: &mut [u8],
            i: usize,
        ) -> Option<String> {
            state[i] = 1;
            for parent in &model.nodes[i].parents {
                if let Some(&j) = index.get(parent.as_str()) {
                    match state[j] {
                        1 => return Some(model.nodes[j].name.clone()),
                        0 => {
                            if let Some(c) = visit(model, index, state, j) {
                                return Some(c);
                            }
                        }
                        _ => {}
                    }
                }
            }
            state[i] = 2;
            None
        }

        for i in 0..self.nodes.len() {
            if state[i] == 0 {
                if let Some(c) = visit(self, &index, &mut state, i) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Linear predictor of `node` given parent values, with categorical
    /// parents expanded one-hot.
    fn linear_predictor(&self, node: &NodeSpec, parent_values: &[f64]) -> f64 {
        let mut eta = node.intercept;
        let mut slot = 0;
        for (p, value) in node.parents.iter().zip(parent_values) {
            match self.node(p).map(|n| n.family) {
                Some(Family::Categorical) => {
                    let k = self.node(p).and_then(|n| n.categories).unwrap_or(0);
                    let cat = value.round() as usize;
                    if cat < k {
                        eta += node.coeffs[slot + cat];
                    }
                    slot += k;
                }
                _ => {
                    eta += node.coeffs[slot] * value;
                    slot += 1;
                }
            }
        }
        eta
    }

    /// Draw `n` rows. Each node gets its own RNG substream derived from
    /// (seed, node name), so adding a node leaves other columns' draws
    /// untouched. Identical inputs produce bit-identical datasets.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InvalidInput("sample size must be positive".into()));
        }

        let mut columns: Vec<Vec<f64>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, &node.name));
            let mut col = Vec::with_capacity(n);
            for row in 0..n {
                if let Some(v) = node.fixed {
                    col.push(v);
                    continue;
                }
                let parent_values: Vec<f64> = node
                    .parents
                    .iter()
                    .map(|p| columns[self.index(p).unwrap()][row])
                    .collect();
                let value = match node.family {
                    Family::Gaussian => {
                        let mean = self.linear_predictor(node, &parent_values);
                        let var = node.noise_variance.unwrap_or(0.0);
                        if var == 0.0 {
                            mean
                        } else {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            mean + var.sqrt() * z
                        }
                    }
                    Family::Poisson => {
                        let lambda = self.linear_predictor(node, &parent_values).exp();
                        if !lambda.is_finite() {
                            return Err(Error::InvalidInput(format!(
                                "node `{}`: Poisson mean overflowed",
                                node.name
                            )));
                        }
                        let pois = Poisson::new(lambda).map_err(|e| {
                            Error::InvalidInput(format!(
                                "node `{}`: bad Poisson mean {lambda}: {e}",
                                node.name
                            ))
                        })?;
                        pois.sample(&mut rng)
                    }
                    Family::Bernoulli => {
                        let p = sigmoid(self.linear_predictor(node, &parent_values));
                        if rng.random::<f64>() < p {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Family::Categorical => {
                        let u: f64 = rng.random();
                        let mut acc = 0.0;
                        let mut chosen = node.coeffs.len() - 1;
                        for (c, w) in node.coeffs.iter().enumerate() {
                            acc += w;
                            if u < acc {
                                chosen = c;
                                break;
                            }
                        }
                        chosen as f64
                    }
                };
                col.push(value);
            }
            columns.push(col);
        }

        Dataset::from_model_sample(self, columns)
    }

    /// Materialize the full joint distribution of a discrete model.
    ///
    /// Every non-fixed node must be Bernoulli or Categorical, and the
    /// product of support sizes must not exceed 10^6.
    pub fn enumerate_worlds(&self) -> Result<WorldTable> {
        let mut supports: Vec<Vec<f64>> = Vec::with_capacity(self.nodes.len());
        let mut total: usize = 1;
        for node in &self.nodes {
            let support = if let Some(v) = node.fixed {
                vec![v]
            } else {
                match node.family {
                    Family::Bernoulli => vec![0.0, 1.0],
                    Family::Categorical => {
                        let k = node.categories.ok_or_else(|| {
                            Error::NotEnumerable(format!(
                                "node `{}` lacks a category count",
                                node.name
                            ))
                        })?;
                        (0..k).map(|c| c as f64).collect()
                    }
                    Family::Gaussian | Family::Poisson => {
                        return Err(Error::NotEnumerable(format!(
                            "node `{}` is continuous or unbounded ({:?})",
                            node.name, node.family
                        )))
                    }
                }
            };
            total = total.saturating_mul(support.len());
            if total > MAX_WORLDS {
                return Err(Error::NotEnumerable(format!(
                    "state space exceeds {MAX_WORLDS} worlds"
                )));
            }
            supports.push(support);
        }

        // Parents must exist and precede their children for the chain-rule
        // probability walk below.
        for (i, node) in self.nodes.iter().enumerate() {
            for p in &node.parents {
                match self.index(p) {
                    Some(j) if j < i => {}
                    _ => {
                        return Err(Error::NotEnumerable(format!(
                            "node `{}`: parent `{p}` missing or out of order",
                            node.name
                        )))
                    }
                }
            }
        }

        let mut worlds = Vec::with_capacity(total);
        let mut values = vec![0.0; self.nodes.len()];
        self.enumerate_rec(&supports, 0, 1.0, &mut values, &mut worlds);

        Ok(WorldTable {
            node_names: self.nodes.iter().map(|n| n.name.clone()).collect(),
            worlds,
        })
    }

    fn enumerate_rec(
        &self,
        supports: &[Vec<f64>],
        depth: usize,
        prob: f64,
        values: &mut Vec<f64>,
        out: &mut Vec<World>,
    ) {
        if depth == self.nodes.len() {
            out.push(World {
                values: values.clone(),
                probability: prob,
            });
            return;
        }
        let node = &self.nodes[depth];
        let parent_values: Vec<f64> = node
            .parents
            .iter()
            .map(|p| values[self.index(p).unwrap()])
            .collect();
        for v in &supports[depth] {
            let p = if node.fixed.is_some() {
                1.0
            } else {
                match node.family {
                    Family::Bernoulli => {
                        let p1 = sigmoid(self.linear_predictor(node, &parent_values));
                        if *v == 1.0 {
                            p1
                        } else {
                            1.0 - p1
                        }
                    }
                    Family::Categorical => node.coeffs[v.round() as usize],
                    _ => unreachable!("supports reject continuous families"),
                }
            };
            values[depth] = *v;
            self.enumerate_rec(supports, depth + 1, prob * p, values, out);
        }
    }

    /// do-intervention: pin each assigned node to a constant and sever its
    /// incoming edges; every other equation is untouched.
    pub fn intervene(&self, assignments: &BTreeMap<String, f64>) -> Result<StructuralModel> {
        for name in assignments.keys() {
            if self.index(name).is_none() {
                return Err(Error::UnknownNode(name.clone()));
            }
        }
        let nodes = self
            .nodes
            .iter()
            .map(|node| {
                if let Some(&v) = assignments.get(&node.name) {
                    let mut fixed = node.clone();
                    fixed.parents.clear();
                    fixed.coeffs.clear();
                    fixed.fixed = Some(v);
                    fixed
                } else {
                    node.clone()
                }
            })
            .collect();
        Ok(StructuralModel { nodes })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<StructuralModel> {
        serde_json::from_str(json).map_err(|e| Error::Json {
            path: "<inline>".into(),
            source: e,
        })
    }

    pub fn from_file(path: &Path) -> Result<StructuralModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}

pub(crate) fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Derive a deterministic substream seed from a base seed and a label.
///
/// FNV-1a over the label mixed through splitmix64, so streams for different
/// labels are decorrelated and stable across platforms.
pub(crate) fn stream_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(seed ^ h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
