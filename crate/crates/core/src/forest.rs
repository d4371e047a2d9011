//! Random-forest classifier grown from scratch: bootstrap bagging, CART trees
//! split on Gini impurity, and out-of-bag error estimation.
//!
//! Every tree `i` draws its bootstrap sample and its per-node feature subsets
//! from a stream seeded with `seed + i`, so a forest is bit-identical no
//! matter how many threads grew it.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("no training rows")]
    EmptyData,
    #[error("only one class present")]
    SingleClass,
    #[error("feature keys do not match the model")]
    KeyMismatch,
    #[error("row {row} has {got} values, expected {expected}")]
    RowWidth {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("label `{0}` is not one of the dataset classes")]
    UnknownLabel(String),
    #[error("data is not the training set ({got} rows, trained on {expected})")]
    NotTrainingSet { got: usize, expected: usize },
    #[error("no row has an out-of-bag tree")]
    NoOobRows,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ForestError> = std::result::Result<T, E>;

/// Labelled rows with named features. Labels are indices into `classes`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub feature_keys: Vec<String>,
    pub classes: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset. With `classes = None` the class list is the sorted
    /// set of distinct labels.
    pub fn new(
        feature_keys: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: &[String],
        classes: Option<Vec<String>>,
    ) -> Result<Self> {
        let classes = classes.unwrap_or_else(|| {
            let mut c = labels.to_vec();
            c.sort();
            c.dedup();
            c
        });
        let targets = labels
            .iter()
            .map(|l| {
                classes
                    .iter()
                    .position(|c| c == l)
                    .ok_or_else(|| ForestError::UnknownLabel(l.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.len() != targets.len() {
            return Err(ForestError::NotTrainingSet {
                got: targets.len(),
                expected: rows.len(),
            });
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != feature_keys.len() {
                return Err(ForestError::RowWidth {
                    row,
                    got: r.len(),
                    expected: feature_keys.len(),
                });
            }
        }
        Ok(Dataset {
            feature_keys,
            classes,
            rows,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_keys.len()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_keys: self.feature_keys.clone(),
            classes: self.classes.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    /// Keeps only the named feature columns, in the given order.
    pub fn select_features(&self, keys: &[String]) -> Result<Dataset> {
        let idx = keys
            .iter()
            .map(|k| {
                self.feature_keys
                    .iter()
                    .position(|f| f == k)
                    .ok_or(ForestError::KeyMismatch)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            feature_keys: keys.to_vec(),
            classes: self.classes.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&i| r[i]).collect())
                .collect(),
            targets: self.targets.clone(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturesPerSplit {
    /// ⌈√d⌉
    Sqrt,
    Count(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub features_per_split: FeaturesPerSplit,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: FeaturesPerSplit::Sqrt,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_features_per_split(&self, n_features: usize) -> Result<usize> {
        let k = match self.features_per_split {
            FeaturesPerSplit::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            FeaturesPerSplit::Count(k) => k,
        };
        if k == 0 || k > n_features {
            return Err(ForestError::InvalidParams(format!(
                "features_per_split {k} with {n_features} features"
            )));
        }
        Ok(k)
    }

    fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(ForestError::InvalidParams("n_trees must be >= 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(ForestError::InvalidParams(
                "min_samples_leaf must be >= 1".into(),
            ));
        }
        if self.max_depth == Some(0) {
            return Err(ForestError::InvalidParams("max_depth must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Rows with `value <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { class_counts: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
    /// Training-row indices drawn for this tree, with repetition.
    pub bootstrap_indices: Vec<usize>,
}

fn majority(counts: &[u32]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

impl DecisionTree {
    pub fn leaf_counts(&self, row: &[f64]) -> &[u32] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { class_counts } => return class_counts,
            }
        }
    }

    /// Majority class of the reached leaf; ties go to the earlier class.
    pub fn predict(&self, row: &[f64]) -> usize {
        majority(self.leaf_counts(row))
    }

    /// Per-row flag: true when the row was not drawn for this tree.
    pub fn oob_mask(&self, n_rows: usize) -> Vec<bool> {
        let mut oob = vec![true; n_rows];
        for &i in &self.bootstrap_indices {
            oob[i] = false;
        }
        oob
    }
}

fn draw_bootstrap(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// `n` uniform draws with replacement from `0..n`.
pub fn bootstrap_sample(n: usize, seed: u64) -> Vec<usize> {
    draw_bootstrap(&mut rng::seeded(seed), n)
}

/// Indices never drawn in `sample`.
pub fn out_of_bag(sample: &[usize], n: usize) -> Vec<usize> {
    let mut seen = vec![false; n];
    for &i in sample {
        seen[i] = true;
    }
    (0..n).filter(|&i| !seen[i]).collect()
}

struct Grower<'a, R> {
    data: &'a Dataset,
    rng: R,
    mtry: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl<R: Rng> Grower<'_, R> {
    fn class_counts(&self, rows: &[usize]) -> Vec<u32> {
        let mut counts = vec![0u32; self.data.classes.len()];
        for &r in rows {
            counts[self.data.targets[r]] += 1;
        }
        counts
    }

    /// Best threshold on one feature, scored by Σ n_side · gini_side
    /// (lower is better). `None` when the feature is constant on `rows` or
    /// no split respects `min_samples_leaf`.
    fn best_threshold(&self, rows: &[usize], feature: usize, total: &[u32]) -> Option<(f64, f64)> {
        let mut pairs: Vec<(f64, usize)> = rows
            .iter()
            .map(|&r| (self.data.rows[r][feature], self.data.targets[r]))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let n = pairs.len();
        let mut left = vec![0u32; total.len()];
        let mut left_sq = 0.0f64;
        let mut right_sq: f64 = total.iter().map(|&c| (c as f64).powi(2)).sum();
        let mut best: Option<(f64, f64)> = None;
        for i in 0..n - 1 {
            let c = pairs[i].1;
            let (l, r) = (left[c] as f64, (total[c] - left[c]) as f64);
            left_sq += 2.0 * l + 1.0;
            right_sq -= 2.0 * r - 1.0;
            left[c] += 1;
            let (a, b) = (pairs[i].0, pairs[i + 1].0);
            let nl = i + 1;
            let nr = n - nl;
            if a == b || nl < self.min_leaf || nr < self.min_leaf {
                continue;
            }
            // n_l·gini_l + n_r·gini_r = n − Σl²/n_l − Σr²/n_r
            let score = n as f64 - left_sq / nl as f64 - right_sq / nr as f64;
            if best.is_none_or(|(s, _)| score < s) {
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                best = Some((score, threshold));
            }
        }
        best
    }

    fn find_split(&mut self, rows: &[usize], total: &[u32]) -> Option<BestSplit> {
        let mut order: Vec<usize> = (0..self.data.n_features()).collect();
        order.shuffle(&mut self.rng);
        let mut visited_valid = 0;
        let mut best: Option<BestSplit> = None;
        let mut evaluated = Vec::new();
        for &f in &order {
            if visited_valid >= self.mtry {
                break;
            }
            if let Some((score, threshold)) = self.best_threshold(rows, f, total) {
                visited_valid += 1;
                evaluated.push(BestSplit {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }
        // Canonical tie-break: lowest score, then lowest feature index.
        evaluated.sort_by_key(|s| s.feature);
        for s in evaluated {
            if best.as_ref().is_none_or(|b| s.score < b.score) {
                best = Some(s);
            }
        }
        best
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let counts = self.class_counts(rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class_counts: counts.clone(),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let too_small = rows.len() < 2 * self.min_leaf;
        let too_deep = self.max_depth.is_some_and(|d| depth >= d);
        if pure || too_small || too_deep {
            return id;
        }
        let Some(split) = self.find_split(rows, &counts) else {
            return id;
        };
        let (l_rows, r_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.data.rows[r][split.feature] <= split.threshold);
        let left = self.grow(&l_rows, depth + 1);
        let right = self.grow(&r_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

fn grow_tree(data: &Dataset, params: &ForestParams, mtry: usize, tree_seed: u64) -> DecisionTree {
    let mut rng = rng::seeded(tree_seed);
    let bootstrap_indices = draw_bootstrap(&mut rng, data.len());
    let mut grower = Grower {
        data,
        rng,
        mtry,
        max_depth: params.max_depth,
        min_leaf: params.min_samples_leaf,
        nodes: Vec::new(),
    };
    grower.grow(&bootstrap_indices, 0);
    DecisionTree {
        nodes: grower.nodes,
        bootstrap_indices,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub label: String,
    /// Fraction of trees voting for each class, in `Forest::classes` order.
    pub vote_fractions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub params: ForestParams,
    pub feature_keys: Vec<String>,
    pub classes: Vec<String>,
    pub trees: Vec<DecisionTree>,
}

/// Grows `params.n_trees` trees in parallel on independent bootstrap samples.
pub fn train_forest(data: &Dataset, params: &ForestParams) -> Result<Forest> {
    params.validate()?;
    if data.is_empty() {
        return Err(ForestError::EmptyData);
    }
    let mut present = data.targets.clone();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 || data.len() < 2 {
        return Err(ForestError::SingleClass);
    }
    let mtry = params.resolved_features_per_split(data.n_features())?;
    let trees = (0..params.n_trees as u64)
        .into_par_iter()
        .map(|i| grow_tree(data, params, mtry, params.seed.wrapping_add(i)))
        .collect();
    Ok(Forest {
        params: params.clone(),
        feature_keys: data.feature_keys.clone(),
        classes: data.classes.clone(),
        trees,
    })
}

impl Forest {
    fn votes_to_prediction(&self, votes: &[u32]) -> Prediction {
        let total: u32 = votes.iter().sum();
        let class = majority(votes);
        Prediction {
            class,
            label: self.classes[class].clone(),
            vote_fractions: votes.iter().map(|&v| v as f64 / total as f64).collect(),
        }
    }

    /// Majority vote of all trees on a row laid out in `feature_keys` order.
    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        if row.len() != self.feature_keys.len() {
            return Err(ForestError::KeyMismatch);
        }
        let mut votes = vec![0u32; self.classes.len()];
        for tree in &self.trees {
            votes[tree.predict(row)] += 1;
        }
        Ok(self.votes_to_prediction(&votes))
    }

    /// Like [`Forest::predict`] for a row laid out in `keys` order, which may
    /// be a superset of the forest's keys in any order.
    pub fn predict_named(&self, keys: &[String], row: &[f64]) -> Result<Prediction> {
        if keys.len() != row.len() {
            return Err(ForestError::RowWidth { row: 0, got: row.len(), expected: keys.len() });
        }
        if keys == self.feature_keys.as_slice() {
            return self.predict(row);
        }
        let projected = self
            .feature_keys
            .iter()
            .map(|k| keys.iter().position(|x| x == k).map(|i| row[i]))
            .collect::<Option<Vec<f64>>>()
            .ok_or(ForestError::KeyMismatch)?;
        self.predict(&projected)
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<usize>> {
        self.check_keys(data)?;
        data.rows
            .par_iter()
            .map(|r| self.predict(r).map(|p| p.class))
            .collect()
    }

    pub(crate) fn check_keys(&self, data: &Dataset) -> Result<()> {
        if data.feature_keys != self.feature_keys || data.classes != self.classes {
            return Err(ForestError::KeyMismatch);
        }
        Ok(())
    }

    pub(crate) fn check_training_set(&self, data: &Dataset) -> Result<()> {
        self.check_keys(data)?;
        if let Some(t) = self.trees.iter().find(|t| t.bootstrap_indices.len() != data.len()) {
            return Err(ForestError::NotTrainingSet {
                got: data.len(),
                expected: t.bootstrap_indices.len(),
            });
        }
        Ok(())
    }

    /// Per-row class votes from trees that did not see the row.
    pub fn oob_votes(&self, data: &Dataset) -> Result<Vec<Vec<u32>>> {
        self.check_training_set(data)?;
        let mut votes = vec![vec![0u32; self.classes.len()]; data.len()];
        for tree in &self.trees {
            for (i, oob) in tree.oob_mask(data.len()).into_iter().enumerate() {
                if oob {
                    votes[i][tree.predict(&data.rows[i])] += 1;
                }
            }
        }
        Ok(votes)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)? + "\n")?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Forest> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// OOB accuracy from aggregated OOB votes: `(correct, counted)`; rows without
/// any OOB tree are skipped.
pub(crate) fn oob_tally(votes: &[Vec<u32>], targets: &[usize]) -> (usize, usize) {
    let mut correct = 0;
    let mut counted = 0;
    for (v, &t) in votes.iter().zip(targets) {
        if v.iter().any(|&c| c > 0) {
            counted += 1;
            if majority(v) == t {
                correct += 1;
            }
        }
    }
    (correct, counted)
}

/// Misclassification rate over rows that have at least one OOB tree.
pub fn oob_error(forest: &Forest, data: &Dataset) -> Result<f64> {
    let votes = forest.oob_votes(data)?;
    let (correct, counted) = oob_tally(&votes, &data.targets);
    if counted == 0 {
        return Err(ForestError::NoOobRows);
    }
    Ok(1.0 - correct as f64 / counted as f64)
}
