//! Tree ensembles sharing one feature set: bagged regularized trees (RRF),
//! boosted regularized trees (RBoost), and a plain random forest used as the
//! evaluation classifier.
//!
//! RRF and RBoost build trees strictly in order because the feature set
//! accumulated by tree `t` is input to tree `t+1`; the final set is the
//! selection. Each tree consumes its own derived RNG stream, so builds are
//! reproducible for a fixed seed.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::tree::{grow_plain, grow_regularized, FeatureSet, RegConfig, TreeModel};

/// Version tag written into serialized models.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rrf,
    Rboost,
    PlainRf,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Rrf => write!(f, "rrf"),
            Method::Rboost => write!(f, "rboost"),
            Method::PlainRf => write!(f, "rf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub method: Method,
    pub n_trees: usize,
    pub tree: RegConfig,
    /// Boosting instance weights never fall below this.
    pub trim_epsilon: f64,
    /// Worker threads for embarrassingly parallel builds (PlainRf only);
    /// never affects results, so it is not part of the serialized config.
    #[serde(skip, default = "default_threads")]
    pub threads: usize,
}

fn default_threads() -> usize {
    1
}

impl EnsembleConfig {
    /// Selector defaults: 100 regularized trees.
    pub fn selector(method: Method, lambda: f64, seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            method,
            n_trees: 100,
            tree: RegConfig {
                lambda,
                seed,
                ..RegConfig::default()
            },
            trim_epsilon: 1e-8,
            threads: 1,
        }
    }

    /// Evaluation classifier defaults: a 200-tree plain random forest.
    pub fn evaluator(seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            method: Method::PlainRf,
            n_trees: 200,
            tree: RegConfig {
                lambda: 1.0,
                seed,
                ..RegConfig::default()
            },
            trim_epsilon: 1e-8,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if self.trim_epsilon <= 0.0 || self.trim_epsilon.is_nan() {
            return Err(Error::Config("trim_epsilon must be positive".into()));
        }
        self.tree.validate()
    }

    pub fn with_seed(mut self, seed: u64) -> EnsembleConfig {
        self.tree.seed = seed;
        self
    }
}

/// A selected feature and the tree that first used it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedFeature {
    pub index: usize,
    pub first_tree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub method: Method,
    pub feature_names: Vec<String>,
    pub kinds: Vec<FeatureKind>,
    pub class_names: Vec<String>,
    pub target_name: String,
    pub trees: Vec<TreeModel>,
    /// Per-tree vote weights; all 1 except for boosted rounds.
    pub alphas: Vec<f64>,
    /// Features used by any split, in first-use order.
    pub selected: Vec<SelectedFeature>,
    pub config: EnsembleConfig,
}

impl EnsembleModel {
    /// Selected feature indices in first-use order.
    pub fn selected_indices(&self) -> Vec<usize> {
        self.selected.iter().map(|s| s.index).collect()
    }

    /// Selected feature names in first-use order.
    pub fn selected_names(&self) -> Vec<String> {
        self.selected
            .iter()
            .map(|s| self.feature_names[s.index].clone())
            .collect()
    }

    pub fn check_schema(&self, ds: &Dataset) -> Result<()> {
        if ds.n_features() != self.feature_names.len() {
            return Err(Error::Schema(format!(
                "input has {} feature columns, model was trained on {}",
                ds.n_features(),
                self.feature_names.len()
            )));
        }
        for (name, trained) in ds.feature_names().iter().zip(&self.feature_names) {
            if name != trained {
                return Err(Error::Schema(format!(
                    "input column '{name}' does not match training column '{trained}'"
                )));
            }
        }
        // Kind compatibility is checked per tree against the same snapshot;
        // one tree suffices.
        if let Some(tree) = self.trees.first() {
            tree.check_schema(ds)?;
        }
        Ok(())
    }

    /// Alpha-weighted vote fractions per class, one row per input row.
    pub fn predict_votes(&self, ds: &Dataset) -> Result<Vec<Vec<f64>>> {
        self.check_schema(ds)?;
        ds.require_complete()?;
        let total: f64 = self.alphas.iter().sum();
        let c = self.class_names.len();
        let mut votes = vec![vec![0.0; c]; ds.n_rows()];
        for (tree, &alpha) in self.trees.iter().zip(&self.alphas) {
            for (row, row_votes) in votes.iter_mut().enumerate() {
                let p = tree.route(ds, row);
                row_votes[p] += alpha;
            }
        }
        for row_votes in &mut votes {
            for v in row_votes.iter_mut() {
                *v /= total;
            }
        }
        Ok(votes)
    }

    /// Alpha-weighted majority vote; lowest class index on ties.
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<usize>> {
        let votes = self.predict_votes(ds)?;
        Ok(votes.iter().map(|v| argmax(v)).collect())
    }

    pub fn training_accuracy(&self, ds: &Dataset) -> Result<f64> {
        let preds = self.predict(ds)?;
        let hits = preds
            .iter()
            .zip(ds.target())
            .filter(|(&p, &t)| p == t as usize)
            .count();
        Ok(hits as f64 / ds.n_rows() as f64)
    }

    /// Serialize as versioned JSON.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": MODEL_SCHEMA_VERSION,
            "model": self,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<EnsembleModel> {
        let version = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Data("model file lacks a schema_version".into()))?;
        if version != MODEL_SCHEMA_VERSION as u64 {
            return Err(Error::Data(format!(
                "unsupported model schema version {version}, expected {MODEL_SCHEMA_VERSION}"
            )));
        }
        let model = value
            .get("model")
            .ok_or_else(|| Error::Data("model file lacks a 'model' object".into()))?;
        serde_json::from_value(model.clone())
            .map_err(|e| Error::Data(format!("cannot parse model: {e}")))
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn model_from_parts(
    ds: &Dataset,
    cfg: &EnsembleConfig,
    trees: Vec<TreeModel>,
    alphas: Vec<f64>,
    selected: Vec<SelectedFeature>,
) -> EnsembleModel {
    EnsembleModel {
        method: cfg.method,
        feature_names: ds.feature_names().to_vec(),
        kinds: ds.kinds().to_vec(),
        class_names: ds.class_names().to_vec(),
        target_name: ds.target_name().to_string(),
        trees,
        alphas,
        selected,
        config: cfg.clone(),
    }
}

fn record_new_features(
    fset: &FeatureSet,
    seen: &mut usize,
    tree_index: usize,
    out: &mut Vec<SelectedFeature>,
) {
    for &feature in &fset.order()[*seen..] {
        out.push(SelectedFeature {
            index: feature,
            first_tree: tree_index,
        });
    }
    *seen = fset.len();
}

/// Bagged regularized random trees: each tree grows on a bootstrap sample
/// and mutates the shared feature set.
pub fn build_rrf(ds: &Dataset, cfg: &EnsembleConfig) -> Result<EnsembleModel> {
    cfg.validate()?;
    ds.require_complete()?;
    let n = ds.n_rows();
    let mut fset = FeatureSet::new(ds.n_features());
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut selected = Vec::new();
    let mut seen = 0;
    for t in 0..cfg.n_trees {
        let mut rng = stream_rng(cfg.tree.seed, t as u64);
        let view = ds.bootstrap(&mut rng, n);
        let tree = grow_regularized(&view, &mut fset, &cfg.tree, &mut rng)?;
        record_new_features(&fset, &mut seen, t, &mut selected);
        trees.push(tree);
    }
    let alphas = vec![1.0; trees.len()];
    Ok(model_from_parts(ds, cfg, trees, alphas, selected))
}

/// One boosting reweight step: multiply misclassified weights by
/// `(1 - eps) / eps`, floor at `trim`, renormalize to sum 1.
pub(crate) fn reweight(
    weights: &[f64],
    misclassified: &[bool],
    eps_t: f64,
    trim: f64,
) -> Vec<f64> {
    let factor = (1.0 - eps_t) / eps_t;
    let mut next: Vec<f64> = weights
        .iter()
        .zip(misclassified)
        .map(|(&w, &miss)| if miss { w * factor } else { w }.max(trim))
        .collect();
    let total: f64 = next.iter().sum();
    for w in &mut next {
        *w /= total;
    }
    next
}

/// Boosted regularized random trees (AdaBoost.M1 with instance
/// re-weighting). Every round grows a regularized tree on the fully
/// weighted sample, sharing the feature set exactly as RRF does. Degenerate
/// rounds (weighted error 0 or at least one half) reset the weights to
/// uniform and continue with a vote weight of 1.
pub fn build_rboost(ds: &Dataset, cfg: &EnsembleConfig) -> Result<EnsembleModel> {
    cfg.validate()?;
    ds.require_complete()?;
    let n = ds.n_rows();
    let mut weights = vec![1.0 / n as f64; n];
    let mut fset = FeatureSet::new(ds.n_features());
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut alphas = Vec::with_capacity(cfg.n_trees);
    let mut selected = Vec::new();
    let mut seen = 0;
    for t in 0..cfg.n_trees {
        let mut rng = stream_rng(cfg.tree.seed, t as u64);
        // Trees see weights scaled to total N so min_node_size keeps its
        // meaning of an effective row count; gains are scale-invariant.
        let scaled: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
        let view = ds.weighted_view(scaled);
        let tree = grow_regularized(&view, &mut fset, &cfg.tree, &mut rng)?;
        record_new_features(&fset, &mut seen, t, &mut selected);

        let misclassified: Vec<bool> = (0..n)
            .map(|row| tree.route(ds, row) != ds.target()[row] as usize)
            .collect();
        let eps_t: f64 = weights
            .iter()
            .zip(&misclassified)
            .filter(|(_, &miss)| miss)
            .map(|(&w, _)| w)
            .sum();
        if eps_t <= 0.0 || eps_t >= 0.5 {
            weights = vec![1.0 / n as f64; n];
            alphas.push(1.0);
        } else {
            alphas.push(((1.0 - eps_t) / eps_t).ln());
            weights = reweight(&weights, &misclassified, eps_t, cfg.trim_epsilon);
        }
        trees.push(tree);
    }
    Ok(model_from_parts(ds, cfg, trees, alphas, selected))
}

/// Plain bagged random forest: no shared feature set, no penalty; used to
/// score feature subsets.
pub fn build_plain_rf(ds: &Dataset, cfg: &EnsembleConfig) -> Result<EnsembleModel> {
    cfg.validate()?;
    ds.require_complete()?;
    let n = ds.n_rows();
    let one_tree = |t: usize| -> Result<TreeModel> {
        let mut rng = stream_rng(cfg.tree.seed, t as u64);
        let view = ds.bootstrap(&mut rng, n);
        grow_plain(&view, &cfg.tree, &mut rng)
    };
    let trees: Vec<TreeModel> = if cfg.threads > 1 && cfg.n_trees > 1 {
        let workers = cfg.threads.min(cfg.n_trees);
        let chunk = cfg.n_trees.div_ceil(workers);
        let mut results: Vec<Vec<Result<TreeModel>>> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(cfg.n_trees);
                    scope.spawn(move || (lo..hi).map(one_tree).collect::<Vec<_>>())
                })
                .collect();
            for h in handles {
                results.push(h.join().expect("tree builder thread panicked"));
            }
        });
        results
            .into_iter()
            .flatten()
            .collect::<std::result::Result<Vec<_>, _>>()?
    } else {
        (0..cfg.n_trees).map(one_tree).collect::<Result<Vec<_>>>()?
    };

    // Usage record: union of split features in first-use order across trees.
    let mut fset = FeatureSet::new(ds.n_features());
    let mut selected = Vec::new();
    for (t, tree) in trees.iter().enumerate() {
        for node in &tree.nodes {
            if let crate::tree::TreeNode::Internal { split, .. } = node {
                if fset.insert(split.feature()) {
                    selected.push(SelectedFeature {
                        index: split.feature(),
                        first_tree: t,
                    });
                }
            }
        }
    }
    let alphas = vec![1.0; trees.len()];
    Ok(model_from_parts(ds, cfg, trees, alphas, selected))
}

/// Dispatch on the configured method.
pub fn build_ensemble(ds: &Dataset, cfg: &EnsembleConfig) -> Result<EnsembleModel> {
    match cfg.method {
        Method::Rrf => build_rrf(ds, cfg),
        Method::Rboost => build_rboost(ds, cfg),
        Method::PlainRf => build_plain_rf(ds, cfg),
    }
}

/// Alpha-weighted ensemble vote for every row.
pub fn predict_ensemble(model: &EnsembleModel, ds: &Dataset) -> Result<Vec<usize>> {
    model.predict(ds)
}
