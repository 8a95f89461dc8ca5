//! Regularized random tree induction.
//!
//! A regularized tree penalizes the gain of features that have not been used
//! by any previous split with a coefficient `lambda` in [0, 1], so a new
//! feature only enters the growing feature set `F` when it beats every
//! already-selected feature even after the penalty. With `lambda = 1` and
//! plain candidate sampling the same machinery grows an ordinary random
//! tree.
//!
//! At each node the search evaluates the regularized gain of every feature
//! already in `F` plus at most `K` not-yet-selected features drawn in random
//! permutation order. Candidates are scanned newcomers first (permutation
//! order), then `F` members (insertion order), tracking the best with a
//! strict comparison against an initial best of zero — so on exact ties the
//! earlier candidate wins, and an `F` member always beats a penalized
//! newcomer with the same raw gain when `lambda < 1`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureKind, RowView};
use crate::error::{Error, Result};
use crate::info::{
    best_numeric_threshold, categorical_split_gain, ClassHistogram, SplitCandidate, GAIN_EPSILON,
};

/// Tree-level configuration shared by regularized and plain random trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegConfig {
    /// Penalty coefficient for features outside `F`; in [0, 1].
    pub lambda: f64,
    /// Candidates sampled per node; `None` means `ceil(sqrt(M))`.
    pub n_candidates: Option<usize>,
    /// A node whose weight total falls below this becomes a leaf.
    pub min_node_size: f64,
    /// Maximum depth; `None` means unlimited.
    pub max_depth: Option<usize>,
    /// Gains at or below this are treated as zero when deciding leaves.
    pub gain_epsilon: f64,
    pub seed: u64,
}

impl Default for RegConfig {
    fn default() -> Self {
        RegConfig {
            lambda: 0.5,
            n_candidates: None,
            min_node_size: 2.0,
            max_depth: None,
            gain_epsilon: GAIN_EPSILON,
            seed: 0,
        }
    }
}

impl RegConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if self.n_candidates == Some(0) {
            return Err(Error::Config("n_candidates must be at least 1".into()));
        }
        if self.min_node_size < 0.0 || !self.gain_epsilon.is_finite() || self.gain_epsilon < 0.0 {
            return Err(Error::Config("negative node size or gain epsilon".into()));
        }
        Ok(())
    }

    /// Effective candidate count for `m` features.
    pub fn candidates_for(&self, m: usize) -> usize {
        self.n_candidates
            .unwrap_or_else(|| (m as f64).sqrt().ceil() as usize)
            .max(1)
    }
}

/// Ordered set of feature indices used by previous splits; shared across an
/// ensemble build and mutated in place as trees grow.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    order: Vec<usize>,
    mask: Vec<bool>,
}

impl FeatureSet {
    pub fn new(n_features: usize) -> FeatureSet {
        FeatureSet {
            order: Vec::new(),
            mask: vec![false; n_features],
        }
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.mask[feature]
    }

    /// Append a feature; returns false when it was already present.
    pub fn insert(&mut self, feature: usize) -> bool {
        if self.mask[feature] {
            return false;
        }
        self.mask[feature] = true;
        self.order.push(feature);
        true
    }

    /// Selected features in first-use order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.mask.len()
    }
}

/// Regularized gain: the raw gain for members of `F`, the penalized gain
/// `lambda * gain` for everything else.
pub fn gain_regularized(gain: f64, is_in_set: bool, lambda: f64) -> f64 {
    debug_assert!(gain >= 0.0);
    if is_in_set {
        gain
    } else {
        lambda * gain
    }
}

/// One node of a grown tree. Nodes live in a flat arena; children are
/// indices into it and the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        /// Weighted class distribution of the training rows at the leaf.
        distribution: Vec<f64>,
        /// Argmax of the distribution, lowest class index on ties.
        predicted: usize,
    },
    Internal {
        split: SplitCandidate,
        /// Training weight that flowed into each child; prediction falls
        /// through to the heaviest child on unseen categorical levels.
        child_weights: Vec<f64>,
        children: Vec<usize>,
    },
}

/// A grown tree plus the training schema snapshot needed to apply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
    pub kinds: Vec<FeatureKind>,
    pub seed: u64,
}

impl TreeModel {
    /// Distinct feature indices used by internal splits, ascending.
    pub fn split_features(&self) -> Vec<usize> {
        let mut feats: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Internal { split, .. } => Some(split.feature()),
                TreeNode::Leaf { .. } => None,
            })
            .collect();
        feats.sort_unstable();
        feats.dedup();
        feats
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], idx: usize) -> usize {
            match &nodes[idx] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { children, .. } => {
                    1 + children.iter().map(|&c| walk(nodes, c)).max().unwrap_or(0)
                }
            }
        }
        walk(&self.nodes, 0)
    }

    /// The training schema must embed into the input schema: same feature
    /// count and kinds, and training levels a prefix of the input levels
    /// (inputs may know extra levels; they route like unseen levels).
    pub fn check_schema(&self, ds: &Dataset) -> Result<()> {
        if ds.n_features() != self.kinds.len() {
            return Err(Error::Schema(format!(
                "input has {} feature columns, model was trained on {}",
                ds.n_features(),
                self.kinds.len()
            )));
        }
        for (j, (trained, input)) in self.kinds.iter().zip(ds.kinds()).enumerate() {
            match (trained, input) {
                (FeatureKind::Numeric, FeatureKind::Numeric) => {}
                (
                    FeatureKind::Categorical { levels: tl },
                    FeatureKind::Categorical { levels: il },
                ) => {
                    if il.len() < tl.len() || il[..tl.len()] != tl[..] {
                        return Err(Error::Schema(format!(
                            "categorical levels of column {} ('{}') do not extend the \
                             training levels",
                            j,
                            ds.feature_names()[j]
                        )));
                    }
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "column {} ('{}') changed kind since training",
                        j,
                        ds.feature_names()[j]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Predict a class index for every row.
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<usize>> {
        self.check_schema(ds)?;
        ds.require_complete()?;
        Ok((0..ds.n_rows()).map(|r| self.route(ds, r)).collect())
    }

    pub(crate) fn route(&self, ds: &Dataset, row: usize) -> usize {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { predicted, .. } => return *predicted,
                TreeNode::Internal {
                    split,
                    child_weights,
                    children,
                } => {
                    let child = match split {
                        SplitCandidate::Numeric { feature, threshold } => {
                            if ds.num(*feature, row) <= *threshold {
                                0
                            } else {
                                1
                            }
                        }
                        SplitCandidate::Categorical { feature, levels } => {
                            let level = ds.cat(*feature, row);
                            match levels.iter().position(|&l| l == level) {
                                Some(pos) => pos,
                                // Level unseen at this node: fall through to
                                // the child with the greatest training weight.
                                None => heaviest(child_weights),
                            }
                        }
                    };
                    idx = children[child];
                }
            }
        }
    }
}

fn heaviest(weights: &[f64]) -> usize {
    let mut best = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > weights[best] {
            best = i;
        }
    }
    best
}

/// How a node's candidate features are drawn.
enum SplitPolicy<'a> {
    /// All of `F` plus at most K newcomers in random permutation order,
    /// penalized by lambda.
    Regularized(&'a mut FeatureSet),
    /// K features drawn from all M, raw gain.
    Plain,
}

/// Pick the best candidate from `(candidate, raw_gain, penalized)` tuples
/// scanned in evaluation order. Strict comparison against an initial best
/// of zero, so the earliest candidate wins exact ties; `None` when the best
/// regularized gain does not clear `gain_epsilon`.
pub fn select_best(
    scored: impl Iterator<Item = (SplitCandidate, f64, bool)>,
    lambda: f64,
    gain_epsilon: f64,
) -> Option<(SplitCandidate, f64)> {
    let mut best: Option<SplitCandidate> = None;
    let mut best_gain = 0.0;
    for (candidate, raw_gain, penalized) in scored {
        let g = gain_regularized(raw_gain, !penalized, lambda);
        if g > best_gain {
            best_gain = g;
            best = Some(candidate);
        }
    }
    if best_gain <= gain_epsilon {
        None
    } else {
        best.map(|c| (c, best_gain))
    }
}

/// Gain of the best split of `feature` at this node, or `None` when the
/// feature admits no split (constant, or a single categorical level).
fn feature_candidate(
    view: &RowView<'_>,
    feature: usize,
    parent: &ClassHistogram,
) -> Result<Option<(SplitCandidate, f64)>> {
    if view.dataset().kinds()[feature].is_numeric() {
        let (threshold, gain) = best_numeric_threshold(view, feature, parent)?;
        Ok(Some((SplitCandidate::Numeric { feature, threshold }, gain)))
    } else {
        categorical_split_gain(view, feature, parent)
    }
}

/// Draw up to `k` features not in `fset` in random permutation order.
fn sample_newcomers<R: Rng>(fset: &FeatureSet, k: usize, rng: &mut R) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..fset.n_features())
        .filter(|&f| !fset.contains(f))
        .collect();
    pool.shuffle(rng);
    pool.truncate(k);
    pool
}

/// Search the best regularized split at one node.
///
/// Evaluates the regularized gain of every feature in `fset` and of at most
/// `K` randomly drawn features outside it; returns `None` when no candidate
/// clears the gain epsilon (the node becomes a leaf).
pub fn split_search<R: Rng>(
    view: &RowView<'_>,
    fset: &FeatureSet,
    cfg: &RegConfig,
    rng: &mut R,
) -> Result<Option<(SplitCandidate, f64)>> {
    let parent = view.class_histogram();
    if parent.total() <= 0.0 || parent.is_pure() {
        return Ok(None);
    }
    let k = cfg.candidates_for(fset.n_features());
    let newcomers = sample_newcomers(fset, k, rng);
    let mut scored: Vec<(SplitCandidate, f64, bool)> = Vec::new();
    for &f in &newcomers {
        if let Some((cand, gain)) = feature_candidate(view, f, &parent)? {
            scored.push((cand, gain, true));
        }
    }
    for &f in fset.order() {
        if let Some((cand, gain)) = feature_candidate(view, f, &parent)? {
            scored.push((cand, gain, false));
        }
    }
    Ok(select_best(scored.into_iter(), cfg.lambda, cfg.gain_epsilon))
}

/// Plain random-tree search: `K` candidates drawn from all features, raw
/// gain, same leaf rule.
fn split_search_plain<R: Rng>(
    view: &RowView<'_>,
    n_features: usize,
    cfg: &RegConfig,
    rng: &mut R,
) -> Result<Option<(SplitCandidate, f64)>> {
    let parent = view.class_histogram();
    if parent.total() <= 0.0 || parent.is_pure() {
        return Ok(None);
    }
    let mut pool: Vec<usize> = (0..n_features).collect();
    pool.shuffle(rng);
    pool.truncate(cfg.candidates_for(n_features));
    let mut scored: Vec<(SplitCandidate, f64, bool)> = Vec::new();
    for &f in &pool {
        if let Some((cand, gain)) = feature_candidate(view, f, &parent)? {
            scored.push((cand, gain, false));
        }
    }
    Ok(select_best(scored.into_iter(), 1.0, cfg.gain_epsilon))
}

struct Grower<'a, 'r, R: Rng> {
    cfg: &'a RegConfig,
    rng: &'r mut R,
    policy: SplitPolicy<'a>,
    nodes: Vec<TreeNode>,
}

impl<R: Rng> Grower<'_, '_, R> {
    fn leaf(&mut self, hist: &ClassHistogram) -> usize {
        self.nodes.push(TreeNode::Leaf {
            distribution: hist.counts().to_vec(),
            predicted: hist.argmax_class(),
        });
        self.nodes.len() - 1
    }

    fn grow(&mut self, view: &RowView<'_>, depth: usize) -> Result<usize> {
        let hist = view.class_histogram();
        let depth_capped = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if view.total_weight() < self.cfg.min_node_size || hist.is_pure() || depth_capped {
            return Ok(self.leaf(&hist));
        }
        let found = match &mut self.policy {
            SplitPolicy::Regularized(fset) => split_search(view, fset, self.cfg, self.rng)?,
            SplitPolicy::Plain => {
                split_search_plain(view, view.dataset().n_features(), self.cfg, self.rng)?
            }
        };
        let Some((split, _)) = found else {
            return Ok(self.leaf(&hist));
        };
        // The winning feature joins F before recursion, so sibling subtrees
        // already see it as penalty-free.
        if let SplitPolicy::Regularized(fset) = &mut self.policy {
            fset.insert(split.feature());
        }

        let parts: Vec<RowView<'_>> = match &split {
            SplitCandidate::Numeric { feature, threshold } => {
                let (l, r) = view.partition_numeric(*feature, *threshold);
                vec![l, r]
            }
            SplitCandidate::Categorical { feature, .. } => view
                .partition_categorical(*feature)
                .into_iter()
                .map(|(_, v)| v)
                .collect(),
        };
        let idx = self.nodes.len();
        // Reserve the parent slot so node ids are preorder.
        self.nodes.push(TreeNode::Leaf {
            distribution: Vec::new(),
            predicted: 0,
        });
        let mut children = Vec::with_capacity(parts.len());
        let mut child_weights = Vec::with_capacity(parts.len());
        for part in &parts {
            child_weights.push(part.total_weight());
            let child = if part.total_weight() > 0.0 {
                self.grow(part, depth + 1)?
            } else {
                self.leaf(&hist)
            };
            children.push(child);
        }
        self.nodes[idx] = TreeNode::Internal {
            split,
            child_weights,
            children,
        };
        Ok(idx)
    }
}

fn grow_with_policy<R: Rng>(
    view: &RowView<'_>,
    cfg: &RegConfig,
    rng: &mut R,
    policy: SplitPolicy<'_>,
) -> Result<TreeModel> {
    if view.is_empty() {
        return Err(Error::Data("cannot grow a tree on an empty view".into()));
    }
    cfg.validate()?;
    view.dataset().require_complete()?;
    let mut grower = Grower {
        cfg,
        rng,
        policy,
        nodes: Vec::new(),
    };
    grower.grow(view, 0)?;
    Ok(TreeModel {
        nodes: grower.nodes,
        kinds: view.dataset().kinds().to_vec(),
        seed: cfg.seed,
    })
}

/// Grow one regularized random tree, appending every newly used feature to
/// `fset` (first split wins) as induction proceeds.
pub fn grow_regularized<R: Rng>(
    view: &RowView<'_>,
    fset: &mut FeatureSet,
    cfg: &RegConfig,
    rng: &mut R,
) -> Result<TreeModel> {
    grow_with_policy(view, cfg, rng, SplitPolicy::Regularized(fset))
}

/// Grow one plain (unregularized) random tree: `K` random candidates per
/// node scored by raw information gain.
pub fn grow_plain<R: Rng>(view: &RowView<'_>, cfg: &RegConfig, rng: &mut R) -> Result<TreeModel> {
    grow_with_policy(view, cfg, rng, SplitPolicy::Plain)
}
