//! Feature selection with regularized tree ensembles.
//!
//! The crate grows decision-tree ensembles that share one feature set `F`
//! across all trees and penalize splits on features outside it, so the set
//! that accumulates over a build is a compact, non-redundant selection:
//! bagged regularized trees ([`ensemble::build_rrf`]) and boosted ones
//! ([`ensemble::build_rboost`]). Around that core sit the
//! information-theoretic kernels ([`info`]), categorical-only reference
//! oracles for conditional mutual information, greedy max-dependency
//! selection and brute-force Markov blankets ([`mdscheme`]), and a repeated
//! stratified cross-validation harness that scores selections with a plain
//! random forest ([`eval`]).

pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod info;
pub mod mdscheme;
pub mod rng;
pub mod tree;

pub use dataset::{ColumnSelector, Dataset, FeatureKind, RowView};
pub use ensemble::{
    build_ensemble, build_plain_rf, build_rboost, build_rrf, predict_ensemble, EnsembleConfig,
    EnsembleModel, Method,
};
pub use error::{Error, Result};
pub use eval::{accuracy_curve, cross_validate, CVPlan, EvalReport};
pub use info::{ClassHistogram, SplitCandidate};
pub use tree::{
    gain_regularized, grow_plain, grow_regularized, select_best, split_search, FeatureSet,
    RegConfig, TreeModel,
};
