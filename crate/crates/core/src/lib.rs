//! Detection of machine-generated text from dependency relation labels.
//!
//! The pipeline reduces each parsed document to its per-sentence sequences of
//! dependency relation labels ([`conllu`]), weights label n-grams with TF-IDF
//! ([`featurize`]), and classifies the resulting sparse vectors with
//! gradient-boosted trees ([`gbdt`]) whose split gains double as a feature
//! importance ledger. [`evalrep`] scores predictions and renders reports;
//! [`pipeline`] ties the steps to dataset manifests, experiment protocols and
//! model bundles.

pub mod conllu;
pub mod evalrep;
pub mod featurize;
pub mod gbdt;
pub mod pipeline;
pub mod sparse;

pub use conllu::{ConlluSentence, DepDocument};
pub use featurize::{FeatureSpace, NgramRange};
pub use gbdt::{GbdtModel, Hyperparameters};
pub use sparse::{SparseMatrix, SparseVector};
