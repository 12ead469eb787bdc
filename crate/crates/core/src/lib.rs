//! Concept-induction labelling of hidden neurons.
//!
//! - [`hierarchy`]: class hierarchy, ancestor index, annotation mapping, entailment
//! - [`induction`]: coverage scoring, beam-search induction and its exhaustive oracle
//! - [`activations`]: activation matrices, example selection, confirmation, holdout splits
//! - [`stats`]: Mann-Whitney U with tie correction
//! - [`pipeline`]: the file-based hypothesize / confirm / evaluate / oracle stages

pub mod activations;
pub mod error;
pub mod hierarchy;
pub mod induction;
pub mod pipeline;
pub mod stats;

pub use activations::{
    confirm, profile_neuron, split_holdout, ActivationMatrix, ConfirmationResult, NeuronProfile,
    NeuronStatus, SelectionPolicy,
};
pub use error::{Error, Result};
pub use hierarchy::{
    entails, levenshtein, map_annotations, AnnotationStore, ClassHierarchy, ClassId,
    HierarchyBuilder,
};
pub use induction::{
    coverage, induce, induce_exhaustive, BeamWidth, ConceptExpression, ExampleSplit,
    InductionConfig, ScoredHypothesis,
};
pub use stats::{mann_whitney, normal_cdf, MannWhitneyResult};
