//! Explainable ranking of clinical trials for a queried condition.
//!
//! Trials linked to the condition are scored by a weighted sum of eleven
//! explainability features and each result carries up to three template
//! sentences saying why it was returned. Feature weights come from Likert
//! ratings through χ² significance tiers.
//!
//! The numeric code is generic over [`Scalar`]; the aliases at the crate root
//! fix it to `f64`, which is what the CLI and service use.

pub mod corpus;
pub mod engine;
pub mod error;
pub mod explain;
pub mod features;
pub mod num;
pub mod scoring;
pub mod stats;
pub mod text;
pub mod weights;

pub use corpus::{terms_of, Concept, ConceptGraph, LoadReport, TrialCorpus, TrialRecord};
pub use engine::{Index, DEFAULT_LIMIT};
pub use error::{Error, Result};
pub use explain::{ExplainConfig, TemplateCatalog};
pub use features::{Dependency, FeatureId, FeatureKind};
pub use num::Scalar;
pub use scoring::EngineVariant;
pub use text::normalize_term;
pub use weights::{FormulationPrefs, RatingRecord, Tier};

pub type FeatureVector = features::FeatureVector<f64>;
pub type WeightTable = weights::WeightTable<f64>;
pub type WeightsDocument = weights::WeightsDocument<f64>;
pub type ScoredTrial = scoring::ScoredTrial<f64>;
pub type SearchOutcome = engine::SearchOutcome<f64>;
pub type ExplanationSentence = explain::ExplanationSentence<f64>;
pub type ChiSquare = stats::ChiSquare<f64>;

pub type FeatureVector32 = features::FeatureVector<f32>;
pub type WeightTable32 = weights::WeightTable<f32>;
pub type ScoredTrial32 = scoring::ScoredTrial<f32>;
