use std::path::PathBuf;

use crate::features::FeatureId;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("unknown condition {query:?}")]
    UnknownCondition { query: String, suggestions: Vec<String> },

    #[error("unknown trial {0}")]
    UnknownTrial(String),

    #[error("trial {nct_id} is not linked to {cui}")]
    TrialNotLinked { nct_id: String, cui: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate test: only {levels} non-empty rating level(s)")]
    DegenerateTest { levels: usize },

    #[error("incomplete rating data; missing or under-rated: {}", join_ids(.missing))]
    IncompleteFeatures { missing: Vec<FeatureId> },

    #[error("incomplete rating data: {0}")]
    IncompleteData(String),

    #[error("{path}: row {row}: {message}")]
    Schema { path: PathBuf, row: u64, message: String },

    #[error("template catalog: {0}")]
    Catalog(String),

    #[error("weights document: {0}")]
    Document(String),
}

fn join_ids(ids: &[FeatureId]) -> String {
    ids.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
