use thiserror::Error;

/// Errors produced by dataset loading, model training, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: malformed row: {message}")]
    ParseRow {
        path: String,
        line: usize,
        message: String,
    },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("item '{item}' is mapped to two suppliers: '{first}' and '{second}'")]
    SupplierConflict {
        item: String,
        first: String,
        second: String,
    },

    #[error(
        "training diverged (non-finite loss at epoch {epoch}) with factors={factors}, \
         learning_rate={learning_rate}, regularization={regularization}"
    )]
    TrainingDiverged {
        epoch: usize,
        factors: usize,
        learning_rate: f64,
        regularization: f64,
    },

    #[error("cannot form {requested} groups from {available} members")]
    NotEnoughMembers { requested: usize, available: usize },

    #[error("group {group} has no members")]
    EmptyGroup { group: usize },

    #[error("no users with test ratings to evaluate")]
    NoEvaluableUsers,

    #[error("distributions have mismatched support: {left} vs {right} entries")]
    MismatchedSupport { left: usize, right: usize },

    #[error("item '{0}' has no supplier group")]
    UnmappedItem(String),

    #[error("cannot build a distribution from an empty {0}")]
    EmptyDistribution(&'static str),

    #[error("unknown user '{0}' in {1}")]
    UnknownUser(String, String),

    #[error("unknown item '{0}' in {1}")]
    UnknownItem(String, String),

    #[error("unknown algorithm '{0}'")]
    UnknownAlgorithm(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported model file version {found} (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("failed to read {path}: {source}")]
    ReadFile {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    WriteFile {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {what}: {message}")]
    Json { what: String, message: String },
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
