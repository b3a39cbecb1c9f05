use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate comment id {0:?}")]
    DuplicateId(String),

    #[error("unknown comment id {0:?}")]
    UnknownId(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("corpus too small: {0}")]
    CorpusTooSmall(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("need at least {k} distinct vectors, found {distinct}")]
    TooFewDistinct { k: usize, distinct: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no anchor token for {0} is in the vocabulary")]
    AnchorsOutOfVocabulary(&'static str),

    #[error("clusters not linguistically separated: en and h_e anchors map to cluster {0}")]
    ClustersNotSeparated(usize),

    #[error("cluster model has no language mapping; run anchoring first")]
    NotAnchored,

    #[error("training set contains a single class")]
    SingleClass,

    #[error("labeling for {labeling:?} does not match comment {comment:?} ({labels} labels, {tokens} tokens)")]
    LabelingMismatch {
        labeling: String,
        comment: String,
        labels: usize,
        tokens: usize,
    },

    #[error("stage {0} produced no comments")]
    EmptyStage(&'static str),

    #[error("no pool document has a resolvable embedding")]
    EmptyIndex,

    #[error("cannot draw {requested} items from a pool of {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("unlabeled batch members: {0:?}")]
    Unlabeled(Vec<String>),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("items have unequal rater totals (item {item}: {found}, expected {expected})")]
    UnequalRaters {
        item: usize,
        expected: u32,
        found: u32,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
