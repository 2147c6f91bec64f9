use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("line {line}: unparseable date `{value}`")]
    Date { line: usize, value: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
}

impl ParseError {
    pub(crate) fn io(line: usize, source: std::io::Error) -> Self {
        Self::Io { line, source }
    }

    pub(crate) fn record(line: usize, message: impl Into<String>) -> Self {
        Self::Record {
            line,
            message: message.into(),
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            Self::Io { line, .. }
            | Self::Record { line, .. }
            | Self::Date { line, .. }
            | Self::ColumnCount { line, .. } => Some(*line),
        }
    }
}

#[derive(Debug, Error)]
pub enum EntityError {
    /// Network or authentication failure; callers may fall back to the offline linker.
    #[error("entity service transport error: {0}")]
    Transport(String),
    #[error("entity service returned a malformed response: {0}")]
    Protocol(String),
    #[error("entity cache: {0}")]
    Cache(#[from] std::io::Error),
    #[error("gazetteer line {line}: {message}")]
    Gazetteer { line: usize, message: String },
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("corpus statistics are empty (no documents)")]
    EmptyCorpus,
    #[error("feature set `{0}` needs entity annotations but none were supplied")]
    MissingEntities(&'static str),
    #[error("no corpus statistics for date {0}")]
    MissingPartition(chrono::NaiveDate),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature `{name}` is not finite ({value})")]
    NonFinite { name: String, value: f64 },
    #[error("pair ({query_id}, {candidate_id}) has no relevance label")]
    Unlabeled {
        query_id: String,
        candidate_id: String,
    },
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training data has no crucial pairs (every group has uniform grades)")]
    NoCrucialPairs,
    #[error("training data is empty")]
    EmptyDataset,
    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model schema `{found}` is not supported (expected `{expected}`)")]
    Version { found: String, expected: &'static str },
    #[error("model file is corrupt: {0}")]
    Corrupt(String),
    #[error("feature vector does not match the model's features: {0}")]
    FeatureMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("no judgments")]
    Empty,
    #[error("judgment file line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("dataset spans {found} distinct days, need at least {needed}")]
    InsufficientDates { needed: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 paired samples, got {0}")]
    TooFewSamples(usize),
}

/// Umbrella error for callers that drive the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Entity(#[from] EntityError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
