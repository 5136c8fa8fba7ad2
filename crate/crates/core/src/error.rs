use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: surface {surface:?} contains a reserved separator")]
    ReservedSeparator { line: usize, surface: String },

    #[error("sequence {index} has no tokens")]
    EmptySequence { index: usize },

    #[error("unknown trie node {0}")]
    UnknownNode(u32),

    #[error("training corpus is empty")]
    EmptyCorpus,

    #[error("corpus statistics are missing or empty")]
    MissingStats,

    #[error("labeled data contains a single class")]
    SingleClassCorpus,

    #[error("line {line}: score {score} outside [0, 1]")]
    ScoreOutOfRange { line: usize, score: f64 },

    #[error("no score for pair ({query:?}, {keyword:?})")]
    MissingScore { query: String, keyword: String },

    #[error("reference dataset is empty")]
    EmptyReference,

    #[error("candidate sentence is empty")]
    EmptyCandidate,

    #[error("scored data contains a single class")]
    SingleClass,

    #[error("number of searches must be positive")]
    ZeroSearches,

    #[error("revenue {revenue} reported with zero clicks")]
    RevenueWithoutClicks { revenue: f64 },

    #[error("sample size {requested} exceeds population {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
