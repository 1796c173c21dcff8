use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grammar line {line}: {message}")]
    GrammarSyntax { line: usize, message: String },

    #[error("grammar references undefined nonterminal <{0}>")]
    UndefinedNonTerminal(String),

    #[error("unknown nonterminal <{0}>")]
    UnknownNonTerminal(String),

    #[error("<{0}> has no non-recursive alternative to fall back on at its depth limit")]
    NoTerminalExpansion(String),

    #[error("derivation exceeded {0} expansions; check the depth limits")]
    DerivationTooLong(usize),

    #[error("malformed genotype: {0}")]
    MalformedGenotype(String),

    #[error("genotype needs repair ({0}); supply a random seed")]
    RepairNeeded(String),

    #[error("phenotype parse error at {position}: {message}")]
    Phenotype { position: usize, message: String },

    #[error("input has {got} values, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("class {0} has no instances")]
    EmptyClass(usize),

    #[error("dataset {path}: {message}")]
    Dataset { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

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
}
