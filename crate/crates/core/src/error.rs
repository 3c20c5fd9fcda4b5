use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {cause}", path.display())]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown PHI type `{0}`")]
    UnknownPhiType(String),

    #[error("invalid token text {0:?}")]
    InvalidToken(String),

    #[error("invalid BIO sequence at token {position}: {description}")]
    InvalidBio { position: usize, description: String },

    #[error("label type `{0}` is already coarse")]
    AlreadyCoarse(String),

    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("empty lexicon for {0}")]
    EmptyLexicon(String),

    #[error("invalid lexicon entry {0:?}")]
    InvalidEntry(String),

    #[error("generator for {phi_type} exhausted: produced {produced} of {requested} distinct values")]
    Exhausted {
        phi_type: String,
        requested: usize,
        produced: usize,
    },

    #[error("bad pattern `{pattern}`: {message}")]
    Pattern { pattern: String, message: String },

    #[error("cannot resolve lexicon for `{0}`")]
    Unresolved(String),

    #[error("{file}:{line}: {message}")]
    SynonymParse { file: String, line: usize, message: String },

    #[error("{0} pool is empty")]
    EmptyPool(&'static str),

    #[error("cannot train on an empty corpus")]
    EmptyCorpus,

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("unsupported model version `{0}`")]
    ModelVersion(String),

    #[error("prediction shape mismatch at document `{document}`, sentence {sentence}: {message}")]
    ShapeMismatch {
        document: String,
        sentence: usize,
        message: String,
    },

    #[error("synthetic generation: {0}")]
    Synth(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, cause: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause,
        }
    }
}
