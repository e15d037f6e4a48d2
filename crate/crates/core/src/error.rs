use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown language tag `{0}`")]
    UnknownLanguage(String),

    #[error("invalid token `{0}`")]
    InvalidToken(String),

    #[error("duplicate utterance id `{0}`")]
    DuplicateUtterance(String),

    #[error("utterance `{0}` is untranscribed")]
    Untranscribed(String),

    #[error("invalid utterance `{id}`: {message}")]
    InvalidUtterance { id: String, message: String },

    #[error("out-of-vocabulary token `{token}` in sentence {sentence}")]
    OutOfVocabulary { token: String, sentence: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("vocabulary mismatch between language models")]
    VocabularyMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ARPA format error in section {section}: {message}")]
    Arpa { section: String, message: String },

    #[error("invalid system configuration: {0}")]
    Config(String),

    #[error("missing batch `{0}`")]
    MissingBatch(String),

    #[error("token `{token}` has language {lang} outside the recognizer language set")]
    LanguageOutsideSet { token: String, lang: char },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
