//! Closed-vocabulary n-gram language models: Witten-Bell training, linear
//! interpolation with development-set weight search, ARPA I/O, and
//! perplexity split into code-switch (CPP) and monolingual (MPP) parts.

mod arpa;
mod interpolate;
mod model;
mod perplexity;
mod vocab;

pub use arpa::{load_arpa, parse_arpa, save_arpa, write_arpa};
pub use interpolate::{
    grid_weight, interpolate, interpolate_tuned, optimize_weight, WeightChoice, WEIGHT_GRID_STEPS,
};
pub use model::{train_ngram, BoundaryMode, NGramLM, WITTEN_BELL};
pub use perplexity::{
    decomposed_perplexity, perplexity, sentence_log_probs, CategoryCounts, PerplexityReport,
};
pub use vocab::{Vocabulary, Word, BOS, EOS};

pub(crate) use model::{Backoff, Model};
