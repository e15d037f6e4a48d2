//! A desk-scale laboratory for semi-supervised code-switched speech
//! recognition on synthetic multilingual corpora.
//!
//! The pipeline mirrors a five-language South African setting (English,
//! isiZulu, isiXhosa, Sesotho, Setswana): tagged corpora and statistics,
//! trigram language models with code-switch perplexity, a noisy-channel
//! recognizer standing in for acoustic models, parallel bilingual and
//! five-lingual automatic transcription, batch-wise self-training, text
//! augmentation, and code-switch-aware scoring.

pub mod augment;
pub mod corpus;
pub mod datagen;
pub mod edit;
pub mod error;
pub mod lm;
pub mod metrics;
pub mod recognizer;
pub mod seed;
pub mod semisup;

pub use error::{Error, Result};
