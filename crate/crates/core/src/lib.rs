pub mod augment;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod lexicon;
pub mod rng;
pub mod synonyms;
pub mod synthgen;
pub mod tagger;

pub use error::{Error, Result};
