//! Templated multi-instruction synthesis.
//!
//! Every trajectory gets M instructions written with different paraphrase
//! banks; each one independently elides some hops, so no single instruction
//! is guaranteed to pin down the route while their union usually does.

mod dataset;
mod describe;
mod vocab;

pub use dataset::{generate_dataset, Dataset, DatasetConfig, InstructionSet, Split};
pub use describe::{describe_trajectory, turn_between, Description, Turn, MAX_INSTRUCTION_TOKENS, N_STYLES};
pub use vocab::{TokenId, Vocabulary, BOS, EOS, LANDMARK_NAMES, PAD, UNK};
