use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::navsim::MAX_LANDMARKS;

pub type TokenId = u32;

pub const PAD: TokenId = 0;
pub const BOS: TokenId = 1;
pub const EOS: TokenId = 2;
pub const UNK: TokenId = 3;

const RESERVED: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

pub const LANDMARK_NAMES: [&str; MAX_LANDMARKS] = [
    "kitchen", "bedroom", "bathroom", "stairs", "sofa", "table", "door", "window", "hallway",
    "closet", "fireplace", "piano", "plant", "mirror", "painting", "lamp",
];

const TEMPLATE_WORDS: [&str; 32] = [
    "turn", "left", "right", "around", "straight", "go", "bear", "continue", "forward", "double",
    "back", "head", "keep", "spin", "walk", "past", "the", "to", "pass", "by", "move", "into",
    "enter", "wait", "at", "stop", "near", "and", "then", ",", ".", "toward",
];

/// Closed-world token inventory. Ids are dense from 0 and the four reserved
/// tokens come first.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, TokenId>,
}

impl Vocabulary {
    pub fn standard() -> Self {
        let words = RESERVED
            .iter()
            .chain(TEMPLATE_WORDS.iter())
            .chain(LANDMARK_NAMES.iter())
            .map(|w| w.to_string())
            .collect();
        Self::from_tokens(words).expect("built-in vocabulary is well formed")
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 4 || tokens[..4] != RESERVED {
            return Err(Error::Format("vocabulary must start with the reserved tokens".into()));
        }
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.contains(char::is_whitespace) {
                return Err(Error::Format(format!("invalid token {t:?}")));
            }
            if index.insert(t.clone(), i as TokenId).is_some() {
                return Err(Error::Format(format!("duplicate token {t:?}")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, word: &str) -> TokenId {
        self.index.get(word).copied().unwrap_or(UNK)
    }

    pub fn word(&self, id: TokenId) -> Result<&str> {
        self.tokens
            .get(id as usize)
            .map(String::as_str)
            .ok_or_else(|| Error::Lookup(format!("token id {id} outside vocabulary of {}", self.len())))
    }

    pub fn landmark(&self, landmark: usize) -> TokenId {
        self.id(LANDMARK_NAMES[landmark])
    }

    /// Whitespace-separated words to ids; unknown words map to UNK.
    pub fn tokenize(&self, text: &str) -> Vec<TokenId> {
        text.split_whitespace().map(|w| self.id(w)).collect()
    }

    pub fn detokenize(&self, ids: &[TokenId]) -> Result<String> {
        let words: Result<Vec<&str>> = ids.iter().map(|&i| self.word(i)).collect();
        Ok(words?.join(" "))
    }
}
