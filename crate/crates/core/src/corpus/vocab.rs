use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Sentence;
use crate::{Error, Result};

/// Integer id of a token inside a [`Vocabulary`].
pub type TokenId = u32;

pub const BOS: TokenId = 0;
pub const EOS: TokenId = 1;
pub const UNK: TokenId = 2;

pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";
pub const UNK_TOKEN: &str = "<unk>";

const RESERVED: [&str; 3] = [BOS_TOKEN, EOS_TOKEN, UNK_TOKEN];

/// Dense, 0-based token table. Ids 0, 1 and 2 are always BOS, EOS and UNK.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    entries: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut vocab = Vocabulary {
            entries: Vec::new(),
            index: HashMap::new(),
        };
        for token in RESERVED {
            vocab.push(token.to_string());
        }
        vocab
    }

    /// Builds a vocabulary from ordinary (non-reserved) tokens, in order.
    /// Duplicates are ignored.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocabulary::new();
        for token in tokens {
            vocab.insert(token.as_ref());
        }
        vocab
    }

    fn push(&mut self, token: String) -> TokenId {
        let id = self.entries.len() as TokenId;
        self.index.insert(token.clone(), id);
        self.entries.push(token);
        id
    }

    pub fn is_reserved(token: &str) -> bool {
        RESERVED.contains(&token)
    }

    /// Returns the id of `token`, adding it if absent. Reserved spellings map to UNK.
    pub fn insert(&mut self, token: &str) -> TokenId {
        if Self::is_reserved(token) {
            return UNK;
        }
        match self.index.get(token) {
            Some(&id) => id,
            None => self.push(token.to_string()),
        }
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    /// Frozen lookup: unknown tokens (and reserved spellings in raw text) become UNK.
    pub fn lookup(&self, token: &str) -> TokenId {
        if Self::is_reserved(token) {
            return UNK;
        }
        self.id(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.entries.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains_id(&self, id: TokenId) -> bool {
        (id as usize) < self.entries.len()
    }

    /// Ids of every ordinary (emittable) token.
    pub fn ordinary_ids(&self) -> impl Iterator<Item = TokenId> {
        RESERVED.len() as TokenId..self.entries.len() as TokenId
    }

    /// Number of ordinary tokens.
    pub fn ordinary_len(&self) -> usize {
        self.entries.len() - RESERVED.len()
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    /// Tokenizes in building mode: unseen tokens extend the vocabulary.
    pub fn tokenize_extend(&mut self, line: &str, line_number: usize) -> Result<Sentence> {
        let ids: Vec<TokenId> = line.split_whitespace().map(|t| self.insert(t)).collect();
        Sentence::new(ids).map_err(|_| Error::EmptyLine { line: line_number })
    }

    /// Tokenizes in frozen mode: unseen tokens map to UNK.
    pub fn tokenize_frozen(&self, line: &str, line_number: usize) -> Result<Sentence> {
        let ids: Vec<TokenId> = line.split_whitespace().map(|t| self.lookup(t)).collect();
        Sentence::new(ids).map_err(|_| Error::EmptyLine { line: line_number })
    }

    pub fn decode<'a>(&'a self, ids: &'a [TokenId]) -> impl Iterator<Item = &'a str> + 'a {
        ids.iter().map(|&id| self.token(id).unwrap_or(UNK_TOKEN))
    }

    pub fn detokenize(&self, ids: &[TokenId]) -> String {
        self.decode(ids).collect::<Vec<_>>().join(" ")
    }

    /// Maps ids of `other` onto this vocabulary by spelling.
    pub fn translate_ids(&self, other: &Vocabulary, ids: &[TokenId]) -> Result<Vec<TokenId>> {
        if self == other {
            return Ok(ids.to_vec());
        }
        ids.iter()
            .map(|&id| {
                let token = other
                    .token(id)
                    .ok_or_else(|| Error::OutOfVocabulary { token: id.to_string() })?;
                self.id(token).ok_or_else(|| Error::OutOfVocabulary {
                    token: token.to_string(),
                })
            })
            .collect()
    }

    /// Like [`Vocabulary::translate_ids`], but spellings missing here map to UNK.
    pub fn translate_ids_lossy(&self, other: &Vocabulary, ids: &[TokenId]) -> Vec<TokenId> {
        if self == other {
            return ids.to_vec();
        }
        ids.iter()
            .map(|&id| other.token(id).and_then(|t| self.id(t)).unwrap_or(UNK))
            .collect()
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = String;

    fn try_from(entries: Vec<String>) -> std::result::Result<Self, Self::Error> {
        if entries.len() < RESERVED.len() || entries[..RESERVED.len()] != RESERVED {
            return Err(format!("vocabulary must start with the reserved symbols {RESERVED:?}"));
        }
        let mut vocab = Vocabulary::new();
        for token in &entries[RESERVED.len()..] {
            if Self::is_reserved(token) || vocab.index.contains_key(token) {
                return Err(format!("duplicate or reserved vocabulary entry {token:?}"));
            }
            vocab.push(token.clone());
        }
        Ok(vocab)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(vocab: Vocabulary) -> Self {
        vocab.entries
    }
}
