use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CLS_ID, PAD_ID, UNK_ID};

pub const SPECIALS: [&str; 4] = ["[CLS]", "[PAD]", "[UNK]", "[SEP]"];

/// A lowercased word piece with its byte span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Splits into runs of alphanumerics and single punctuation characters;
/// whitespace separates and is dropped.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut run: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            run.get_or_insert(i);
            continue;
        }
        if let Some(s) = run.take() {
            out.push(Token { text: text[s..i].to_lowercase(), start: s, end: i });
        }
        if !c.is_whitespace() {
            let end = i + c.len_utf8();
            out.push(Token { text: text[i..end].to_lowercase(), start: i, end });
        }
    }
    if let Some(s) = run {
        out.push(Token { text: text[s..].to_lowercase(), start: s, end: text.len() });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocab { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Vocab {
    /// Checks that the special tokens sit at their fixed ids.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Vocab> {
        if tokens.len() < SPECIALS.len() || tokens[..SPECIALS.len()] != SPECIALS {
            return Err(Error::Format("vocabulary must start with [CLS] [PAD] [UNK] [SEP]".into()));
        }
        let v = Vocab::from(tokens);
        if v.index.len() != v.tokens.len() {
            return Err(Error::Format("vocabulary has duplicate tokens".into()));
        }
        Ok(v)
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

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }
}

/// Vocabulary of every token seen at least `min_count` times, ordered by
/// descending count then lexicographically, after the four specials.
pub fn build_vocab<S: AsRef<str>>(texts: &[S], min_count: usize) -> Result<Vocab> {
    if texts.is_empty() {
        return Err(Error::Input("cannot build a vocabulary from an empty corpus".into()));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in texts {
        for tok in tokenize(t.as_ref()) {
            *counts.entry(tok.text).or_default() += 1;
        }
    }
    let mut kept: Vec<(String, usize)> =
        counts.into_iter().filter(|(t, c)| *c >= min_count.max(1) && !SPECIALS.contains(&t.as_str())).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let tokens = SPECIALS.iter().map(|s| s.to_string()).chain(kept.into_iter().map(|(t, _)| t)).collect();
    Vocab::from_tokens(tokens)
}

/// `[CLS]` followed by the token ids, truncated to `max_len` in total.
pub fn encode_tokens(text: &str, vocab: &Vocab, max_len: usize) -> Vec<u32> {
    std::iter::once(CLS_ID)
        .chain(tokenize(text).iter().map(|t| vocab.id(&t.text)))
        .take(max_len.max(1))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub ids: Vec<u32>,
    pub mask: Vec<u8>,
}

/// Fixed-length encoding: `[CLS]`, tokens, then PAD up to `max_len`, with
/// the matching attention mask.
pub fn encode_segment_text(text: &str, vocab: &Vocab, max_len: usize) -> Result<Encoded> {
    if max_len < 2 {
        return Err(Error::Config(format!("max_len {max_len} leaves no room for tokens")));
    }
    let mut ids = encode_tokens(text, vocab, max_len);
    let mut mask = vec![1u8; ids.len()];
    ids.resize(max_len, PAD_ID);
    mask.resize(max_len, 0);
    Ok(Encoded { ids, mask })
}
