//! Finite label words.
//!
//! A word `(i_{k-1}, ..., i_0)` is stored most-recent-first: index 0 holds the
//! last symbol applied and the final element is the first symbol applied. Text
//! rendering goes the other way (oldest first, space separated), so `"2 1"`
//! means "apply 2, then 1".

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LabelWord {
    symbols: Vec<u32>,
}

impl LabelWord {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a word from symbols listed most recent first.
    pub fn from_recent_first(symbols: Vec<u32>) -> Self {
        Self { symbols }
    }

    /// Builds a word from symbols listed in time order.
    pub fn from_oldest_first(mut symbols: Vec<u32>) -> Self {
        symbols.reverse();
        Self { symbols }
    }

    pub fn single(symbol: u32) -> Self {
        Self {
            symbols: vec![symbol],
        }
    }

    /// Parses the oldest-first text form, e.g. `"2 1"` or `"2,1"`. An empty
    /// string is the empty word.
    pub fn parse_oldest_first(text: &str) -> Result<Self> {
        let symbols = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<u32>()
                    .map_err(|_| Error::InvalidArgument(format!("bad word symbol `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_oldest_first(symbols))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Symbols, most recent first.
    pub fn recent_first(&self) -> &[u32] {
        &self.symbols
    }

    /// Symbols in the order they are applied.
    pub fn oldest_first(&self) -> impl DoubleEndedIterator<Item = u32> + '_ {
        self.symbols.iter().rev().copied()
    }

    /// Most recently applied symbol, `None` for the empty word.
    pub fn final_label(&self) -> Option<u32> {
        self.symbols.first().copied()
    }

    /// The word with its most recent symbol removed.
    pub fn predecessor(&self) -> Self {
        Self {
            symbols: self.symbols.iter().skip(1).copied().collect(),
        }
    }

    /// `self` followed in time by `later`.
    pub fn then(&self, later: &LabelWord) -> Self {
        let mut symbols = later.symbols.clone();
        symbols.extend_from_slice(&self.symbols);
        Self { symbols }
    }

    /// Appends one symbol as the new most recent one.
    pub fn push_recent(&self, symbol: u32) -> Self {
        let mut symbols = Vec::with_capacity(self.symbols.len() + 1);
        symbols.push(symbol);
        symbols.extend_from_slice(&self.symbols);
        Self { symbols }
    }

    /// All words of length `len` over `1..=alphabet`, ordered lexicographically
    /// by their oldest-first reading.
    pub fn all(alphabet: u32, len: usize) -> Vec<LabelWord> {
        let mut out = vec![LabelWord::empty()];
        for _ in 0..len {
            let mut next = Vec::with_capacity(out.len() * alphabet as usize);
            for w in &out {
                for s in 1..=alphabet {
                    next.push(w.push_recent(s));
                }
            }
            out = next;
        }
        out
    }
}

impl fmt::Display for LabelWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.oldest_first().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Serialized as the oldest-first text form.
impl Serialize for LabelWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LabelWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        LabelWord::parse_oldest_first(&text).map_err(serde::de::Error::custom)
    }
}
