use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::sequence::{ItemId, SymbolTable};

/// A string pattern: a nonempty sequence of single items.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern(Vec<ItemId>);

impl Pattern {
    pub fn new(items: Vec<ItemId>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::param("pattern must contain at least one item"));
        }
        Ok(Pattern(items))
    }

    pub fn single(item: ItemId) -> Self {
        Pattern(vec![item])
    }

    /// Looks up each token in `alphabet`; `None` if any token is unknown.
    pub fn from_tokens(alphabet: &SymbolTable, tokens: &[&str]) -> Option<Self> {
        let items = tokens
            .iter()
            .map(|t| alphabet.id(t))
            .collect::<Option<Vec<_>>>()?;
        Pattern::new(items).ok()
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> ItemId {
        *self.0.last().expect("nonempty")
    }

    /// The pattern with its last item removed, or `None` for length 1.
    pub fn prefix(&self) -> Option<Pattern> {
        (self.0.len() > 1).then(|| Pattern(self.0[..self.0.len() - 1].to_vec()))
    }

    /// Appends `item` on the right.
    pub fn extend(&self, item: ItemId) -> Pattern {
        let mut items = Vec::with_capacity(self.0.len() + 1);
        items.extend_from_slice(&self.0);
        items.push(item);
        Pattern(items)
    }

    pub fn tokens<'a>(&self, alphabet: &'a SymbolTable) -> Vec<&'a str> {
        self.0
            .iter()
            .map(|&i| alphabet.token(i).unwrap_or("?"))
            .collect()
    }

    /// Result ordering: shorter patterns first, then lexicographic by id.
    pub fn canonical_cmp(&self, other: &Pattern) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

/// True iff `t` is a strict prefix of `s`.
pub fn is_prefix(t: &Pattern, s: &Pattern) -> bool {
    t.len() < s.len() && s.items().starts_with(t.items())
}
