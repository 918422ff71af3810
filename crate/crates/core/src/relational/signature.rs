use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
}

/// A finite relational language: an ordered list of predicate symbols with arities.
///
/// Predicates are addressed by their position; every model and formula over the
/// signature uses the same indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Predicate>", into = "Vec<Predicate>")]
pub struct Signature {
    preds: Vec<Predicate>,
}

impl Signature {
    pub fn new<S: Into<String>>(preds: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let preds: Vec<Predicate> = preds
            .into_iter()
            .map(|(name, arity)| Predicate {
                name: name.into(),
                arity,
            })
            .collect();
        Self::from_predicates(preds)
    }

    pub fn from_predicates(preds: Vec<Predicate>) -> Result<Self> {
        for (i, p) in preds.iter().enumerate() {
            if !is_identifier(&p.name) {
                return Err(Error::InvalidSignature(format!(
                    "`{}` is not a valid predicate name",
                    p.name
                )));
            }
            if p.arity == 0 {
                return Err(Error::InvalidSignature(format!(
                    "predicate `{}` has arity 0",
                    p.name
                )));
            }
            if preds[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::SignatureClash(p.name.clone()));
            }
        }
        Ok(Signature { preds })
    }

    pub fn empty() -> Self {
        Signature { preds: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.preds
    }

    pub fn predicate(&self, index: usize) -> &Predicate {
        &self.preds[index]
    }

    pub fn arity(&self, index: usize) -> usize {
        self.preds[index].arity
    }

    pub fn name(&self, index: usize) -> &str {
        &self.preds[index].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.preds.iter().position(|p| p.name == name)
    }

    pub fn lookup(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownPredicate(name.to_string()))
    }

    pub fn max_arity(&self) -> usize {
        self.preds.iter().map(|p| p.arity).max().unwrap_or(0)
    }

    /// Disjoint union; fails on a repeated name.
    pub fn union(&self, other: &Signature) -> Result<Signature> {
        let mut preds = self.preds.clone();
        preds.extend(other.preds.iter().cloned());
        Self::from_predicates(preds)
    }

    /// Copy of the signature with every name passed through `rename`.
    pub fn renamed(&self, mut rename: impl FnMut(&str) -> String) -> Result<Signature> {
        Self::from_predicates(
            self.preds
                .iter()
                .map(|p| Predicate {
                    name: rename(&p.name),
                    arity: p.arity,
                })
                .collect(),
        )
    }
}

impl TryFrom<Vec<Predicate>> for Signature {
    type Error = Error;

    fn try_from(preds: Vec<Predicate>) -> Result<Self> {
        Self::from_predicates(preds)
    }
}

impl From<Signature> for Vec<Predicate> {
    fn from(sig: Signature) -> Self {
        sig.preds
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .preds
            .iter()
            .map(|p| format!("{}/{}", p.name, p.arity))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
