//! JSON form of a theon.
//!
//! ```json
//! {
//!   "name": "my-graphon",
//!   "theory": "graph",
//!   "dim": 1,
//!   "peons": { "E": { "node": "thresh", "set": [1, 2], "factor": 0, "op": "<", "c": 0.3 } },
//!   "rank_bound": 2
//! }
//! ```
//!
//! `theory` is either a catalog name or an inline
//! `{ "name", "signature": [{ "name", "arity" }], "axioms": ["..."] }`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::Theory;
use crate::relational::Signature;
use crate::theon::{theory_by_name, Component, Theon, TheonExpr};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheonFile {
    pub name: String,
    pub theory: TheorySpec,
    pub dim: usize,
    pub peons: BTreeMap<String, TheonExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_bound: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub independence: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TheorySpec {
    Named(String),
    Inline {
        #[serde(default)]
        name: String,
        signature: Signature,
        #[serde(default)]
        axioms: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub theory: TheorySpec,
    /// Predicate names in the coupled signature, in the component's order.
    pub predicates: Vec<String>,
    pub offset: usize,
    pub dim: usize,
}

impl TheorySpec {
    fn of(t: &Theory) -> TheorySpec {
        if let Ok(named) = theory_by_name(&t.name) {
            if named == *t {
                return TheorySpec::Named(t.name.clone());
            }
        }
        TheorySpec::Inline {
            name: t.name.clone(),
            signature: (*t.sig).clone(),
            axioms: t
                .axioms
                .iter()
                .map(|a| a.display(&t.sig).to_string())
                .collect(),
        }
    }

    fn build(&self) -> Result<Theory> {
        match self {
            TheorySpec::Named(name) => theory_by_name(name),
            TheorySpec::Inline {
                name,
                signature,
                axioms,
            } => {
                let texts: Vec<&str> = axioms.iter().map(String::as_str).collect();
                Theory::from_text(name.clone(), signature.clone(), &texts)
            }
        }
    }
}

impl TheonFile {
    pub fn from_theon(t: &Theon) -> TheonFile {
        let sig = &t.theory.sig;
        TheonFile {
            name: t.name.clone(),
            theory: TheorySpec::of(&t.theory),
            dim: t.dim,
            peons: (0..sig.len())
                .map(|p| (sig.name(p).to_string(), t.peons[p].clone()))
                .collect(),
            rank_bound: t.rank_bound,
            independence: t.independence,
            components: t
                .components
                .iter()
                .map(|c| ComponentSpec {
                    theory: TheorySpec::of(&c.theory),
                    predicates: c.preds.iter().map(|&p| sig.name(p).to_string()).collect(),
                    offset: c.offset,
                    dim: c.dim,
                })
                .collect(),
        }
    }

    pub fn build(&self) -> Result<Theon> {
        let theory = self.theory.build()?;
        let sig = theory.sig.clone();
        for name in self.peons.keys() {
            sig.lookup(name)?;
        }
        let peons = (0..sig.len())
            .map(|p| {
                self.peons.get(sig.name(p)).cloned().ok_or_else(|| {
                    Error::InvalidTheon(format!("no expression for predicate `{}`", sig.name(p)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut t = Theon::new(self.name.clone(), theory, self.dim, peons)?;
        t.rank_bound = self.rank_bound;
        t.independence = self.independence;
        for c in &self.components {
            let theory = c.theory.build()?;
            if theory.sig.len() != c.predicates.len() {
                return Err(Error::InvalidTheon(
                    "component predicate list does not match its theory".into(),
                ));
            }
            let preds = c
                .predicates
                .iter()
                .map(|n| sig.lookup(n))
                .collect::<Result<Vec<_>>>()?;
            if c.offset + c.dim > self.dim {
                return Err(Error::InvalidTheon(
                    "component reads factors outside the ground space".into(),
                ));
            }
            t.components.push(Component {
                theory,
                preds,
                offset: c.offset,
                dim: c.dim,
            });
        }
        Ok(t)
    }
}

pub fn theon_to_json(t: &Theon) -> serde_json::Value {
    serde_json::to_value(TheonFile::from_theon(t)).expect("plain data")
}

pub fn theon_from_json(v: &serde_json::Value) -> Result<Theon> {
    let f: TheonFile =
        serde_json::from_value(v.clone()).map_err(|e| Error::InvalidTheon(e.to_string()))?;
    f.build()
}

/// Reads a theon file from disk.
pub fn load_theon(path: impl AsRef<Path>) -> Result<Theon> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidTheon(format!("{}: {e}", path.display())))?;
    theon_from_json(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theon::{independent_coupling, theon_by_name, Renaming};

    #[test]
    fn round_trips() {
        let g = theon_by_name("skew-graphon:p=0.3").unwrap();
        let o = theon_by_name("linear-order").unwrap();
        let c = independent_coupling(&[&g, &o], Renaming::Keep).unwrap();
        for t in [
            g,
            c,
            theon_by_name("tournament-np-order:k=2,p=0.3").unwrap(),
            theon_by_name("qr-colored-hypergraphon:c=2,k=3").unwrap(),
            theon_by_name("dev-not-uinduce:k=3,p=0.5").unwrap(),
        ] {
            let j = theon_to_json(&t);
            assert_eq!(theon_from_json(&j).unwrap(), t, "{j}");
        }
    }

    #[test]
    fn reads_documented_example() {
        let j = serde_json::json!({
            "name": "my-graphon",
            "theory": "graph",
            "dim": 1,
            "peons": { "E": { "node": "thresh", "set": [1, 2], "factor": 0, "op": "<", "c": 0.3 } },
            "rank_bound": 2
        });
        let t = theon_from_json(&j).unwrap();
        assert_eq!(
            t,
            theon_by_name("qr-graphon:p=0.3")
                .unwrap()
                .with_name_for_test("my-graphon")
        );
    }

    #[test]
    fn rejects_missing_or_extra_peons() {
        let j = serde_json::json!({ "name": "x", "theory": "graph", "dim": 1, "peons": {} });
        assert!(theon_from_json(&j).is_err());
        let j = serde_json::json!({
            "name": "x", "theory": "graph", "dim": 1,
            "peons": { "E": { "node": "const", "value": true }, "F": { "node": "const", "value": true } }
        });
        assert!(theon_from_json(&j).is_err());
    }

    impl Theon {
        fn with_name_for_test(mut self, name: &str) -> Theon {
            self.name = name.into();
            self.independence = None;
            self
        }
    }
}
