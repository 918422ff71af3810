use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::Result;
use crate::logic::formula::{Formula, Node};
use crate::logic::parser::parse_formula;
use crate::relational::{Model, Signature};

/// A canonical universal theory: a signature plus open axioms read under their
/// universal closure. Atoms on repeated entries are false in every model, so
/// the canonicity axioms never need to be listed.
#[derive(Debug, Clone, PartialEq)]
pub struct Theory {
    pub name: String,
    pub sig: Arc<Signature>,
    pub axioms: Vec<Formula>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub axiom: usize,
    /// 0-based vertices assigned to `x1, x2, ...`.
    pub assignment: Vec<usize>,
}

impl Theory {
    pub fn new(name: impl Into<String>, sig: Signature, axioms: Vec<Formula>) -> Self {
        Theory {
            name: name.into(),
            sig: Arc::new(sig),
            axioms,
        }
    }

    /// Theory with axioms given in the formula syntax; each axiom is read with
    /// as many variables as its highest `xI`.
    pub fn from_text(name: impl Into<String>, sig: Signature, axioms: &[&str]) -> Result<Self> {
        let axioms = axioms
            .iter()
            .map(|text| {
                let vars = max_var_in_text(text);
                parse_formula(text, &sig, vars)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Theory::new(name, sig, axioms))
    }

    pub fn pure(name: impl Into<String>, sig: Signature) -> Self {
        Theory::new(name, sig, Vec::new())
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    /// Theory on the disjoint union of the signatures with both axiom sets.
    pub fn union(&self, other: &Theory) -> Result<Theory> {
        let sig = self.sig.union(&other.sig)?;
        let offset = self.sig.len();
        let mut axioms = self.axioms.clone();
        axioms.extend(other.axioms.iter().map(|a| Formula {
            node: a.node.map_preds(&|p| p + offset),
            vars: a.vars,
        }));
        Ok(Theory::new(
            format!("{}+{}", self.name, other.name),
            sig,
            axioms,
        ))
    }

    /// Same theory with predicates renamed.
    pub fn renamed(&self, rename: impl FnMut(&str) -> String) -> Result<Theory> {
        let sig = self.sig.renamed(rename)?;
        Ok(Theory::new(self.name.clone(), sig, self.axioms.clone()))
    }

    /// All axiom failures, reported once per axiom and vertex set.
    pub fn check(&self, m: &Model) -> Vec<Violation> {
        let n = m.n();
        let mut out = Vec::new();
        for (ai, ax) in self.axioms.iter().enumerate() {
            let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
            let mut assign = vec![0usize; ax.vars];
            if n == 0 && ax.vars > 0 {
                continue;
            }
            loop {
                if !ax.eval(m, &assign) {
                    let mut support = assign.clone();
                    support.sort_unstable();
                    support.dedup();
                    if seen.insert(support) {
                        out.push(Violation {
                            axiom: ai,
                            assignment: assign.clone(),
                        });
                    }
                }
                if !advance(&mut assign, n) {
                    break;
                }
            }
        }
        out
    }

    pub fn models(&self, m: &Model) -> bool {
        self.check(m).is_empty()
    }

    pub fn graph() -> Theory {
        Theory::from_text(
            "graph",
            Signature::new([("E", 2)]).unwrap(),
            &["E(x1,x2) -> E(x2,x1)"],
        )
        .unwrap()
    }

    /// Symmetric `k`-uniform hypergraphs, symmetry stated for adjacent swaps.
    pub fn hypergraph(k: usize) -> Theory {
        let sig = Signature::new([("E", k)]).unwrap();
        let axioms = (0..k.saturating_sub(1))
            .map(|i| {
                let mut swapped: Vec<usize> = (0..k).collect();
                swapped.swap(i, i + 1);
                Formula {
                    node: Node::implies(
                        Node::atom(0, (0..k).collect::<Vec<_>>()),
                        Node::atom(0, swapped),
                    ),
                    vars: k,
                }
            })
            .collect();
        Theory::new(format!("hypergraph:k={k}"), sig, axioms)
    }

    pub fn linear_order() -> Theory {
        Theory::from_text(
            "linear-order",
            Signature::new([("Prec", 2)]).unwrap(),
            &[
                "x1!=x2 -> Prec(x1,x2) | Prec(x2,x1)",
                "Prec(x1,x2) -> !Prec(x2,x1)",
                "Prec(x1,x2) & Prec(x2,x3) -> Prec(x1,x3)",
            ],
        )
        .unwrap()
    }

    /// Vertex colorings with `c` colors `C1..Cc`, exactly one per vertex.
    pub fn coloring(c: usize) -> Theory {
        let sig = Signature::new((1..=c).map(|i| (format!("C{i}"), 1))).unwrap();
        let mut axioms = vec![Formula {
            node: Node::or((0..c).map(|p| Node::atom(p, [0]))),
            vars: 1,
        }];
        for a in 0..c {
            for b in a + 1..c {
                axioms.push(Formula {
                    node: Node::or([Node::atom(a, [0]).not(), Node::atom(b, [0]).not()]),
                    vars: 1,
                });
            }
        }
        Theory::new(format!("coloring:c={c}"), sig, axioms)
    }

    /// `k`-tournaments: on distinct entries an odd permutation flips membership.
    pub fn tournament(k: usize) -> Theory {
        let sig = Signature::new([("E", k)]).unwrap();
        let ids: Vec<usize> = (0..k).collect();
        let axioms = (0..k.saturating_sub(1))
            .map(|i| {
                let mut swapped = ids.clone();
                swapped.swap(i, i + 1);
                Formula {
                    node: Node::implies(
                        Node::distinct(&ids),
                        Node::iff(Node::atom(0, swapped), Node::atom(0, ids.clone()).not()),
                    ),
                    vars: k,
                }
            })
            .collect();
        Theory::new(format!("tournament:k={k}"), sig, axioms)
    }
}

fn advance(assign: &mut [usize], n: usize) -> bool {
    for slot in assign.iter_mut().rev() {
        *slot += 1;
        if *slot < n {
            return true;
        }
        *slot = 0;
    }
    false
}

fn max_var_in_text(text: &str) -> usize {
    let bytes = text.as_bytes();
    let mut best = 0;
    let mut i = 0;
    while i < bytes.len() {
        let boundary = i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_');
        if bytes[i] == b'x' && boundary {
            let mut j = i + 1;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            let ident_ends =
                j == bytes.len() || !(bytes[j].is_ascii_alphabetic() || bytes[j] == b'_');
            if j > i + 1 && ident_ends {
                best = best.max(text[i + 1..j].parse().unwrap_or(0));
            }
            i = j.max(i + 1);
        } else {
            i += 1;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arcs(sig: &Arc<Signature>, n: usize, name: &str, arcs: &[(usize, usize)]) -> Model {
        let tuples = arcs.iter().map(|&(a, b)| vec![a - 1, b - 1]).collect();
        Model::from_tuples(sig.clone(), n, &[(name, tuples)]).unwrap()
    }

    #[test]
    fn tournament_axioms() {
        let t = Theory::tournament(2);
        let c3 = arcs(&t.sig, 3, "E", &[(1, 2), (2, 3), (3, 1)]);
        assert!(t.check(&c3).is_empty());
        let both = arcs(&t.sig, 2, "E", &[(1, 2), (2, 1)]);
        let v = t.check(&both);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].axiom, 0);
        let missing = arcs(&t.sig, 2, "E", &[]);
        assert_eq!(t.check(&missing).len(), 1);
    }

    #[test]
    fn cyclic_order_breaks_transitivity() {
        let t = Theory::linear_order();
        let cyc = arcs(&t.sig, 3, "Prec", &[(1, 2), (2, 3), (3, 1)]);
        let v = t.check(&cyc);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].axiom, 2);
        let ok = arcs(&t.sig, 3, "Prec", &[(1, 2), (2, 3), (1, 3)]);
        assert!(t.models(&ok));
    }

    #[test]
    fn hypergraph_symmetry() {
        let t = Theory::hypergraph(3);
        let mut m = Model::empty(t.sig.clone(), 3);
        m.insert(0, &[0, 1, 2]).unwrap();
        assert!(!t.models(&m));
        for p in crate::relational::injective_tuples(3, 3) {
            m.insert(0, &p).unwrap();
        }
        assert!(t.models(&m));
    }

    #[test]
    fn coloring_exactly_one() {
        let t = Theory::coloring(2);
        let mut m = Model::empty(t.sig.clone(), 2);
        m.insert(0, &[0]).unwrap();
        assert!(!t.models(&m));
        m.insert(1, &[1]).unwrap();
        assert!(t.models(&m));
        m.insert(1, &[0]).unwrap();
        assert!(!t.models(&m));
    }

    #[test]
    fn counts_variables_in_text() {
        assert_eq!(max_var_in_text("Prec(x1,x2) & Prec(x2,x3)"), 3);
        assert_eq!(max_var_in_text("x12=x1"), 12);
        assert_eq!(max_var_in_text("xylo(x2)"), 2);
    }
}
