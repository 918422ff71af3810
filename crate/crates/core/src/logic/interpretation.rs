use std::sync::Arc;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::logic::formula::{Formula, Node};
use crate::logic::parser::parse_formula;
use crate::logic::theory::{Theory, Violation};
use crate::relational::{injective_tuples, Model, Signature};

/// An open interpretation: every predicate of the source signature is defined
/// by a quantifier-free formula over the target signature. It turns models of
/// the target into models of the source on the same vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpretation {
    pub name: String,
    pub source: Arc<Signature>,
    pub target: Arc<Signature>,
    pub defs: Vec<Formula>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpretationCheck {
    pub max_size: usize,
    pub models_checked: usize,
    /// First target model whose image breaks the source theory.
    pub counterexample: Option<(Model, Vec<Violation>)>,
}

impl InterpretationCheck {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

impl Interpretation {
    pub fn new(
        name: impl Into<String>,
        source: Arc<Signature>,
        target: Arc<Signature>,
        defs: Vec<Formula>,
    ) -> Result<Self> {
        if defs.len() != source.len() {
            return Err(Error::InvalidSignature(format!(
                "interpretation defines {} predicates but the source has {}",
                defs.len(),
                source.len()
            )));
        }
        for (p, f) in defs.iter().enumerate() {
            if f.vars != source.arity(p) {
                return Err(Error::ArityMismatch {
                    name: source.name(p).to_string(),
                    expected: source.arity(p),
                    got: f.vars,
                });
            }
        }
        Ok(Interpretation {
            name: name.into(),
            source,
            target,
            defs,
        })
    }

    /// Parses the line format `P(x1,...,xk) := <formula over target>`. Blank
    /// lines and lines starting with `#` are skipped.
    pub fn parse(name: impl Into<String>, text: &str, target: Arc<Signature>) -> Result<Self> {
        let mut preds = Vec::new();
        let mut bodies = Vec::new();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let start = offset;
            offset += line.len();
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let lead = line.len() - line.trim_start().len();
            let Some(split) = trimmed.find(":=") else {
                return Err(Error::Syntax {
                    pos: start + lead,
                    msg: "expected `P(x1,...,xk) := formula`".into(),
                });
            };
            let head = trimmed[..split].trim();
            let (pname, arity) = parse_head(head).ok_or_else(|| Error::Syntax {
                pos: start + lead,
                msg: format!("malformed definition head `{head}`"),
            })?;
            let body_off = start + lead + split + 2;
            preds.push((pname, arity));
            bodies.push((body_off, trimmed[split + 2..].to_string()));
        }
        let source = Arc::new(Signature::new(preds)?);
        let defs = bodies
            .iter()
            .enumerate()
            .map(|(p, (off, body))| {
                parse_formula(body, &target, source.arity(p)).map_err(|e| match e {
                    Error::Syntax { pos, msg } => Error::Syntax {
                        pos: pos + off,
                        msg,
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Interpretation::new(name, source, target, defs)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, f) in self.defs.iter().enumerate() {
            let args: Vec<String> = (1..=self.source.arity(p))
                .map(|i| format!("x{i}"))
                .collect();
            out.push_str(&format!(
                "{}({}) := {}\n",
                self.source.name(p),
                args.join(","),
                f.display(&self.target)
            ));
        }
        out
    }

    pub fn apply(&self, m: &Model) -> Result<Model> {
        if **m.signature_arc() != *self.target {
            return Err(Error::InvalidModel(format!(
                "interpretation `{}` expects a model over {}, got {}",
                self.name,
                self.target,
                m.signature()
            )));
        }
        let mut out = Model::empty(self.source.clone(), m.n());
        for (p, def) in self.defs.iter().enumerate() {
            for t in injective_tuples(m.n(), self.source.arity(p)) {
                if def.eval(m, &t) {
                    out.insert(p, &t)?;
                }
            }
        }
        Ok(out)
    }

    pub fn identity(t: &Theory) -> Interpretation {
        let defs = (0..t.sig.len())
            .map(|p| Formula {
                node: Node::atom(p, (0..t.sig.arity(p)).collect::<Vec<_>>()),
                vars: t.sig.arity(p),
            })
            .collect();
        Interpretation {
            name: format!("id[{}]", t.name),
            source: t.sig.clone(),
            target: t.sig.clone(),
            defs,
        }
    }

    /// Forgets everything of `whole` except the predicates named in `part`.
    pub fn structure_erasing(part: &Signature, whole: Arc<Signature>) -> Result<Interpretation> {
        let defs = part
            .predicates()
            .iter()
            .map(|p| {
                let q = whole.lookup(&p.name)?;
                if whole.arity(q) != p.arity {
                    return Err(Error::ArityMismatch {
                        name: p.name.clone(),
                        expected: whole.arity(q),
                        got: p.arity,
                    });
                }
                Ok(Formula {
                    node: Node::atom(q, (0..p.arity).collect::<Vec<_>>()),
                    vars: p.arity,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Interpretation {
            name: "erase".into(),
            source: Arc::new(part.clone()),
            target: whole,
            defs,
        })
    }

    /// `self ∪ other`: acts as `self` on its predicates and as `other` on its own.
    pub fn union(&self, other: &Interpretation) -> Result<Interpretation> {
        let source = Arc::new(self.source.union(&other.source)?);
        let target = Arc::new(self.target.union(&other.target)?);
        let offset = self.target.len();
        let mut defs = self.defs.clone();
        defs.extend(other.defs.iter().map(|f| Formula {
            node: f.node.map_preds(&|q| q + offset),
            vars: f.vars,
        }));
        Interpretation::new(
            format!("{}|{}", self.name, other.name),
            source,
            target,
            defs,
        )
    }

    /// `self ∘ inner`: first `inner` (middle ← target), then `self`
    /// (source ← middle), by substituting formulas into formulas.
    pub fn compose(&self, inner: &Interpretation) -> Result<Interpretation> {
        if *self.target != *inner.source {
            return Err(Error::InvalidSignature(format!(
                "cannot compose: {} is not {}",
                self.target, inner.source
            )));
        }
        let defs = self
            .defs
            .iter()
            .map(|f| Formula {
                node: f.node.substitute_atoms(&|q, args| {
                    // A repeated argument can never hold in a model.
                    if !args.iter().all_unique() {
                        return Node::False;
                    }
                    inner.defs[q].node.map_vars(&|v| args[v])
                }),
                vars: f.vars,
            })
            .collect();
        Interpretation::new(
            format!("{}.{}", self.name, inner.name),
            self.source.clone(),
            inner.target.clone(),
            defs,
        )
    }

    /// Bounded check that every model of `dst` with at most `nmax` vertices is
    /// sent to a model of `src`. Passing says nothing about larger models.
    pub fn check(&self, src: &Theory, dst: &Theory, nmax: usize) -> Result<InterpretationCheck> {
        self.check_with_budget(src, dst, nmax, crate::relational::DEFAULT_BUDGET)
    }

    pub fn check_with_budget(
        &self,
        src: &Theory,
        dst: &Theory,
        nmax: usize,
        budget: u64,
    ) -> Result<InterpretationCheck> {
        let mut checked = 0;
        for n in 1..=nmax {
            for class in crate::relational::enumerate_models_with_budget(dst, n, budget)? {
                let m = class.representative.with_signature(self.target.clone())?;
                let image = self.apply(&m)?;
                let image = image.with_signature(src.sig.clone())?;
                checked += 1;
                let violations = src.check(&image);
                if !violations.is_empty() {
                    return Ok(InterpretationCheck {
                        max_size: nmax,
                        models_checked: checked,
                        counterexample: Some((m, violations)),
                    });
                }
            }
        }
        Ok(InterpretationCheck {
            max_size: nmax,
            models_checked: checked,
            counterexample: None,
        })
    }
}

fn parse_head(head: &str) -> Option<(String, usize)> {
    let open = head.find('(')?;
    let name = head[..open].trim();
    let inner = head[open + 1..].strip_suffix(')')?;
    let args: Vec<&str> = inner.split(',').map(str::trim).collect();
    for (i, a) in args.iter().enumerate() {
        if *a != format!("x{}", i + 1) {
            return None;
        }
    }
    Some((name.to_string(), args.len()))
}

/// Parity of a permutation given as a list of images.
pub fn is_even(perm: &[usize]) -> bool {
    let mut inv = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inv += 1;
            }
        }
    }
    inv % 2 == 0
}

/// `E(x1..x_{l+2}) := OR over l-sets I of (P(x_I, x_j1) <-> P(x_I, x_j2))`,
/// from `(l+1)`-tournaments to `(l+2)`-hypergraphs. An `(l+2)`-set is an edge
/// exactly when it does not induce the alternating tournament.
pub fn alternation(ell: usize) -> Interpretation {
    let src = Theory::hypergraph(ell + 2);
    let dst = Theory::tournament(ell + 1);
    let m = ell + 2;
    let disjuncts = (0..m).combinations(ell).map(|set| {
        let rest: Vec<usize> = (0..m).filter(|v| !set.contains(v)).collect();
        let mut a = set.clone();
        a.push(rest[0]);
        let mut b = set.clone();
        b.push(rest[1]);
        Node::iff(Node::atom(0, a), Node::atom(0, b))
    });
    let def = Formula {
        node: Node::or(disjuncts),
        vars: m,
    };
    Interpretation {
        name: format!("alternation:ell={ell}"),
        source: src.sig,
        target: dst.sig,
        defs: vec![def],
    }
}

/// Negation of [`alternation`]: `(l+2)`-edges are the copies of the
/// alternating `(l+1)`-tournament.
pub fn alternating_copies(ell: usize) -> Interpretation {
    let mut i = alternation(ell);
    let vars = ell + 2;
    i.defs[0] = Formula {
        node: Node::and([
            Node::distinct(&(0..vars).collect::<Vec<_>>()),
            i.defs[0].node.clone().not(),
        ]),
        vars,
    };
    i.name = format!("alternating-copies:ell={ell}");
    i
}

/// `k`-tournament from a `k`-hypergraph and a linear order: a tuple is an arc
/// iff it is an edge listed in even position relative to the order, or a
/// non-edge listed in odd position.
pub fn arc_orientation(k: usize) -> Interpretation {
    let src = Theory::tournament(k);
    let dst = Theory::hypergraph(k)
        .union(&Theory::linear_order())
        .unwrap();
    let prec = dst.sig.lookup("Prec").unwrap();
    let ids: Vec<usize> = (0..k).collect();
    let even = (0..k).permutations(k).filter(|s| is_even(s)).map(|s| {
        let mut chain = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                chain.push(Node::atom(prec, [s[i], s[j]]));
            }
        }
        Node::and(chain)
    });
    let def = Formula {
        node: Node::and([
            Node::distinct(&ids),
            Node::iff(Node::atom(0, ids.clone()), Node::or(even)),
        ]),
        vars: k,
    };
    Interpretation {
        name: format!("arc-orientation:k={k}"),
        source: src.sig,
        target: dst.sig,
        defs: vec![def],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digraph(n: usize, arcs: &[(usize, usize)]) -> Model {
        let sig = Theory::tournament(2).sig;
        let tuples = arcs.iter().map(|&(a, b)| vec![a - 1, b - 1]).collect();
        Model::from_tuples(sig, n, &[("E", tuples)]).unwrap()
    }

    #[test]
    fn alternation_on_cycle_and_transitive() {
        let i = alternation(1);
        let c3 = digraph(3, &[(1, 2), (2, 3), (3, 1)]);
        assert!(!i.defs[0].eval(&c3, &[0, 1, 2]));
        assert_eq!(i.apply(&c3).unwrap().relation_size(0), 0);
        let tr = digraph(3, &[(1, 2), (2, 3), (1, 3)]);
        assert_eq!(i.apply(&tr).unwrap().relation_size(0), 6);
    }

    #[test]
    fn copies_is_complement_of_alternation() {
        let c3 = digraph(3, &[(1, 2), (2, 3), (3, 1)]);
        assert_eq!(
            alternating_copies(1).apply(&c3).unwrap().relation_size(0),
            6
        );
    }

    #[test]
    fn builtins_respect_theories() {
        let r = alternation(1)
            .check(&Theory::hypergraph(3), &Theory::tournament(2), 5)
            .unwrap();
        assert!(r.passed(), "{r:?}");
        let r = alternating_copies(1)
            .check(&Theory::hypergraph(3), &Theory::tournament(2), 5)
            .unwrap();
        assert!(r.passed());
        let dst = Theory::hypergraph(2)
            .union(&Theory::linear_order())
            .unwrap();
        let r = arc_orientation(2)
            .check(&Theory::tournament(2), &dst, 4)
            .unwrap();
        assert!(r.passed());
        assert!(r.models_checked > 0);
    }

    #[test]
    fn identity_passes_and_tautology_fails() {
        let t = Theory::tournament(2);
        assert!(Interpretation::identity(&t)
            .check(&t, &t, 4)
            .unwrap()
            .passed());
        let bad = Interpretation::parse("bad", "E(x1,x2) := x1=x1", t.sig.clone()).unwrap();
        let r = bad.check(&t, &t, 3).unwrap();
        let (m, _) = r.counterexample.expect("tautology orients both ways");
        assert_eq!(m.n(), 2);
    }

    #[test]
    fn parse_and_print() {
        let t = Theory::graph();
        let text = "E(x1,x2) := !E(x1,x2) & !(x1=x2)\n";
        let i = Interpretation::parse("complement", text, t.sig.clone()).unwrap();
        let again = Interpretation::parse("complement", &i.to_text(), t.sig.clone()).unwrap();
        assert_eq!(i, again);
        let err = Interpretation::parse("x", "E(x1,x2) := E(x1,", t.sig.clone()).unwrap_err();
        assert!(matches!(err, Error::Syntax { pos: 17, .. }), "{err:?}");
    }

    #[test]
    fn union_and_compose_erasers() {
        let g = Theory::graph();
        let o = Theory::linear_order();
        let go = g.union(&o).unwrap();
        let id = Interpretation::identity(&g)
            .union(&Interpretation::identity(&o))
            .unwrap();
        assert_eq!(id.defs, Interpretation::identity(&go).defs);
        let e1 = Interpretation::structure_erasing(
            &go.sig,
            Arc::new(go.union(&Theory::coloring(2)).unwrap().sig.as_ref().clone()),
        )
        .unwrap();
        let e2 = Interpretation::structure_erasing(&g.sig, go.sig.clone()).unwrap();
        let both = e2.compose(&e1).unwrap();
        let direct = Interpretation::structure_erasing(&g.sig, e1.target.clone()).unwrap();
        assert_eq!(both.defs, direct.defs);
        assert!(Interpretation::identity(&g)
            .union(&Interpretation::identity(&g))
            .is_err());
    }
}
