use std::fmt;

use crate::error::{Error, Result};
use crate::relational::{Model, Signature};

/// Quantifier-free formula over a signature. Variables are 0-based indices
/// (`x1` is index 0); predicates are indices into the signature.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    True,
    False,
    Atom { pred: usize, args: Vec<usize> },
    Eq(usize, usize),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
}

impl Node {
    pub fn atom(pred: usize, args: impl Into<Vec<usize>>) -> Node {
        Node::Atom {
            pred,
            args: args.into(),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Node {
        match self {
            Node::Not(inner) => *inner,
            Node::True => Node::False,
            Node::False => Node::True,
            other => Node::Not(Box::new(other)),
        }
    }

    pub fn and(parts: impl IntoIterator<Item = Node>) -> Node {
        let parts: Vec<Node> = parts.into_iter().collect();
        if parts.len() == 1 {
            return parts.into_iter().next().unwrap();
        }
        if parts.is_empty() {
            return Node::True;
        }
        Node::And(parts)
    }

    pub fn or(parts: impl IntoIterator<Item = Node>) -> Node {
        let parts: Vec<Node> = parts.into_iter().collect();
        if parts.len() == 1 {
            return parts.into_iter().next().unwrap();
        }
        if parts.is_empty() {
            return Node::False;
        }
        Node::Or(parts)
    }

    pub fn implies(a: Node, b: Node) -> Node {
        Node::Or(vec![a.not(), b])
    }

    pub fn iff(a: Node, b: Node) -> Node {
        Node::Or(vec![
            Node::And(vec![a.clone(), b.clone()]),
            Node::And(vec![a.not(), b.not()]),
        ])
    }

    /// Conjunction of `xi != xj` over all pairs of the given variables.
    pub fn distinct(vars: &[usize]) -> Node {
        let mut parts = Vec::new();
        for (i, &a) in vars.iter().enumerate() {
            for &b in &vars[i + 1..] {
                parts.push(Node::Eq(a, b).not());
            }
        }
        Node::and(parts)
    }

    /// Evaluates under `assign` (variable index -> vertex). Atoms with a
    /// repeated vertex are false because models never hold such tuples.
    pub fn eval(&self, m: &Model, assign: &[usize]) -> bool {
        match self {
            Node::True => true,
            Node::False => false,
            Node::Atom { pred, args } => {
                let mut buf = [0usize; 16];
                for (slot, &a) in buf.iter_mut().zip(args) {
                    *slot = assign[a];
                }
                m.contains(*pred, &buf[..args.len()])
            }
            Node::Eq(a, b) => assign[*a] == assign[*b],
            Node::Not(inner) => !inner.eval(m, assign),
            Node::And(parts) => parts.iter().all(|p| p.eval(m, assign)),
            Node::Or(parts) => parts.iter().any(|p| p.eval(m, assign)),
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        match self {
            Node::True | Node::False => None,
            Node::Atom { args, .. } => args.iter().copied().max(),
            Node::Eq(a, b) => Some(*a.max(b)),
            Node::Not(inner) => inner.max_var(),
            Node::And(parts) | Node::Or(parts) => parts.iter().filter_map(Node::max_var).max(),
        }
    }

    pub fn map_preds(&self, f: &impl Fn(usize) -> usize) -> Node {
        match self {
            Node::Atom { pred, args } => Node::Atom {
                pred: f(*pred),
                args: args.clone(),
            },
            Node::Not(inner) => Node::Not(Box::new(inner.map_preds(f))),
            Node::And(parts) => Node::And(parts.iter().map(|p| p.map_preds(f)).collect()),
            Node::Or(parts) => Node::Or(parts.iter().map(|p| p.map_preds(f)).collect()),
            other => other.clone(),
        }
    }

    pub fn map_vars(&self, f: &impl Fn(usize) -> usize) -> Node {
        match self {
            Node::Atom { pred, args } => Node::Atom {
                pred: *pred,
                args: args.iter().map(|&a| f(a)).collect(),
            },
            Node::Eq(a, b) => Node::Eq(f(*a), f(*b)),
            Node::Not(inner) => Node::Not(Box::new(inner.map_vars(f))),
            Node::And(parts) => Node::And(parts.iter().map(|p| p.map_vars(f)).collect()),
            Node::Or(parts) => Node::Or(parts.iter().map(|p| p.map_vars(f)).collect()),
            other => other.clone(),
        }
    }

    /// Replaces every atom by `f(pred, args)`.
    pub fn substitute_atoms(&self, f: &impl Fn(usize, &[usize]) -> Node) -> Node {
        match self {
            Node::Atom { pred, args } => f(*pred, args),
            Node::Not(inner) => Node::Not(Box::new(inner.substitute_atoms(f))),
            Node::And(parts) => Node::And(parts.iter().map(|p| p.substitute_atoms(f)).collect()),
            Node::Or(parts) => Node::Or(parts.iter().map(|p| p.substitute_atoms(f)).collect()),
            other => other.clone(),
        }
    }

    pub(crate) fn atoms(&self, out: &mut Vec<(usize, Vec<usize>)>) {
        match self {
            Node::Atom { pred, args } => out.push((*pred, args.clone())),
            Node::Not(inner) => inner.atoms(out),
            Node::And(parts) | Node::Or(parts) => parts.iter().for_each(|p| p.atoms(out)),
            _ => {}
        }
    }

    fn check(&self, sig: &Signature, vars: usize) -> Result<()> {
        let var_ok = |v: usize| {
            if v < vars {
                Ok(())
            } else {
                Err(Error::VariableOutOfRange { index: v + 1, vars })
            }
        };
        match self {
            Node::True | Node::False => Ok(()),
            Node::Atom { pred, args } => {
                if *pred >= sig.len() {
                    return Err(Error::UnknownPredicate(format!("#{pred}")));
                }
                if args.len() != sig.arity(*pred) {
                    return Err(Error::ArityMismatch {
                        name: sig.name(*pred).to_string(),
                        expected: sig.arity(*pred),
                        got: args.len(),
                    });
                }
                args.iter().try_for_each(|&a| var_ok(a))
            }
            Node::Eq(a, b) => var_ok(*a).and(var_ok(*b)),
            Node::Not(inner) => inner.check(sig, vars),
            Node::And(parts) | Node::Or(parts) => parts.iter().try_for_each(|p| p.check(sig, vars)),
        }
    }
}

/// A node together with the number of free variables it is read with.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Formula {
    pub node: Node,
    pub vars: usize,
}

impl Formula {
    pub fn new(node: Node, vars: usize, sig: &Signature) -> Result<Self> {
        node.check(sig, vars)?;
        Ok(Formula { node, vars })
    }

    pub fn eval(&self, m: &Model, assign: &[usize]) -> bool {
        debug_assert_eq!(assign.len(), self.vars);
        self.node.eval(m, assign)
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> FormulaDisplay<'a> {
        FormulaDisplay {
            node: &self.node,
            sig,
        }
    }
}

/// Printer producing text that parses back to the same tree.
pub struct FormulaDisplay<'a> {
    node: &'a Node,
    sig: &'a Signature,
}

// Binding strength used to decide on parentheses: Or < And < Not/atoms.
fn level(node: &Node) -> u8 {
    match node {
        Node::Or(_) => 0,
        Node::And(_) => 1,
        _ => 2,
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, sig: &Signature) -> fmt::Result {
    let child = |f: &mut fmt::Formatter<'_>, c: &Node, min: u8| -> fmt::Result {
        if level(c) < min
            || matches!(
                (node, c),
                (Node::And(_), Node::And(_)) | (Node::Or(_), Node::Or(_))
            )
        {
            write!(f, "(")?;
            write_node(f, c, sig)?;
            write!(f, ")")
        } else {
            write_node(f, c, sig)
        }
    };
    match node {
        Node::True => write!(f, "true"),
        Node::False => write!(f, "false"),
        Node::Atom { pred, args } => {
            let args: Vec<String> = args.iter().map(|a| format!("x{}", a + 1)).collect();
            write!(f, "{}({})", sig.name(*pred), args.join(","))
        }
        Node::Eq(a, b) => write!(f, "x{}=x{}", a + 1, b + 1),
        Node::Not(inner) => {
            write!(f, "!")?;
            if matches!(**inner, Node::Eq(..)) {
                write!(f, "(")?;
                write_node(f, inner, sig)?;
                return write!(f, ")");
            }
            child(f, inner, 2)
        }
        Node::And(parts) => {
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    write!(f, " & ")?;
                }
                child(f, p, 2)?;
            }
            Ok(())
        }
        Node::Or(parts) => {
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    write!(f, " | ")?;
                }
                child(f, p, 1)?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, self.node, self.sig)
    }
}
