use std::sync::Arc;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::{is_even, Formula, Node, Theory};
use crate::relational::{Model, Signature};
use crate::theon::{Cmp, Theon, TheonExpr, VSet, MAX_ARITY};

/// A left action of `S_k` on a list of `k`-ary predicates.
///
/// Permutations are 0-based image lists: `sigma[i]` is the image of `i`.
/// Composition is `(s t)(i) = s(t(i))`, and the table satisfies
/// `(s t).P = s.(t.P)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionTable {
    k: usize,
    names: Vec<String>,
    perms: Vec<Vec<usize>>,
    table: Vec<Vec<usize>>,
}

/// Serialized table: one row per permutation, 1-based, with image names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionTableFile {
    pub k: usize,
    pub predicates: Vec<String>,
    pub rows: Vec<ActionRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionRow {
    pub perm: Vec<usize>,
    pub images: Vec<String>,
}

impl ActionTable {
    /// Builds and validates the table `image(sigma, P)`.
    pub fn new(
        k: usize,
        names: Vec<String>,
        image: impl Fn(&[usize], usize) -> usize,
    ) -> Result<Self> {
        if k == 0 || k > MAX_ARITY {
            return Err(Error::InvalidAction(format!(
                "arity {k} outside 1..={MAX_ARITY}"
            )));
        }
        if names.is_empty() {
            return Err(Error::InvalidAction("no predicates".into()));
        }
        let perms: Vec<Vec<usize>> = (0..k).permutations(k).collect();
        let table = perms
            .iter()
            .map(|s| (0..names.len()).map(|p| image(s, p)).collect())
            .collect();
        let a = ActionTable {
            k,
            names,
            perms,
            table,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn from_file(f: &ActionTableFile) -> Result<Self> {
        let lookup = |name: &str| {
            f.predicates
                .iter()
                .position(|p| p == name)
                .ok_or_else(|| Error::InvalidAction(format!("unknown predicate `{name}`")))
        };
        let mut rows = Vec::new();
        for r in &f.rows {
            if r.perm.len() != f.k || r.images.len() != f.predicates.len() {
                return Err(Error::InvalidAction(format!(
                    "row {:?} has the wrong shape",
                    r.perm
                )));
            }
            if r.perm.iter().any(|&v| v == 0 || v > f.k) {
                return Err(Error::InvalidAction(format!(
                    "row {:?} is not a permutation of 1..{}",
                    r.perm, f.k
                )));
            }
            let perm: Vec<usize> = r.perm.iter().map(|v| v - 1).collect();
            let images = r
                .images
                .iter()
                .map(|n| lookup(n))
                .collect::<Result<Vec<_>>>()?;
            rows.push((perm, images));
        }
        let expected: usize = (1..=f.k).product();
        let distinct = rows.iter().map(|r| &r.0).unique().count();
        if distinct != expected || rows.len() != expected {
            return Err(Error::InvalidAction(format!(
                "expected one row for each of the {expected} permutations"
            )));
        }
        ActionTable::new(f.k, f.predicates.clone(), |s, p| {
            rows.iter()
                .find(|r| r.0 == s)
                .map_or(usize::MAX, |r| r.1[p])
        })
    }

    pub fn to_file(&self) -> ActionTableFile {
        ActionTableFile {
            k: self.k,
            predicates: self.names.clone(),
            rows: self
                .perms
                .iter()
                .zip(&self.table)
                .map(|(s, row)| ActionRow {
                    perm: s.iter().map(|v| v + 1).collect(),
                    images: row.iter().map(|&q| self.names[q].clone()).collect(),
                })
                .collect(),
        }
    }

    /// `c` predicates `E1..Ec`, all fixed.
    pub fn trivial(c: usize, k: usize) -> Result<Self> {
        ActionTable::new(k, (1..=c).map(|i| format!("E{i}")).collect(), |_, p| p)
    }

    /// `E1, E2` swapped by odd permutations.
    pub fn sign(k: usize) -> Result<Self> {
        ActionTable::new(k, vec!["E1".into(), "E2".into()], |s, p| {
            if is_even(s) {
                p
            } else {
                1 - p
            }
        })
    }

    fn validate(&self) -> Result<()> {
        let l = self.names.len();
        if self.table.iter().flatten().any(|&q| q >= l) {
            return Err(Error::InvalidAction(
                "image outside the predicate list".into(),
            ));
        }
        let id = self.perm_index(&(0..self.k).collect::<Vec<_>>());
        if (0..l).any(|p| self.table[id][p] != p) {
            return Err(Error::InvalidAction(
                "the identity does not act trivially".into(),
            ));
        }
        for (si, s) in self.perms.iter().enumerate() {
            for (ti, t) in self.perms.iter().enumerate() {
                let st: Vec<usize> = (0..self.k).map(|i| s[t[i]]).collect();
                let sti = self.perm_index(&st);
                for p in 0..l {
                    if self.table[sti][p] != self.table[si][self.table[ti][p]] {
                        return Err(Error::InvalidAction(format!(
                            "composition law fails for {:?}, {:?} on {}",
                            s, t, self.names[p]
                        )));
                    }
                }
            }
        }
        for (i, a) in self.names.iter().enumerate() {
            if self.names[..i].contains(a) {
                return Err(Error::InvalidAction(format!("duplicate predicate `{a}`")));
            }
        }
        Ok(())
    }

    fn perm_index(&self, s: &[usize]) -> usize {
        self.perms
            .iter()
            .position(|p| p == s)
            .expect("permutation of [k]")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn act(&self, sigma: &[usize], pred: usize) -> usize {
        self.table[self.perm_index(sigma)][pred]
    }

    pub fn signature(&self) -> Signature {
        Signature::new(self.names.iter().map(|n| (n.clone(), self.k))).expect("validated names")
    }

    /// The theory: on distinct entries exactly one predicate holds, and
    /// `P(x_s(1),...,x_s(k)) <-> (s.P)(x_1,...,x_k)`. The action law is
    /// stated for adjacent transpositions, which generate `S_k`.
    pub fn theory(&self) -> Theory {
        let k = self.k;
        let l = self.names.len();
        let ids: Vec<usize> = (0..k).collect();
        let at = |p: usize, args: Vec<usize>| Node::atom(p, args);
        let mut axioms = vec![Formula {
            node: Node::iff(
                Node::distinct(&ids),
                Node::or((0..l).map(|p| at(p, ids.clone()))),
            ),
            vars: k,
        }];
        for i in 0..k.saturating_sub(1) {
            let mut s = ids.clone();
            s.swap(i, i + 1);
            for p in 0..l {
                axioms.push(Formula {
                    node: Node::iff(at(p, s.clone()), at(self.act(&s, p), ids.clone())),
                    vars: k,
                });
            }
        }
        for (p, q) in (0..l).tuple_combinations() {
            axioms.push(Formula {
                node: Node::or([at(p, ids.clone()).not(), at(q, ids.clone()).not()]),
                vars: k,
            });
        }
        Theory::new(format!("action:k={k}"), self.signature(), axioms)
    }

    /// Rejects densities that are not a positive probability vector fixed by
    /// the action.
    pub fn check_densities(&self, p: &[BigRational]) -> Result<()> {
        if p.len() != self.names.len() {
            return Err(Error::NotInvariant(format!(
                "{} densities for {} predicates",
                p.len(),
                self.names.len()
            )));
        }
        if p.iter().any(|v| !v.is_positive()) {
            return Err(Error::NotInvariant("densities must be positive".into()));
        }
        if p.iter().cloned().sum::<BigRational>() != BigRational::one() {
            return Err(Error::NotInvariant("densities must sum to 1".into()));
        }
        for (s, row) in self.perms.iter().zip(&self.table) {
            for (q, &img) in row.iter().enumerate() {
                if p[img] != p[q] {
                    return Err(Error::NotInvariant(format!(
                        "{:?} moves {} to {} but their densities differ",
                        s.iter().map(|v| v + 1).collect::<Vec<_>>(),
                        self.names[q],
                        self.names[img]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Adds back the last predicate of a model over all but the last
    /// predicate: it holds exactly on distinct tuples where no other does.
    pub fn expand(&self, m: &Model) -> Result<Model> {
        let l = self.names.len();
        let sig = m.signature();
        if sig.len() + 1 != l || (0..sig.len()).any(|p| sig.arity(p) != self.k) {
            return Err(Error::InvalidModel(format!(
                "expected {} predicates of arity {}, got {}",
                l - 1,
                self.k,
                sig
            )));
        }
        let full = Arc::new(self.signature());
        let mut out = Model::empty(full, m.n());
        for p in 0..l - 1 {
            for t in m.tuples(p) {
                out.insert(p, &t)?;
            }
        }
        for t in crate::relational::injective_tuples(m.n(), self.k) {
            if (0..l - 1).all(|p| !m.contains(p, &t)) {
                out.insert(l - 1, &t)?;
            }
        }
        Ok(out)
    }

    /// Theon with `x` in `P` iff `x_[k]` lies in the interval of
    /// `sigma_x . P`, where `sigma_x` ranks the first-order coordinates and
    /// the intervals partition `[0,1)` in predicate order.
    pub fn theon(&self, p: &[f64]) -> Result<Theon> {
        let l = self.names.len();
        if p.len() != l
            || p.iter().any(|v| v.is_nan() || *v < 0.0)
            || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::param(
                "p",
                "expected a probability vector with one entry per predicate",
            ));
        }
        for row in &self.table {
            for (q, &img) in row.iter().enumerate() {
                if (p[q] - p[img]).abs() > 1e-12 {
                    return Err(Error::NotInvariant(format!(
                        "densities of {} and {} differ",
                        self.names[q], self.names[img]
                    )));
                }
            }
        }
        let mut bounds = vec![0.0];
        for v in p {
            bounds.push(bounds.last().unwrap() + v);
        }
        let top = VSet::full(self.k);
        let interval = |q: usize| {
            let mut parts = Vec::new();
            if q > 0 {
                parts.push(TheonExpr::thresh(top, Cmp::Ge, bounds[q]));
            }
            if q + 1 < l {
                parts.push(TheonExpr::thresh(top, Cmp::Lt, bounds[q + 1]));
            }
            match parts.len() {
                0 => TheonExpr::Const { value: true },
                1 => parts.pop().unwrap(),
                _ => TheonExpr::and(parts),
            }
        };
        let peons = (0..l)
            .map(|pred| {
                let branches = (0..l)
                    .filter_map(|q| {
                        let movers: Vec<&Vec<usize>> = self
                            .perms
                            .iter()
                            .zip(&self.table)
                            .filter(|(_, row)| row[pred] == q)
                            .map(|(s, _)| s)
                            .collect();
                        self.rank_condition(&movers).map(|cond| match cond {
                            TheonExpr::Const { value: true } => interval(q),
                            c => TheonExpr::and(vec![c, interval(q)]),
                        })
                    })
                    .collect::<Vec<_>>();
                if branches.len() == 1 {
                    branches.into_iter().next().unwrap()
                } else {
                    TheonExpr::or(branches)
                }
            })
            .collect();
        let theon = Theon::new(format!("theta-qr:k={}", self.k), self.theory(), 1, peons)?;
        Ok(theon.with_rank_bound(self.k).with_independence(self.k - 1))
    }

    /// Condition "`sigma_x` is one of `perms`", collapsed to a constant or a
    /// sign test when possible.
    fn rank_condition(&self, perms: &[&Vec<usize>]) -> Option<TheonExpr> {
        if perms.is_empty() {
            return None;
        }
        if perms.len() == self.perms.len() {
            return Some(TheonExpr::Const { value: true });
        }
        let half = self.perms.len() / 2;
        if self.k >= 2 && perms.len() == half {
            if perms.iter().all(|s| is_even(s)) {
                return Some(TheonExpr::sign());
            }
            if perms.iter().all(|s| !is_even(s)) {
                return Some(TheonExpr::sign().not());
            }
        }
        Some(TheonExpr::or(
            perms
                .iter()
                .map(|s| TheonExpr::Ranks {
                    factor: 0,
                    ranks: (*s).clone(),
                })
                .collect(),
        ))
    }
}

/// Labeled density of `m` under the quasirandom object of `action` with
/// densities `p`: the product over `k`-sets `A` of the density of the
/// predicate holding on `A`'s increasing tuple. Models over all but the
/// last predicate are expanded first.
pub fn closed_form_qr_density(
    action: &ActionTable,
    p: &[BigRational],
    m: &Model,
) -> Result<BigRational> {
    action.check_densities(p)?;
    let m = if m.signature().len() + 1 == action.names.len() {
        action.expand(m)?
    } else {
        m.with_signature(Arc::new(action.signature()))?
    };
    let theory = action.theory();
    if let Some(v) = theory.check(&m).first() {
        return Err(Error::AxiomViolation(format!(
            "model breaks axiom {} at {:?}",
            v.axiom + 1,
            v.assignment.iter().map(|x| x + 1).collect::<Vec<_>>()
        )));
    }
    let mut out = BigRational::one();
    for set in (0..m.n()).combinations(action.k) {
        let holder = (0..action.names.len())
            .find(|&q| m.contains(q, &set))
            .expect("exactly one predicate holds on distinct tuples");
        out *= &p[holder];
        if out.is_zero() {
            break;
        }
    }
    Ok(out)
}

/// Parses `a/b`, an integer, or a finite decimal into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::param("rational", format!("cannot read `{t}` as a rational"));
    if let Some((a, b)) = t.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(a, b));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty()
        || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    let v = BigRational::new(digits, scale);
    Ok(if neg { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relational::enumerate_labeled;
    use crate::relational::DEFAULT_BUDGET;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn rejects_broken_tables() {
        // Swapping under every non-identity permutation is not an action.
        let r = ActionTable::new(2, vec!["A".into(), "B".into()], |s, p| {
            if s == [0, 1] {
                p
            } else {
                1 - p
            }
        });
        assert!(r.is_ok());
        let r = ActionTable::new(3, vec!["A".into(), "B".into()], |s, p| {
            if s == [0, 1, 2] {
                p
            } else {
                1 - p
            }
        });
        assert!(matches!(r, Err(Error::InvalidAction(_))));
    }

    #[test]
    fn sign_action_requires_equal_halves() {
        let a = ActionTable::sign(2).unwrap();
        assert!(matches!(
            a.check_densities(&[q(1, 3), q(2, 3)]),
            Err(Error::NotInvariant(_))
        ));
        assert!(a.check_densities(&[q(1, 2), q(1, 2)]).is_ok());
    }

    #[test]
    fn tournament_three_vertices() {
        let a = ActionTable::sign(2).unwrap();
        let half = [q(1, 2), q(1, 2)];
        let t = Theory::tournament(2);
        for m in enumerate_labeled(&t, 3, DEFAULT_BUDGET).unwrap() {
            assert_eq!(closed_form_qr_density(&a, &half, &m).unwrap(), q(1, 8));
        }
    }

    #[test]
    fn two_colored_graph() {
        let a = ActionTable::trivial(2, 2).unwrap();
        let p = [q(3, 10), q(7, 10)];
        let sig = Theory::graph().sig;
        let m = Model::from_tuples(
            sig,
            4,
            &[("E", vec![vec![0, 1], vec![1, 0], vec![2, 3], vec![3, 2]])],
        )
        .unwrap();
        let expected = q(3, 10).pow(2) * q(7, 10).pow(4);
        assert_eq!(closed_form_qr_density(&a, &p, &m).unwrap(), expected);
        let single = Model::empty(Theory::graph().sig, 1);
        assert_eq!(
            closed_form_qr_density(&a, &p, &single).unwrap(),
            BigRational::one()
        );
    }

    #[test]
    fn densities_sum_to_one() {
        let a = ActionTable::trivial(2, 2).unwrap();
        let p = [q(1, 3), q(2, 3)];
        for n in 1..=4 {
            let total: BigRational = enumerate_labeled(&Theory::graph(), n, DEFAULT_BUDGET)
                .unwrap()
                .iter()
                .map(|m| closed_form_qr_density(&a, &p, m).unwrap())
                .sum();
            assert_eq!(total, BigRational::one());
        }
        let s = ActionTable::sign(2).unwrap();
        let half = [q(1, 2), q(1, 2)];
        let models = enumerate_labeled(&Theory::tournament(2), 4, DEFAULT_BUDGET).unwrap();
        assert_eq!(models.len(), 64);
        let total: BigRational = models
            .iter()
            .map(|m| closed_form_qr_density(&s, &half, m).unwrap())
            .sum();
        assert_eq!(total, BigRational::one());
    }

    #[test]
    fn theory_matches_builtin_tournaments() {
        // Reduced models of the sign theory are exactly the tournaments.
        let a = ActionTable::sign(3).unwrap();
        let full = a.theory();
        let mut expanded = std::collections::HashSet::new();
        for m in enumerate_labeled(&Theory::tournament(3), 4, DEFAULT_BUDGET).unwrap() {
            let e = a.expand(&m).unwrap();
            assert!(full.models(&e));
            expanded.insert(e);
        }
        assert_eq!(expanded.len(), 16);
        let count = enumerate_labeled(&full, 3, DEFAULT_BUDGET).unwrap().len();
        assert_eq!(count, 2);
    }

    #[test]
    fn file_round_trip() {
        let a = ActionTable::sign(3).unwrap();
        assert_eq!(ActionTable::from_file(&a.to_file()).unwrap(), a);
        let mut f = a.to_file();
        f.rows.pop();
        assert!(ActionTable::from_file(&f).is_err());
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3/10").unwrap(), q(3, 10));
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("2").unwrap(), q(2, 1));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
    }
}
