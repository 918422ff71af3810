use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::relational::Model;

/// An isomorphism type, stored as its lexicographically least relabeling.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IsoClass {
    pub representative: Model,
    pub automorphisms: u64,
}

impl IsoClass {
    pub fn of(m: &Model) -> Self {
        let (representative, _) = canonical_form(m);
        let automorphisms = automorphism_count(m);
        IsoClass {
            representative,
            automorphisms,
        }
    }

    /// Number of distinct labeled models on `[n]` in this class.
    pub fn labeled_copies(&self) -> u64 {
        factorial(self.representative.n()) / self.automorphisms
    }
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Canonical representative together with the relabeling `perm` that produces
/// it (`canonical == m.relabel(&perm)`).
pub fn canonical_form(m: &Model) -> (Model, Vec<usize>) {
    let n = m.n();
    let mut best = m.clone();
    let mut best_perm: Vec<usize> = (0..n).collect();
    for perm in (0..n).permutations(n) {
        let cand = m.relabel(&perm);
        if cand.cmp_code(&best).is_lt() {
            best = cand;
            best_perm = perm;
        }
    }
    (best, best_perm)
}

fn invariants_differ(a: &Model, b: &Model) -> bool {
    a.n() != b.n()
        || a.signature() != b.signature()
        || (0..a.signature().len()).any(|p| a.relation_size(p) != b.relation_size(p))
}

/// A vertex bijection `w` with `a.relabel(&w) == b`, if one exists.
pub fn isomorphic(a: &Model, b: &Model) -> Option<Vec<usize>> {
    if invariants_differ(a, b) {
        return None;
    }
    if a == b {
        return Some((0..a.n()).collect());
    }
    let (ca, pa) = canonical_form(a);
    let (cb, pb) = canonical_form(b);
    if ca != cb {
        return None;
    }
    // a ->pa-> C <-pb- b, so the witness is pb^-1 after pa.
    let mut pb_inv = vec![0; pb.len()];
    for (v, &img) in pb.iter().enumerate() {
        pb_inv[img] = v;
    }
    Some(pa.iter().map(|&c| pb_inv[c]).collect())
}

pub fn automorphism_count(m: &Model) -> u64 {
    let n = m.n();
    (0..n)
        .permutations(n)
        .filter(|perm| m.relabel(perm) == *m)
        .count() as u64
}

/// `|Aut(m)| / n!`, the factor turning an unlabeled density into the labeled
/// density of one fixed copy.
pub fn labeled_weight(m: &Model) -> BigRational {
    BigRational::new(
        BigInt::from(automorphism_count(m)),
        BigInt::from(factorial(m.n())),
    )
}

/// Every distinct labeled model isomorphic to `m` (the orbit under relabeling).
pub fn labeled_copies(m: &Model) -> Vec<Model> {
    let n = m.n();
    let mut out: Vec<Model> = (0..n).permutations(n).map(|p| m.relabel(&p)).collect();
    out.sort_by(|a, b| a.cmp_code(b));
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relational::Signature;
    use std::sync::Arc;

    fn digraph(n: usize, arcs: &[(usize, usize)]) -> Model {
        let sig = Arc::new(Signature::new([("E", 2)]).unwrap());
        let tuples = arcs.iter().map(|&(a, b)| vec![a - 1, b - 1]).collect();
        Model::from_tuples(sig, n, &[("E", tuples)]).unwrap()
    }

    fn graph(n: usize, edges: &[(usize, usize)]) -> Model {
        let both: Vec<(usize, usize)> = edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        digraph(n, &both)
    }

    /// Exhaustive search over all bijections, independent of canonical forms.
    fn brute_iso(a: &Model, b: &Model) -> Option<Vec<usize>> {
        (0..a.n()).permutations(a.n()).find(|p| a.relabel(p) == *b)
    }

    #[test]
    fn cycle_vs_path() {
        let c3 = graph(3, &[(1, 2), (2, 3), (1, 3)]);
        let p3 = graph(3, &[(1, 2), (2, 3)]);
        assert!(isomorphic(&c3, &p3).is_none());
    }

    #[test]
    fn reversed_directed_cycle_witness() {
        let a = digraph(3, &[(1, 2), (2, 3), (3, 1)]);
        let b = digraph(3, &[(2, 1), (3, 2), (1, 3)]);
        let w = isomorphic(&a, &b).expect("reversal of C3 is isomorphic to C3");
        assert_eq!(a.relabel(&w), b);
        assert!(brute_iso(&a, &b).is_some());
        // 1<->2 (0-based swap of 0 and 1) is one of the valid witnesses.
        assert_eq!(a.relabel(&[1, 0, 2]), b);
    }

    #[test]
    fn identity_witness() {
        let a = graph(4, &[(1, 2), (3, 4)]);
        assert_eq!(isomorphic(&a, &a), Some(vec![0, 1, 2, 3]));
    }

    #[test]
    fn automorphism_counts() {
        assert_eq!(automorphism_count(&graph(3, &[(1, 2), (2, 3), (1, 3)])), 6);
        assert_eq!(
            automorphism_count(&digraph(3, &[(1, 2), (2, 3), (3, 1)])),
            3
        );
        assert_eq!(automorphism_count(&graph(3, &[(1, 2), (2, 3)])), 2);
    }

    #[test]
    fn labeled_weights() {
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(
            labeled_weight(&graph(3, &[(1, 2), (2, 3), (1, 3)])),
            r(1, 1)
        );
        assert_eq!(
            labeled_weight(&digraph(3, &[(1, 2), (2, 3), (3, 1)])),
            r(1, 2)
        );
        assert_eq!(labeled_weight(&digraph(2, &[(1, 2)])), r(1, 2));
    }

    #[test]
    fn orbit_stabilizer() {
        for m in [
            graph(4, &[(1, 2), (2, 3)]),
            digraph(3, &[(1, 2), (2, 3), (3, 1)]),
            graph(4, &[]),
        ] {
            let copies = labeled_copies(&m).len() as u64;
            assert_eq!(copies * automorphism_count(&m), factorial(m.n()));
            assert_eq!(IsoClass::of(&m).labeled_copies(), copies);
        }
    }
}
