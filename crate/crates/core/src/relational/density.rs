use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::relational::{canonical_form, Model};

/// Fraction of `|m|`-subsets of the host's vertices inducing a copy of `m`.
pub fn induced_density(m: &Model, host: &Model) -> BigRational {
    let k = m.n();
    let n = host.n();
    if k > n || m.signature() != host.signature() {
        return BigRational::from_integer(BigInt::from(0));
    }
    let (target, _) = canonical_form(m);
    let mut hits = 0u64;
    let mut total = 0u64;
    for subset in (0..n).combinations(k) {
        total += 1;
        let (canon, _) = canonical_form(&host.induced(&subset));
        if canon == target {
            hits += 1;
        }
    }
    BigRational::new(BigInt::from(hits), BigInt::from(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Theory;
    use crate::relational::{enumerate_models, injective_tuples};
    use num_traits::{One, Zero};

    fn graph(n: usize, edges: &[(usize, usize)]) -> Model {
        let t = Theory::graph();
        let mut m = Model::empty(t.sig.clone(), n);
        for &(a, b) in edges {
            m.insert(0, &[a - 1, b - 1]).unwrap();
            m.insert(0, &[b - 1, a - 1]).unwrap();
        }
        m
    }

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn edge_densities() {
        let edge = graph(2, &[(1, 2)]);
        let tri = graph(3, &[(1, 2), (2, 3), (1, 3)]);
        let p3 = graph(3, &[(1, 2), (2, 3)]);
        assert_eq!(induced_density(&edge, &tri), r(1, 1));
        assert_eq!(induced_density(&edge, &p3), r(2, 3));
        assert!(induced_density(&tri, &edge).is_zero());
    }

    #[test]
    fn densities_over_all_classes_sum_to_one() {
        let t = Theory::tournament(2);
        let mut host = Model::empty(t.sig.clone(), 5);
        // A fixed 5-vertex tournament: i -> j iff (j - i) mod 5 in {1, 2}.
        for tup in injective_tuples(5, 2) {
            if matches!((tup[1] + 5 - tup[0]) % 5, 1 | 2) {
                host.insert(0, &tup).unwrap();
            }
        }
        assert!(t.models(&host));
        for n in 1..=4 {
            let sum: BigRational = enumerate_models(&t, n)
                .unwrap()
                .iter()
                .map(|c| induced_density(&c.representative, &host))
                .sum();
            assert!(sum.is_one(), "n={n}");
        }
    }
}
