use std::sync::Arc;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::calculus::action::parse_rational;
use crate::error::{Error, Result};
use crate::relational::{format, Model, Signature};

/// Densities of one base model overlaid with every `ell`-uniform hypergraph
/// on its vertices. Overlays are bit masks over `family`, the `ell`-subsets
/// of the vertex set in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    pub base: Model,
    pub ell: usize,
    pub family: Vec<Vec<usize>>,
    pub values: Vec<BigRational>,
}

/// Largest overlay family handled (2^12 overlays).
pub const MAX_FAMILY: usize = 12;

impl DensityVector {
    pub fn new(base: Model, ell: usize, values: Vec<BigRational>) -> Result<Self> {
        let family: Vec<Vec<usize>> = (0..base.n()).combinations(ell).collect();
        if family.len() > MAX_FAMILY {
            return Err(Error::param(
                "ell",
                format!(
                    "{} overlay sets exceed the limit {MAX_FAMILY}",
                    family.len()
                ),
            ));
        }
        if values.len() != 1 << family.len() {
            return Err(Error::param(
                "values",
                format!(
                    "expected {} overlay values, got {}",
                    1usize << family.len(),
                    values.len()
                ),
            ));
        }
        Ok(DensityVector {
            base,
            ell,
            family,
            values,
        })
    }

    pub fn zeros(base: Model, ell: usize) -> Result<Self> {
        let len = (0..base.n()).combinations(ell).count();
        if len > MAX_FAMILY {
            return Err(Error::param(
                "ell",
                format!("{len} overlay sets exceed the limit {MAX_FAMILY}"),
            ));
        }
        DensityVector::new(base, ell, vec![BigRational::zero(); 1 << len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> BigRational {
        self.values.iter().cloned().sum()
    }

    /// `F(U) = t^|U| * sum over W ⊇ U of (1-t)^|W\U| * v(W)`.
    pub fn dilute(&self, t: &BigRational) -> Result<DensityVector> {
        check_t(t)?;
        Ok(self.superset_transform(t, &(BigRational::one() - t)))
    }

    /// Left inverse of [`dilute`](Self::dilute):
    /// `t^-|U| * sum over W ⊇ U of (1-1/t)^|W\U| * v(W)`.
    pub fn mobius_inverse(&self, t: &BigRational) -> Result<DensityVector> {
        check_t(t)?;
        let inv = t.recip();
        Ok(self.superset_transform(&inv, &(BigRational::one() - &inv)))
    }

    /// `out(U) = a^|U| * sum over W ⊇ U of b^|W\U| * v(W)`, computed one
    /// coordinate at a time like a zeta transform.
    fn superset_transform(&self, a: &BigRational, b: &BigRational) -> DensityVector {
        let bits = self.family.len();
        let mut vals = self.values.clone();
        for i in 0..bits {
            let bit = 1usize << i;
            for u in 0..vals.len() {
                if u & bit == 0 {
                    let add = &vals[u | bit] * b;
                    vals[u] += add;
                    vals[u | bit] *= a;
                }
            }
        }
        DensityVector {
            values: vals,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let file = DensityVectorFile {
            base: format::to_text(&self.base),
            signature: self.base.signature().clone(),
            ell: self.ell,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(u, v)| OverlayValue {
                    overlay: (0..self.family.len())
                        .filter(|i| u >> i & 1 == 1)
                        .map(|i| self.family[i].iter().map(|x| x + 1).collect())
                        .collect(),
                    value: format!("{}/{}", v.numer(), v.denom()),
                })
                .collect(),
        };
        serde_json::to_value(file).expect("plain data")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let file: DensityVectorFile = serde_json::from_value(v.clone())
            .map_err(|e| Error::param("density vector", e.to_string()))?;
        let base = format::parse_model(&file.base, Arc::new(file.signature))?;
        let mut out = DensityVector::zeros(base, file.ell)?;
        for entry in &file.values {
            let mut mask = 0usize;
            for set in &entry.overlay {
                let zero: Vec<usize> = set.iter().map(|x| x.wrapping_sub(1)).collect();
                let i = out.family.iter().position(|f| *f == zero).ok_or_else(|| {
                    Error::param("overlay", format!("{set:?} is not an overlay set"))
                })?;
                mask |= 1 << i;
            }
            out.values[mask] = parse_rational(&entry.value)?;
        }
        Ok(out)
    }
}

fn check_t(t: &BigRational) -> Result<()> {
    if *t <= BigRational::zero() || *t > BigRational::one() {
        return Err(Error::param(
            "t",
            "the dilution parameter must lie in (0,1]",
        ));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DensityVectorFile {
    base: String,
    signature: Signature,
    ell: usize,
    values: Vec<OverlayValue>,
}

#[derive(Serialize, Deserialize)]
struct OverlayValue {
    overlay: Vec<Vec<usize>>,
    value: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Theory;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn base(n: usize) -> Model {
        Model::empty(Theory::graph().sig, n)
    }

    /// Direct evaluation of the defining sums.
    fn dilute_naive(v: &DensityVector, t: &BigRational) -> Vec<BigRational> {
        let len = v.values.len();
        (0..len)
            .map(|u| {
                let mut s = BigRational::zero();
                for w in 0..len {
                    if w & u == u {
                        let extra = (w & !u).count_ones() as i32;
                        s += (BigRational::one() - t).pow(extra) * &v.values[w];
                    }
                }
                t.pow(u.count_ones() as i32) * s
            })
            .collect()
    }

    #[test]
    fn single_pair() {
        let v = DensityVector::new(base(2), 2, vec![q(1, 3), q(2, 3)]).unwrap();
        let t = q(2, 5);
        let d = v.dilute(&t).unwrap();
        assert_eq!(
            d.values,
            vec![q(1, 3) + q(3, 5) * q(2, 3), q(2, 5) * q(2, 3)]
        );
        assert_eq!(v.dilute(&BigRational::one()).unwrap(), v);
    }

    #[test]
    fn matches_naive_sums_and_keeps_mass() {
        let vals: Vec<BigRational> = (1..=8).map(|i| q(i, 36)).collect();
        let v = DensityVector::new(base(3), 2, vals).unwrap();
        let t = q(3, 7);
        let d = v.dilute(&t).unwrap();
        assert_eq!(d.values, dilute_naive(&v, &t));
        assert_eq!(d.total(), v.total());
    }

    #[test]
    fn inverse_of_full_family_term() {
        let vals: Vec<BigRational> = (1..=8).map(|i| q(i, 7)).collect();
        let v = DensityVector::new(base(3), 2, vals).unwrap();
        let t = q(2, 5);
        let inv = v.mobius_inverse(&t).unwrap();
        assert_eq!(inv.values[7], t.recip().pow(3) * &v.values[7]);
    }

    #[test]
    fn rejects_bad_t() {
        let v = DensityVector::zeros(base(2), 1).unwrap();
        assert!(v.dilute(&q(0, 1)).is_err());
        assert!(v.mobius_inverse(&q(3, 2)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let vals: Vec<BigRational> = (1..=8).map(|i| q(i, 9)).collect();
        let v = DensityVector::new(base(3), 2, vals).unwrap();
        let j = v.to_json();
        assert_eq!(j["values"][3]["value"], "4/9");
        assert_eq!(
            j["values"][3]["overlay"],
            serde_json::json!([[1, 2], [1, 3]])
        );
        assert_eq!(DensityVector::from_json(&j).unwrap(), v);
    }

    proptest! {
        #[test]
        fn round_trip(nums in prop::collection::vec(0i64..1000, 8), t_num in 1i64..=10) {
            let vals: Vec<BigRational> = nums.iter().map(|&a| BigRational::new(BigInt::from(a), BigInt::from(997))).collect();
            let v = DensityVector::new(base(3), 2, vals).unwrap();
            let t = q(t_num, 10);
            let back = v.dilute(&t).unwrap().mobius_inverse(&t).unwrap();
            prop_assert_eq!(back, v);
        }
    }
}
