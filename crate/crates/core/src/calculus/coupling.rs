use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::calculus::action::{closed_form_qr_density, ActionTable};
use crate::error::{Error, Result};
use crate::relational::{Model, Signature};
use crate::theon::{estimate_density, Component, DensityEstimate, Point, Sampler, Theon};

/// A labeled density that is either exact or a Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DensityValue {
    Exact(#[serde(serialize_with = "ratio_text")] BigRational),
    Estimate { value: f64, stderr: f64 },
}

impl DensityValue {
    pub fn value(&self) -> f64 {
        match self {
            DensityValue::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            DensityValue::Estimate { value, .. } => *value,
        }
    }

    pub fn stderr(&self) -> f64 {
        match self {
            DensityValue::Exact(_) => 0.0,
            DensityValue::Estimate { stderr, .. } => *stderr,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            DensityValue::Exact(q) => Some(q),
            DensityValue::Estimate { .. } => None,
        }
    }
}

fn ratio_text<S: serde::Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(&format_args!("{}/{}", q.numer(), q.denom()))
}

/// Source of labeled densities for models over one signature.
pub trait DensityOracle: Sync {
    fn labeled_density(&self, m: &Model) -> Result<DensityValue>;
}

/// Closed form of a quasirandom action object.
pub struct ClosedForm {
    pub action: ActionTable,
    pub p: Vec<BigRational>,
}

impl DensityOracle for ClosedForm {
    fn labeled_density(&self, m: &Model) -> Result<DensityValue> {
        closed_form_qr_density(&self.action, &self.p, m).map(DensityValue::Exact)
    }
}

/// Exact density given by a function.
pub struct ExactFn<F>(pub F);

impl<F: Fn(&Model) -> Result<BigRational> + Sync> DensityOracle for ExactFn<F> {
    fn labeled_density(&self, m: &Model) -> Result<DensityValue> {
        (self.0)(m).map(DensityValue::Exact)
    }
}

/// The uniformly random linear order: every labeled order on `[n]` has
/// density `1/n!`.
pub struct LinearOrderDensity;

impl DensityOracle for LinearOrderDensity {
    fn labeled_density(&self, m: &Model) -> Result<DensityValue> {
        let t = crate::logic::Theory::linear_order();
        let m = m.with_signature(t.sig.clone())?;
        if !t.models(&m) {
            return Ok(DensityValue::Exact(BigRational::zero()));
        }
        let f = crate::relational::factorial(m.n());
        Ok(DensityValue::Exact(BigRational::new(1.into(), f.into())))
    }
}

/// Sampling estimate from a theon.
pub struct Sampled<'a> {
    pub theon: &'a Theon,
    pub n_samples: u64,
    pub sampler: Sampler,
}

impl DensityOracle for Sampled<'_> {
    fn labeled_density(&self, m: &Model) -> Result<DensityValue> {
        let m = m.with_signature(self.theon.theory.sig.clone())?;
        let (lab, _) = estimate_density(self.theon, &m, self.n_samples, &self.sampler)?;
        Ok(DensityValue::Estimate {
            value: lab.value,
            stderr: lab.stderr,
        })
    }
}

/// One factor of a syntactic product: its oracle and where its predicates
/// sit in the coupled signature.
pub struct Factor<'a> {
    pub oracle: &'a dyn DensityOracle,
    pub sig: Arc<Signature>,
    pub preds: Vec<usize>,
}

impl<'a> Factor<'a> {
    pub fn of_component(oracle: &'a dyn DensityOracle, c: &Component) -> Self {
        Factor {
            oracle,
            sig: c.theory.sig.clone(),
            preds: c.preds.clone(),
        }
    }
}

/// Product of the factor densities of the reducts of `m`. Exact when every
/// factor is; otherwise the standard error follows the delta method with
/// independent factors.
pub fn product_density(factors: &[Factor<'_>], m: &Model) -> Result<DensityValue> {
    if factors.is_empty() {
        return Err(Error::param("factors", "need at least one factor"));
    }
    let mut parts = Vec::new();
    for f in factors {
        if f.preds.iter().any(|&p| p >= m.signature().len()) {
            return Err(Error::InvalidModel(
                "factor predicate outside the coupled signature".into(),
            ));
        }
        parts.push(
            f.oracle
                .labeled_density(&m.reduct(f.sig.clone(), &f.preds))?,
        );
    }
    if parts.iter().all(|p| p.exact().is_some()) {
        let prod = parts
            .iter()
            .fold(BigRational::one(), |acc, p| acc * p.exact().unwrap());
        return Ok(DensityValue::Exact(prod));
    }
    let value: f64 = parts.iter().map(DensityValue::value).product();
    let mut var = 0.0;
    for (i, p) in parts.iter().enumerate() {
        let others: f64 = parts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| q.value())
            .product();
        var += (others * p.stderr()).powi(2);
    }
    Ok(DensityValue::Estimate {
        value,
        stderr: var.sqrt(),
    })
}

/// Estimates the mass a coupling of two copies of one signature puts on
/// disagreement: the sum over predicates of the probability that
/// `(1,...,k)` lies in exactly one copy. This bounds the distance of the
/// two reducts from above.
pub fn delta1_eval(c: &Theon, n_samples: u64, sampler: &Sampler) -> Result<DensityEstimate> {
    if c.components.len() != 2 {
        return Err(Error::param(
            "coupling",
            "expected a coupling of exactly two theons",
        ));
    }
    let (a, b) = (&c.components[0], &c.components[1]);
    let sa = &a.theory.sig;
    let sb = &b.theory.sig;
    if sa.len() != sb.len() || (0..sa.len()).any(|p| sa.arity(p) != sb.arity(p)) {
        return Err(Error::param(
            "coupling",
            "the two factors must share one signature shape",
        ));
    }
    let pairs: Vec<(usize, usize, usize)> = (0..sa.len())
        .map(|p| (a.preds[p], b.preds[p], sa.arity(p)))
        .collect();
    let max_k = pairs.iter().map(|x| x.2).max().unwrap_or(1);
    let parts = sampler.map_chunks(n_samples, |_, _, rng, draws| {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..draws {
            let x = Point::sample(max_k, c.dim, max_k, rng);
            let mut d = 0.0;
            for &(pa, pb, k) in &pairs {
                let local = if k == max_k {
                    x.clone()
                } else {
                    x.project(&(0..k).collect::<Vec<_>>())
                };
                let ia = c.eval_membership(pa, &local).unwrap_or(false);
                let ib = c.eval_membership(pb, &local).unwrap_or(false);
                if ia != ib {
                    d += 1.0;
                }
            }
            sum += d;
            sum_sq += d * d;
        }
        (sum, sum_sq)
    })?;
    let (sum, sum_sq) = parts
        .into_iter()
        .fold((0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    Ok(DensityEstimate::from_moments(
        sum,
        sum_sq,
        n_samples,
        sampler.seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theon::{diagonal_self_coupling, independent_coupling, theon_by_name, Renaming};

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn tournament_times_order() {
        let tour = theon_by_name("qr-tournamon:k=2").unwrap();
        let ord = theon_by_name("linear-order").unwrap();
        let c = independent_coupling(&[&tour, &ord], Renaming::Keep).unwrap();
        let cf = ClosedForm {
            action: ActionTable::sign(2).unwrap(),
            p: vec![q(1, 2), q(1, 2)],
        };
        let factors = [
            Factor::of_component(&cf, &c.components[0]),
            Factor::of_component(&LinearOrderDensity, &c.components[1]),
        ];
        let sig = c.theory.sig.clone();
        let m = Model::from_tuples(
            sig,
            3,
            &[
                ("E", vec![vec![0, 1], vec![1, 2], vec![2, 0]]),
                ("Prec", vec![vec![0, 1], vec![1, 2], vec![0, 2]]),
            ],
        )
        .unwrap();
        assert_eq!(
            product_density(&factors, &m).unwrap(),
            DensityValue::Exact(q(1, 48))
        );
        assert_eq!(
            product_density(&factors[..1], &m).unwrap(),
            DensityValue::Exact(q(1, 8))
        );
        let cyclic_order = Model::from_tuples(
            c.theory.sig.clone(),
            3,
            &[
                ("E", vec![vec![0, 1], vec![1, 2], vec![2, 0]]),
                ("Prec", vec![vec![0, 1], vec![1, 2], vec![2, 0]]),
            ],
        )
        .unwrap();
        assert_eq!(
            product_density(&factors, &cyclic_order).unwrap(),
            DensityValue::Exact(q(0, 1))
        );
    }

    #[test]
    fn delta1_of_graphon_couplings() {
        let g = theon_by_name("qr-graphon:p=0.5").unwrap();
        let diag = diagonal_self_coupling(&g).unwrap();
        let s = Sampler::new(9);
        let d = delta1_eval(&diag, 20_000, &s).unwrap();
        assert_eq!((d.value, d.stderr), (0.0, 0.0));
        let ind = independent_coupling(&[&g, &g], Renaming::Suffix).unwrap();
        let d = delta1_eval(&ind, 100_000, &s).unwrap();
        assert!(d.z_against(0.5).abs() < 4.0, "{d:?}");
        let h = theon_by_name("qr-graphon:p=0.2").unwrap();
        let gh = independent_coupling(&[&g, &h], Renaming::Suffix).unwrap();
        let d = delta1_eval(&gh, 100_000, &s).unwrap();
        assert!(d.z_against(0.5 * 0.8 + 0.2 * 0.5).abs() < 4.0, "{d:?}");
    }
}
