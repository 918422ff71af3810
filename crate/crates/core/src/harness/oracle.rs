use std::collections::BTreeMap;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::calculus::{
    closed_form_qr_density, parse_rational, ActionTable, DensityOracle, LinearOrderDensity,
};
use crate::error::{Error, Result};
use crate::relational::{enumerate_labeled, Model, DEFAULT_BUDGET};
use crate::theon::theon_by_name;

fn split(spec: &str) -> Result<(String, BTreeMap<String, String>)> {
    let (name, rest) = spec.trim().split_once(':').unwrap_or((spec.trim(), ""));
    let mut params = BTreeMap::new();
    for kv in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::param(kv, "expected key=value"))?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok((name.to_string(), params))
}

fn rational_vector(params: &BTreeMap<String, String>, len: usize) -> Result<Vec<BigRational>> {
    match params.get("p") {
        Some(v) => v.split(':').map(parse_rational).collect(),
        None => Ok(vec![BigRational::new(1.into(), len.into()); len]),
    }
}

fn int(params: &BTreeMap<String, String>, key: &str) -> Result<usize> {
    params
        .get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::param(key, "required"))
}

/// Product over `k`-sets of the density of the predicate holding there.
/// Handles zero densities, which the closed form refuses.
fn action_density(action: &ActionTable, p: &[BigRational], m: &Model) -> Result<BigRational> {
    if p.iter().all(|q| q > &BigRational::zero()) {
        return match closed_form_qr_density(action, p, m) {
            Err(Error::AxiomViolation(_)) => Ok(BigRational::zero()),
            other => other,
        };
    }
    let full = if m.signature().len() + 1 == action.names().len() {
        action.expand(m)?
    } else {
        m.with_signature(std::sync::Arc::new(action.signature()))?
    };
    if !action.theory().models(&full) {
        return Ok(BigRational::zero());
    }
    let mut out = BigRational::one();
    for set in (0..m.n()).combinations(action.k()) {
        let q = (0..p.len())
            .find(|&q| full.contains(q, &set))
            .expect("one predicate per set");
        out *= &p[q];
    }
    Ok(out)
}

/// Exact labeled density of `m` under a catalog theon, when a closed form
/// is known: the quasirandom hypergraphons, graphons, colored
/// hypergraphons and tournamons, the uniform order and the interval
/// colorings. `None` for everything else.
pub fn exact_labeled_density(spec: &str, m: &Model) -> Result<Option<BigRational>> {
    let t = theon_by_name(spec)?;
    if *m.signature() != *t.theory.sig {
        return Err(Error::InvalidModel(format!(
            "model is over {} but `{spec}` is over {}",
            m.signature(),
            t.theory.sig
        )));
    }
    if !t.theory.models(m) {
        return Ok(Some(BigRational::zero()));
    }
    let (name, params) = split(spec)?;
    let half = BigRational::new(1.into(), 2.into());
    let two_colors = |p: BigRational| vec![p.clone(), BigRational::one() - p];
    let q = match name.as_str() {
        "qr-tournamon" => action_density(
            &ActionTable::sign(int(&params, "k")?)?,
            &[half.clone(), half],
            m,
        )?,
        "tournament-np" => {
            let p = parse_rational(&params["p"])?;
            if p != half {
                return Ok(None);
            }
            action_density(
                &ActionTable::sign(int(&params, "k")?)?,
                &[half.clone(), half],
                m,
            )?
        }
        "qr-hypergraphon" => {
            let p = parse_rational(&params["p"])?;
            action_density(
                &ActionTable::trivial(2, int(&params, "k")?)?,
                &two_colors(p),
                m,
            )?
        }
        "qr-graphon" | "constant-graphon" => {
            let p = parse_rational(&params["p"])?;
            action_density(&ActionTable::trivial(2, 2)?, &two_colors(p), m)?
        }
        "qr-colored-hypergraphon" => {
            let c = int(&params, "c")?;
            let action = ActionTable::trivial(c, int(&params, "k")?)?;
            action_density(&action, &rational_vector(&params, c)?, m)?
        }
        "linear-order" => match LinearOrderDensity.labeled_density(m)?.exact() {
            Some(q) => q.clone(),
            None => return Ok(None),
        },
        "coloring" => {
            let c = int(&params, "c")?;
            let p = rational_vector(&params, c)?;
            let mut out = BigRational::one();
            for v in 0..m.n() {
                let color = (0..c)
                    .find(|&i| m.contains(i, &[v]))
                    .expect("a coloring colors every vertex");
                out *= &p[color];
            }
            out
        }
        _ => return Ok(None),
    };
    Ok(Some(q))
}

/// Exact probability that `(1..k)` lies in predicate `pred` of arity `k`,
/// summed over the labeled models on `[k]`.
pub fn tuple_probability(spec: &str, pred: usize) -> Result<Option<BigRational>> {
    let t = theon_by_name(spec)?;
    let sig = &t.theory.sig;
    if pred >= sig.len() {
        return Err(Error::param("pred", "predicate index out of range"));
    }
    let k = sig.arity(pred);
    let tuple: Vec<usize> = (0..k).collect();
    let mut total = BigRational::zero();
    for m in enumerate_labeled(&t.theory, k, DEFAULT_BUDGET)? {
        if !m.contains(pred, &tuple) {
            continue;
        }
        match exact_labeled_density(spec, &m)? {
            Some(q) => total += q,
            None => return Ok(None),
        }
    }
    Ok(Some(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relational::parse_model;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn closed_forms() {
        let t = theon_by_name("qr-graphon:p=3/10").unwrap();
        let path = parse_model("n=3\nE: (1,2);(2,1)\n", t.theory.sig.clone()).unwrap();
        // One edge, two non-edges.
        assert_eq!(
            exact_labeled_density("qr-graphon:p=3/10", &path).unwrap(),
            Some(q(147, 1000))
        );
        let t = theon_by_name("qr-tournamon:k=2").unwrap();
        let c3 = parse_model("n=3\nE: (1,2);(2,3);(3,1)\n", t.theory.sig.clone()).unwrap();
        assert_eq!(
            exact_labeled_density("qr-tournamon:k=2", &c3).unwrap(),
            Some(q(1, 8))
        );
        let o = theon_by_name("linear-order").unwrap();
        let m = parse_model("n=3\nPrec: (1,2);(2,3);(1,3)\n", o.theory.sig.clone()).unwrap();
        assert_eq!(
            exact_labeled_density("linear-order", &m).unwrap(),
            Some(q(1, 6))
        );
        assert_eq!(
            exact_labeled_density("skew-graphon:p=0.3", &path.clone()).unwrap(),
            None
        );
    }

    #[test]
    fn degenerate_densities() {
        let t = theon_by_name("qr-graphon:p=1").unwrap();
        let k2 = parse_model("n=2\nE: (1,2);(2,1)\n", t.theory.sig.clone()).unwrap();
        assert_eq!(
            exact_labeled_density("qr-graphon:p=1", &k2).unwrap(),
            Some(q(1, 1))
        );
        let e2 = parse_model("n=2\nE:\n", t.theory.sig.clone()).unwrap();
        assert_eq!(
            exact_labeled_density("qr-graphon:p=1", &e2).unwrap(),
            Some(q(0, 1))
        );
    }

    #[test]
    fn tuple_probabilities() {
        assert_eq!(
            tuple_probability("qr-graphon:p=3/10", 0).unwrap(),
            Some(q(3, 10))
        );
        assert_eq!(
            tuple_probability("qr-tournamon:k=3", 0).unwrap(),
            Some(q(1, 2))
        );
        assert_eq!(
            tuple_probability("coloring:c=2,p=1/4:3/4", 1).unwrap(),
            Some(q(3, 4))
        );
        assert_eq!(tuple_probability("skew-graphon:p=0.3", 0).unwrap(), None);
    }
}
