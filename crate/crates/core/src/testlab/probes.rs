use serde_json::json;

use crate::error::{Error, Result};
use crate::testlab::{Decision, Estimate, TestReport};
use crate::theon::{DensityEstimate, Point, Sampler, Theon};

#[derive(Clone, Copy)]
enum Redraw {
    UpTo(usize),
    Above(usize),
}

/// Resamples the coordinates of sets of size at most `ell` and counts
/// trials where some predicate changes its membership on `(1..k)`. Any flip
/// rejects. This probes the given representation, not every representation
/// of the same limit.
pub fn independence_probe(
    t: &Theon,
    ell: usize,
    trials: u64,
    sampler: &Sampler,
) -> Result<TestReport> {
    if ell >= t.max_arity() {
        return Err(Error::param(
            "ell",
            format!("level {ell} must be below the arity {}", t.max_arity()),
        ));
    }
    flip_probe(
        "independence_probe",
        "ell",
        t,
        ell,
        Redraw::UpTo(ell),
        trials,
        sampler,
    )
}

/// Resamples the coordinates of sets larger than `r`; any flip rejects.
pub fn rank_probe(t: &Theon, r: usize, trials: u64, sampler: &Sampler) -> Result<TestReport> {
    flip_probe("rank_probe", "r", t, r, Redraw::Above(r), trials, sampler)
}

fn flip_probe(
    test: &str,
    key: &str,
    t: &Theon,
    level: usize,
    redraw: Redraw,
    trials: u64,
    sampler: &Sampler,
) -> Result<TestReport> {
    let sig = &t.theory.sig;
    let parts = sampler.map_chunks(trials, |_, first, rng, draws| {
        let mut flips = 0u64;
        let mut witness = None;
        for d in 0..draws {
            let mut flipped = false;
            for p in 0..sig.len() {
                let k = sig.arity(p);
                let mut x = Point::sample(k, t.dim, k, rng);
                let before = t.eval_membership(p, &x).unwrap_or(false);
                let original = x.clone();
                match redraw {
                    Redraw::UpTo(l) => x.resample_up_to(rng, l),
                    Redraw::Above(l) => x.resample_above(rng, l),
                }
                let after = t.eval_membership(p, &x).unwrap_or(false);
                if before != after {
                    flipped = true;
                    if witness.is_none() {
                        witness = Some(json!({
                            "trial": first + d,
                            "predicate": sig.name(p),
                            "before": point_json(&original),
                            "after": point_json(&x),
                            "membership_before": before,
                        }));
                    }
                }
            }
            if flipped {
                flips += 1;
            }
        }
        (flips, witness)
    })?;
    let flips: u64 = parts.iter().map(|p| p.0).sum();
    let witness = parts.into_iter().find_map(|p| p.1);
    let freq = DensityEstimate::from_counts(flips, trials, sampler.seed);
    Ok(TestReport {
        test: test.into(),
        config: json!({
            "theon": t.name,
            key: level,
            "trials": trials,
            "seed": sampler.seed,
            "chunk_size": sampler.chunk_size,
        }),
        statistic: freq.value,
        p_value: None,
        decision: if flips == 0 {
            Decision::Pass
        } else {
            Decision::Reject
        },
        evidence: witness,
        estimates: vec![Estimate::new("flip_frequency", freq.value, freq.stderr)],
        probe_family: match redraw {
            Redraw::UpTo(_) => {
                format!("redraw every coordinate of sets of size <= {level}, per predicate")
            }
            Redraw::Above(_) => {
                format!("redraw every coordinate of sets of size > {level}, per predicate")
            }
        },
    })
}

/// Coordinates keyed by 1-based vertex sets.
pub(crate) fn point_json(x: &Point) -> serde_json::Value {
    serde_json::Value::Array(
        x.subsets()
            .map(
                |s| json!({ "set": s, "x": (0..x.dim()).map(|f| x.get(s, f)).collect::<Vec<_>>() }),
            )
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theon::theon_by_name;

    fn run(name: &str, ell: usize, indep: bool) -> TestReport {
        let t = theon_by_name(name).unwrap();
        let s = Sampler::new(11);
        if indep {
            independence_probe(&t, ell, 10_000, &s).unwrap()
        } else {
            rank_probe(&t, ell, 10_000, &s).unwrap()
        }
    }

    #[test]
    fn independence_examples() {
        let r = run("constant-graphon:p=0.3", 1, true);
        assert!(r.passed() && r.statistic == 0.0 && r.evidence.is_none());
        let r = run("skew-graphon:p=0.3", 1, true);
        assert!(r.rejected());
        assert!((r.statistic - 0.42).abs() < 0.02, "{}", r.statistic);
        assert!(r.evidence.is_some());
        assert!(run("linear-order", 1, true).rejected());
        assert!(independence_probe(
            &theon_by_name("linear-order").unwrap(),
            2,
            10,
            &Sampler::new(0)
        )
        .is_err());
    }

    #[test]
    fn rank_examples() {
        assert!(run("linear-order", 1, false).passed());
        assert!(run("qr-graphon:p=0.5", 1, false).rejected());
        assert!(run("qr-tournamon:k=3", 3, false).passed());
        assert!(run("qr-tournamon:k=3", 2, false).rejected());
    }

    #[test]
    fn reproducible() {
        let a = run("skew-graphon:p=0.3", 1, true);
        let b = run("skew-graphon:p=0.3", 1, true);
        assert_eq!(a, b);
    }
}
