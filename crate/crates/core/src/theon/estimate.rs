use std::collections::{HashMap, HashSet};

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relational::{labeled_copies, Model};
use crate::theon::sampler::split_seed;
use crate::theon::{Point, Sampler, Theon};

/// Monte Carlo estimate of a probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl DensityEstimate {
    /// Bernoulli frequency with `stderr = sqrt(v(1-v)/n)`.
    pub fn from_counts(hits: u64, n_samples: u64, seed: u64) -> Self {
        let n = n_samples.max(1) as f64;
        let value = hits as f64 / n;
        DensityEstimate {
            value,
            stderr: (value * (1.0 - value) / n).sqrt(),
            n_samples,
            seed,
        }
    }

    /// Sample mean and standard error of a sequence of draws.
    pub fn from_moments(sum: f64, sum_sq: f64, n_samples: u64, seed: u64) -> Self {
        let n = n_samples.max(1) as f64;
        let mean = sum / n;
        let var = if n_samples > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        DensityEstimate {
            value: mean,
            stderr: (var / n).sqrt(),
            n_samples,
            seed,
        }
    }

    /// `(value - target) / stderr`; exact agreement gives 0 even when the
    /// standard error vanishes.
    pub fn z_against(&self, target: f64) -> f64 {
        let gap = self.value - target;
        if gap == 0.0 {
            0.0
        } else if self.stderr == 0.0 {
            gap.signum() * f64::INFINITY
        } else {
            gap / self.stderr
        }
    }
}

/// Labeled model frequencies on a fixed `[n]`.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub n_samples: u64,
    pub seed: u64,
    pub counts: HashMap<Model, u64>,
}

impl Histogram {
    pub fn count(&self, m: &Model) -> u64 {
        self.counts.get(m).copied().unwrap_or(0)
    }

    pub fn estimate(&self, m: &Model) -> DensityEstimate {
        DensityEstimate::from_counts(self.count(m), self.n_samples, self.seed)
    }

    /// Entries sorted by model code, for deterministic output.
    pub fn sorted(&self) -> Vec<(&Model, u64)> {
        let mut v: Vec<_> = self.counts.iter().map(|(m, c)| (m, *c)).collect();
        v.sort_by_key(|a| a.0.code());
        v
    }
}

fn check_model(t: &Theon, m: &Model) -> Result<()> {
    if **m.signature_arc() != *t.theory.sig {
        return Err(Error::InvalidModel(format!(
            "model over {} but the theon is over {}",
            m.signature(),
            t.theory.sig
        )));
    }
    let v = t.theory.check(m);
    if let Some(first) = v.first() {
        return Err(Error::AxiomViolation(format!(
            "model breaks axiom {} of {} at {:?}",
            first.axiom + 1,
            t.theory.name,
            first.assignment.iter().map(|x| x + 1).collect::<Vec<_>>()
        )));
    }
    Ok(())
}

/// Labeled and unlabeled densities of `m`: how often the realized model on
/// `[|m|]` equals `m`, and how often it is isomorphic to `m`.
pub fn estimate_density(
    t: &Theon,
    m: &Model,
    n_samples: u64,
    sampler: &Sampler,
) -> Result<(DensityEstimate, DensityEstimate)> {
    check_model(t, m)?;
    let n = m.n();
    let orbit: HashSet<Model> = labeled_copies(m).into_iter().collect();
    let realizer = t.realizer(n);
    let tally = sampler.tally(
        n_samples,
        2,
        || realizer.empty_model(),
        |buf, rng, acc| {
            let theta = Point::sample(n, t.dim, t.max_arity(), rng);
            realizer.realize_into(&theta, buf);
            if buf == m {
                acc[0] += 1;
            }
            if orbit.contains(buf) {
                acc[1] += 1;
            }
        },
    )?;
    Ok((
        DensityEstimate::from_counts(tally[0], n_samples, sampler.seed),
        DensityEstimate::from_counts(tally[1], n_samples, sampler.seed),
    ))
}

/// Frequencies of every labeled model realized on `[n]`.
pub fn labeled_histogram(
    t: &Theon,
    n: usize,
    n_samples: u64,
    sampler: &Sampler,
) -> Result<Histogram> {
    let realizer = t.realizer(n);
    let parts = sampler.map_chunks(n_samples, |_, _, rng, draws| {
        let mut counts: HashMap<Model, u64> = HashMap::new();
        let mut buf = realizer.empty_model();
        for _ in 0..draws {
            let theta = Point::sample(n, t.dim, t.max_arity(), rng);
            realizer.realize_into(&theta, &mut buf);
            match counts.get_mut(&buf) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(buf.clone(), 1);
                }
            }
        }
        counts
    })?;
    let mut counts: HashMap<Model, u64> = HashMap::new();
    for part in parts {
        for (m, c) in part {
            *counts.entry(m).or_insert(0) += c;
        }
    }
    Ok(Histogram {
        n_samples,
        seed: sampler.seed,
        counts,
    })
}

/// Conditional membership probability of `(1..k)` in `pred` given the
/// coordinates of `low` at sets of size at most `ell`; every coordinate
/// above `ell` is redrawn `inner_samples` times.
pub fn estimate_flattening(
    t: &Theon,
    pred: usize,
    ell: usize,
    low: &Point,
    inner_samples: u64,
    sampler: &Sampler,
) -> Result<DensityEstimate> {
    let k = t.theory.sig.arity(pred);
    if ell >= k {
        return Err(Error::param(
            "ell",
            format!("level {ell} must be below the arity {k}"),
        ));
    }
    if low.n() != k || low.dim() != t.dim {
        return Err(Error::param(
            "low",
            format!("expected a point on [{k}] of dimension {}", t.dim),
        ));
    }
    let mut base = Point::empty(k, t.dim, k);
    for set in base
        .subsets()
        .filter(|s| s.len() <= ell)
        .collect::<Vec<_>>()
    {
        for f in 0..t.dim {
            base.set(set, f, low.get(set, f));
        }
    }
    let hits = sampler.count(
        inner_samples,
        || base.clone(),
        |x, rng| {
            x.resample_above(rng, ell);
            t.eval_membership(pred, x).unwrap_or(false)
        },
    )?;
    Ok(DensityEstimate::from_counts(
        hits,
        inner_samples,
        sampler.seed,
    ))
}

/// Labeled density of `m` as the average, over coordinates of sets below
/// the arity, of the product over `k`-sets `A` of the conditional
/// probability that the realized pattern on `A` matches `m` on `A`.
///
/// Every predicate must have the same arity `k`. Inner estimates for the
/// `k`-sets use independent streams seeded from (outer seed, draw index).
pub fn estimate_density_via_flattenings(
    t: &Theon,
    m: &Model,
    outer_samples: u64,
    inner_samples: u64,
    sampler: &Sampler,
) -> Result<DensityEstimate> {
    check_model(t, m)?;
    let sig = &t.theory.sig;
    let k = sig.arity(0);
    if (0..sig.len()).any(|p| sig.arity(p) != k) {
        return Err(Error::param("theon", "all predicates must share one arity"));
    }
    let n = m.n();
    let ksets: Vec<Vec<usize>> = (0..n).combinations(k).collect();
    let pieces: Vec<(Model, Vec<usize>)> =
        ksets.iter().map(|a| (m.induced(a), a.clone())).collect();
    let realizer = t.realizer(k);
    let inner_seed = split_seed(sampler.seed, u64::MAX);
    let parts = sampler.map_chunks(outer_samples, |_, first, rng, draws| {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut buf = realizer.empty_model();
        for d in 0..draws {
            let mut inner = ChaCha8Rng::seed_from_u64(split_seed(inner_seed, first + d));
            let theta = Point::sample(n, t.dim, k - 1, rng);
            let mut prod = 1.0;
            for (piece, verts) in &pieces {
                let mut local = theta.project(verts);
                local = widen(&local, k);
                let mut hits = 0u64;
                for _ in 0..inner_samples {
                    local.resample_above(&mut inner, k - 1);
                    realizer.realize_into(&local, &mut buf);
                    if buf == *piece {
                        hits += 1;
                    }
                }
                prod *= hits as f64 / inner_samples as f64;
                if prod == 0.0 {
                    break;
                }
            }
            sum += prod;
            sum_sq += prod * prod;
        }
        (sum, sum_sq)
    })?;
    let (sum, sum_sq) = parts
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(DensityEstimate::from_moments(
        sum,
        sum_sq,
        outer_samples,
        sampler.seed,
    ))
}

/// Same coordinates with room for sets up to size `arity`.
fn widen(p: &Point, arity: usize) -> Point {
    let mut out = Point::empty(p.n(), p.dim(), arity);
    for set in p.subsets() {
        for f in 0..p.dim() {
            out.set(set, f, p.get(set, f));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Theory;
    use crate::theon::theon_by_name;

    fn c3() -> Model {
        let sig = Theory::tournament(2).sig;
        Model::from_tuples(sig, 3, &[("E", vec![vec![0, 1], vec![1, 2], vec![2, 0]])]).unwrap()
    }

    #[test]
    fn tournamon_three_cycle() {
        let t = theon_by_name("qr-tournamon:k=2").unwrap();
        let (lab, unlab) = estimate_density(&t, &c3(), 200_000, &Sampler::new(7)).unwrap();
        assert!(lab.z_against(0.125).abs() < 4.0, "{lab:?}");
        assert!(unlab.z_against(0.25).abs() < 4.0, "{unlab:?}");
    }

    #[test]
    fn empty_graphon_gives_exact_zero() {
        let t = theon_by_name("qr-graphon:p=0").unwrap();
        let sig = t.theory.sig.clone();
        let edge = Model::from_tuples(sig, 2, &[("E", vec![vec![0, 1], vec![1, 0]])]).unwrap();
        let (lab, unlab) = estimate_density(&t, &edge, 10_000, &Sampler::new(1)).unwrap();
        assert_eq!((lab.value, unlab.value), (0.0, 0.0));
    }

    #[test]
    fn rejects_non_models() {
        let t = theon_by_name("qr-tournamon:k=2").unwrap();
        let sig = t.theory.sig.clone();
        let bad = Model::from_tuples(sig, 2, &[("E", vec![vec![0, 1], vec![1, 0]])]).unwrap();
        assert!(estimate_density(&t, &bad, 10, &Sampler::new(1)).is_err());
    }

    #[test]
    fn histogram_totals() {
        let t = theon_by_name("qr-tournamon:k=2").unwrap();
        let h = labeled_histogram(&t, 3, 50_000, &Sampler::new(2).with_chunk_size(4096)).unwrap();
        assert_eq!(h.counts.len(), 8);
        assert_eq!(h.counts.values().sum::<u64>(), 50_000);
    }

    #[test]
    fn flattenings_of_graphons() {
        let s = Sampler::new(3);
        for name in ["constant-graphon:p=0.3", "skew-graphon:p=0.3"] {
            let t = theon_by_name(name).unwrap();
            for seed in 0..3 {
                let low = crate::theon::sample_theta(2, 1, 1, seed);
                let w = estimate_flattening(&t, 0, 1, &low, 20_000, &s).unwrap();
                assert!(w.z_against(0.3).abs() < 4.0, "{name}: {w:?}");
            }
        }
    }
}
