use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::relational::{to_text, Model};
use crate::testlab::stats::normal_two_sided;
use crate::testlab::{gap_z, Decision, Estimate, TestReport, Z_THRESHOLD};
use crate::theon::{labeled_histogram, DensityEstimate, Sampler, Theon};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupleabilityConfig {
    pub n_samples: u64,
    /// Models on `[1]` up to `[max_model_size]` are scanned.
    pub max_model_size: usize,
}

/// Compares the labeled density of every coupled model with the product of
/// the densities of its two reducts, all estimated from one histogram per
/// size. Every pair of observed reducts is scored, so a combination that
/// never occurs but should counts as well. Rejects when the largest gap
/// exceeds four combined standard errors (floored at `1/n`).
pub fn coupleability_falsifier(
    c: &Theon,
    cfg: &CoupleabilityConfig,
    sampler: &Sampler,
) -> Result<TestReport> {
    if c.components.len() != 2 {
        return Err(Error::param(
            "candidate",
            "expected a coupling with two components",
        ));
    }
    if cfg.max_model_size == 0 || cfg.max_model_size > 5 {
        return Err(Error::param(
            "max_model_size",
            "need a size between 1 and 5",
        ));
    }
    let (a, b) = (&c.components[0], &c.components[1]);
    let n = cfg.n_samples as f64;
    let floor = 1.0 / n;
    let mut scanned = 0usize;
    let mut worst: Option<(f64, Model, f64, f64, f64, f64)> = None;
    for size in 1..=cfg.max_model_size {
        let s = sampler.derive(size as u64);
        let hist = labeled_histogram(c, size, cfg.n_samples, &s)?;
        let mut ra: HashMap<Model, u64> = HashMap::new();
        let mut rb: HashMap<Model, u64> = HashMap::new();
        for (m, &count) in &hist.counts {
            *ra.entry(m.reduct(a.theory.sig.clone(), &a.preds))
                .or_insert(0) += count;
            *rb.entry(m.reduct(b.theory.sig.clone(), &b.preds))
                .or_insert(0) += count;
        }
        let mut ra: Vec<(Model, u64)> = ra.into_iter().collect();
        let mut rb: Vec<(Model, u64)> = rb.into_iter().collect();
        ra.sort_by_key(|x| x.0.code());
        rb.sort_by_key(|x| x.0.code());
        for (ma, ca) in &ra {
            for (mb, cb) in &rb {
                let joint_model = combine(c, &[(&a.preds, ma), (&b.preds, mb)]);
                let joint =
                    DensityEstimate::from_counts(hist.count(&joint_model), cfg.n_samples, s.seed);
                let pa = DensityEstimate::from_counts(*ca, cfg.n_samples, s.seed);
                let pb = DensityEstimate::from_counts(*cb, cfg.n_samples, s.seed);
                let prod = pa.value * pb.value;
                let se_prod =
                    ((pb.value * pa.stderr).powi(2) + (pa.value * pb.stderr).powi(2)).sqrt();
                let z = gap_z(joint.value, joint.stderr, prod, se_prod, floor);
                scanned += 1;
                if worst.as_ref().is_none_or(|w| z.abs() > w.0.abs()) {
                    worst = Some((z, joint_model, joint.value, joint.stderr, prod, se_prod));
                }
            }
        }
    }
    let (z, model, joint, se_joint, prod, se_prod) = worst.expect("size 1 always yields a model");
    let reject = z.abs() > Z_THRESHOLD;
    Ok(TestReport {
        test: "coupleability_falsifier".into(),
        config: json!({
            "candidate": c.name,
            "n_samples": cfg.n_samples,
            "max_model_size": cfg.max_model_size,
            "seed": sampler.seed,
            "chunk_size": sampler.chunk_size,
        }),
        statistic: z,
        p_value: Some(normal_two_sided(z)),
        decision: if reject { Decision::Reject } else { Decision::Pass },
        evidence: reject.then(|| {
            json!({ "model": to_text(&model), "size": model.n(), "joint": joint, "product": prod, "z": z })
        }),
        estimates: vec![
            Estimate::new("witness_joint", joint, se_joint),
            Estimate::new("witness_product", prod, se_prod),
            Estimate::new("pairs_scanned", scanned as f64, 0.0),
        ],
        probe_family: format!("all pairs of observed reducts on [1]..[{}]", cfg.max_model_size),
    })
}

/// The coupled model whose reducts are the given component models.
fn combine(c: &Theon, parts: &[(&Vec<usize>, &Model)]) -> Model {
    let mut out = Model::empty(c.theory.sig.clone(), parts[0].1.n());
    for (preds, m) in parts {
        for (local, &global) in preds.iter().enumerate() {
            for t in m.tuples(local) {
                out.insert(global, &t).expect("same vertex set");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theon::{diagonal_self_coupling, independent_coupling, theon_by_name, Renaming};

    #[test]
    fn diagonal_rejected_independent_passes() {
        let g = theon_by_name("qr-graphon:p=0.5").unwrap();
        let s = Sampler::new(8);
        let cfg = CoupleabilityConfig {
            n_samples: 100_000,
            max_model_size: 2,
        };
        let r = coupleability_falsifier(&diagonal_self_coupling(&g).unwrap(), &cfg, &s).unwrap();
        assert!(r.rejected());
        assert!(r.statistic.abs() >= 5.0);
        let ind = independent_coupling(&[&g, &g], Renaming::Suffix).unwrap();
        assert!(coupleability_falsifier(&ind, &cfg, &s).unwrap().passed());
        let o = theon_by_name("linear-order").unwrap();
        let go = independent_coupling(&[&g, &o], Renaming::Keep).unwrap();
        let cfg3 = CoupleabilityConfig {
            n_samples: 100_000,
            max_model_size: 3,
        };
        assert!(coupleability_falsifier(&go, &cfg3, &s).unwrap().passed());
    }
}
