use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::relational::{canonical_form, to_text, Model};
use crate::testlab::stats::chi_square_independence;
use crate::testlab::{Decision, Estimate, TestReport};
use crate::theon::{Point, Sampler, Theon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalityMode {
    /// Marginals are labeled submodels.
    Labeled,
    /// Marginals are isomorphism types.
    Symmetric,
}

/// Joint frequencies of the marginals on several vertex sets.
#[derive(Debug, Clone)]
pub struct LocalityTable {
    pub sets: Vec<Vec<usize>>,
    pub mode: LocalityMode,
    pub n_samples: u64,
    /// Distinct marginals per set, sorted by code.
    pub categories: Vec<Vec<Model>>,
    /// Cell (category index per set) to count.
    pub joint: HashMap<Vec<usize>, u64>,
}

impl LocalityTable {
    fn index(&self, set: usize, m: &Model) -> Option<usize> {
        self.categories[set].iter().position(|c| c == m)
    }

    /// Frequency of the given marginals occurring together.
    pub fn joint_frequency(&self, marginals: &[Model]) -> f64 {
        let cell: Option<Vec<usize>> = marginals
            .iter()
            .enumerate()
            .map(|(i, m)| self.index(i, m))
            .collect();
        cell.and_then(|c| self.joint.get(&c))
            .map_or(0.0, |&c| c as f64 / self.n_samples as f64)
    }

    /// Frequency of marginal `m` on set `set`.
    pub fn marginal_frequency(&self, set: usize, m: &Model) -> f64 {
        let Some(i) = self.index(set, m) else {
            return 0.0;
        };
        let hits: u64 = self
            .joint
            .iter()
            .filter(|(c, _)| c[set] == i)
            .map(|(_, n)| n)
            .sum();
        hits as f64 / self.n_samples as f64
    }
}

fn marginal(m: &Model, set: &[usize], mode: LocalityMode) -> Model {
    let sub = m.induced(set);
    match mode {
        LocalityMode::Labeled => sub,
        LocalityMode::Symmetric => canonical_form(&sub).0,
    }
}

/// Samples the marginals of the realized model on each of `sets`
/// (0-based vertices).
pub fn locality_counts(
    t: &Theon,
    sets: &[Vec<usize>],
    mode: LocalityMode,
    n_samples: u64,
    sampler: &Sampler,
) -> Result<LocalityTable> {
    if sets.len() < 2 {
        return Err(Error::param("sets", "need at least two vertex sets"));
    }
    for s in sets {
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if s.is_empty() || sorted.len() != s.len() {
            return Err(Error::param(
                "sets",
                "every set must be nonempty without repeats",
            ));
        }
    }
    let n = sets.iter().flatten().max().map_or(0, |v| v + 1);
    if n > 12 {
        return Err(Error::param("sets", "vertices above 12 are not supported"));
    }
    let realizer = t.realizer(n);
    let parts = sampler.map_chunks(n_samples, |_, _, rng, draws| {
        let mut counts: HashMap<Vec<Model>, u64> = HashMap::new();
        let mut buf = realizer.empty_model();
        for _ in 0..draws {
            let theta = Point::sample(n, t.dim, t.max_arity(), rng);
            realizer.realize_into(&theta, &mut buf);
            let key: Vec<Model> = sets.iter().map(|s| marginal(&buf, s, mode)).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
        counts
    })?;
    let mut merged: HashMap<Vec<Model>, u64> = HashMap::new();
    for part in parts {
        for (k, c) in part {
            *merged.entry(k).or_insert(0) += c;
        }
    }
    let mut categories: Vec<Vec<Model>> = vec![Vec::new(); sets.len()];
    for key in merged.keys() {
        for (i, m) in key.iter().enumerate() {
            if !categories[i].contains(m) {
                categories[i].push(m.clone());
            }
        }
    }
    for c in &mut categories {
        c.sort_by_key(|a| a.code());
    }
    let joint = merged
        .into_iter()
        .map(|(key, c)| {
            let cell = key
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    categories[i]
                        .iter()
                        .position(|x| x == m)
                        .expect("collected above")
                })
                .collect();
            (cell, c)
        })
        .collect();
    Ok(LocalityTable {
        sets: sets.to_vec(),
        mode,
        n_samples,
        categories,
        joint,
    })
}

/// Chi-square test of the joint law of the marginals against the product
/// of their laws.
pub fn locality_test(
    t: &Theon,
    sets: &[Vec<usize>],
    mode: LocalityMode,
    n_samples: u64,
    alpha: f64,
    sampler: &Sampler,
) -> Result<TestReport> {
    let table = locality_counts(t, sets, mode, n_samples, sampler)?;
    let dims: Vec<usize> = table.categories.iter().map(Vec::len).collect();
    let chi = chi_square_independence(&dims, &table.joint);
    let reject = chi.p_value < alpha;

    // Cell with the largest standardized gap, scanned in cell order.
    let n = n_samples as f64;
    let marg: Vec<Vec<f64>> = table
        .categories
        .iter()
        .enumerate()
        .map(|(i, cats)| {
            cats.iter()
                .map(|m| table.marginal_frequency(i, m))
                .collect()
        })
        .collect();
    let mut cells: Vec<(&Vec<usize>, u64)> = table.joint.iter().map(|(c, n)| (c, *n)).collect();
    cells.sort();
    let mut worst: Option<(f64, Vec<usize>, f64, f64)> = None;
    for (cell, count) in cells {
        let joint = count as f64 / n;
        let prod: f64 = cell.iter().enumerate().map(|(i, &c)| marg[i][c]).product();
        let score = (joint - prod).abs() / (prod / n).sqrt().max(1.0 / n);
        if worst.as_ref().is_none_or(|w| score > w.0) {
            worst = Some((score, cell.clone(), joint, prod));
        }
    }
    let mut estimates = Vec::new();
    let mut evidence = None;
    if let Some((_, cell, joint, prod)) = worst {
        estimates.push(Estimate::new(
            "worst_cell_joint",
            joint,
            (joint * (1.0 - joint) / n).sqrt(),
        ));
        estimates.push(Estimate::new("worst_cell_product", prod, 0.0));
        if reject {
            evidence = Some(json!({
                "marginals": cell.iter().enumerate().map(|(i, &c)| to_text(&table.categories[i][c])).collect::<Vec<_>>(),
                "joint": joint,
                "product": prod,
                "df": chi.df,
                "pooled_cells": chi.pooled_cells,
            }));
        }
    }
    let intersections: Vec<(usize, usize, usize)> = (0..sets.len())
        .flat_map(|i| (i + 1..sets.len()).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, sets[i].iter().filter(|v| sets[j].contains(v)).count()))
        .collect();
    Ok(TestReport {
        test: "locality_test".into(),
        config: json!({
            "theon": t.name,
            "sets": sets.iter().map(|s| s.iter().map(|v| v + 1).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "intersection_sizes": intersections.iter().map(|&(i, j, c)| json!([i + 1, j + 1, c])).collect::<Vec<_>>(),
            "mode": mode,
            "n_samples": n_samples,
            "alpha": alpha,
            "seed": sampler.seed,
            "chunk_size": sampler.chunk_size,
        }),
        statistic: chi.statistic,
        p_value: Some(chi.p_value),
        decision: if reject {
            Decision::Reject
        } else {
            Decision::Pass
        },
        evidence,
        estimates,
        probe_family: format!(
            "{mode:?} marginals on the given sets, multiway chi-square against the product"
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testlab::DEFAULT_ALPHA;
    use crate::theon::theon_by_name;

    fn order_sets() -> Vec<Vec<usize>> {
        vec![vec![0, 1], vec![1, 2]]
    }

    #[test]
    fn linear_order_labeled_rejects() {
        let t = theon_by_name("linear-order").unwrap();
        let s = Sampler::new(5);
        let r = locality_test(
            &t,
            &order_sets(),
            LocalityMode::Labeled,
            100_000,
            DEFAULT_ALPHA,
            &s,
        )
        .unwrap();
        assert!(r.rejected());
        let table = locality_counts(&t, &order_sets(), LocalityMode::Labeled, 100_000, &s).unwrap();
        let sig = t.theory.sig.clone();
        let up = Model::from_tuples(sig, 2, &[("Prec", vec![vec![0, 1]])]).unwrap();
        let joint = table.joint_frequency(&[up.clone(), up.clone()]);
        assert!((joint - 1.0 / 6.0).abs() < 0.004, "{joint}");
        let prod = table.marginal_frequency(0, &up) * table.marginal_frequency(1, &up);
        assert!((prod - 0.25).abs() < 0.01, "{prod}");
    }

    #[test]
    fn symmetric_and_disjoint_pass() {
        let s = Sampler::new(6);
        let t = theon_by_name("linear-order").unwrap();
        let r = locality_test(
            &t,
            &order_sets(),
            LocalityMode::Symmetric,
            100_000,
            DEFAULT_ALPHA,
            &s,
        )
        .unwrap();
        assert!(r.passed());
        let g = theon_by_name("qr-graphon:p=0.5").unwrap();
        let sets = vec![vec![0, 1], vec![2, 3]];
        let r = locality_test(&g, &sets, LocalityMode::Labeled, 50_000, DEFAULT_ALPHA, &s).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
