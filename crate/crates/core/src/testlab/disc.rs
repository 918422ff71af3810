use std::collections::HashMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use serde_json::json;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::logic::Theory;
use crate::relational::{enumerate_labeled, to_text, Model, Signature, DEFAULT_BUDGET};
use crate::testlab::stats::normal_two_sided;
use crate::testlab::{gap_z, Decision, Estimate, TestReport, DEFAULT_ALPHA, Z_THRESHOLD};
use crate::theon::{
    dev_two_coloring, estimate_flattening, sample_theta, split_seed, Cmp, Component,
    DensityEstimate, Point, Sampler, Theon, TheonExpr, VSet,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueDiscConfig {
    pub ell: usize,
    /// Random low points at which the flattening is estimated.
    pub probes: usize,
    pub inner_samples: u64,
    /// Linear hosts; empty means [`default_linear_hosts`].
    #[serde(skip)]
    pub hosts: Vec<Model>,
    pub host_samples: u64,
    pub alpha: f64,
}

impl CliqueDiscConfig {
    pub fn new(ell: usize) -> Self {
        CliqueDiscConfig {
            ell,
            probes: 16,
            inner_samples: 20_000,
            hosts: Vec::new(),
            host_samples: 200_000,
            alpha: DEFAULT_ALPHA,
        }
    }
}

fn edge_sets(m: &Model) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = m
        .tuples(0)
        .into_iter()
        .map(|mut t| {
            t.sort_unstable();
            t
        })
        .collect();
    sets.sort();
    sets.dedup();
    sets
}

fn hypergraph_from_edges(sig: &std::sync::Arc<Signature>, n: usize, edges: &[Vec<usize>]) -> Model {
    let mut m = Model::empty(sig.clone(), n);
    for e in edges {
        for perm in e.iter().copied().permutations(e.len()) {
            m.insert(0, &perm).expect("edge inside [n]");
        }
    }
    m
}

/// One edge; two edges sharing `ell` vertices; and for graphs the triangle.
pub fn default_linear_hosts(sig: &std::sync::Arc<Signature>, ell: usize) -> Vec<Model> {
    let k = sig.arity(0);
    let mut hosts = vec![hypergraph_from_edges(sig, k, &[(0..k).collect()])];
    if ell < k {
        let second: Vec<usize> = (0..ell).chain(k..2 * k - ell).collect();
        hosts.push(hypergraph_from_edges(
            sig,
            2 * k - ell,
            &[(0..k).collect(), second],
        ));
    }
    if k == 2 && ell >= 1 {
        hosts.push(hypergraph_from_edges(
            sig,
            3,
            &[vec![0, 1], vec![1, 2], vec![0, 2]],
        ));
    }
    hosts
}

/// Two sub-tests on a single-predicate theon, Bonferroni-combined.
/// (a) Flattening constancy: the conditional edge probability given the
/// coordinates of sets of size at most `ell` is estimated at random low
/// points and tested for homogeneity. (b) For every `ell`-linear host `H`,
/// the probability that all edges of `H` are present is compared with
/// `p^e(H)`, where `p` is the pooled edge probability from (a).
pub fn clique_disc_test(
    t: &Theon,
    cfg: &CliqueDiscConfig,
    sampler: &Sampler,
) -> Result<TestReport> {
    let sig = t.theory.sig.clone();
    if sig.len() != 1 {
        return Err(Error::param(
            "theon",
            "expected a single hypergraph predicate",
        ));
    }
    let k = sig.arity(0);
    if cfg.ell == 0 || cfg.ell >= k {
        return Err(Error::param("ell", format!("need 1 <= ell < k = {k}")));
    }
    if cfg.probes < 2 {
        return Err(Error::param("probes", "need at least two probe points"));
    }
    let mut hits = Vec::with_capacity(cfg.probes);
    for i in 0..cfg.probes {
        let low = sample_theta(k, t.dim, cfg.ell, split_seed(sampler.seed, i as u64));
        let w = estimate_flattening(
            t,
            0,
            cfg.ell,
            &low,
            cfg.inner_samples,
            &sampler.derive(i as u64 + 1),
        )?;
        hits.push((w.value * cfg.inner_samples as f64).round());
    }
    let inner = cfg.inner_samples as f64;
    let total = inner * cfg.probes as f64;
    let pbar = hits.iter().sum::<f64>() / total;
    let se_p = (pbar * (1.0 - pbar) / total).sqrt();
    let (flat_stat, flat_p) = if pbar <= 0.0 || pbar >= 1.0 {
        (0.0, 1.0)
    } else {
        let stat: f64 = hits
            .iter()
            .map(|h| (h - inner * pbar).powi(2) / (inner * pbar * (1.0 - pbar)))
            .sum();
        let dist = ChiSquared::new((cfg.probes - 1) as f64).expect("positive df");
        (stat, dist.sf(stat))
    };
    let spread = hits
        .iter()
        .map(|h| h / inner)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| {
            (a.0.min(v), a.1.max(v))
        });

    let hosts = if cfg.hosts.is_empty() {
        default_linear_hosts(&sig, cfg.ell)
    } else {
        cfg.hosts.clone()
    };
    let mut host_results = Vec::new();
    for (hi, h) in hosts.iter().enumerate() {
        if **h.signature_arc() != *sig {
            return Err(Error::InvalidModel(
                "host signature differs from the theon's".into(),
            ));
        }
        let edges = edge_sets(h);
        for (a, b) in edges.iter().tuple_combinations() {
            if a.iter().filter(|v| b.contains(v)).count() > cfg.ell {
                return Err(Error::param(
                    "hosts",
                    format!("host {} is not {}-linear", hi + 1, cfg.ell),
                ));
            }
        }
        let tuples: Vec<Vec<usize>> = h.tuples(0);
        let realizer = t.realizer(h.n());
        let s = sampler.derive(1_000_000 + hi as u64);
        let count = s.count(
            cfg.host_samples,
            || realizer.empty_model(),
            |buf, rng| {
                let theta = Point::sample(h.n(), t.dim, t.max_arity(), rng);
                realizer.realize_into(&theta, buf);
                tuples.iter().all(|tp| buf.contains(0, tp))
            },
        )?;
        let q = DensityEstimate::from_counts(count, cfg.host_samples, s.seed);
        let e = edges.len() as i32;
        let target = pbar.powi(e);
        let se_target = if e == 0 {
            0.0
        } else {
            e as f64 * pbar.powi(e - 1) * se_p
        };
        let z = gap_z(
            q.value,
            q.stderr,
            target,
            se_target,
            1.0 / cfg.host_samples as f64,
        );
        host_results.push((to_text(h), edges.len(), q, target, z, normal_two_sided(z)));
    }
    let tests = 1 + host_results.len();
    let mut min_p = flat_p;
    let mut worst =
        json!({ "subtest": "flattening", "chi_square": flat_stat, "df": cfg.probes - 1 });
    for (text, e, q, target, z, p) in &host_results {
        if *p < min_p {
            min_p = *p;
            worst = json!({ "subtest": "linear_host", "host": text, "edges": e, "density": q.value, "target": target, "z": z });
        }
    }
    let reject = min_p < cfg.alpha / tests as f64;
    let mut estimates = vec![
        Estimate::new("edge_probability", pbar, se_p),
        Estimate::new("flattening_min", spread.0, 0.0),
        Estimate::new("flattening_max", spread.1, 0.0),
        Estimate::new("flattening_p_value", flat_p, 0.0),
    ];
    for (i, (_, _, q, target, _, _)) in host_results.iter().enumerate() {
        estimates.push(Estimate::new(
            format!("host_{}_density", i + 1),
            q.value,
            q.stderr,
        ));
        estimates.push(Estimate::new(
            format!("host_{}_target", i + 1),
            *target,
            0.0,
        ));
    }
    Ok(TestReport {
        test: "clique_disc_test".into(),
        config: json!({
            "theon": t.name,
            "ell": cfg.ell,
            "probes": cfg.probes,
            "inner_samples": cfg.inner_samples,
            "hosts": host_results.iter().map(|h| &h.0).collect::<Vec<_>>(),
            "host_samples": cfg.host_samples,
            "alpha": cfg.alpha,
            "seed": sampler.seed,
            "chunk_size": sampler.chunk_size,
        }),
        statistic: flat_stat,
        p_value: Some((min_p * tests as f64).min(1.0)),
        decision: if reject {
            Decision::Reject
        } else {
            Decision::Pass
        },
        evidence: reject.then_some(worst),
        estimates,
        probe_family: format!(
            "flattening at {} random low points and {} {}-linear hosts",
            cfg.probes,
            host_results.len(),
            cfg.ell
        ),
    })
}

/// Membership of a 0-based tuple in a predicate, one conjunct of a Disc
/// event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscEvent {
    pub pred: usize,
    pub tuple: Vec<usize>,
}

/// Compares `P[edge and all events]` with `P[edge] * P[all events]` on the
/// realized model on `[k]`. Rejects past four combined standard errors.
pub fn disc_test(
    c: &Theon,
    edge: usize,
    events: &[DiscEvent],
    n_samples: u64,
    sampler: &Sampler,
) -> Result<TestReport> {
    let sig = &c.theory.sig;
    if edge >= sig.len() {
        return Err(Error::param("edge", "predicate index out of range"));
    }
    let k = sig.arity(edge);
    if events.is_empty() {
        return Err(Error::param("events", "need at least one event"));
    }
    for e in events {
        if e.pred >= sig.len()
            || sig.arity(e.pred) != e.tuple.len()
            || e.tuple.iter().any(|&v| v >= k)
        {
            return Err(Error::param(
                "events",
                "event tuple must fit its predicate inside [k]",
            ));
        }
    }
    let edge_tuple: Vec<usize> = (0..k).collect();
    let realizer = c.realizer(k);
    let tally = sampler.tally(
        n_samples,
        3,
        || realizer.empty_model(),
        |buf, rng, acc| {
            let theta = Point::sample(k, c.dim, c.max_arity().min(k), rng);
            realizer.realize_into(&theta, buf);
            let e = buf.contains(edge, &edge_tuple);
            let p = events.iter().all(|ev| buf.contains(ev.pred, &ev.tuple));
            acc[0] += e as u64;
            acc[1] += p as u64;
            acc[2] += (e && p) as u64;
        },
    )?;
    let pe = DensityEstimate::from_counts(tally[0], n_samples, sampler.seed);
    let pp = DensityEstimate::from_counts(tally[1], n_samples, sampler.seed);
    let joint = DensityEstimate::from_counts(tally[2], n_samples, sampler.seed);
    let product = pe.value * pp.value;
    let se_prod = ((pp.value * pe.stderr).powi(2) + (pe.value * pp.stderr).powi(2)).sqrt();
    let z = gap_z(
        joint.value,
        joint.stderr,
        product,
        se_prod,
        1.0 / n_samples as f64,
    );
    let reject = z.abs() > Z_THRESHOLD;
    Ok(TestReport {
        test: "disc_test".into(),
        config: json!({
            "theon": c.name,
            "edge": sig.name(edge),
            "events": events.iter().map(|e| json!({
                "predicate": sig.name(e.pred),
                "tuple": e.tuple.iter().map(|v| v + 1).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "n_samples": n_samples,
            "seed": sampler.seed,
            "chunk_size": sampler.chunk_size,
        }),
        statistic: z,
        p_value: Some(normal_two_sided(z)),
        decision: if reject {
            Decision::Reject
        } else {
            Decision::Pass
        },
        evidence: reject.then(|| json!({ "joint": joint.value, "product": product, "z": z })),
        estimates: vec![
            Estimate::new("edge", pe.value, pe.stderr),
            Estimate::new("events", pp.value, pp.stderr),
            Estimate::new("joint", joint.value, joint.stderr),
            Estimate::new("product", product, se_prod),
        ],
        probe_family: "edge event against the conjunction of the given events".into(),
    })
}

/// `t` together with one extra predicate `name` of arity `arity` read from
/// the same coordinates through `expr`.
pub fn with_probe(t: &Theon, name: &str, arity: usize, expr: TheonExpr) -> Result<Theon> {
    let side = Theory::pure(format!("probe:{name}"), Signature::new([(name, arity)])?);
    let theory = t.theory.union(&side)?;
    let m = t.peons.len();
    let mut peons = t.peons.clone();
    peons.push(expr);
    let mut out = Theon::new(format!("{}+{name}", t.name), theory, t.dim, peons)?;
    out.components = vec![
        Component {
            theory: t.theory.clone(),
            preds: (0..m).collect(),
            offset: 0,
            dim: t.dim,
        },
        Component {
            theory: side,
            preds: vec![m],
            offset: 0,
            dim: t.dim,
        },
    ];
    Ok(out)
}

/// Probe couplings for the `(k-1)`-sets containing vertex 1: a predicate of
/// arity `k-1` holding when its top coordinate is below `c` for
/// `c = 0.1, ..., 0.9`, and one holding when all its first-order
/// coordinates are at least 1/2. Each comes with its Disc events.
pub fn dev_probe_couplings(t: &Theon) -> Result<Vec<(String, Theon, Vec<DiscEvent>)>> {
    let k = t.theory.sig.arity(0);
    if t.theory.sig.len() != 1 || k < 2 {
        return Err(Error::param(
            "theon",
            "expected a single predicate of arity at least 2",
        ));
    }
    let pred = t.peons.len();
    let events: Vec<DiscEvent> = (0..k)
        .combinations(k - 1)
        .filter(|a| a.contains(&0))
        .map(|tuple| DiscEvent { pred, tuple })
        .collect();
    let mut probes: Vec<(String, TheonExpr)> = (1..=9)
        .map(|i| {
            let c = i as f64 / 10.0;
            (
                format!("top<{c}"),
                TheonExpr::thresh(VSet::full(k - 1), Cmp::Lt, c),
            )
        })
        .collect();
    probes.push((
        "min_first>=1/2".into(),
        TheonExpr::MinFirst {
            factor: 0,
            op: Cmp::Ge,
            c: 0.5,
        },
    ));
    probes
        .into_iter()
        .map(|(label, e)| Ok((label, with_probe(t, "P", k - 1, e)?, events.clone())))
        .collect()
}

/// Compares the two colorings of the Dev theon on models whose vertices all
/// carry color 1: labeled densities of every such hypergraph with `k` to
/// `max_size` vertices under both colorings. Rejects when some model's gap
/// exceeds four combined standard errors; the witness is the largest gap.
pub fn two_coloring_falsifier(
    k: usize,
    p: f64,
    max_size: usize,
    n_samples: u64,
    sampler: &Sampler,
) -> Result<TestReport> {
    if max_size < k || max_size > 6 {
        return Err(Error::param(
            "max_size",
            format!("need k <= max_size <= 6, k = {k}"),
        ));
    }
    let h1 = dev_two_coloring(k, p, 1)?;
    let h2 = dev_two_coloring(k, p, 2)?;
    let sig = h1.theory.sig.clone();
    let mut rows = Vec::new();
    for n in k..=max_size {
        let graphs = enumerate_labeled(&Theory::hypergraph(k), n, DEFAULT_BUDGET)?;
        let targets: Vec<Model> = graphs
            .iter()
            .map(|g| {
                let mut m = Model::empty(sig.clone(), n);
                for tp in g.tuples(0) {
                    m.insert(0, &tp).expect("inside [n]");
                }
                for v in 0..n {
                    m.insert(1, &[v]).expect("inside [n]");
                }
                m
            })
            .collect();
        let index: HashMap<&Model, usize> =
            targets.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let count = |t: &Theon, s: &Sampler| -> Result<Vec<u64>> {
            let realizer = t.realizer(n);
            s.tally(
                n_samples,
                targets.len(),
                || realizer.empty_model(),
                |buf, rng, acc| {
                    let theta = Point::sample(n, t.dim, t.max_arity(), rng);
                    realizer.realize_into(&theta, buf);
                    if let Some(&i) = index.get(buf) {
                        acc[i] += 1;
                    }
                },
            )
        };
        let s1 = sampler.derive(2 * n as u64);
        let s2 = sampler.derive(2 * n as u64 + 1);
        let c1 = count(&h1, &s1)?;
        let c2 = count(&h2, &s2)?;
        for (i, m) in targets.iter().enumerate() {
            let a = DensityEstimate::from_counts(c1[i], n_samples, s1.seed);
            let b = DensityEstimate::from_counts(c2[i], n_samples, s2.seed);
            let z = gap_z(a.value, a.stderr, b.value, b.stderr, 1.0 / n_samples as f64);
            rows.push((m.clone(), a, b, z));
        }
    }
    let (wm, wa, wb, wz) = rows
        .iter()
        .fold(
            None::<&(Model, DensityEstimate, DensityEstimate, f64)>,
            |best, r| match best {
                Some(b) if b.3.abs() >= r.3.abs() => Some(b),
                _ => Some(r),
            },
        )
        .cloned()
        .expect("at least one target model");
    let reject = wz.abs() > Z_THRESHOLD;
    Ok(TestReport {
        test: "two_coloring_falsifier".into(),
        config: json!({
            "k": k,
            "p": p,
            "max_size": max_size,
            "n_samples": n_samples,
            "seed": sampler.seed,
            "chunk_size": sampler.chunk_size,
        }),
        statistic: wz,
        p_value: Some(normal_two_sided(wz)),
        decision: if reject { Decision::Reject } else { Decision::Pass },
        evidence: reject.then(|| {
            json!({ "model": to_text(&wm), "size": wm.n(), "coloring_1": wa.value, "coloring_2": wb.value, "z": wz })
        }),
        estimates: vec![
            Estimate::new("witness_coloring_1", wa.value, wa.stderr),
            Estimate::new("witness_coloring_2", wb.value, wb.stderr),
            Estimate::new("models_compared", rows.len() as f64, 0.0),
        ],
        probe_family: format!("all color-1 {k}-hypergraphs on {k}..={max_size} vertices"),
    })
}
