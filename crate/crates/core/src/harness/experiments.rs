use std::collections::BTreeMap;
use std::sync::Arc;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::json;

use crate::calculus::delta1_eval;
use crate::error::{Error, Result};
use crate::harness::args::{to_f64, Args, Params};
use crate::harness::commands::resolve_theon;
use crate::harness::oracle::tuple_probability;
use crate::harness::{Check, OracleValue, Report};
use crate::logic::{alternating_copies, is_even, Theory};
use crate::relational::{canonical_form, factorial, Model, Signature};
use crate::testlab::{
    coupleability_falsifier, dev_probe_couplings, disc_test, gap_z, independence_probe,
    locality_test, normal_two_sided, two_coloring_falsifier, weak_independence_test,
    CoupleabilityConfig, Decision, DiscEvent, Estimate, LocalityMode, WeakIndependenceConfig,
    DEFAULT_ALPHA,
};
use crate::theon::{
    diagonal_self_coupling, independence_not_disc, independence_not_disc_coupling,
    independent_coupling, interpret_theon, interpretation_by_name, linear_order, theon_by_name,
    tournament_np_order, CatalogEntry, DensityEstimate, Point, Renaming, Sampler,
};

pub const EXPERIMENTS: &[CatalogEntry] = &[
    CatalogEntry {
        name: "sep-ucouple-independence",
        params: "ell",
        about: "qr-tournamon:k=ell+1 passes weak independence at ell and fails the independence probe",
    },
    CatalogEntry {
        name: "sep-uinduce-ucouple",
        params: "ell,p",
        about: "tournament-np-order through alternating copies: two ordered hypergraphs against an exact census",
    },
    CatalogEntry {
        name: "sep-dev-uinduce",
        params: "k,p,max-size,probe-samples",
        about: "dev-not-uinduce: Disc probes on the sets through vertex 1, and the two-coloring falsifier",
    },
    CatalogEntry {
        name: "sep-independence-disc",
        params: "k,ell,p",
        about: "independence-not-disc passes the independence probe and fails its adversarial Disc test",
    },
    CatalogEntry {
        name: "sep-uinduce-ucouple-order",
        params: "max-level,alpha",
        about: "linear order passes symmetric locality and fails weak independence at 1",
    },
    CatalogEntry {
        name: "alternating-census",
        params: "k",
        about: "most copies of the alternating k-tournament on k+1 vertices inside a k-tournament on k+2",
    },
    CatalogEntry {
        name: "self-coupling",
        params: "theon,max-size",
        about: "diagonal against independent self-coupling, with delta1 upper bounds",
    },
];

pub(crate) fn run(
    name: &str,
    params: &Params,
    n: Option<u64>,
    sampler: &Sampler,
) -> Result<Report> {
    match name {
        "sep-ucouple-independence" => ucouple_independence(params, n, sampler),
        "sep-uinduce-ucouple" => uinduce_ucouple(params, n, sampler),
        "sep-dev-uinduce" => dev_uinduce(params, n, sampler),
        "sep-independence-disc" => independence_disc(params, n, sampler),
        "sep-uinduce-ucouple-order" => uinduce_order(params, n, sampler),
        "alternating-census" => alternating_census(params),
        "self-coupling" => self_coupling(params, n, sampler),
        other => Err(Error::UnknownEntry(other.to_string())),
    }
}

fn command(name: &str) -> String {
    format!("run:{name}")
}

fn half() -> BigRational {
    BigRational::new(1.into(), 2.into())
}

fn ucouple_independence(params: &Params, n: Option<u64>, sampler: &Sampler) -> Result<Report> {
    let mut a = Args::new(params);
    let ell = a.usize("ell", Some(1))?;
    let alpha = a.alpha(DEFAULT_ALPHA)?;
    let params = a.finish()?;
    if !(1..=4).contains(&ell) {
        return Err(Error::param("ell", "need 1 <= ell <= 4"));
    }
    let n = n.unwrap_or(200_000);
    let t = theon_by_name(&format!("qr-tournamon:k={}", ell + 1))?;
    let mut cfg = WeakIndependenceConfig::new(ell, ell + 2, n);
    cfg.alpha = alpha;
    let weak = weak_independence_test(&t, &cfg, &sampler.derive(0))?;
    let probe = independence_probe(&t, ell, n, &sampler.derive(1))?;
    let mut r = Report::new(&command("sep-ucouple-independence"), params, sampler, n);
    let flips = probe
        .estimate("flip_frequency")
        .cloned()
        .expect("probe reports flips");
    // Redrawing the singletons re-randomizes the rank parity; the top
    // coordinate stays, so membership flips with probability 1/2.
    r.oracle.push(OracleValue::exact("flip_frequency", &half()));
    r.checks
        .push(Check::decision("weak_independence", &weak, Decision::Pass));
    r.checks.push(Check::decision(
        "independence_probe",
        &probe,
        Decision::Reject,
    ));
    r.checks.push(Check::z(
        "flip_frequency_vs_oracle",
        gap_z(flips.value, flips.stderr, 0.5, 0.0, 1.0 / n as f64),
    ));
    r.estimates.push(flips);
    r.statistic = Some(weak.statistic);
    r.p_value = weak.p_value;
    r.subtests = vec![weak, probe];
    r.conclude();
    Ok(r)
}

/// Exact conditional probabilities of the two ordered hypergraphs of the
/// tournament separation, given that the random order is the one each is
/// equipped with.
#[derive(Debug, Clone, PartialEq)]
pub struct UInduceCensus {
    pub ell: usize,
    pub p: BigRational,
    pub h1: BigRational,
    pub h2: BigRational,
    /// Orientation patterns enumerated per order.
    pub patterns: u64,
}

impl UInduceCensus {
    pub fn ratio(&self) -> BigRational {
        &self.h2 / &self.h1
    }

    /// Labeled densities: each conditional value times the order
    /// probability `1/(ell+3)!`.
    pub fn labeled(&self) -> (BigRational, BigRational) {
        let f = BigRational::from_integer(factorial(self.ell + 3).into());
        (&self.h1 / &f, &self.h2 / &f)
    }
}

/// Vertex sequences of the two orders on `[ell+3]` (0-based): the natural
/// one, and the one with the last three vertices reversed, which swaps the
/// places of `ell+1` and `ell+3`.
fn uinduce_orders(ell: usize) -> [Vec<usize>; 2] {
    let natural: Vec<usize> = (0..ell + 3).collect();
    let mut swapped = natural.clone();
    swapped.swap(ell, ell + 2);
    [natural, swapped]
}

/// The hypergraph with edges `[ell+2]` and `[ell+1] + {ell+3}` carrying the
/// order given by `seq`.
fn uinduce_target(sig: &Arc<Signature>, ell: usize, seq: &[usize]) -> Result<Model> {
    let e = sig.lookup("E")?;
    let prec = sig.lookup("Prec")?;
    let mut m = Model::empty(sig.clone(), ell + 3);
    let first: Vec<usize> = (0..ell + 2).collect();
    let second: Vec<usize> = (0..ell + 1).chain([ell + 2]).collect();
    for edge in [first, second] {
        for perm in edge.iter().copied().permutations(edge.len()) {
            m.insert(e, &perm)?;
        }
    }
    for (i, &a) in seq.iter().enumerate() {
        for &b in &seq[i + 1..] {
            m.insert(prec, &[a, b])?;
        }
    }
    Ok(m)
}

/// Exhaustive oracle: with the order fixed, every `(ell+1)`-set is
/// oriented forward (its tuple in increasing order is an arc) with
/// probability `p`, independently. Enumerates all patterns, applies the
/// interpretation and sums the weights of those giving each target.
pub fn uinduce_census(ell: usize, p: &BigRational) -> Result<UInduceCensus> {
    if ell.is_multiple_of(2) || ell > 3 {
        return Err(Error::param("ell", "the census supports ell = 1 or 3"));
    }
    let (interp, _, dst) = interpretation_by_name(&format!("alternating-copies-order:ell={ell}"))?;
    let n = ell + 3;
    let k = ell + 1;
    let e = dst.sig.lookup("E")?;
    let prec = dst.sig.lookup("Prec")?;
    let sets: Vec<Vec<usize>> = (0..n).combinations(k).collect();
    let one_minus = BigRational::one() - p;
    let mut out = [BigRational::zero(), BigRational::zero()];
    for (which, seq) in uinduce_orders(ell).iter().enumerate() {
        let target = uinduce_target(&interp.source, ell, seq)?;
        let rank: Vec<usize> = (0..n)
            .map(|v| seq.iter().position(|&x| x == v).expect("a permutation"))
            .collect();
        // Per set: the orderings that are arcs when the set is forward,
        // and those that are arcs when it is backward.
        let arcs: Vec<[Vec<Vec<usize>>; 2]> = sets
            .iter()
            .map(|s| {
                let mut sorted = s.clone();
                sorted.sort_by_key(|&v| rank[v]);
                let mut even = Vec::new();
                let mut odd = Vec::new();
                for perm in (0..k).permutations(k) {
                    let tuple: Vec<usize> = perm.iter().map(|&i| sorted[i]).collect();
                    if is_even(&perm) {
                        even.push(tuple);
                    } else {
                        odd.push(tuple);
                    }
                }
                [even, odd]
            })
            .collect();
        let mut base = Model::empty(dst.sig.clone(), n);
        for (i, &a) in seq.iter().enumerate() {
            for &b in &seq[i + 1..] {
                base.insert(prec, &[a, b])?;
            }
        }
        for bits in 0u64..1 << sets.len() {
            let mut m = base.clone();
            for (j, choice) in arcs.iter().enumerate() {
                let forward = bits >> j & 1 == 1;
                for t in &choice[if forward { 0 } else { 1 }] {
                    m.insert(e, t)?;
                }
            }
            if interp.apply(&m)? == target {
                let f = bits.count_ones() as i32;
                let b = sets.len() as i32 - f;
                out[which] += num_traits::pow(p.clone(), f as usize)
                    * num_traits::pow(one_minus.clone(), b as usize);
            }
        }
    }
    let [h1, h2] = out;
    Ok(UInduceCensus {
        ell,
        p: p.clone(),
        h1,
        h2,
        patterns: 1 << sets.len(),
    })
}

fn uinduce_ucouple(params: &Params, n: Option<u64>, sampler: &Sampler) -> Result<Report> {
    let mut a = Args::new(params);
    let ell = a.usize("ell", Some(1))?;
    let p = a.prob("p", "0.3", true)?;
    let params = a.finish()?;
    let census = uinduce_census(ell, &p)?;
    let n = n.unwrap_or(20_000_000);
    let pf = to_f64(&p);
    let (interp, src, _) = interpretation_by_name(&format!("alternating-copies-order:ell={ell}"))?;
    let t = interpret_theon(&interp, &tournament_np_order(ell + 1, pf)?, &src)?;
    let [o1, o2] = uinduce_orders(ell);
    let targets = [
        uinduce_target(&t.theory.sig, ell, &o1)?,
        uinduce_target(&t.theory.sig, ell, &o2)?,
    ];
    let size = ell + 3;
    let realizer = t.realizer(size);
    let counts = sampler.tally(
        n,
        2,
        || (),
        |_, rng, acc| {
            let theta = Point::sample(size, t.dim, t.max_arity(), rng);
            for (i, h) in targets.iter().enumerate() {
                if realizer.realizes(&theta, h) {
                    acc[i] += 1;
                }
            }
        },
    )?;
    let nf = n as f64;
    let d1 = DensityEstimate::from_counts(counts[0], n, sampler.seed);
    let d2 = DensityEstimate::from_counts(counts[1], n, sampler.seed);
    let (f1, f2) = (d1.value, d2.value);
    // Delta method on the multinomial pair (covariance -f1 f2 / n).
    let ratio = f2 / f1;
    let se_ratio = ratio * ((1.0 - f1) / (nf * f1) + (1.0 - f2) / (nf * f2) + 2.0 / nf).sqrt();
    let diff = f2 - f1;
    let se_diff = ((f1 + f2 - diff * diff) / nf).sqrt();

    let (l1, l2) = census.labeled();
    let exact_ratio = census.ratio();
    let three = BigRational::from_integer(3.into());
    let formula =
        (&three * &p * &p - &three * &p + BigRational::one()) / (&p * (BigRational::one() - &p));
    let exact_diff = &l2 - &l1;

    let mut r = Report::new(&command("sep-uinduce-ucouple"), params, sampler, n);
    r.estimates = vec![
        Estimate::new("h1_labeled", f1, d1.stderr),
        Estimate::new("h2_labeled", f2, d2.stderr),
        Estimate::new("ratio", ratio, se_ratio),
        Estimate::new(
            "ratio_relative_error",
            (ratio / to_f64(&exact_ratio) - 1.0).abs(),
            se_ratio / to_f64(&exact_ratio),
        ),
        Estimate::new("difference", diff, se_diff),
    ];
    r.oracle = vec![
        OracleValue::exact("h1_given_order", &census.h1),
        OracleValue::exact("h2_given_order", &census.h2),
        OracleValue::exact("h1_labeled", &l1),
        OracleValue::exact("h2_labeled", &l2),
        OracleValue::exact("ratio", &exact_ratio),
        OracleValue::exact("ratio_closed_form", &formula),
        OracleValue::exact("difference", &exact_diff),
        OracleValue::new("patterns_per_order", census.patterns as f64),
    ];
    let floor = 1.0 / nf;
    r.checks = vec![
        Check::new(
            "census_ratio_matches_closed_form",
            "exact equality",
            if exact_ratio == formula { 1.0 } else { 0.0 },
            exact_ratio == formula,
        ),
        Check::z(
            "h1_vs_census",
            gap_z(f1, d1.stderr, to_f64(&l1), 0.0, floor),
        ),
        Check::z(
            "h2_vs_census",
            gap_z(f2, d2.stderr, to_f64(&l2), 0.0, floor),
        ),
        Check::z(
            "ratio_vs_census",
            gap_z(ratio, se_ratio, to_f64(&exact_ratio), 0.0, floor),
        ),
        Check::z(
            "difference_vs_census",
            gap_z(diff, se_diff, to_f64(&exact_diff), 0.0, floor),
        ),
    ];
    // The difference against zero: the witness that the interpreted
    // coupling is not the product when p != 1/2.
    let z = gap_z(diff, se_diff, 0.0, 0.0, floor);
    r.statistic = Some(z);
    r.p_value = Some(normal_two_sided(z));
    r.output = Some(json!({
        "theon": t.name,
        "h1": crate::relational::to_text(&targets[0]),
        "h2": crate::relational::to_text(&targets[1]),
    }));
    r.conclude();
    Ok(r)
}

/// Exact probe values for the Dev theon at `k = 2`: `(joint, product)`
/// for probe `i` of [`dev_probe_couplings`] (thresholds `x_1 < (i+1)/10`,
/// then `x_1 >= 1/2`). Given `x_1 = x`, the edge probability is `p` when
/// `x < 1/2` and `p/2 + clamp(p + 1/2 - x, 0, 1/2)` otherwise; the joint
/// integrates it over the probe event.
pub fn dev_probe_oracle(p: f64, i: usize) -> (f64, f64) {
    let g = |x: f64| {
        if x < 0.5 {
            p
        } else {
            p / 2.0 + (p + 0.5 - x).clamp(0.0, 0.5)
        }
    };
    // Midpoint rule; g is piecewise linear with at most three kinks.
    let integral = |lo: f64, hi: f64| {
        let steps = 200_000;
        let h = (hi - lo) / steps as f64;
        (0..steps)
            .map(|j| g(lo + (j as f64 + 0.5) * h))
            .sum::<f64>()
            * h
    };
    let edge = integral(0.0, 1.0);
    let (lo, hi) = if i < 9 {
        (0.0, (i + 1) as f64 / 10.0)
    } else {
        (0.5, 1.0)
    };
    (integral(lo, hi), edge * (hi - lo))
}

fn dev_uinduce(params: &Params, n: Option<u64>, sampler: &Sampler) -> Result<Report> {
    let mut a = Args::new(params);
    let k = a.usize("k", Some(2))?;
    let p = a.prob("p", "1/2", true)?;
    let max_size = a.usize("max-size", Some(k + 1))?;
    let probe_n = a.usize("probe-samples", Some(1_000_000))? as u64;
    let params = a.finish()?;
    if !(2..=4).contains(&k) {
        return Err(Error::param("k", "need 2 <= k <= 4"));
    }
    let n = n.unwrap_or(1_000_000);
    let pf = to_f64(&p);
    let t = theon_by_name(&format!("dev-not-uinduce:k={k},p={pf}"))?;
    let mut r = Report::new(&command("sep-dev-uinduce"), params, sampler, n);
    for (i, (label, c, events)) in dev_probe_couplings(&t)?.into_iter().enumerate() {
        let sub = disc_test(&c, 0, &events, probe_n, &sampler.derive(i as u64))?;
        let joint = sub.estimate("joint").cloned().expect("disc reports joint");
        r.checks.push(Check::decision(
            format!("probe {label}"),
            &sub,
            Decision::Pass,
        ));
        if k == 2 {
            let (oj, op) = dev_probe_oracle(pf, i);
            r.oracle
                .push(OracleValue::new(format!("probe {label} joint"), oj));
            r.oracle
                .push(OracleValue::new(format!("probe {label} product"), op));
            r.checks.push(Check::z(
                format!("probe {label} joint_vs_oracle"),
                gap_z(joint.value, joint.stderr, oj, 0.0, 1.0 / probe_n as f64),
            ));
        }
        r.estimates.push(Estimate::new(
            format!("probe {label} z"),
            sub.statistic,
            0.0,
        ));
        r.subtests.push(sub);
    }
    let falsifier = two_coloring_falsifier(k, pf, max_size, n, &sampler.derive(100))?;
    r.checks.push(Check::decision(
        "two_coloring_falsifier",
        &falsifier,
        Decision::Reject,
    ));
    r.estimates.extend(falsifier.estimates.iter().cloned());
    r.statistic = Some(falsifier.statistic);
    r.p_value = falsifier.p_value;
    r.subtests.push(falsifier);
    r.conclude();
    Ok(r)
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn independence_disc(params: &Params, n: Option<u64>, sampler: &Sampler) -> Result<Report> {
    let mut a = Args::new(params);
    let k = a.usize("k", Some(2))?;
    let ell = a.usize("ell", Some(1))?;
    let p = a.prob("p", "1/2", true)?;
    let params = a.finish()?;
    let n = n.unwrap_or(100_000);
    let pf = to_f64(&p);
    let base = independence_not_disc(k, ell, pf)?;
    let coupling = independence_not_disc_coupling(k, ell, pf)?;
    let probe = independence_probe(&base, ell, n, &sampler.derive(0))?;
    let events = [DiscEvent {
        pred: 1,
        tuple: (0..ell + 1).collect(),
    }];
    let disc = disc_test(&coupling, 0, &events, n, &sampler.derive(1))?;
    let edge = num_traits::pow(p.clone(), binomial(k, ell + 1));
    let event = BigRational::one() - &p;
    let product = &edge * &event;
    let mut r = Report::new(&command("sep-independence-disc"), params, sampler, n);
    let est = |name: &str| disc.estimate(name).cloned().expect("disc reports it");
    let floor = 1.0 / n as f64;
    let (ej, ee, ev) = (est("joint"), est("edge"), est("events"));
    r.oracle = vec![
        OracleValue::exact("flip_frequency", &BigRational::zero()),
        OracleValue::exact("joint", &BigRational::zero()),
        OracleValue::exact("edge", &edge),
        OracleValue::exact("events", &event),
        OracleValue::exact("product", &product),
    ];
    r.checks = vec![
        Check::decision("independence_probe", &probe, Decision::Pass),
        Check::decision("disc_test", &disc, Decision::Reject),
        Check::z(
            "joint_vs_oracle",
            gap_z(ej.value, ej.stderr, 0.0, 0.0, floor),
        ),
        Check::z(
            "edge_vs_oracle",
            gap_z(ee.value, ee.stderr, to_f64(&edge), 0.0, floor),
        ),
        Check::z(
            "events_vs_oracle",
            gap_z(ev.value, ev.stderr, to_f64(&event), 0.0, floor),
        ),
    ];
    r.estimates = probe
        .estimates
        .iter()
        .chain(&disc.estimates)
        .cloned()
        .collect();
    r.statistic = Some(disc.statistic);
    r.p_value = disc.p_value;
    r.subtests = vec![probe, disc];
    r.conclude();
    Ok(r)
}

fn uinduce_order(params: &Params, n: Option<u64>, sampler: &Sampler) -> Result<Report> {
    let mut a = Args::new(params);
    let max_level = a.usize("max-level", Some(2))?;
    let alpha = a.alpha(DEFAULT_ALPHA)?;
    let params = a.finish()?;
    if max_level > 8 {
        return Err(Error::param("max-level", "at most 8"));
    }
    let n = n.unwrap_or(100_000);
    let t = linear_order()?;
    let mut r = Report::new(&command("sep-uinduce-ucouple-order"), params, sampler, n);
    for ell in 0..=max_level {
        let sets = vec![
            (0..ell + 2).collect::<Vec<_>>(),
            (0..ell).chain([ell + 2, ell + 3]).collect::<Vec<_>>(),
        ];
        let sub = locality_test(
            &t,
            &sets,
            LocalityMode::Symmetric,
            n,
            alpha,
            &sampler.derive(ell as u64),
        )?;
        r.checks.push(Check::decision(
            format!("symmetric_locality ell={ell}"),
            &sub,
            Decision::Pass,
        ));
        r.subtests.push(sub);
    }
    let mut cfg = WeakIndependenceConfig::new(1, 2, n);
    cfg.alpha = alpha;
    let weak = weak_independence_test(&t, &cfg, &sampler.derive(100))?;
    r.checks.push(Check::decision(
        "weak_independence ell=1",
        &weak,
        Decision::Reject,
    ));
    r.statistic = Some(weak.statistic);
    r.p_value = weak.p_value;
    r.estimates = weak.estimates.clone();
    r.subtests.push(weak);
    r.conclude();
    Ok(r)
}

/// The alternating `k`-tournament on `[k+1]`: a tuple is an arc iff
/// appending the missing vertex gives an even permutation.
pub(crate) fn alternating_model(k: usize) -> Result<Model> {
    let t = Theory::tournament(k);
    let mut m = Model::empty(t.sig.clone(), k + 1);
    for tuple in (0..k + 1).permutations(k) {
        let missing = (0..k + 1)
            .find(|v| !tuple.contains(v))
            .expect("one vertex left out");
        let mut full = tuple.clone();
        full.push(missing);
        if is_even(&full) {
            m.insert(0, &tuple)?;
        }
    }
    Ok(m)
}

fn alternating_census(params: &Params) -> Result<Report> {
    let mut a = Args::new(params);
    let k = a.usize("k", Some(2))?;
    let params = a.finish()?;
    if !(2..=4).contains(&k) {
        return Err(Error::param("k", "need 2 <= k <= 4"));
    }
    let theory = Theory::tournament(k);
    let alt = canonical_form(&alternating_model(k)?).0;
    let copies_interp = alternating_copies(k - 1);
    let n = k + 2;
    let sets: Vec<Vec<usize>> = (0..n).combinations(k).collect();
    let arcs: Vec<[Vec<Vec<usize>>; 2]> = sets
        .iter()
        .map(|s| {
            let mut even = Vec::new();
            let mut odd = Vec::new();
            for perm in (0..k).permutations(k) {
                let tuple: Vec<usize> = perm.iter().map(|&i| s[i]).collect();
                if is_even(&perm) {
                    even.push(tuple);
                } else {
                    odd.push(tuple);
                }
            }
            [even, odd]
        })
        .collect();
    let windows: Vec<Vec<usize>> = (0..n).combinations(k + 1).collect();
    let per_edge = factorial(k + 1) as usize;
    let mut histogram: BTreeMap<usize, u64> = BTreeMap::new();
    let mut mismatches = 0u64;
    let mut invalid = 0u64;
    for bits in 0u64..1 << sets.len() {
        let mut m = Model::empty(theory.sig.clone(), n);
        for (j, choice) in arcs.iter().enumerate() {
            for t in &choice[(bits >> j & 1) as usize] {
                m.insert(0, t)?;
            }
        }
        if !theory.models(&m) {
            invalid += 1;
        }
        let copies = windows
            .iter()
            .filter(|w| canonical_form(&m.induced(w)).0 == alt)
            .count();
        let via_interp = copies_interp.apply(&m)?.relation_size(0) / per_edge;
        if via_interp != copies {
            mismatches += 1;
        }
        *histogram.entry(copies).or_insert(0) += 1;
    }
    let total: u64 = histogram.values().sum();
    let max = histogram.keys().max().copied().unwrap_or(0);
    let sampler = Sampler::new(0);
    let mut r = Report::new(&command("alternating-census"), params, &sampler, 0);
    r.statistic = Some(max as f64);
    r.estimates = vec![
        Estimate::new("max_copies", max as f64, 0.0),
        Estimate::new("tournaments", total as f64, 0.0),
    ];
    r.checks = vec![
        Check::new("max_copies", "= 2", max as f64, max == 2),
        Check::new(
            "all_patterns_are_tournaments",
            "= 0 invalid",
            invalid as f64,
            invalid == 0,
        ),
        Check::new(
            "interpretation_agrees",
            "= 0 mismatches",
            mismatches as f64,
            mismatches == 0,
        ),
    ];
    r.output = Some(json!({
        "histogram": histogram.iter().map(|(c, m)| json!({ "copies": c, "tournaments": m })).collect::<Vec<_>>(),
    }));
    r.conclude();
    Ok(r)
}

fn self_coupling(params: &Params, n: Option<u64>, sampler: &Sampler) -> Result<Report> {
    let mut a = Args::new(params);
    let spec = a.text("theon", Some("qr-graphon:p=1/2"))?;
    let max_size = a.usize("max-size", Some(2))?;
    let params = a.finish()?;
    let n = n.unwrap_or(100_000);
    let t = resolve_theon(&serde_json::Value::from(spec.clone()))?;
    let diag = diagonal_self_coupling(&t)?;
    let ind = independent_coupling(&[&t, &t], Renaming::Suffix)?;
    let cfg = CoupleabilityConfig {
        n_samples: n,
        max_model_size: max_size,
    };
    let cd = coupleability_falsifier(&diag, &cfg, &sampler.derive(0))?;
    let ci = coupleability_falsifier(&ind, &cfg, &sampler.derive(1))?;
    let dd = delta1_eval(&diag, n, &sampler.derive(2))?;
    let di = delta1_eval(&ind, n, &sampler.derive(3))?;
    let mut r = Report::new(&command("self-coupling"), params, sampler, n);
    r.estimates = vec![
        Estimate::new("delta1_diagonal", dd.value, dd.stderr),
        Estimate::new("delta1_independent", di.value, di.stderr),
    ];
    for (tag, sub) in [("diagonal", &cd), ("independent", &ci)] {
        for e in &sub.estimates {
            r.estimates.push(Estimate::new(
                format!("{tag} {}", e.name),
                e.value,
                e.stderr,
            ));
        }
    }
    r.oracle
        .push(OracleValue::exact("delta1_diagonal", &BigRational::zero()));
    r.checks = vec![
        Check::decision("diagonal_coupleability", &cd, Decision::Reject),
        Check::decision("independent_coupleability", &ci, Decision::Pass),
        Check::new("delta1_diagonal", "= 0 exactly", dd.value, dd.value == 0.0),
    ];
    // Independent copies disagree on a predicate with probability 2q(1-q).
    let sig = &t.theory.sig;
    let mut exact = Some(BigRational::zero());
    for pred in 0..sig.len() {
        exact = match (exact, tuple_probability(&spec, pred).ok().flatten()) {
            (Some(acc), Some(q)) => {
                let two = BigRational::from_integer(2.into());
                Some(acc + two * &q * (BigRational::one() - &q))
            }
            _ => None,
        };
    }
    if let Some(q) = exact {
        r.oracle.push(OracleValue::exact("delta1_independent", &q));
        r.checks.push(Check::z(
            "delta1_independent_vs_oracle",
            di.z_against(to_f64(&q)),
        ));
    }
    r.statistic = Some(cd.statistic);
    r.p_value = cd.p_value;
    r.subtests = vec![cd, ci];
    r.conclude();
    Ok(r)
}
