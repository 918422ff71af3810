use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::harness::args::{to_f64, Args, Params};
use crate::harness::oracle::exact_labeled_density;
use crate::harness::{Check, OracleValue, Report, Verdict};
use crate::relational::{labeled_copies, parse_model, to_text};
use crate::testlab::{
    clique_disc_test, coupleability_falsifier, disc_test, independence_probe, locality_test,
    rank_probe, weak_independence_test, CliqueDiscConfig, CoupleabilityConfig, DiscEvent,
    LocalityMode, TestReport, WeakIndependenceConfig, DEFAULT_ALPHA,
};
use crate::theon::{
    diagonal_self_coupling, estimate_density, independent_coupling, interpret_theon,
    interpretation_by_name, sample_theta, theon_by_name, theon_from_json, CatalogEntry, Renaming,
    Sampler, Theon,
};

pub const COMMANDS: &[CatalogEntry] = &[
    CatalogEntry { name: "sample", params: "theon,n", about: "one model realized on [n]" },
    CatalogEntry {
        name: "density",
        params: "theon,model",
        about: "labeled and unlabeled density of a model, with the exact value when known",
    },
    CatalogEntry {
        name: "test",
        params: "property,theon,level,...",
        about: "independence | rank | weak-independence | locality | clique-disc | disc | coupleability",
    },
];

const DEFAULT_DENSITY_SAMPLES: u64 = 1_000_000;
const DEFAULT_TEST_SAMPLES: u64 = 100_000;

pub(crate) fn run(
    command: &str,
    params: &Params,
    n: Option<u64>,
    sampler: &Sampler,
) -> Result<Report> {
    match command {
        "sample" => sample(params, sampler),
        "density" => density(params, n.unwrap_or(DEFAULT_DENSITY_SAMPLES), sampler),
        "test" => test(params, n.unwrap_or(DEFAULT_TEST_SAMPLES), sampler),
        other => Err(Error::UnknownEntry(other.to_string())),
    }
}

fn split_top(text: &str) -> Result<(&str, &str)> {
    let mut depth = 0i32;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ';' if depth == 0 => return Ok((&text[..i], &text[i + 1..])),
            _ => {}
        }
    }
    Err(Error::param(
        "theon",
        format!("expected two arguments separated by `;` in `{text}`"),
    ))
}

/// A theon from a catalog name, an inline theon file (JSON object), or one
/// of the combinators `diag(T)`, `indep(A;B)` and `interp(I;T)`.
pub fn resolve_theon(v: &Value) -> Result<Theon> {
    match v {
        Value::Object(_) => theon_from_json(v),
        Value::String(s) => resolve_text(s.trim()),
        other => Err(Error::param(
            "theon",
            format!("cannot read a theon from {other}"),
        )),
    }
}

fn resolve_text(s: &str) -> Result<Theon> {
    let call = |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.strip_suffix(')'));
    if let Some(inner) = call("diag(") {
        return diagonal_self_coupling(&resolve_text(inner.trim())?);
    }
    if let Some(inner) = call("indep(") {
        let (a, b) = split_top(inner)?;
        let (a, b) = (resolve_text(a.trim())?, resolve_text(b.trim())?);
        return independent_coupling(&[&a, &b], Renaming::Keep)
            .or_else(|_| independent_coupling(&[&a, &b], Renaming::Suffix));
    }
    if let Some(inner) = call("interp(") {
        let (i, t) = split_top(inner)?;
        let (interp, src, _) = interpretation_by_name(i.trim())?;
        return interpret_theon(&interp, &resolve_text(t.trim())?, &src);
    }
    theon_by_name(s)
}

fn theon_arg(a: &mut Args) -> Result<(Theon, Option<String>)> {
    let v = a.value("theon")?;
    let t = resolve_theon(&v)?;
    let catalog = match &v {
        Value::String(s) => theon_by_name(s).ok().map(|_| s.clone()),
        _ => None,
    };
    Ok((t, catalog))
}

fn sample(params: &Params, sampler: &Sampler) -> Result<Report> {
    let mut a = Args::new(params);
    let (t, _) = theon_arg(&mut a)?;
    let n = a.usize("n", None)?;
    if n > 16 {
        return Err(Error::param("n", "at most 16 vertices"));
    }
    let params = a.finish()?;
    let theta = sample_theta(n, t.dim, t.max_arity(), sampler.seed);
    let m = t.realize(&theta);
    let mut r = Report::new("sample", params, sampler, 1);
    r.output = Some(json!({ "theon": t.name, "model": to_text(&m) }));
    Ok(r)
}

fn density(params: &Params, n: u64, sampler: &Sampler) -> Result<Report> {
    let mut a = Args::new(params);
    let (t, catalog) = theon_arg(&mut a)?;
    let text = a.text("model", None)?;
    let params = a.finish()?;
    let m = parse_model(&text, t.theory.sig.clone())?;
    let (lab, unl) = estimate_density(&t, &m, n, sampler)?;
    let mut r = Report::new("density", params, sampler, n);
    r.estimates.push(crate::testlab::Estimate::new(
        "labeled", lab.value, lab.stderr,
    ));
    r.estimates.push(crate::testlab::Estimate::new(
        "unlabeled",
        unl.value,
        unl.stderr,
    ));
    r.output = Some(json!({ "theon": t.name, "model": to_text(&m) }));
    let exact = match &catalog {
        Some(spec) => exact_labeled_density(spec, &m)?,
        None => None,
    };
    match exact {
        Some(q) => {
            // Exchangeability: every labeled copy has the same density.
            let copies = labeled_copies(&m).len() as u64;
            let unl_exact = &q * num_rational::BigRational::from_integer(copies.into());
            r.oracle.push(OracleValue::exact("labeled", &q));
            r.oracle.push(OracleValue::exact("unlabeled", &unl_exact));
            let zl = lab.z_against(to_f64(&q));
            let zu = unl.z_against(to_f64(&unl_exact));
            r.checks.push(Check::z("labeled_vs_exact", zl));
            r.checks.push(Check::z("unlabeled_vs_exact", zu));
            r.statistic = Some(zu);
            r.p_value = Some(crate::testlab::normal_two_sided(zu));
            r.conclude();
        }
        None => r.decision = Verdict::Estimate,
    }
    Ok(r)
}

/// `1,2;2,3` as 0-based vertex sets.
pub(crate) fn parse_sets(text: &str) -> Result<Vec<Vec<usize>>> {
    text.split(';')
        .map(|s| {
            s.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .ok()
                        .filter(|&v| v >= 1)
                        .map(|v| v - 1)
                        .ok_or_else(|| {
                            Error::param("sets", format!("`{v}` is not a vertex (1-based)"))
                        })
                })
                .collect()
        })
        .collect()
}

/// Two sets of size `ell + 2` meeting in exactly `ell` vertices.
pub(crate) fn default_sets(ell: usize) -> String {
    let a: Vec<String> = (1..=ell + 2).map(|v| v.to_string()).collect();
    let b: Vec<String> = (1..=ell)
        .chain([ell + 3, ell + 4])
        .map(|v| v.to_string())
        .collect();
    format!("{};{}", a.join(","), b.join(","))
}

/// `P:1,2;Q:1` as events on named predicates.
fn parse_events(text: &str, t: &Theon) -> Result<Vec<DiscEvent>> {
    text.split(';')
        .map(|ev| {
            let (name, tuple) = ev.split_once(':').ok_or_else(|| {
                Error::param("events", format!("expected NAME:vertices in `{ev}`"))
            })?;
            let pred = t.theory.sig.lookup(name.trim())?;
            let sets = parse_sets(tuple)?;
            Ok(DiscEvent {
                pred,
                tuple: sets.into_iter().next().unwrap_or_default(),
            })
        })
        .collect()
}

fn test(params: &Params, n: u64, sampler: &Sampler) -> Result<Report> {
    let mut a = Args::new(params);
    let property = a.text("property", None)?;
    let (t, _) = theon_arg(&mut a)?;
    let report: Box<dyn FnOnce() -> Result<TestReport>> = match property.as_str() {
        "independence" | "rank" => {
            let level = a.usize("level", Some(1))?;
            let (t, s) = (t.clone(), *sampler);
            if property == "independence" {
                Box::new(move || independence_probe(&t, level, n, &s))
            } else {
                Box::new(move || rank_probe(&t, level, n, &s))
            }
        }
        "weak-independence" => {
            let level = a.usize("level", Some(1))?;
            let m = a.usize("m", Some(t.max_arity().max(level + 1)))?;
            let mut cfg = WeakIndependenceConfig::new(level, m, n);
            cfg.bins = a.usize("bins", Some(cfg.bins))?;
            cfg.projections = a.usize("projections", Some(cfg.projections))?;
            cfg.alpha = a.alpha(DEFAULT_ALPHA)?;
            let (t, s) = (t.clone(), *sampler);
            Box::new(move || weak_independence_test(&t, &cfg, &s))
        }
        "locality" => {
            let level = a.usize("level", Some(1))?;
            let sets = parse_sets(&a.text("sets", Some(&default_sets(level)))?)?;
            let mode = match a.text("mode", Some("labeled"))?.as_str() {
                "labeled" => LocalityMode::Labeled,
                "symmetric" => LocalityMode::Symmetric,
                other => return Err(Error::param("mode", format!("`{other}` is not labeled or symmetric"))),
            };
            let alpha = a.alpha(DEFAULT_ALPHA)?;
            let (t, s) = (t.clone(), *sampler);
            Box::new(move || locality_test(&t, &sets, mode, n, alpha, &s))
        }
        "clique-disc" => {
            let level = a.usize("level", Some(1))?;
            let mut cfg = CliqueDiscConfig::new(level);
            cfg.probes = a.usize("probes", Some(cfg.probes))?;
            cfg.inner_samples = a.usize("inner-samples", Some(cfg.inner_samples as usize))? as u64;
            cfg.host_samples = n;
            cfg.alpha = a.alpha(DEFAULT_ALPHA)?;
            let (t, s) = (t.clone(), *sampler);
            Box::new(move || clique_disc_test(&t, &cfg, &s))
        }
        "disc" => {
            let edge_name = a.text("edge", Some(t.theory.sig.name(0)))?;
            let edge = t.theory.sig.lookup(&edge_name)?;
            let k = t.theory.sig.arity(edge);
            let default_events: Vec<String> = (0..t.theory.sig.len())
                .filter(|&p| p != edge && t.theory.sig.arity(p) <= k)
                .map(|p| {
                    let verts: Vec<String> = (1..=t.theory.sig.arity(p)).map(|v| v.to_string()).collect();
                    format!("{}:{}", t.theory.sig.name(p), verts.join(","))
                })
                .collect();
            let events = parse_events(&a.text("events", Some(&default_events.join(";")))?, &t)?;
            let (t, s) = (t.clone(), *sampler);
            Box::new(move || disc_test(&t, edge, &events, n, &s))
        }
        "coupleability" => {
            let cfg = CoupleabilityConfig {
                n_samples: n,
                max_model_size: a.usize("max-size", Some(2))?,
            };
            let (t, s) = (t.clone(), *sampler);
            Box::new(move || coupleability_falsifier(&t, &cfg, &s))
        }
        other => {
            return Err(Error::param(
                "property",
                format!(
                    "`{other}` is not one of independence, rank, weak-independence, locality, clique-disc, \
                     disc, coupleability"
                ),
            ))
        }
    };
    let params = a.finish()?;
    let sub = report()?;
    let mut r = Report::new("test", params, sampler, n);
    r.estimates = sub.estimates.clone();
    r.statistic = Some(sub.statistic);
    r.p_value = sub.p_value;
    r.decision = sub.decision.into();
    r.output = Some(json!({ "theon": t.name }));
    r.subtests.push(sub);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{execute, Invocation};

    fn params(pairs: &[(&str, &str)]) -> Params {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), Value::from(*v)))
            .collect()
    }

    #[test]
    fn sample_complete_graph() {
        let inv = Invocation::new(
            "sample",
            params(&[("theon", "qr-graphon:p=1"), ("n", "4")]),
            0,
        );
        let r = execute(&inv, None).unwrap();
        let text = r.output.unwrap()["model"].as_str().unwrap().to_string();
        assert_eq!(text.matches('(').count(), 12, "{text}");
        assert_eq!(r.decision, Verdict::Estimate);
    }

    #[test]
    fn density_of_the_three_cycle() {
        let inv = Invocation::new(
            "density",
            params(&[
                ("theon", "qr-tournamon:k=2"),
                ("model", "n=3\nE: (1,2);(2,3);(3,1)\n"),
            ]),
            7,
        )
        .with_samples(Some(200_000));
        let r = execute(&inv, None).unwrap();
        assert!((r.estimate("unlabeled").unwrap().value - 0.25).abs() < 0.005);
        assert_eq!(
            r.oracle_value("unlabeled").unwrap().exact.as_deref(),
            Some("1/4")
        );
        assert_eq!(r.decision, Verdict::Pass);
    }

    #[test]
    fn weak_independence_rejects_order() {
        let inv = Invocation::new(
            "test",
            params(&[
                ("property", "weak-independence"),
                ("theon", "linear-order"),
                ("level", "1"),
            ]),
            1,
        )
        .with_samples(Some(20_000));
        let r = execute(&inv, None).unwrap();
        assert_eq!(r.decision, Verdict::Reject);
        assert_eq!(r.params["m"], json!(2));
    }

    #[test]
    fn combinators_and_errors() {
        assert_eq!(
            resolve_text("diag(qr-graphon:p=0.5)")
                .unwrap()
                .components
                .len(),
            2
        );
        let c = resolve_text("indep(qr-graphon:p=0.5;qr-graphon:p=0.5)").unwrap();
        assert_eq!(c.theory.sig.len(), 2);
        let i = resolve_text("interp(alternating-copies:ell=1;qr-tournamon:k=2)").unwrap();
        assert_eq!(i.theory.sig.arity(0), 3);
        let bad = Invocation::new(
            "test",
            params(&[("property", "magic"), ("theon", "linear-order")]),
            0,
        );
        assert!(execute(&bad, None).is_err());
        let extra = Invocation::new(
            "sample",
            params(&[("theon", "linear-order"), ("n", "2"), ("x", "1")]),
            0,
        );
        assert!(execute(&extra, None).is_err());
    }

    #[test]
    fn sets() {
        assert_eq!(default_sets(1), "1,2,3;1,4,5");
        assert_eq!(parse_sets("1,2;2,3").unwrap(), vec![vec![0, 1], vec![1, 2]]);
        assert!(parse_sets("0,1").is_err());
    }
}
