//! Reproducible JSON reports, the experiment registry and the command
//! dispatch behind the `theonlab` binary.
//!
//! Every report stores the resolved parameters, seed and sample budget, so
//! [`replay`] can rerun it and compare all numeric fields bit for bit.

mod args;
mod commands;
mod experiments;
mod oracle;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::testlab::{Decision, Estimate, TestReport, Z_THRESHOLD};
use crate::theon::Sampler;

pub use args::Params;
pub use commands::{resolve_theon, COMMANDS};
pub use experiments::{dev_probe_oracle, uinduce_census, UInduceCensus, EXPERIMENTS};
pub use oracle::{exact_labeled_density, tuple_probability};

/// Version of the report layout.
pub const SCHEMA: u32 = 1;

/// Outcome of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// A test found no violation, or an experiment matched every expectation.
    Pass,
    /// A test found a violation.
    Reject,
    /// An experiment disagreed with an expectation or an oracle.
    Fail,
    Inconclusive,
    /// Plain estimate with nothing to compare against.
    Estimate,
}

impl Verdict {
    /// Process exit code: 0 for pass or estimate, 1 for reject or fail.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Estimate | Verdict::Inconclusive => 0,
            Verdict::Reject | Verdict::Fail => 1,
        }
    }

    pub fn from_checks(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl From<Decision> for Verdict {
    fn from(d: Decision) -> Self {
        match d {
            Decision::Pass => Verdict::Pass,
            Decision::Reject => Verdict::Reject,
            Decision::Inconclusive => Verdict::Inconclusive,
        }
    }
}

/// An exact or independently derived reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub name: String,
    pub value: f64,
    /// Exact rational as `num/den` when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

impl OracleValue {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        OracleValue {
            name: name.into(),
            value,
            exact: None,
        }
    }

    pub fn exact(name: impl Into<String>, q: &num_rational::BigRational) -> Self {
        use num_traits::ToPrimitive;
        OracleValue {
            name: name.into(),
            value: q.to_f64().unwrap_or(f64::NAN),
            exact: Some(format!("{}/{}", q.numer(), q.denom())),
        }
    }
}

/// One comparison feeding a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// What was expected, in words.
    pub expect: String,
    /// Observed value (a z-score, a count, a decision code).
    pub observed: f64,
    pub ok: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        expect: impl Into<String>,
        observed: f64,
        ok: bool,
    ) -> Self {
        Check {
            name: name.into(),
            expect: expect.into(),
            observed,
            ok,
        }
    }

    /// `|z| <= 4`.
    pub fn z(name: impl Into<String>, z: f64) -> Self {
        Check::new(
            name,
            format!("|z| <= {Z_THRESHOLD}"),
            z,
            z.abs() <= Z_THRESHOLD,
        )
    }

    /// A sub-test reaching the expected decision.
    pub fn decision(name: impl Into<String>, r: &TestReport, want: Decision) -> Self {
        let code = match r.decision {
            Decision::Pass => 0.0,
            Decision::Reject => 1.0,
            Decision::Inconclusive => 2.0,
        };
        Check::new(
            name,
            format!("{want:?}").to_lowercase(),
            code,
            r.decision == want,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    /// Every parameter after defaults were filled in.
    pub params: Params,
    pub seed: u64,
    pub chunk_size: u64,
    pub n_samples: u64,
    pub estimates: Vec<Estimate>,
    pub oracle: Vec<OracleValue>,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub decision: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subtests: Vec<TestReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Value>,
}

impl Report {
    pub(crate) fn new(command: &str, params: Params, sampler: &Sampler, n_samples: u64) -> Report {
        Report {
            schema: SCHEMA,
            command: command.to_string(),
            params,
            seed: sampler.seed,
            chunk_size: sampler.chunk_size,
            n_samples,
            estimates: Vec::new(),
            oracle: Vec::new(),
            statistic: None,
            p_value: None,
            decision: Verdict::Estimate,
            checks: Vec::new(),
            subtests: Vec::new(),
            output: None,
        }
    }

    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    pub fn oracle_value(&self, name: &str) -> Option<&OracleValue> {
        self.oracle.iter().find(|e| e.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Sets the decision from the checks: pass when all hold.
    pub(crate) fn conclude(&mut self) {
        self.decision = Verdict::from_checks(self.checks.iter().all(|c| c.ok));
    }

    pub fn invocation(&self) -> Invocation {
        Invocation {
            command: self.command.clone(),
            params: self.params.clone(),
            seed: self.seed,
            chunk_size: Some(self.chunk_size),
            n_samples: Some(self.n_samples),
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("reports serialize")
    }
}

/// A command with its parameters: everything needed to produce a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    /// `sample`, `density`, `test`, or `run:<experiment>`.
    pub command: String,
    pub params: Params,
    pub seed: u64,
    #[serde(default)]
    pub chunk_size: Option<u64>,
    /// `None` picks the command's default budget.
    #[serde(default)]
    pub n_samples: Option<u64>,
}

impl Invocation {
    pub fn new(command: impl Into<String>, params: Params, seed: u64) -> Self {
        Invocation {
            command: command.into(),
            params,
            seed,
            chunk_size: None,
            n_samples: None,
        }
    }

    pub fn with_samples(mut self, n: Option<u64>) -> Self {
        self.n_samples = n;
        self
    }
}

/// Runs an invocation. `threads` changes speed only, never results.
pub fn execute(inv: &Invocation, threads: Option<usize>) -> Result<Report> {
    let mut sampler = Sampler::new(inv.seed).with_threads(threads);
    if let Some(c) = inv.chunk_size {
        sampler = sampler.with_chunk_size(c);
    }
    match inv.command.split_once(':') {
        Some(("run", name)) => experiments::run(name, &inv.params, inv.n_samples, &sampler),
        None => commands::run(&inv.command, &inv.params, inv.n_samples, &sampler),
        _ => Err(Error::UnknownEntry(inv.command.clone())),
    }
}

/// Reruns a stored report and says whether the fresh one is identical.
pub fn replay(stored: &Report, threads: Option<usize>) -> Result<(Report, bool)> {
    let fresh = execute(&stored.invocation(), threads)?;
    let same = fresh.to_json() == stored.to_json();
    Ok((fresh, same))
}

/// Resolves the master seed: the explicit value, then `THEONLAB_SEED`,
/// then 0.
pub fn resolve_seed(explicit: Option<u64>) -> Result<u64> {
    if let Some(s) = explicit {
        return Ok(s);
    }
    match std::env::var("THEONLAB_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::param("THEONLAB_SEED", format!("`{v}` is not an unsigned integer"))
        }),
        Err(_) => Ok(0),
    }
}

/// Parses a sample count written as an integer or in scientific notation
/// (`2e7`).
pub fn parse_count(text: &str) -> Result<u64> {
    let t = text.trim().replace('_', "");
    if let Ok(n) = t.parse::<u64>() {
        return Ok(n);
    }
    let bad = || Error::param("samples", format!("`{text}` is not a whole number"));
    let v: f64 = t.parse().map_err(|_| bad())?;
    if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= 9.0e15) {
        return Err(bad());
    }
    Ok(v as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(parse_count("2e7").unwrap(), 20_000_000);
        assert_eq!(parse_count("1_000").unwrap(), 1000);
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Verdict::Pass.exit_code(), 0);
        assert_eq!(Verdict::Estimate.exit_code(), 0);
        assert_eq!(Verdict::Reject.exit_code(), 1);
        assert_eq!(Verdict::Fail.exit_code(), 1);
    }

    #[test]
    fn explicit_seed_wins() {
        assert_eq!(resolve_seed(Some(9)).unwrap(), 9);
    }
}
