use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::Value;

use crate::calculus::parse_rational;
use crate::error::{Error, Result};

/// Command parameters as given on the command line or stored in a report.
pub type Params = BTreeMap<String, Value>;

/// Reads parameters with defaults and records what was resolved, so the
/// report holds a complete invocation. Unknown keys are errors.
pub(crate) struct Args<'a> {
    given: &'a Params,
    used: BTreeSet<String>,
    pub resolved: Params,
}

fn text_of(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl<'a> Args<'a> {
    pub fn new(given: &'a Params) -> Self {
        Args {
            given,
            used: BTreeSet::new(),
            resolved: Params::new(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a Value> {
        self.used.insert(key.to_string());
        self.given.get(key)
    }

    pub fn usize(&mut self, key: &str, default: Option<usize>) -> Result<usize> {
        let v = match self.raw(key) {
            Some(v) => {
                let t = text_of(v);
                t.trim().parse::<usize>().map_err(|_| {
                    Error::param(key, format!("`{t}` is not a non-negative integer"))
                })?
            }
            None => default.ok_or_else(|| Error::param(key, "required"))?,
        };
        self.resolved.insert(key.to_string(), Value::from(v));
        Ok(v)
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = match self.raw(key) {
            Some(v) => {
                let t = text_of(v);
                t.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::param(key, format!("`{t}` is not a number")))?
            }
            None => default,
        };
        self.resolved.insert(key.to_string(), Value::from(v));
        Ok(v)
    }

    /// Significance level in `(0, 1)`.
    pub fn alpha(&mut self, default: f64) -> Result<f64> {
        let a = self.f64("alpha", default)?;
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::param("alpha", format!("{a} is not in (0,1)")));
        }
        Ok(a)
    }

    /// A probability kept as written (`0.3`, `3/10`), returned exactly.
    pub fn prob(&mut self, key: &str, default: &str, open: bool) -> Result<BigRational> {
        let t = self.text(key, Some(default))?;
        let q =
            parse_rational(&t).map_err(|_| Error::param(key, format!("`{t}` is not a number")))?;
        let inside = if open {
            q > BigRational::zero() && q < BigRational::one()
        } else {
            q >= BigRational::zero() && q <= BigRational::one()
        };
        if !inside {
            let range = if open { "(0,1)" } else { "[0,1]" };
            return Err(Error::param(key, format!("{t} is not in {range}")));
        }
        Ok(q)
    }

    pub fn text(&mut self, key: &str, default: Option<&str>) -> Result<String> {
        let v = match self.raw(key) {
            Some(v) => text_of(v),
            None => default
                .ok_or_else(|| Error::param(key, "required"))?
                .to_string(),
        };
        self.resolved
            .insert(key.to_string(), Value::from(v.clone()));
        Ok(v)
    }

    /// A raw JSON value stored unchanged (theons given inline).
    pub fn value(&mut self, key: &str) -> Result<Value> {
        let v = self
            .raw(key)
            .cloned()
            .ok_or_else(|| Error::param(key, "required"))?;
        self.resolved.insert(key.to_string(), v.clone());
        Ok(v)
    }

    /// The resolved parameters; fails on keys nobody asked for.
    pub fn finish(self) -> Result<Params> {
        if let Some(k) = self.given.keys().find(|k| !self.used.contains(*k)) {
            return Err(Error::param(k, "not a parameter of this command"));
        }
        Ok(self.resolved)
    }
}

pub(crate) fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
