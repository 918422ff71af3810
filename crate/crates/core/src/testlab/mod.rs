//! Statistical falsifiers for quasirandomness properties of theons.
//!
//! Every test is a falsifier: `Reject` is backed by a witness or a p-value
//! below the configured level, while `Pass` only means the documented probe
//! family found no violation at the given sample size.

mod coupling;
mod disc;
mod locality;
mod probes;
mod stats;
mod weak;

use serde::{Deserialize, Serialize};

pub use coupling::{coupleability_falsifier, CoupleabilityConfig};
pub use disc::{
    clique_disc_test, default_linear_hosts, dev_probe_couplings, disc_test, two_coloring_falsifier,
    with_probe, CliqueDiscConfig, DiscEvent,
};
pub use locality::{locality_counts, locality_test, LocalityMode, LocalityTable};
pub use probes::{independence_probe, rank_probe};
pub use stats::{chi_square_independence, normal_two_sided, ChiSquare};
pub use weak::{weak_independence_test, WeakIndependenceConfig};

/// Default significance level.
pub const DEFAULT_ALPHA: f64 = 0.001;
/// Gaps beyond this many combined standard errors count as violations.
pub const Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Pass,
    Reject,
    Inconclusive,
}

/// A named Monte Carlo or exact quantity reported by a test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(name: impl Into<String>, value: f64, stderr: f64) -> Self {
        Estimate {
            name: name.into(),
            value,
            stderr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    /// Every parameter needed to rerun the test, seed included.
    pub config: serde_json::Value,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub decision: Decision,
    pub evidence: Option<serde_json::Value>,
    pub estimates: Vec<Estimate>,
    /// What was probed, since a pass is only relative to it.
    pub probe_family: String,
}

impl TestReport {
    pub fn rejected(&self) -> bool {
        self.decision == Decision::Reject
    }

    pub fn passed(&self) -> bool {
        self.decision == Decision::Pass
    }

    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

/// `(a - b) / sqrt(se_a^2 + se_b^2)`, with the combined error floored at
/// `floor` so a gap between two exact-looking frequencies still scores.
pub fn gap_z(a: f64, se_a: f64, b: f64, se_b: f64, floor: f64) -> f64 {
    let gap = a - b;
    if gap == 0.0 {
        return 0.0;
    }
    gap / (se_a * se_a + se_b * se_b).sqrt().max(floor)
}
