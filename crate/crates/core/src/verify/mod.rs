//! Checks of simulated output against the closed forms in [`crate::theory`].
//!
//! Every check produces a [`CheckResult`] naming its target, the achieved
//! value and the tolerance. Hard checks are deterministic and must hold to
//! floating tolerance; statistical checks compare Monte Carlo estimates with
//! a z-score or a calibrated band; monitored checks are diagnostics whose
//! failure never changes the verdict.

mod identities;
mod statistical;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{BUILD_ID, TOOL, VERSION};

pub use identities::check_identities;
pub use statistical::{
    check_common_friend_bounds, check_common_friend_mean_c2, check_estimator, check_exact_means,
    check_heavy_tail, check_regimes, doubling_exponent, DoublingFit,
};

const DEFAULT_TOLERANCES: &str = include_str!("tolerances.toml");

/// Seed used by the suite when none is given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub version: u32,
    pub identity_rel: f64,
    pub enumeration_rel: f64,
    pub z: f64,
    pub power_ratio_band: (f64, f64),
    pub power_correlation_min: f64,
    pub estimator_median_band: (f64, f64),
    pub heavy_tail_skewness_min: f64,
    pub heavy_tail_max_over_median_min: f64,
    pub cesaro_relative_change_max: f64,
}

impl Tolerances {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("tolerance file: {e}")))
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::parse(DEFAULT_TOLERANCES).expect("bundled tolerance file parses")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Hard,
    Statistical,
    Monitor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub target: f64,
    pub achieved: f64,
    pub tolerance: f64,
    /// How `achieved` is compared with `target` and `tolerance`.
    pub rule: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, kind: CheckKind) -> Self {
        CheckResult {
            name: name.into(),
            kind,
            target: f64::NAN,
            achieved: f64::NAN,
            tolerance: f64::NAN,
            rule: String::new(),
            passed: false,
            detail: None,
        }
    }

    /// `|achieved - target| <= z * se`.
    pub fn within_z(name: impl Into<String>, target: f64, achieved: f64, se: f64, z: f64) -> Self {
        let mut r = CheckResult::new(name, CheckKind::Statistical);
        r.target = target;
        r.achieved = achieved;
        r.tolerance = z * se;
        r.rule = format!("|achieved - target| <= {z} se, se = {se:.6e}");
        r.passed = (achieved - target).abs() <= z * se;
        r
    }

    /// `lo <= achieved <= hi`; `target` is the band midpoint.
    pub fn within_band(
        name: impl Into<String>,
        kind: CheckKind,
        achieved: f64,
        band: (f64, f64),
    ) -> Self {
        let mut r = CheckResult::new(name, kind);
        r.target = 0.5 * (band.0 + band.1);
        r.achieved = achieved;
        r.tolerance = 0.5 * (band.1 - band.0);
        r.rule = format!("{} <= achieved <= {}", band.0, band.1);
        r.passed = band.0 <= achieved && achieved <= band.1;
        r
    }

    /// `achieved > threshold`.
    pub fn above(name: impl Into<String>, kind: CheckKind, achieved: f64, threshold: f64) -> Self {
        let mut r = CheckResult::new(name, kind);
        r.target = threshold;
        r.achieved = achieved;
        r.tolerance = 0.0;
        r.rule = format!("achieved > {threshold}");
        r.passed = achieved > threshold;
        r
    }

    /// Largest error over a family of deterministic comparisons, `<= tol`.
    pub fn max_error(name: impl Into<String>, max_err: f64, tol: f64) -> Self {
        let mut r = CheckResult::new(name, CheckKind::Hard);
        r.target = 0.0;
        r.achieved = max_err;
        r.tolerance = tol;
        r.rule = format!("max relative error <= {tol:e}");
        r.passed = max_err <= tol;
        r
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// Whether this result should fail the run.
    pub fn is_failure(&self, strict: bool) -> bool {
        !self.passed
            && match self.kind {
                CheckKind::Hard => true,
                CheckKind::Statistical => strict,
                CheckKind::Monitor => false,
            }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "pass" } else { "FAIL" };
        let kind = match self.kind {
            CheckKind::Hard => "hard",
            CheckKind::Statistical => "stat",
            CheckKind::Monitor => "monitor",
        };
        write!(
            f,
            "{status:4} [{kind}] {}: achieved {:.6}, target {:.6}, {}",
            self.name, self.achieved, self.target, self.rule
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identities,
    Means,
    Regimes,
    Estimator,
    HeavyTail,
    All,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Means => "means",
            Suite::Regimes => "regimes",
            Suite::Estimator => "estimator",
            Suite::HeavyTail => "heavy-tail",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identities" => Suite::Identities,
            "means" => Suite::Means,
            "regimes" => Suite::Regimes,
            "estimator" => Suite::Estimator,
            "heavy-tail" => Suite::HeavyTail,
            "all" => Suite::All,
            other => return Err(Error::invalid(format!("unknown suite '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub build_id: String,
    pub suite: Suite,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub checks: Vec<CheckResult>,
    pub hard_failures: usize,
    pub statistical_failures: usize,
    pub monitor_failures: usize,
}

impl Report {
    pub fn new(suite: Suite, seed: u64, tolerances: Tolerances, checks: Vec<CheckResult>) -> Self {
        let count = |kind| {
            checks
                .iter()
                .filter(|c| c.kind == kind && !c.passed)
                .count()
        };
        Report {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            build_id: BUILD_ID.to_string(),
            suite,
            seed,
            hard_failures: count(CheckKind::Hard),
            statistical_failures: count(CheckKind::Statistical),
            monitor_failures: count(CheckKind::Monitor),
            tolerances,
            checks,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self, strict: bool) -> bool {
        self.checks.iter().any(|c| c.is_failure(strict))
    }
}

/// Runs one suite, or all of them, with seeds derived from `seed`.
pub fn run_suite(suite: Suite, seed: u64, tol: &Tolerances) -> Result<Report> {
    let mut checks = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Identities {
        checks.extend(check_identities(seed, tol)?);
    }
    if all || suite == Suite::Means {
        checks.extend(check_exact_means(seed, tol)?);
        checks.extend(check_common_friend_bounds(seed, tol)?);
    }
    if all || suite == Suite::Regimes {
        checks.extend(check_regimes(seed, tol)?);
    }
    if all || suite == Suite::Estimator {
        checks.extend(check_estimator(seed, tol)?);
    }
    if all || suite == Suite::HeavyTail {
        checks.extend(check_heavy_tail(seed, tol)?);
    }
    Ok(Report::new(suite, seed, tol.clone(), checks))
}

/// Independent master seed for the experiment tagged `tag`.
pub(crate) fn derive_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tolerances_parse() {
        let tol = Tolerances::default();
        assert_eq!(tol.version, 1);
        assert_eq!(tol.z, 3.0);
        assert_eq!(tol.power_ratio_band, (0.8, 1.25));
        assert_eq!(tol.estimator_median_band, (0.9, 1.1));
    }

    #[test]
    fn unknown_tolerance_keys_rejected() {
        let text = format!("{DEFAULT_TOLERANCES}\nmystery = 1\n");
        assert!(Tolerances::parse(&text).is_err());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in [
            Suite::Identities,
            Suite::Means,
            Suite::Regimes,
            Suite::Estimator,
            Suite::HeavyTail,
            Suite::All,
        ] {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn failure_policy() {
        let mut c = CheckResult::above("x", CheckKind::Statistical, 0.0, 1.0);
        assert!(!c.is_failure(false));
        assert!(c.is_failure(true));
        c.kind = CheckKind::Hard;
        assert!(c.is_failure(false));
        c.kind = CheckKind::Monitor;
        assert!(!c.is_failure(true));
    }
}
