//! Bookkeeping for the acceptance gate: verdict lines, a lazily filled
//! cache of scenario runs, and tolerance helpers.
//!
//! The gate itself lives in `tests/acceptance.rs` and runs with
//! `cargo test -p aqec-validation --test acceptance`; pass criterion names
//! after `--` to run a subset.

use std::collections::BTreeMap;
use std::fmt;

use aqec::experiments::{run_scenario, ScenarioConfig, ScenarioId, ScenarioOutput};

/// Outcome of one criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            pass,
            detail: detail.into(),
        }
    }

    pub fn fail(name: &'static str, detail: impl Into<String>) -> Self {
        Self::new(name, false, detail)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Scenario outputs shared between criteria, each run at most once with its
/// default configuration.
#[derive(Default)]
pub struct ScenarioCache {
    runs: BTreeMap<ScenarioId, Result<ScenarioOutput, String>>,
}

impl ScenarioCache {
    pub fn get(&mut self, id: ScenarioId) -> Result<&ScenarioOutput, String> {
        self.runs
            .entry(id)
            .or_insert_with(|| {
                run_scenario(&ScenarioConfig::defaults(id)).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| format!("{id} failed: {e}"))
    }

    /// Every scenario run so far, in id order.
    pub fn completed(&self) -> impl Iterator<Item = (ScenarioId, &ScenarioOutput)> {
        self.runs
            .iter()
            .filter_map(|(id, r)| r.as_ref().ok().map(|o| (*id, o)))
    }
}

/// A named criterion.
pub struct Check {
    pub name: &'static str,
    pub run: fn(&'static str, &mut ScenarioCache) -> Verdict,
}

/// Runs the checks whose names contain any of `filters` (all when empty),
/// printing one line each. Returns whether every selected check passed.
pub fn run_checks(checks: &[Check], filters: &[String]) -> bool {
    let selected: Vec<&Check> = checks
        .iter()
        .filter(|c| filters.is_empty() || filters.iter().any(|f| c.name.contains(f.as_str())))
        .collect();
    println!("acceptance: {} criteria", selected.len());
    let mut cache = ScenarioCache::default();
    let mut passed = 0;
    for check in &selected {
        let verdict = (check.run)(check.name, &mut cache);
        passed += usize::from(verdict.pass);
        println!("{verdict}");
    }
    println!("acceptance: {passed}/{} passed", selected.len());
    passed == selected.len()
}

/// `value` lies within a multiplicative `factor` of a positive `target`.
pub fn within_factor(value: f64, target: f64, factor: f64) -> bool {
    value > 0.0 && target > 0.0 && value <= target * factor && value >= target / factor
}

/// `|value / target - 1| <= rel`.
pub fn within_relative(value: f64, target: f64, rel: f64) -> bool {
    (value / target - 1.0).abs() <= rel
}
