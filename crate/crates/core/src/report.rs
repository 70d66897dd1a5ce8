use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::point::Point;

/// Number of violations retained in a report, worst margin first.
pub const MAX_REPORTED_VIOLATIONS: usize = 10;

/// One failed inequality together with the operands that witnessed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub axiom: String,
    pub witness: Vec<Point>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Mixing weight in force when the violation occurred, for convexity checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub total_checks: usize,
    pub violations: Vec<Violation>,
    /// Largest `lhs - rhs` seen over every check, violated or not.
    pub worst_margin: f64,
    pub passed: bool,
    /// Named extra diagnostics (worst ratios, per-family maxima).
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
}

impl CheckReport {
    pub fn violations_of<'a>(&'a self, axiom: &'a str) -> impl Iterator<Item = &'a Violation> + 'a {
        self.violations.iter().filter(move |v| v.axiom == axiom)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }
}

/// Accumulates check outcomes for one sample index; tallies from all
/// indices are merged in index order to keep reports schedule-independent.
#[derive(Debug, Clone)]
pub(crate) struct Tally {
    checks: usize,
    worst_margin: f64,
    violations: Vec<Violation>,
    maxima: BTreeMap<&'static str, f64>,
    lambda: Option<f64>,
}

impl Default for Tally {
    fn default() -> Self {
        Tally {
            checks: 0,
            worst_margin: f64::NEG_INFINITY,
            violations: Vec::new(),
            maxima: BTreeMap::new(),
            lambda: None,
        }
    }
}

/// Allowed slack for `lhs <= rhs`: absolute near zero, relative for large values.
pub(crate) fn slack(rhs: f64, tol: f64) -> f64 {
    tol * rhs.abs().max(1.0)
}

impl Tally {
    fn record(&mut self, axiom: &str, lhs: f64, rhs: f64, margin: f64, violated: bool, witness: impl FnOnce() -> Vec<Point>) {
        self.checks += 1;
        if margin > self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
        }
        if violated {
            self.violations.push(Violation {
                axiom: axiom.to_string(),
                witness: witness(),
                lhs,
                rhs,
                margin,
                lambda: self.lambda,
            });
        }
    }

    /// Stamps subsequent violations with the given mixing weight.
    pub fn set_lambda(&mut self, lambda: Option<f64>) {
        self.lambda = lambda;
    }

    /// Checks `lhs <= rhs` within the relative tolerance.
    pub fn le(&mut self, axiom: &str, lhs: f64, rhs: f64, tol: f64, witness: impl FnOnce() -> Vec<Point>) {
        let violated = !(lhs <= rhs + slack(rhs, tol));
        self.record(axiom, lhs, rhs, lhs - rhs, violated, witness);
    }

    /// Checks the strict inequality `value > floor`.
    pub fn gt(&mut self, axiom: &str, value: f64, floor: f64, witness: impl FnOnce() -> Vec<Point>) {
        let violated = !(value > floor);
        self.record(axiom, floor, value, floor - value, violated, witness);
    }

    /// Checks `value == reference` within the relative tolerance.
    pub fn close(&mut self, axiom: &str, value: f64, reference: f64, tol: f64, witness: impl FnOnce() -> Vec<Point>) {
        let diff = (value - reference).abs();
        let violated = !(diff <= slack(reference, tol));
        self.record(axiom, value, reference, diff, violated, witness);
    }

    /// Records an evaluation failure (for example a mapped point leaving the domain).
    pub fn failure(&mut self, axiom: &str, witness: Vec<Point>) {
        self.record(axiom, f64::INFINITY, 0.0, f64::INFINITY, true, || witness);
    }

    pub fn track_max(&mut self, name: &'static str, value: f64) {
        let slot = self.maxima.entry(name).or_insert(f64::NEG_INFINITY);
        if value > *slot {
            *slot = value;
        }
    }

    fn trim(&mut self) {
        sort_worst_first(&mut self.violations);
        self.violations.truncate(MAX_REPORTED_VIOLATIONS);
    }

    pub fn merge(mut self, mut other: Tally) -> Tally {
        self.checks += other.checks;
        if other.worst_margin > self.worst_margin || other.worst_margin.is_nan() {
            self.worst_margin = other.worst_margin;
        }
        self.violations.append(&mut other.violations);
        self.trim();
        for (name, value) in other.maxima {
            self.track_max(name, value);
        }
        self
    }

    pub fn into_report(mut self) -> CheckReport {
        self.trim();
        CheckReport {
            total_checks: self.checks,
            passed: self.violations.is_empty(),
            violations: self.violations,
            worst_margin: self.worst_margin,
            metrics: self
                .maxima
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }
}

fn sort_worst_first(violations: &mut [Violation]) {
    // NaN margins sort first: they are the least trustworthy outcomes.
    violations.sort_by(|a, b| match (a.margin.is_nan(), b.margin.is_nan()) {
        (true, true) => std::cmp::Ordering::Equal,
        (true, false) => std::cmp::Ordering::Less,
        (false, true) => std::cmp::Ordering::Greater,
        _ => b.margin.partial_cmp(&a.margin).unwrap(),
    });
}

pub(crate) fn merge_all(tallies: Vec<Tally>) -> CheckReport {
    tallies
        .into_iter()
        .fold(Tally::default(), Tally::merge)
        .into_report()
}
