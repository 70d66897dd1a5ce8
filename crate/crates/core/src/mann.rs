//! The Mann iterative process `x_{n+1} = W(x_n, T x_n; 1 - α_n, α_n)`.
//!
//! [`ConvexStructure::combine`](crate::ConvexStructure::combine) weighs its
//! first argument by `λ`, so a step is `combine(x, Tx, 1 - α)`: weight
//! `1 - α` on the current iterate and `α` on its image.

use serde::{Deserialize, Serialize};

use crate::contractions::{check_fixed_point, Mapping};
use crate::convexity::{check_unit_weight, combine, ConvexGSpace};
use crate::error::{Error, Result};
use crate::gmetric::GMetric;
use crate::point::Point;

/// Any coordinate beyond this magnitude ends the run as diverged.
pub const OVERFLOW_GUARD: f64 = 1e150;

pub const DEFAULT_MAX_ITERS: usize = 10_000;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

/// Whether `Σ α_n` diverges, decided analytically from the schedule kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergentSum {
    True,
    False,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum StepSchedule {
    /// `α_n = α`.
    Constant(f64),
    /// `α_n = 1 / (n + 1)`.
    Harmonic,
    /// `α_n = 1 / (n + 1)^p`.
    Power(f64),
    /// `α_n` read from the list; the schedule ends with it.
    Explicit(Vec<f64>),
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            StepSchedule::Constant(a) => check_unit_weight(*a, "constant alpha"),
            StepSchedule::Harmonic => Ok(()),
            StepSchedule::Power(p) if p.is_finite() && *p >= 0.0 => Ok(()),
            StepSchedule::Power(p) => Err(Error::invalid(format!(
                "power exponent {p} must be a finite nonnegative real"
            ))),
            StepSchedule::Explicit(v) => {
                if v.is_empty() {
                    return Err(Error::invalid("explicit schedule is empty"));
                }
                v.iter().try_for_each(|a| check_unit_weight(*a, "explicit alpha"))
            }
        }
    }

    /// `α_n`, or `None` past the end of an explicit list.
    pub fn alpha(&self, n: usize) -> Option<f64> {
        match self {
            StepSchedule::Constant(a) => Some(*a),
            StepSchedule::Harmonic => Some(1.0 / (n as f64 + 1.0)),
            StepSchedule::Power(p) => Some(1.0 / (n as f64 + 1.0).powf(*p)),
            StepSchedule::Explicit(v) => v.get(n).copied(),
        }
    }

    pub fn divergent_sum(&self) -> DivergentSum {
        match self {
            StepSchedule::Constant(a) if *a > 0.0 => DivergentSum::True,
            StepSchedule::Constant(_) => DivergentSum::False,
            StepSchedule::Harmonic => DivergentSum::True,
            StepSchedule::Power(p) if *p > 1.0 => DivergentSum::False,
            StepSchedule::Power(_) => DivergentSum::True,
            StepSchedule::Explicit(_) => DivergentSum::Unknown,
        }
    }

    pub fn label(&self) -> String {
        match self {
            StepSchedule::Constant(a) => format!("constant({a})"),
            StepSchedule::Harmonic => "harmonic".into(),
            StepSchedule::Power(p) => format!("power({p})"),
            StepSchedule::Explicit(v) => format!("explicit({} values)", v.len()),
        }
    }
}

/// `α_0, ..., α_{n-1}` (truncated for a shorter explicit list).
pub fn schedule_values(sched: &StepSchedule, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("schedule_values needs n >= 1"));
    }
    sched.validate()?;
    Ok((0..n).map_while(|i| sched.alpha(i)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub max_iters: usize,
    /// Stop once `G(x_n, Tx_n, Tx_n) <= residual_tol`.
    pub residual_tol: f64,
    /// Stop once `G(x_n, u, u) <= error_tol`; needs a known fixed point.
    pub error_tol: Option<f64>,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            max_iters: DEFAULT_MAX_ITERS,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            error_tol: None,
        }
    }
}

impl StoppingRule {
    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self
    }

    pub fn with_error_tol(mut self, tol: f64) -> Self {
        self.error_tol = Some(tol);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        let ok = |t: f64| t.is_finite() && t >= 0.0;
        if !ok(self.residual_tol) || !self.error_tol.is_none_or(ok) {
            return Err(Error::invalid("stopping tolerances must be finite and nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalStatus {
    ResidualConverged,
    ErrorConverged,
    MaxIterations,
    /// The next iterate was non-finite or crossed [`OVERFLOW_GUARD`].
    Diverged,
    /// An explicit schedule ran out of values.
    ScheduleExhausted,
}

impl TerminalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalStatus::ResidualConverged => "residual-converged",
            TerminalStatus::ErrorConverged => "error-converged",
            TerminalStatus::MaxIterations => "max-iterations",
            TerminalStatus::Diverged => "diverged",
            TerminalStatus::ScheduleExhausted => "schedule-exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub n: usize,
    /// The weight used to step from `x_n`; absent past an explicit schedule's end.
    pub alpha_n: Option<f64>,
    pub point: Point,
    /// `G(x_n, Tx_n, Tx_n)`.
    pub residual: f64,
    /// `G(x_n, u, u)` when the fixed point `u` is known.
    pub true_error: Option<f64>,
    /// Filled in by [`attach_bounds`](crate::analysis::attach_bounds).
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<TraceRecord>,
    pub status: TerminalStatus,
    pub fixed_point: Option<Point>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("a trace always holds x_0")
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.records.iter().map(|r| &r.point)
    }
}

/// One Mann step: `combine(x, Tx, 1 - α)`.
pub fn mann_step<M: Mapping + ?Sized>(cs: &ConvexGSpace, t: &M, x: &Point, alpha: f64) -> Result<Point> {
    check_unit_weight(alpha, "alpha")?;
    cs.check_point(x)?;
    let tx = t.apply(x);
    combine(cs, x, &tx, 1.0 - alpha)
}

fn escaped(p: &Point) -> bool {
    !p.is_finite() || p.max_abs() > OVERFLOW_GUARD
}

/// Iterates from `x0` until a stopping criterion fires, recording every step.
pub fn run_mann<M: Mapping + ?Sized>(
    cs: &ConvexGSpace,
    t: &M,
    x0: &Point,
    sched: &StepSchedule,
    stop: &StoppingRule,
) -> Result<IterationTrace> {
    sched.validate()?;
    stop.validate()?;
    cs.check_point(x0)?;
    check_fixed_point(cs, t)?;
    let u = t.known_fixed_point().cloned();
    if stop.error_tol.is_some() && u.is_none() {
        return Err(Error::invalid("error_tol needs a mapping with a known fixed point"));
    }
    let structure = cs.structure();

    let mut records = Vec::new();
    let mut x = x0.clone();
    let status = loop {
        let n = records.len();
        let tx = t.apply(&x);
        if !tx.is_finite() {
            break TerminalStatus::Diverged;
        }
        cs.check_point(&tx)?;
        let residual = cs.g(&x, &tx, &tx);
        let true_error = u.as_ref().map(|u| cs.g(&x, u, u));
        let alpha_n = sched.alpha(n);
        records.push(TraceRecord {
            n,
            alpha_n,
            point: x.clone(),
            residual,
            true_error,
            bound: None,
        });

        if residual <= stop.residual_tol {
            break TerminalStatus::ResidualConverged;
        }
        if let (Some(tol), Some(err)) = (stop.error_tol, true_error) {
            if err <= tol {
                break TerminalStatus::ErrorConverged;
            }
        }
        if n >= stop.max_iters {
            break TerminalStatus::MaxIterations;
        }
        let Some(alpha) = alpha_n else {
            break TerminalStatus::ScheduleExhausted;
        };
        let next = structure.combine(&x, &tx, 1.0 - alpha);
        if escaped(&next) {
            break TerminalStatus::Diverged;
        }
        cs.check_point(&next)?;
        x = next;
    };

    Ok(IterationTrace {
        records,
        status,
        fixed_point: u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contractions::{make_affine_contraction, Translation};
    use crate::spaces::make_perimeter_space;

    fn s(v: f64) -> Point {
        Point::scalar(v).unwrap()
    }

    #[test]
    fn step_examples() {
        let cs = make_perimeter_space(1).unwrap();
        let half = make_affine_contraction(s(0.0), 0.5).unwrap();
        assert_eq!(mann_step(&cs, &half, &s(1.0), 0.5).unwrap(), s(0.75));
        assert_eq!(mann_step(&cs, &half, &s(1.3), 0.0).unwrap(), s(1.3));
        assert_eq!(mann_step(&cs, &half, &s(1.3), 1.0).unwrap(), s(0.65));
        assert!(mann_step(&cs, &half, &s(1.0), 1.5).is_err());
        assert!(mann_step(&cs, &half, &s(1.0), -0.1).is_err());
    }

    #[test]
    fn geometric_run() {
        let cs = make_perimeter_space(1).unwrap();
        let half = make_affine_contraction(s(0.0), 0.5).unwrap();
        let stop = StoppingRule::default().with_max_iters(3);
        let tr = run_mann(&cs, &half, &s(1.0), &StepSchedule::Constant(0.5), &stop).unwrap();
        assert_eq!(tr.len(), 4);
        assert_eq!(tr.records[3].point, s(27.0 / 64.0));
        assert_eq!(tr.status, TerminalStatus::MaxIterations);
        assert_eq!(tr.records[3].true_error, Some(2.0 * 27.0 / 64.0));
    }

    #[test]
    fn identity_stops_at_once() {
        let cs = make_perimeter_space(2).unwrap();
        let id = make_affine_contraction(Point::zeros(2), 1.0).unwrap();
        let x0 = Point::new(vec![3.0, -1.0]).unwrap();
        let tr = run_mann(&cs, &id, &x0, &StepSchedule::Harmonic, &StoppingRule::default()).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.records[0].residual, 0.0);
        assert_eq!(tr.status, TerminalStatus::ResidualConverged);
        assert!(tr.records[0].true_error.is_none());
    }

    #[test]
    fn doubling_diverges_at_the_guard() {
        let cs = make_perimeter_space(1).unwrap();
        let double = make_affine_contraction(s(0.0), 2.0).unwrap();
        let tr = run_mann(&cs, &double, &s(1.0), &StepSchedule::Constant(1.0), &StoppingRule::default()).unwrap();
        assert_eq!(tr.status, TerminalStatus::Diverged);
        // 2^498 < 1e150 < 2^499
        assert_eq!(tr.last().n, 498);
        assert_eq!(tr.last().point, s(2f64.powi(498)));
    }

    #[test]
    fn explicit_schedule_exhausts() {
        let cs = make_perimeter_space(1).unwrap();
        let t = Translation::new(1.0).unwrap();
        let sched = StepSchedule::Explicit(vec![1.0, 0.5]);
        let tr = run_mann(&cs, &t, &s(0.0), &sched, &StoppingRule::default()).unwrap();
        assert_eq!(tr.status, TerminalStatus::ScheduleExhausted);
        assert_eq!(tr.len(), 3);
        assert_eq!(tr.last().point, s(1.5));
        assert_eq!(tr.last().alpha_n, None);
    }

    #[test]
    fn error_tolerance_stops() {
        let cs = make_perimeter_space(1).unwrap();
        let half = make_affine_contraction(s(0.0), 0.5).unwrap();
        let stop = StoppingRule::default().with_residual_tol(0.0).with_error_tol(0.1);
        let tr = run_mann(&cs, &half, &s(1.0), &StepSchedule::Constant(1.0), &stop).unwrap();
        assert_eq!(tr.status, TerminalStatus::ErrorConverged);
        assert!(tr.last().true_error.unwrap() <= 0.1);
        let t = Translation::new(1.0).unwrap();
        assert!(run_mann(&cs, &t, &s(1.0), &StepSchedule::Harmonic, &stop).is_err());
    }

    #[test]
    fn schedule_examples() {
        let v = schedule_values(&StepSchedule::Harmonic, 3).unwrap();
        assert_eq!(v, vec![1.0, 0.5, 1.0 / 3.0]);
        assert_eq!(schedule_values(&StepSchedule::Constant(0.5), 2).unwrap(), vec![0.5, 0.5]);
        let p2 = StepSchedule::Power(2.0);
        assert_eq!(schedule_values(&p2, 3).unwrap(), vec![1.0, 0.25, 1.0 / 9.0]);
        assert_eq!(p2.divergent_sum(), DivergentSum::False);
        assert_eq!(StepSchedule::Power(1.0).divergent_sum(), DivergentSum::True);
        assert_eq!(StepSchedule::Harmonic.divergent_sum(), DivergentSum::True);
        assert_eq!(StepSchedule::Constant(0.0).divergent_sum(), DivergentSum::False);
        assert_eq!(StepSchedule::Explicit(vec![0.1]).divergent_sum(), DivergentSum::Unknown);
        assert!(schedule_values(&StepSchedule::Harmonic, 0).is_err());
        assert!(StepSchedule::Constant(1.5).validate().is_err());
        assert!(StepSchedule::Explicit(vec![0.5, -0.1]).validate().is_err());
        assert!(StepSchedule::Power(f64::NAN).validate().is_err());
    }

    #[test]
    fn stopping_rule_validation() {
        assert!(StoppingRule::default().with_max_iters(0).validate().is_err());
        assert!(StoppingRule::default().with_residual_tol(-1.0).validate().is_err());
        assert!(StoppingRule::default().validate().is_ok());
    }
}
