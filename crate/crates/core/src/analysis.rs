//! Contraction factors, cumulative product bounds and their verification
//! against Mann traces.
//!
//! Under a four-term condition with coefficients `a, b` (`a + 3b < 1`), each
//! Mann step satisfies
//!
//! ```text
//! G(x_{n+1}, u, u) <= [1 - α_n (1 - δ)] G(x_n, u, u),   δ = (a + b) / (1 - 2b)
//! ```
//!
//! and the three-term condition gives the same recursion with
//! `δ = a / (1 - 2a)`. Chaining the steps yields `G(x_n, u, u) <= B_n G(x_0, u, u)`
//! where `B_n = Π_{k<n} [1 - α_k (1 - δ)]` and `B_0 = 1`; `B_n` is indexed so
//! that it pairs with `x_n`.

use serde::{Deserialize, Serialize};

use crate::contractions::ContractionSpec;
use crate::error::{Error, Result};
use crate::gmetric::GMetric;
use crate::mann::{IterationTrace, StepSchedule};
use crate::point::Point;
use crate::report::{merge_all, CheckReport, Tally};
use crate::sampling::{map_indices, Execution};

/// Products switch to log-space accumulation when any factor falls below this.
pub const LOG_SPACE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionFactor {
    pub delta: f64,
    /// `δ >= 1`: the product bound no longer contracts.
    pub vacuous: bool,
}

/// `δ = (a + b) / (1 - 2b)` for `a, b >= 0` with `a + 3b < 1`.
pub fn delta_four_term(a: f64, b: f64) -> Result<f64> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::precondition("a >= 0", format!("a = {a}")));
    }
    if !(b.is_finite() && b >= 0.0) {
        return Err(Error::precondition("b >= 0", format!("b = {b}")));
    }
    if a + 3.0 * b >= 1.0 {
        return Err(Error::precondition("a + 3b < 1", format!("a + 3b = {}", a + 3.0 * b)));
    }
    Ok((a + b) / (1.0 - 2.0 * b))
}

/// `δ = a / (1 - 2a)` for `0 <= a < 1/2`.
///
/// The formula exceeds 1 once `a >= 1/3`; such values are returned with the
/// `vacuous` flag set rather than rejected.
pub fn delta_three_term(a: f64) -> Result<ContractionFactor> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::precondition("a >= 0", format!("a = {a}")));
    }
    if a >= 0.5 {
        return Err(Error::precondition("a < 1/2", format!("a = {a}")));
    }
    let delta = a / (1.0 - 2.0 * a);
    Ok(ContractionFactor {
        delta,
        vacuous: delta >= 1.0,
    })
}

/// The contraction factor governing a spec's Mann rate.
///
/// `sum` and `max` reuse the four-term factor with `b = c = d`; `k-sum`
/// reuses the three-term factor with `a = b = c = k`.
pub fn delta_for(spec: &ContractionSpec) -> Result<ContractionFactor> {
    spec.validate()?;
    match *spec {
        ContractionSpec::FourTerm { a, b, .. }
        | ContractionSpec::FourTermAlt { a, b, .. }
        | ContractionSpec::Sum { a, b }
        | ContractionSpec::Max { a, b } => delta_four_term(a, b).map(|delta| ContractionFactor {
            delta,
            vacuous: false,
        }),
        ContractionSpec::ThreeTerm { a, .. } => delta_three_term(a),
        ContractionSpec::KSum { k } => delta_three_term(k),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    pub delta: f64,
    /// `1 - α_k (1 - δ)` for `k < n`.
    pub factors: Vec<f64>,
    /// `B_0 ..= B_n`.
    pub products: Vec<f64>,
    /// `ln B_0 ..= ln B_n`, always accumulated in log-space.
    pub log_products: Vec<f64>,
    /// Whether `products` came from `exp(log_products)`.
    pub log_space: bool,
}

impl RateBound {
    pub fn last(&self) -> f64 {
        *self.products.last().expect("B_0 is always present")
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::invalid(format!("delta = {delta} must lie in [0, 1)")));
    }
    if delta >= 1.0 {
        return Err(Error::VacuousBound { delta });
    }
    Ok(())
}

/// Product bound over an explicit list of step weights.
pub fn rate_bound_from_alphas(delta: f64, alphas: &[f64]) -> Result<RateBound> {
    check_delta(delta)?;
    let factors: Vec<f64> = alphas.iter().map(|a| 1.0 - a * (1.0 - delta)).collect();
    let mut log_products = Vec::with_capacity(factors.len() + 1);
    log_products.push(0.0);
    let mut acc = 0.0;
    for f in &factors {
        acc += f.ln();
        log_products.push(acc);
    }
    let log_space = factors.iter().any(|&f| f < LOG_SPACE_THRESHOLD);
    let products = if log_space {
        log_products.iter().map(|l| l.exp()).collect()
    } else {
        let mut products = Vec::with_capacity(factors.len() + 1);
        let mut b = 1.0;
        products.push(b);
        for f in &factors {
            b *= f;
            products.push(b);
        }
        products
    };
    Ok(RateBound {
        delta,
        factors,
        products,
        log_products,
        log_space,
    })
}

/// `B_0 ..= B_n` for the given schedule.
pub fn product_bound(delta: f64, sched: &StepSchedule, n: usize) -> Result<RateBound> {
    check_delta(delta)?;
    sched.validate()?;
    let alphas: Vec<f64> = (0..n).map_while(|k| sched.alpha(k)).collect();
    if alphas.len() < n {
        return Err(Error::invalid(format!(
            "schedule provides {} step weights, {n} needed",
            alphas.len()
        )));
    }
    rate_bound_from_alphas(delta, &alphas)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta: f64,
    /// `B_n G(x_0, u, u)` per record.
    pub bounds: Vec<f64>,
    /// `B_n G(x_0, u, u) - G(x_n, u, u)` per record.
    pub slack: Vec<f64>,
    pub min_slack: f64,
    pub holds: bool,
    pub first_violation: Option<usize>,
}

/// Checks `G(x_n, u, u) <= B_n G(x_0, u, u) + tol` at every record, with
/// `B_n` rebuilt from the trace's own step weights.
pub fn verify_bound(trace: &IterationTrace, delta: f64, tol: f64) -> Result<BoundReport> {
    check_delta(delta)?;
    let errors: Vec<f64> = trace
        .records
        .iter()
        .map(|r| r.true_error)
        .collect::<Option<_>>()
        .ok_or(Error::MissingTrueError)?;
    if errors.is_empty() {
        return Err(Error::MissingTrueError);
    }
    let alphas: Vec<f64> = trace.records[..trace.len() - 1]
        .iter()
        .map(|r| r.alpha_n)
        .collect::<Option<_>>()
        .ok_or_else(|| Error::invalid("trace is missing a step weight"))?;
    let rb = rate_bound_from_alphas(delta, &alphas)?;
    let e0 = errors[0];
    let bounds: Vec<f64> = rb.products.iter().map(|b| b * e0).collect();
    let slack: Vec<f64> = bounds.iter().zip(&errors).map(|(b, e)| b - e).collect();
    let min_slack = slack.iter().copied().fold(f64::INFINITY, f64::min);
    let first_violation = slack.iter().position(|s| !(*s >= -tol));
    Ok(BoundReport {
        delta,
        holds: first_violation.is_none(),
        bounds,
        slack,
        min_slack,
        first_violation,
    })
}

/// Copies a report's bound column into the trace records.
pub fn attach_bounds(trace: &mut IterationTrace, report: &BoundReport) {
    for (rec, b) in trace.records.iter_mut().zip(&report.bounds) {
        rec.bound = Some(*b);
    }
}

pub const FAMILY_XN_XN_X: &str = "max_g_xn_xn_x";
pub const FAMILY_XN_X_X: &str = "max_g_xn_x_x";
pub const FAMILY_XM_XN_X: &str = "max_g_xm_xn_x";

/// Evaluates the three equivalent G-convergence criteria over the last
/// `tail` iterates: `G(x_n, x_n, x)`, `G(x_n, x, x)` and `G(x_m, x_n, x)` for
/// every pair in the window. The report's metrics hold each family's maximum.
pub fn convergence_diagnostics<S: GMetric + ?Sized>(
    space: &S,
    trace: &IterationTrace,
    limit: &Point,
    tail: usize,
    tol: f64,
) -> Result<CheckReport> {
    if tail == 0 || tail > trace.len() {
        return Err(Error::invalid(format!(
            "tail {tail} must lie in 1..={}",
            trace.len()
        )));
    }
    space.check_point(limit)?;
    let window: Vec<&Point> = trace.records[trace.len() - tail..].iter().map(|r| &r.point).collect();
    let tallies = map_indices(tail, Execution::default(), |i| {
        let mut t = Tally::default();
        let xn = window[i];
        let v = space.g(xn, xn, limit);
        t.track_max(FAMILY_XN_XN_X, v);
        t.le(FAMILY_XN_XN_X, v, tol, 0.0, || vec![xn.clone(), xn.clone(), limit.clone()]);
        let v = space.g(xn, limit, limit);
        t.track_max(FAMILY_XN_X_X, v);
        t.le(FAMILY_XN_X_X, v, tol, 0.0, || vec![xn.clone(), limit.clone(), limit.clone()]);
        for xm in &window[i..] {
            let v = space.g(xm, xn, limit);
            t.track_max(FAMILY_XM_XN_X, v);
            t.le(FAMILY_XM_XN_X, v, tol, 0.0, || vec![(*xm).clone(), xn.clone(), limit.clone()]);
        }
        t
    });
    let mut report = merge_all(tallies);
    let verdicts: Vec<bool> = [FAMILY_XN_XN_X, FAMILY_XN_X_X, FAMILY_XM_XN_X]
        .iter()
        .map(|f| report.metrics[*f] <= tol)
        .collect();
    let agree = verdicts.iter().all(|v| *v == verdicts[0]);
    report.metrics.insert("families_agree".into(), if agree { 1.0 } else { 0.0 });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contractions::{make_affine_contraction, Translation};
    use crate::mann::{run_mann, StoppingRule, TerminalStatus};
    use crate::spaces::make_perimeter_space;

    fn s(v: f64) -> Point {
        Point::scalar(v).unwrap()
    }

    #[test]
    fn four_term_delta() {
        assert!((delta_four_term(0.2, 0.1).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(delta_four_term(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(delta_four_term(0.5, 0.0).unwrap(), 0.5);
        let e = delta_four_term(0.4, 0.2).unwrap_err();
        assert!(e.to_string().contains("a + 3b < 1"), "{e}");
        assert!(delta_four_term(-0.1, 0.0).is_err());
    }

    #[test]
    fn three_term_delta() {
        assert_eq!(delta_three_term(0.25).unwrap(), ContractionFactor { delta: 0.5, vacuous: false });
        assert_eq!(delta_three_term(0.0).unwrap().delta, 0.0);
        let f = delta_three_term(0.4).unwrap();
        assert!((f.delta - 2.0).abs() < 1e-12 && f.vacuous);
        assert!(delta_three_term(0.5).is_err());
    }

    #[test]
    fn product_examples() {
        let rb = product_bound(0.5, &StepSchedule::Constant(0.5), 4).unwrap();
        assert_eq!(rb.last(), 0.31640625);
        assert_eq!(product_bound(0.3, &StepSchedule::Harmonic, 0).unwrap().products, vec![1.0]);
        let rb = product_bound(0.5, &StepSchedule::Harmonic, 2).unwrap();
        assert_eq!(rb.last(), 0.375);
        assert!(matches!(
            product_bound(1.0, &StepSchedule::Harmonic, 2),
            Err(Error::VacuousBound { .. })
        ));
        assert!(product_bound(-0.1, &StepSchedule::Harmonic, 2).is_err());
        assert!(product_bound(0.1, &StepSchedule::Explicit(vec![0.5]), 3).is_err());
    }

    #[test]
    fn log_space_kicks_in_for_tiny_factors() {
        // α = 1, δ = 0 gives zero factors.
        let rb = product_bound(0.0, &StepSchedule::Constant(1.0), 3).unwrap();
        assert!(rb.log_space);
        assert_eq!(rb.products, vec![1.0, 0.0, 0.0, 0.0]);
        let rb = product_bound(0.5, &StepSchedule::Constant(0.5), 3).unwrap();
        assert!(!rb.log_space);
    }

    #[test]
    fn exact_linear_case_has_zero_slack() {
        let cs = make_perimeter_space(1).unwrap();
        let half = make_affine_contraction(s(0.0), 0.5).unwrap();
        let stop = StoppingRule::default().with_max_iters(30);
        let tr = run_mann(&cs, &half, &s(1.0), &StepSchedule::Constant(0.5), &stop).unwrap();
        let rep = verify_bound(&tr, 0.5, 1e-12).unwrap();
        assert!(rep.holds);
        assert!(rep.min_slack.abs() < 1e-12);
    }

    #[test]
    fn constant_map_converges_in_one_step() {
        let cs = make_perimeter_space(1).unwrap();
        let c = make_affine_contraction(s(2.0), 0.0).unwrap();
        let stop = StoppingRule::default().with_max_iters(5).with_residual_tol(0.0);
        let tr = run_mann(&cs, &c, &s(9.0), &StepSchedule::Harmonic, &stop).unwrap();
        assert_eq!(tr.records[1].true_error, Some(0.0));
        let rep = verify_bound(&tr, 0.0, 1e-12).unwrap();
        assert!(rep.holds);
        assert!(rep.slack[0] == 0.0 && rep.slack[1] >= 0.0);
    }

    #[test]
    fn fabricated_delta_on_expansive_map_fails() {
        let cs = make_perimeter_space(1).unwrap();
        let double = make_affine_contraction(s(0.0), 2.0).unwrap();
        let stop = StoppingRule::default().with_max_iters(10);
        let mut tr = run_mann(&cs, &double, &s(1.0), &StepSchedule::Constant(0.5), &stop).unwrap();
        // The center stays a genuine fixed point even though k >= 1.
        for r in &mut tr.records {
            r.true_error = Some(cs.g(&r.point, &s(0.0), &s(0.0)));
        }
        let rep = verify_bound(&tr, 0.5, 1e-9).unwrap();
        assert!(!rep.holds);
        assert_eq!(rep.first_violation, Some(1));
    }

    #[test]
    fn verify_needs_true_error_and_contracting_delta() {
        let cs = make_perimeter_space(1).unwrap();
        let t = Translation::new(1.0).unwrap();
        let stop = StoppingRule::default().with_max_iters(3);
        let tr = run_mann(&cs, &t, &s(0.0), &StepSchedule::Harmonic, &stop).unwrap();
        assert_eq!(verify_bound(&tr, 0.5, 0.0), Err(Error::MissingTrueError));
        let half = make_affine_contraction(s(0.0), 0.5).unwrap();
        let tr = run_mann(&cs, &half, &s(1.0), &StepSchedule::Harmonic, &stop).unwrap();
        assert!(matches!(verify_bound(&tr, 1.5, 0.0), Err(Error::VacuousBound { .. })));
    }

    #[test]
    fn diagnostics_on_constant_and_marching_traces() {
        let cs = make_perimeter_space(1).unwrap();
        let c = make_affine_contraction(s(2.0), 0.0).unwrap();
        let stop = StoppingRule::default().with_max_iters(5).with_residual_tol(0.0);
        let tr = run_mann(&cs, &c, &s(2.0), &StepSchedule::Constant(0.5), &stop).unwrap();
        assert_eq!(tr.status, TerminalStatus::ResidualConverged);
        let rep = convergence_diagnostics(&cs, &tr, &s(2.0), 1, 1e-12).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.metric(FAMILY_XM_XN_X), Some(0.0));

        let t = Translation::new(1.0).unwrap();
        let stop = StoppingRule::default().with_max_iters(40);
        let tr = run_mann(&cs, &t, &s(0.0), &StepSchedule::Constant(0.5), &stop).unwrap();
        let rep = convergence_diagnostics(&cs, &tr, &s(0.0), 10, 1e-6).unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.metric("families_agree"), Some(1.0));
        assert!(convergence_diagnostics(&cs, &tr, &s(0.0), 0, 1e-6).is_err());
        assert!(convergence_diagnostics(&cs, &tr, &s(0.0), 100, 1e-6).is_err());
    }
}
