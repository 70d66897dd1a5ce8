//! The G-metric abstraction and sampled verification of its axioms.
//!
//! A G-metric assigns a nonnegative value to every triple of points and
//! must satisfy five axioms:
//!
//! 1. `G(x,x,x) = 0`
//! 2. `G(x,x,y) > 0` whenever `x != y`
//! 3. `G(x,x,y) <= G(x,y,z)` whenever `z != y`
//! 4. full symmetry in the three arguments
//! 5. the rectangle inequality `G(x,y,z) <= G(x,a,a) + G(a,y,z)`
//!
//! [`check_axioms`] samples these; [`check_derived`] samples the standard
//! consequences that every G-metric inherits from them.

use std::sync::Arc;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::point::Point;
use crate::report::{merge_all, CheckReport, Tally};
use crate::sampling::{map_indices, SamplePlan};

/// Floor for the strict positivity axiom: floating point cannot witness
/// `G > 0` at arbitrarily close points.
pub const STRICT_FLOOR: f64 = 1e-12;

/// Default relative tolerance for `<=` checks.
pub const DEFAULT_TOL: f64 = 1e-9;

pub trait GMetric: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Raw evaluation for points that already passed [`GMetric::check_point`].
    fn g(&self, x: &Point, y: &Point, z: &Point) -> f64;

    fn check_point(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: p.dim(),
            });
        }
        if !p.is_finite() {
            return Err(Error::Domain {
                space: self.name().to_string(),
                point: p.to_string(),
                reason: "non-finite coordinate".into(),
            });
        }
        Ok(())
    }

    /// Draws one domain point for `plan`. The default is uniform in the box.
    fn sample(&self, plan: &SamplePlan, rng: &mut dyn RngCore) -> Point {
        plan.uniform_point(rng)
    }

    fn validate_plan(&self, plan: &SamplePlan) -> Result<()> {
        plan.validate(self.dim())
    }
}

impl<T: GMetric + ?Sized> GMetric for Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn g(&self, x: &Point, y: &Point, z: &Point) -> f64 {
        (**self).g(x, y, z)
    }
    fn check_point(&self, p: &Point) -> Result<()> {
        (**self).check_point(p)
    }
    fn sample(&self, plan: &SamplePlan, rng: &mut dyn RngCore) -> Point {
        (**self).sample(plan, rng)
    }
    fn validate_plan(&self, plan: &SamplePlan) -> Result<()> {
        (**self).validate_plan(plan)
    }
}

/// A G-space backed by a plain function, mostly for experiments and for
/// feeding deliberately broken evaluators to the checkers.
pub struct FnSpace<F> {
    name: String,
    dim: usize,
    f: F,
}

impl<F> FnSpace<F>
where
    F: Fn(&Point, &Point, &Point) -> f64 + Send + Sync,
{
    pub fn new(name: impl Into<String>, dim: usize, f: F) -> Self {
        FnSpace {
            name: name.into(),
            dim,
            f,
        }
    }
}

impl<F> GMetric for FnSpace<F>
where
    F: Fn(&Point, &Point, &Point) -> f64 + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn g(&self, x: &Point, y: &Point, z: &Point) -> f64 {
        (self.f)(x, y, z)
    }
}

/// Validated evaluation of `G(x, y, z)`.
pub fn eval_g<S: GMetric + ?Sized>(space: &S, x: &Point, y: &Point, z: &Point) -> Result<f64> {
    space.check_point(x)?;
    space.check_point(y)?;
    space.check_point(z)?;
    Ok(space.g(x, y, z))
}

fn distinct(p: &Point, q: &Point, min_separation: f64) -> bool {
    let s = p.separation(q);
    s > 0.0 && s >= min_separation
}

/// Structured quadruples over the plan's grid, enumerated by index.
pub(crate) struct Grid {
    points: Vec<Point>,
}

impl Grid {
    pub fn new<S: GMetric + ?Sized>(space: &S, plan: &SamplePlan) -> Self {
        let points = plan
            .structured_points()
            .into_iter()
            .filter(|p| space.check_point(p).is_ok())
            .collect();
        Grid { points }
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Number of `arity`-tuples.
    pub fn tuples(&self, arity: u32) -> usize {
        self.points.len().pow(arity)
    }

    pub fn tuple<const N: usize>(&self, mut index: usize) -> [&Point; N] {
        let n = self.points.len();
        std::array::from_fn(|_| {
            let p = &self.points[index % n];
            index /= n;
            p
        })
    }
}

fn axioms_on<S: GMetric + ?Sized>(
    space: &S,
    [x, y, z, a]: [&Point; 4],
    min_separation: f64,
    tol: f64,
    t: &mut Tally,
) {
    let g = |p: &Point, q: &Point, r: &Point| space.g(p, q, r);
    let w3 = || vec![x.clone(), y.clone(), z.clone()];

    t.le("axiom-i", g(x, x, x), 0.0, tol, || vec![x.clone(); 3]);

    let gxxy = g(x, x, y);
    if distinct(x, y, min_separation) {
        t.gt("axiom-ii", gxxy, STRICT_FLOOR, || vec![x.clone(), x.clone(), y.clone()]);
    }

    let gxyz = g(x, y, z);
    if distinct(z, y, min_separation) {
        t.le("axiom-iii", gxxy, gxyz, tol, w3);
    }

    for (p, q, r) in [(x, z, y), (y, x, z), (y, z, x), (z, x, y), (z, y, x)] {
        t.close("axiom-iv", g(p, q, r), gxyz, tol, || vec![p.clone(), q.clone(), r.clone()]);
    }

    t.le("axiom-v", gxyz, g(x, a, a) + g(a, y, z), tol, || {
        vec![x.clone(), y.clone(), z.clone(), a.clone()]
    });
}

fn derived_on<S: GMetric + ?Sized>(
    space: &S,
    [x, y, z, a]: [&Point; 4],
    min_separation: f64,
    tol: f64,
    t: &mut Tally,
) {
    let g = |p: &Point, q: &Point, r: &Point| space.g(p, q, r);
    let w3 = || vec![x.clone(), y.clone(), z.clone()];
    let w4 = || vec![x.clone(), y.clone(), z.clone(), a.clone()];
    let gxyz = g(x, y, z);

    // Item (i) can only be probed constructively: coincident triples must
    // give zero, and no separated triple may collapse to zero.
    t.le("derived-i", g(x, x, x), 0.0, tol, || vec![x.clone(); 3]);
    if distinct(x, y, min_separation) || distinct(y, z, min_separation) || distinct(x, z, min_separation) {
        t.gt("derived-i", gxyz, tol, w3);
    }

    t.le("derived-ii", gxyz, g(x, x, y) + g(x, x, z), tol, w3);
    t.le("derived-iii", g(x, y, y), 2.0 * g(y, x, x), tol, || vec![x.clone(), y.clone()]);
    t.le("derived-iv", gxyz, g(x, a, z) + g(a, y, z), tol, w4);
    t.le(
        "derived-v",
        gxyz,
        2.0 / 3.0 * (g(x, y, a) + g(x, a, z) + g(a, y, z)),
        tol,
        w4,
    );
    t.le("derived-vi", gxyz, g(x, a, a) + g(y, a, a) + g(z, a, a), tol, w4);
}

type QuadCheck<S> = fn(&S, [&Point; 4], f64, f64, &mut Tally);

fn run_quadruples<S: GMetric + ?Sized>(
    space: &S,
    plan: &SamplePlan,
    tol: f64,
    check: QuadCheck<S>,
) -> Result<CheckReport> {
    space.validate_plan(plan)?;
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::invalid("tolerance must be a finite nonnegative real"));
    }
    let grid = Grid::new(space, plan);
    let n_grid = grid.tuples(4);
    let tallies = map_indices(plan.count + n_grid, plan.execution, |i| {
        let mut t = Tally::default();
        if i < plan.count {
            let mut rng = plan.stream(i);
            let pts: [Point; 4] = std::array::from_fn(|_| space.sample(plan, &mut rng));
            check(space, [&pts[0], &pts[1], &pts[2], &pts[3]], plan.min_separation, tol, &mut t);
        } else {
            check(space, grid.tuple(i - plan.count), plan.min_separation, tol, &mut t);
        }
        t
    });
    Ok(merge_all(tallies))
}

/// Samples the five defining axioms on random quadruples plus the
/// structured grid of the plan.
pub fn check_axioms<S: GMetric + ?Sized>(space: &S, plan: &SamplePlan, tol: f64) -> Result<CheckReport> {
    run_quadruples(space, plan, tol, axioms_on::<S>)
}

/// Samples the derived inequalities that hold in every G-metric space.
pub fn check_derived<S: GMetric + ?Sized>(space: &S, plan: &SamplePlan, tol: f64) -> Result<CheckReport> {
    run_quadruples(space, plan, tol, derived_on::<S>)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_perimeter() -> FnSpace<impl Fn(&Point, &Point, &Point) -> f64 + Send + Sync> {
        FnSpace::new("abs-perimeter", 1, |x: &Point, y: &Point, z: &Point| {
            (x[0] - y[0]).abs() + (y[0] - z[0]).abs() + (x[0] - z[0]).abs()
        })
    }

    #[test]
    fn eval_checks_dimension() {
        let s = abs_perimeter();
        let p = Point::new(vec![1.0, 2.0]).unwrap();
        let q = Point::scalar(1.0).unwrap();
        assert!(matches!(eval_g(&s, &p, &q, &q), Err(Error::DimensionMismatch { .. })));
        assert_eq!(eval_g(&s, &q, &q, &q).unwrap(), 0.0);
    }

    #[test]
    fn signed_difference_fails_symmetry_and_positivity() {
        let broken = FnSpace::new("broken", 1, |x: &Point, y: &Point, _z: &Point| x[0] - y[0]);
        let r = check_axioms(&broken, &SamplePlan::new(7, 1000, 1), DEFAULT_TOL).unwrap();
        assert!(!r.passed);
        assert!(r.violations_of("axiom-ii").next().is_some() || r.violations_of("axiom-iv").next().is_some());
        let w = &r.violations[0];
        assert!(!w.witness.is_empty());
    }

    #[test]
    fn grid_enumerates_all_tuples() {
        let s = abs_perimeter();
        let plan = SamplePlan::new(0, 1, 1);
        let grid = Grid::new(&s, &plan);
        assert_eq!(grid.len(), 5);
        let [p, q] = grid.tuple::<2>(7);
        assert_eq!((p[0], q[0]), (-5.0, 10.0));
    }

    #[test]
    fn degenerate_triple_passes_derived() {
        let s = abs_perimeter();
        let p = Point::scalar(3.0).unwrap();
        let mut t = Tally::default();
        derived_on(&s, [&p, &p, &p, &p], 1e-3, DEFAULT_TOL, &mut t);
        assert!(t.into_report().passed);
    }

    #[test]
    fn rejects_negative_tolerance() {
        let s = abs_perimeter();
        assert!(check_axioms(&s, &SamplePlan::new(0, 10, 1), -1.0).is_err());
    }
}
