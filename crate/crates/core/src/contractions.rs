//! Contractive conditions on self-maps of a G-metric space.
//!
//! Every condition bounds `G(Tx, Ty, Tz)` by a right-hand side built from
//! `G(x, y, z)` and the self-displacements `G(p, Tp, Tp)`:
//!
//! | kind            | right-hand side                                              |
//! |-----------------|--------------------------------------------------------------|
//! | `four-term`     | `a G(x,y,z) + b G(x,Tx,Tx) + c G(y,Ty,Ty) + d G(z,Tz,Tz)`     |
//! | `four-term-alt` | `a G(x,y,z) + b G(x,x,Tx) + c G(y,y,Ty) + d G(z,z,Tz)`        |
//! | `sum`           | `a G(x,y,z) + b (G(x,Tx,Tx) + G(y,Ty,Ty) + G(z,Tz,Tz))`       |
//! | `max`           | `a G(x,y,z) + b max{G(x,Tx,Tx), G(y,Ty,Ty), G(z,Tz,Tz)}`      |
//! | `three-term`    | `a G(x,Tx,Tx) + b G(y,Ty,Ty) + c G(z,Tz,Tz)`                  |
//! | `k-sum`         | `k (G(x,Tx,Tx) + G(y,Ty,Ty) + G(z,Tz,Tz))`                    |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmetric::GMetric;
use crate::point::Point;
use crate::report::{merge_all, CheckReport, Tally};
use crate::sampling::{map_indices, SamplePlan};
use crate::gmetric::Grid;

/// Denominator floor for the worst-ratio diagnostic.
pub const RATIO_FLOOR: f64 = 1e-15;

/// Tolerance on `G(Tu, u, u)` for a declared fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    FourTerm,
    FourTermAlt,
    Sum,
    Max,
    ThreeTerm,
    KSum,
}

impl ConditionKind {
    pub const ALL: [ConditionKind; 6] = [
        ConditionKind::FourTerm,
        ConditionKind::FourTermAlt,
        ConditionKind::Sum,
        ConditionKind::Max,
        ConditionKind::ThreeTerm,
        ConditionKind::KSum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionKind::FourTerm => "four-term",
            ConditionKind::FourTermAlt => "four-term-alt",
            ConditionKind::Sum => "sum",
            ConditionKind::Max => "max",
            ConditionKind::ThreeTerm => "three-term",
            ConditionKind::KSum => "k-sum",
        }
    }

    pub fn coefficient_names(self) -> &'static [&'static str] {
        match self {
            ConditionKind::FourTerm | ConditionKind::FourTermAlt => &["a", "b", "c", "d"],
            ConditionKind::Sum | ConditionKind::Max => &["a", "b"],
            ConditionKind::ThreeTerm => &["a", "b", "c"],
            ConditionKind::KSum => &["k"],
        }
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConditionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConditionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown condition `{s}`")))
    }
}

/// A condition kind with its nonnegative coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ContractionSpec {
    FourTerm { a: f64, b: f64, c: f64, d: f64 },
    FourTermAlt { a: f64, b: f64, c: f64, d: f64 },
    Sum { a: f64, b: f64 },
    Max { a: f64, b: f64 },
    ThreeTerm { a: f64, b: f64, c: f64 },
    KSum { k: f64 },
}

impl ContractionSpec {
    /// Builds a spec from named coefficients; unnamed ones default to zero.
    pub fn from_pairs(kind: ConditionKind, pairs: &[(&str, f64)]) -> Result<Self> {
        let names = kind.coefficient_names();
        let mut values = [0.0; 4];
        for &(name, value) in pairs {
            let slot = names.iter().position(|n| *n == name).ok_or_else(|| {
                Error::invalid(format!(
                    "coefficient `{name}` does not apply to {kind} (expected {})",
                    names.join(", ")
                ))
            })?;
            values[slot] = value;
        }
        let [a, b, c, d] = values;
        let spec = match kind {
            ConditionKind::FourTerm => ContractionSpec::FourTerm { a, b, c, d },
            ConditionKind::FourTermAlt => ContractionSpec::FourTermAlt { a, b, c, d },
            ConditionKind::Sum => ContractionSpec::Sum { a, b },
            ConditionKind::Max => ContractionSpec::Max { a, b },
            ConditionKind::ThreeTerm => ContractionSpec::ThreeTerm { a, b, c },
            ConditionKind::KSum => ContractionSpec::KSum { k: a },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kind(&self) -> ConditionKind {
        match self {
            ContractionSpec::FourTerm { .. } => ConditionKind::FourTerm,
            ContractionSpec::FourTermAlt { .. } => ConditionKind::FourTermAlt,
            ContractionSpec::Sum { .. } => ConditionKind::Sum,
            ContractionSpec::Max { .. } => ConditionKind::Max,
            ContractionSpec::ThreeTerm { .. } => ConditionKind::ThreeTerm,
            ContractionSpec::KSum { .. } => ConditionKind::KSum,
        }
    }

    /// Coefficients in declaration order, paired with their names.
    pub fn coefficients(&self) -> Vec<(&'static str, f64)> {
        let values: Vec<f64> = match *self {
            ContractionSpec::FourTerm { a, b, c, d } | ContractionSpec::FourTermAlt { a, b, c, d } => {
                vec![a, b, c, d]
            }
            ContractionSpec::Sum { a, b } | ContractionSpec::Max { a, b } => vec![a, b],
            ContractionSpec::ThreeTerm { a, b, c } => vec![a, b, c],
            ContractionSpec::KSum { k } => vec![k],
        };
        self.kind().coefficient_names().iter().copied().zip(values).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.coefficients() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "coefficient {name} = {v} must be a finite nonnegative real"
                )));
            }
        }
        Ok(())
    }
}

pub trait Mapping: Send + Sync {
    fn name(&self) -> &str;

    fn apply(&self, x: &Point) -> Point;

    fn known_fixed_point(&self) -> Option<&Point> {
        None
    }
}

/// `T x = center + k (x - center)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineContraction {
    center: Point,
    factor: f64,
    name: String,
    fixed: Option<Point>,
}

impl AffineContraction {
    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }
}

impl Mapping for AffineContraction {
    fn name(&self) -> &str {
        &self.name
    }

    fn apply(&self, x: &Point) -> Point {
        let k = self.factor;
        Point::from_raw(
            x.coords()
                .iter()
                .zip(self.center.coords())
                .map(|(xi, ci)| ci + k * (xi - ci))
                .collect(),
        )
    }

    fn known_fixed_point(&self) -> Option<&Point> {
        self.fixed.as_ref()
    }
}

/// The center is advertised as fixed point only when `k < 1`.
pub fn make_affine_contraction(center: Point, k: f64) -> Result<AffineContraction> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::invalid(format!("factor k = {k} must be a finite nonnegative real")));
    }
    Ok(AffineContraction {
        name: format!("affine(k={k}, center={center})"),
        fixed: (k < 1.0).then(|| center.clone()),
        center,
        factor: k,
    })
}

/// `T x = x + shift` on every coordinate; has no fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    shift: f64,
    name: String,
}

impl Translation {
    pub fn new(shift: f64) -> Result<Self> {
        if !shift.is_finite() {
            return Err(Error::invalid("translation shift must be finite"));
        }
        Ok(Translation {
            shift,
            name: format!("translation({shift})"),
        })
    }
}

impl Mapping for Translation {
    fn name(&self) -> &str {
        &self.name
    }

    fn apply(&self, x: &Point) -> Point {
        Point::from_raw(x.coords().iter().map(|c| c + self.shift).collect())
    }
}

/// A mapping backed by a closure.
pub struct FnMapping<F> {
    name: String,
    f: F,
    fixed: Option<Point>,
}

impl<F> FnMapping<F>
where
    F: Fn(&Point) -> Point + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnMapping {
            name: name.into(),
            f,
            fixed: None,
        }
    }

    pub fn with_fixed_point(mut self, u: Point) -> Self {
        self.fixed = Some(u);
        self
    }
}

impl<F> Mapping for FnMapping<F>
where
    F: Fn(&Point) -> Point + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn apply(&self, x: &Point) -> Point {
        (self.f)(x)
    }

    fn known_fixed_point(&self) -> Option<&Point> {
        self.fixed.as_ref()
    }
}

/// Checks a declared fixed point: `G(Tu, u, u) <= 1e-9`.
pub fn check_fixed_point<S: GMetric + ?Sized, M: Mapping + ?Sized>(space: &S, t: &M) -> Result<()> {
    let Some(u) = t.known_fixed_point() else {
        return Ok(());
    };
    space.check_point(u)?;
    let tu = t.apply(u);
    space.check_point(&tu)?;
    let gap = space.g(&tu, u, u);
    if gap <= FIXED_POINT_TOL {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "declared fixed point {u} of `{}` is off by G(Tu,u,u) = {gap}",
            t.name()
        )))
    }
}

/// Right-hand side for points whose images are already computed.
fn rhs_raw<S: GMetric + ?Sized>(spec: &ContractionSpec, space: &S, pts: [&Point; 3], imgs: [&Point; 3]) -> f64 {
    let [x, y, z] = pts;
    let [tx, ty, tz] = imgs;
    let disp = |p: &Point, tp: &Point| space.g(p, tp, tp);
    match *spec {
        ContractionSpec::FourTerm { a, b, c, d } => {
            a * space.g(x, y, z) + b * disp(x, tx) + c * disp(y, ty) + d * disp(z, tz)
        }
        ContractionSpec::FourTermAlt { a, b, c, d } => {
            a * space.g(x, y, z) + b * space.g(x, x, tx) + c * space.g(y, y, ty) + d * space.g(z, z, tz)
        }
        ContractionSpec::Sum { a, b } => {
            a * space.g(x, y, z) + b * (disp(x, tx) + disp(y, ty) + disp(z, tz))
        }
        ContractionSpec::Max { a, b } => {
            a * space.g(x, y, z) + b * disp(x, tx).max(disp(y, ty)).max(disp(z, tz))
        }
        ContractionSpec::ThreeTerm { a, b, c } => a * disp(x, tx) + b * disp(y, ty) + c * disp(z, tz),
        ContractionSpec::KSum { k } => k * (disp(x, tx) + disp(y, ty) + disp(z, tz)),
    }
}

/// Evaluates the condition's right-hand side at `(x, y, z)`.
pub fn rhs_value<S: GMetric + ?Sized, M: Mapping + ?Sized>(
    spec: &ContractionSpec,
    space: &S,
    t: &M,
    x: &Point,
    y: &Point,
    z: &Point,
) -> Result<f64> {
    spec.validate()?;
    let pts = [x, y, z];
    let mut imgs = Vec::with_capacity(3);
    for p in pts {
        space.check_point(p)?;
        let tp = t.apply(p);
        space.check_point(&tp)?;
        imgs.push(tp);
    }
    Ok(rhs_raw(spec, space, pts, [&imgs[0], &imgs[1], &imgs[2]]))
}

fn condition_on<S: GMetric + ?Sized, M: Mapping + ?Sized>(
    spec: &ContractionSpec,
    space: &S,
    t: &M,
    pts: [&Point; 3],
    tol: f64,
    tally: &mut Tally,
) {
    let witness = || pts.iter().map(|p| (*p).clone()).collect::<Vec<_>>();
    let imgs: [Point; 3] = std::array::from_fn(|i| t.apply(pts[i]));
    if imgs.iter().any(|p| space.check_point(p).is_err()) {
        tally.failure("condition-domain", witness());
        return;
    }
    let imgs = [&imgs[0], &imgs[1], &imgs[2]];
    let lhs = space.g(imgs[0], imgs[1], imgs[2]);
    let rhs = rhs_raw(spec, space, pts, imgs);
    tally.track_max("worst_ratio", lhs / rhs.max(RATIO_FLOOR));
    tally.le("condition", lhs, rhs, tol, witness);
}

/// Samples `G(Tx, Ty, Tz) <= rhs` on random triples and the structured grid.
/// The report's `worst_ratio` metric is `max lhs / max(rhs, 1e-15)`.
pub fn check_condition<S: GMetric + ?Sized, M: Mapping + ?Sized>(
    spec: &ContractionSpec,
    space: &S,
    t: &M,
    plan: &SamplePlan,
    tol: f64,
) -> Result<CheckReport> {
    spec.validate()?;
    space.validate_plan(plan)?;
    let grid = Grid::new(space, plan);
    let n_grid = grid.tuples(3);
    let tallies = map_indices(plan.count + n_grid, plan.execution, |i| {
        let mut tally = Tally::default();
        if i < plan.count {
            let mut rng = plan.stream(i);
            let pts: [Point; 3] = std::array::from_fn(|_| space.sample(plan, &mut rng));
            condition_on(spec, space, t, [&pts[0], &pts[1], &pts[2]], tol, &mut tally);
        } else {
            condition_on(spec, space, t, grid.tuple(i - plan.count), tol, &mut tally);
        }
        tally
    });
    Ok(merge_all(tallies))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
}

fn residual(name: &str, value: f64) -> Residual {
    Residual {
        name: name.to_string(),
        value,
    }
}

/// Whether a spec meets the coefficient hypotheses of the matching Mann
/// convergence result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicabilityVerdict {
    pub theorem: String,
    /// `true` iff every residual is strictly positive.
    pub satisfied: bool,
    pub residuals: Vec<Residual>,
    /// Reported alongside but not part of the verdict.
    pub informational: Vec<Residual>,
    pub caveat: Option<String>,
}

/// Maps a spec onto its convergence hypotheses:
///
/// * `four-term`: `a + 3b < 1` (and `1 - 2b > 0`, which follows)
/// * `sum`, `max`: `0 < a + 3b < 1`
/// * `three-term`: `a + b + c < 1` and `a < 1/2`
/// * `k-sum`: `0 < k < 1/3`
///
/// `four-term-alt` borrows the `four-term` constraint; no convergence result
/// targets it directly.
pub fn check_applicability(spec: &ContractionSpec) -> ApplicabilityVerdict {
    let mut informational = Vec::new();
    let mut caveat = None;
    let (theorem, residuals) = match *spec {
        ContractionSpec::FourTerm { a, b, c, d } | ContractionSpec::FourTermAlt { a, b, c, d } => {
            informational.push(residual("1-(a+b+c+d)", 1.0 - (a + b + c + d)));
            if spec.kind() == ConditionKind::FourTermAlt {
                caveat = Some(
                    "the G(x,x,Tx) orientation has no dedicated Mann convergence result; \
                     the four-term constraint is applied by analogy"
                        .to_string(),
                );
            }
            ("mann-four-term", vec![residual("1-(a+3b)", 1.0 - (a + 3.0 * b)), residual("1-2b", 1.0 - 2.0 * b)])
        }
        ContractionSpec::Sum { a, b } => (
            "mann-sum",
            vec![residual("1-(a+3b)", 1.0 - (a + 3.0 * b)), residual("a+3b", a + 3.0 * b)],
        ),
        ContractionSpec::Max { a, b } => (
            "mann-max",
            vec![residual("1-(a+3b)", 1.0 - (a + 3.0 * b)), residual("a+3b", a + 3.0 * b)],
        ),
        ContractionSpec::ThreeTerm { a, b, c } => (
            "mann-three-term",
            vec![residual("1-(a+b+c)", 1.0 - (a + b + c)), residual("1/2-a", 0.5 - a)],
        ),
        ContractionSpec::KSum { k } => ("mann-k-sum", vec![residual("1/3-k", 1.0 / 3.0 - k), residual("k", k)]),
    };
    ApplicabilityVerdict {
        theorem: theorem.to_string(),
        satisfied: residuals.iter().all(|r| r.value > 0.0),
        residuals,
        informational,
        caveat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::make_perimeter_space;

    fn s(v: f64) -> Point {
        Point::scalar(v).unwrap()
    }

    fn four(a: f64, b: f64, c: f64, d: f64) -> ContractionSpec {
        ContractionSpec::FourTerm { a, b, c, d }
    }

    #[test]
    fn rhs_examples() {
        let cs = make_perimeter_space(1).unwrap();
        let half = make_affine_contraction(s(0.0), 0.5).unwrap();
        let r = rhs_value(&four(0.5, 0.0, 0.0, 0.0), &cs, &half, &s(0.0), &s(1.0), &s(3.0)).unwrap();
        assert_eq!(r, 3.0);

        let u = s(0.0);
        let r = rhs_value(&ContractionSpec::KSum { k: 0.2 }, &cs, &half, &u, &u, &u).unwrap();
        assert_eq!(r, 0.0);

        let id = make_affine_contraction(s(0.0), 1.0).unwrap();
        let r = rhs_value(&ContractionSpec::Max { a: 0.0, b: 1.0 }, &cs, &id, &s(-2.0), &s(1.0), &s(7.0)).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn affine_examples() {
        let t = make_affine_contraction(s(0.0), 0.5).unwrap();
        assert_eq!(t.apply(&s(8.0)), s(4.0));
        let c = Point::new(vec![1.0, 1.0]).unwrap();
        let t = make_affine_contraction(c.clone(), 0.0).unwrap();
        assert_eq!(t.apply(&Point::new(vec![5.0, -3.0]).unwrap()), c);
        let t = make_affine_contraction(s(2.0), 0.25).unwrap();
        assert_eq!(t.apply(&s(10.0)), s(4.0));
        assert_eq!(t.known_fixed_point(), Some(&s(2.0)));
        assert!(make_affine_contraction(s(2.0), 2.0).unwrap().known_fixed_point().is_none());
        assert!(make_affine_contraction(s(0.0), -0.1).is_err());
    }

    #[test]
    fn halving_satisfies_four_term() {
        let cs = make_perimeter_space(1).unwrap();
        let t = make_affine_contraction(s(0.0), 0.5).unwrap();
        let r = check_condition(&four(0.5, 0.0, 0.0, 0.0), &cs, &t, &SamplePlan::new(1, 1000, 1), 1e-9).unwrap();
        assert!(r.passed, "{:?}", r.violations.first());
        assert!(r.metric("worst_ratio").unwrap() <= 1.0 + 1e-9);
    }

    #[test]
    fn doubling_violates_four_term() {
        let cs = make_perimeter_space(1).unwrap();
        let t = make_affine_contraction(s(0.0), 2.0).unwrap();
        let r = check_condition(&four(0.5, 0.0, 0.0, 0.0), &cs, &t, &SamplePlan::new(1, 1000, 1), 1e-9).unwrap();
        assert!(!r.passed);
        assert_eq!(r.violations[0].witness.len(), 3);
        assert!((r.metric("worst_ratio").unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn constant_map_satisfies_any_displacement_condition() {
        let cs = make_perimeter_space(2).unwrap();
        let t = make_affine_contraction(Point::new(vec![1.0, -2.0]).unwrap(), 0.0).unwrap();
        let r = check_condition(&four(0.0, 0.3, 0.3, 0.3), &cs, &t, &SamplePlan::new(5, 1000, 2), 1e-9).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn applicability_examples() {
        let v = check_applicability(&four(0.2, 0.1, 0.3, 0.3));
        assert!(v.satisfied);
        assert!((v.residuals[0].value - 0.5).abs() < 1e-15);

        let v = check_applicability(&ContractionSpec::ThreeTerm { a: 0.5, b: 0.2, c: 0.2 });
        assert!(!v.satisfied);
        assert_eq!(v.residuals[1].value, 0.0);

        let v = check_applicability(&ContractionSpec::KSum { k: 1.0 / 3.0 });
        assert!(!v.satisfied);

        let v = check_applicability(&ContractionSpec::FourTermAlt { a: 0.2, b: 0.1, c: 0.0, d: 0.0 });
        assert!(v.satisfied && v.caveat.is_some());

        // Identity: a + 3b = 1 exactly.
        assert!(!check_applicability(&four(1.0, 0.0, 0.0, 0.0)).satisfied);
    }

    #[test]
    fn from_pairs_parsing() {
        let s = ContractionSpec::from_pairs(ConditionKind::FourTerm, &[("a", 0.5), ("d", 0.1)]).unwrap();
        assert_eq!(s, four(0.5, 0.0, 0.0, 0.1));
        let k = ContractionSpec::from_pairs(ConditionKind::KSum, &[("k", 0.2)]).unwrap();
        assert_eq!(k, ContractionSpec::KSum { k: 0.2 });
        assert!(ContractionSpec::from_pairs(ConditionKind::Sum, &[("c", 0.1)]).is_err());
        assert!(ContractionSpec::from_pairs(ConditionKind::Sum, &[("a", -0.1)]).is_err());
        assert!(ContractionSpec::from_pairs(ConditionKind::Sum, &[("a", f64::NAN)]).is_err());
        for k in ConditionKind::ALL {
            assert_eq!(k.as_str().parse::<ConditionKind>().unwrap(), k);
        }
    }

    #[test]
    fn declared_fixed_point_is_checked() {
        let cs = make_perimeter_space(1).unwrap();
        let good = make_affine_contraction(s(3.0), 0.5).unwrap();
        assert!(check_fixed_point(&cs, &good).is_ok());
        let liar = FnMapping::new("liar", |x: &Point| x.clone()).with_fixed_point(s(1.0));
        assert!(check_fixed_point(&cs, &liar).is_ok());
        let liar = FnMapping::new("liar", |_: &Point| Point::scalar(5.0).unwrap()).with_fixed_point(s(1.0));
        assert!(check_fixed_point(&cs, &liar).is_err());
    }
}
