//! Convex structures on G-metric spaces.
//!
//! The two-point structure `W(x, y; λ, β)` with `λ + β = 1` must satisfy
//! `G(W(x,y;λ,β), u, v) <= λ G(x,u,v) + β G(y,u,v)` for all `u, v`. Only `λ`
//! is stored; `β = 1 - λ` is derived, so the weight constraint cannot be
//! broken.
//!
//! The older three-point form `W(x, y, z, λ)` with `λ ∈ (0, 1]` and
//! `G(u, v, W) <= (λ/3)(G(u,v,x) + G(u,v,y) + G(u,v,z))` is provided as a
//! comparison checker only.

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::gmetric::{GMetric, Grid};
use crate::point::Point;
use crate::report::{merge_all, CheckReport, Tally};
use crate::sampling::{map_indices, SamplePlan};

/// Mixing weights always checked on top of the random one.
pub const CONVEXITY_LAMBDAS: [f64; 3] = [0.0, 0.5, 1.0];
/// Three-point structures are only defined on `(0, 1]`.
pub const MODI_LAMBDAS: [f64; 3] = [0.01, 0.5, 1.0];

const MODI_GRID_LIMIT: usize = 100_000;

pub trait ConvexStructure: Send + Sync {
    fn name(&self) -> &str;

    /// `W(x, y; λ, 1 - λ)`: `lambda` weighs the first argument.
    fn combine(&self, x: &Point, y: &Point, lambda: f64) -> Point;
}

/// `λ x + (1 - λ) y`, coordinatewise.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearInterpolation;

impl ConvexStructure for LinearInterpolation {
    fn name(&self) -> &str {
        "linear"
    }

    fn combine(&self, x: &Point, y: &Point, lambda: f64) -> Point {
        let beta = 1.0 - lambda;
        Point::from_raw(
            x.coords()
                .iter()
                .zip(y.coords())
                .map(|(a, b)| lambda * a + beta * b)
                .collect(),
        )
    }
}

/// `x + y`, which ignores the weights entirely. Used to exercise the checker.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdditiveStructure;

impl ConvexStructure for AdditiveStructure {
    fn name(&self) -> &str {
        "additive"
    }

    fn combine(&self, x: &Point, y: &Point, _lambda: f64) -> Point {
        Point::from_raw(x.coords().iter().zip(y.coords()).map(|(a, b)| a + b).collect())
    }
}

/// A G-metric space paired with a two-point convex structure.
#[derive(Clone)]
pub struct ConvexGSpace {
    space: Arc<dyn GMetric>,
    structure: Arc<dyn ConvexStructure>,
}

impl ConvexGSpace {
    pub fn new(space: Arc<dyn GMetric>, structure: Arc<dyn ConvexStructure>) -> Self {
        ConvexGSpace { space, structure }
    }

    pub fn space(&self) -> &Arc<dyn GMetric> {
        &self.space
    }

    pub fn structure(&self) -> &Arc<dyn ConvexStructure> {
        &self.structure
    }

    pub fn with_structure(&self, structure: Arc<dyn ConvexStructure>) -> Self {
        ConvexGSpace {
            space: self.space.clone(),
            structure,
        }
    }
}

impl std::fmt::Debug for ConvexGSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvexGSpace")
            .field("space", &self.space.name())
            .field("structure", &self.structure.name())
            .finish()
    }
}

impl GMetric for ConvexGSpace {
    fn name(&self) -> &str {
        self.space.name()
    }
    fn dim(&self) -> usize {
        self.space.dim()
    }
    fn g(&self, x: &Point, y: &Point, z: &Point) -> f64 {
        self.space.g(x, y, z)
    }
    fn check_point(&self, p: &Point) -> Result<()> {
        self.space.check_point(p)
    }
    fn sample(&self, plan: &SamplePlan, rng: &mut dyn RngCore) -> Point {
        self.space.sample(plan, rng)
    }
    fn validate_plan(&self, plan: &SamplePlan) -> Result<()> {
        self.space.validate_plan(plan)
    }
}

pub(crate) fn check_unit_weight(lambda: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} = {lambda} must lie in [0, 1]")))
    }
}

/// `W(x, y; λ, 1 - λ)` with input and output validation.
pub fn combine(cs: &ConvexGSpace, x: &Point, y: &Point, lambda: f64) -> Result<Point> {
    check_unit_weight(lambda, "lambda")?;
    cs.check_point(x)?;
    cs.check_point(y)?;
    let w = cs.structure.combine(x, y, lambda);
    cs.check_point(&w)?;
    Ok(w)
}

fn convexity_on(cs: &ConvexGSpace, [x, y, u, v]: [&Point; 4], lambda: f64, tol: f64, t: &mut Tally) {
    t.set_lambda(Some(lambda));
    let w = cs.structure.combine(x, y, lambda);
    let witness = || vec![x.clone(), y.clone(), u.clone(), v.clone()];
    if cs.check_point(&w).is_err() {
        t.failure("convexity-domain", witness());
        return;
    }
    let rhs = lambda * cs.g(x, u, v) + (1.0 - lambda) * cs.g(y, u, v);
    t.le("convexity", cs.g(&w, u, v), rhs, tol, witness);
}

/// Samples the two-point convexity inequality over `(x, y, u, v, λ)`, with
/// `λ` uniform on `[0, 1]` plus the fixed weights [`CONVEXITY_LAMBDAS`].
pub fn check_convexity(cs: &ConvexGSpace, plan: &SamplePlan, tol: f64) -> Result<CheckReport> {
    cs.validate_plan(plan)?;
    let grid = Grid::new(cs, plan);
    let n_grid = grid.tuples(4);
    let tallies = map_indices(plan.count + n_grid, plan.execution, |i| {
        let mut t = Tally::default();
        if i < plan.count {
            let mut rng = plan.stream(i);
            let pts: [Point; 4] = std::array::from_fn(|_| cs.sample(plan, &mut rng));
            let refs = [&pts[0], &pts[1], &pts[2], &pts[3]];
            let lambda = rng.gen_range(0.0..=1.0);
            convexity_on(cs, refs, lambda, tol, &mut t);
            for lambda in CONVEXITY_LAMBDAS {
                convexity_on(cs, refs, lambda, tol, &mut t);
            }
        } else {
            let refs = grid.tuple(i - plan.count);
            for lambda in CONVEXITY_LAMBDAS {
                convexity_on(cs, refs, lambda, tol, &mut t);
            }
        }
        t
    });
    Ok(merge_all(tallies))
}

pub trait ModiStructure: Send + Sync {
    fn name(&self) -> &str;

    fn combine3(&self, x: &Point, y: &Point, z: &Point, lambda: f64) -> Point;
}

/// `(x + y + z) / 3`, independent of `λ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Centroid;

impl ModiStructure for Centroid {
    fn name(&self) -> &str {
        "centroid"
    }

    fn combine3(&self, x: &Point, y: &Point, z: &Point, _lambda: f64) -> Point {
        Point::from_raw(
            x.coords()
                .iter()
                .zip(y.coords())
                .zip(z.coords())
                .map(|((a, b), c)| (a + b + c) / 3.0)
                .collect(),
        )
    }
}

/// Both sides `(G(u, v, W), (λ/3)(G(u,v,x) + G(u,v,y) + G(u,v,z)))` of the
/// three-point inequality.
#[allow(clippy::too_many_arguments)]
pub fn modi_sides<S: GMetric + ?Sized, M: ModiStructure + ?Sized>(
    space: &S,
    m: &M,
    x: &Point,
    y: &Point,
    z: &Point,
    u: &Point,
    v: &Point,
    lambda: f64,
) -> (f64, f64) {
    let w = m.combine3(x, y, z, lambda);
    let lhs = space.g(u, v, &w);
    let rhs = lambda / 3.0 * (space.g(u, v, x) + space.g(u, v, y) + space.g(u, v, z));
    (lhs, rhs)
}

fn modi_on<S: GMetric + ?Sized, M: ModiStructure + ?Sized>(
    space: &S,
    m: &M,
    [x, y, z, u, v]: [&Point; 5],
    lambda: f64,
    tol: f64,
    t: &mut Tally,
) {
    t.set_lambda(Some(lambda));
    let witness = || vec![x.clone(), y.clone(), z.clone(), u.clone(), v.clone()];
    if space.check_point(&m.combine3(x, y, z, lambda)).is_err() {
        t.failure("modi-convexity-domain", witness());
        return;
    }
    let (lhs, rhs) = modi_sides(space, m, x, y, z, u, v, lambda);
    t.le("modi-convexity", lhs, rhs, tol, witness);
}

/// Samples the three-point inequality with `λ` uniform on `(0, 1]` plus
/// [`MODI_LAMBDAS`]. The structured grid pass is skipped when the grid has
/// more than 100k five-tuples.
pub fn check_modi_convexity<S: GMetric + ?Sized, M: ModiStructure + ?Sized>(
    space: &S,
    m: &M,
    plan: &SamplePlan,
    tol: f64,
) -> Result<CheckReport> {
    space.validate_plan(plan)?;
    let grid = Grid::new(space, plan);
    let n_grid = match grid.tuples(5) {
        n if n <= MODI_GRID_LIMIT => n,
        _ => 0,
    };
    let tallies = map_indices(plan.count + n_grid, plan.execution, |i| {
        let mut t = Tally::default();
        if i < plan.count {
            let mut rng = plan.stream(i);
            let pts: [Point; 5] = std::array::from_fn(|_| space.sample(plan, &mut rng));
            let refs = [&pts[0], &pts[1], &pts[2], &pts[3], &pts[4]];
            let lambda = 1.0 - rng.gen::<f64>();
            modi_on(space, m, refs, lambda, tol, &mut t);
            for lambda in MODI_LAMBDAS {
                modi_on(space, m, refs, lambda, tol, &mut t);
            }
        } else {
            let refs = grid.tuple(i - plan.count);
            for lambda in MODI_LAMBDAS {
                modi_on(space, m, refs, lambda, tol, &mut t);
            }
        }
        t
    });
    Ok(merge_all(tallies))
}
