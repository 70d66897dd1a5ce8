//! Sampled verification of G-metric and convex-structure axioms, the Mann
//! iterative process in convex G-metric spaces, and checks of observed
//! convergence against closed-form product bounds.
//!
//! Every sampled checker returns a [`CheckReport`]: violations are data, not
//! errors. With the default `parallel` feature, sampling fans out over rayon;
//! results are identical to a sequential run because each sample index draws
//! from its own PRNG stream.

// `!(a <= b)` is used on purpose throughout: a NaN operand must count as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod contractions;
pub mod convexity;
pub mod error;
pub mod gmetric;
pub mod mann;
pub mod point;
pub mod report;
pub mod sampling;
pub mod spaces;

pub use analysis::{
    attach_bounds, convergence_diagnostics, delta_for, delta_four_term, delta_three_term, product_bound,
    rate_bound_from_alphas, verify_bound, BoundReport, ContractionFactor, RateBound,
};
pub use contractions::{
    check_applicability, check_condition, make_affine_contraction, rhs_value, AffineContraction,
    ApplicabilityVerdict, ConditionKind, ContractionSpec, FnMapping, Mapping, Translation,
};
pub use convexity::{
    check_convexity, check_modi_convexity, combine, AdditiveStructure, Centroid, ConvexGSpace, ConvexStructure,
    LinearInterpolation, ModiStructure,
};
pub use error::{Error, Result};
pub use gmetric::{check_axioms, check_derived, eval_g, FnSpace, GMetric, DEFAULT_TOL};
pub use mann::{
    mann_step, run_mann, schedule_values, DivergentSum, IterationTrace, StepSchedule, StoppingRule,
    TerminalStatus, TraceRecord,
};
pub use point::Point;
pub use report::{CheckReport, Violation};
pub use sampling::{Execution, SamplePlan};
pub use spaces::{
    make_max_space, make_perimeter_space, make_sign_example_space, resolve, MaxSpace, PerimeterSpace,
    SignExampleSpace, SpaceCatalogEntry, SpaceKey,
};
