use std::sync::Arc;

use gfix_core::convexity::{modi_sides, MODI_LAMBDAS};
use gfix_core::{
    check_convexity, check_modi_convexity, combine, make_max_space, make_perimeter_space, AdditiveStructure, Centroid,
    ConvexStructure, GMetric, Point, SamplePlan, DEFAULT_TOL,
};

fn p(c: &[f64]) -> Point {
    Point::new(c.to_vec()).unwrap()
}

#[test]
fn combine_examples() {
    let cs = make_perimeter_space(2).unwrap();
    assert_eq!(combine(&cs, &p(&[2.0, 0.0]), &p(&[0.0, 2.0]), 0.5).unwrap(), p(&[1.0, 1.0]));
    let (x, y) = (p(&[3.5, -1.25]), p(&[0.1, 7.0]));
    assert_eq!(combine(&cs, &x, &y, 1.0).unwrap(), x);
    assert_eq!(combine(&cs, &x, &y, 0.0).unwrap(), y);
    let line = make_perimeter_space(1).unwrap();
    assert_eq!(combine(&line, &p(&[4.0]), &p(&[8.0]), 0.25).unwrap(), p(&[7.0]));
    assert!(combine(&cs, &x, &y, 1.01).is_err());
    assert!(combine(&cs, &x, &y, -0.01).is_err());
    assert!(combine(&cs, &x, &p(&[1.0]), 0.5).is_err());
}

#[test]
fn bundled_structures_are_convex() {
    for cs in [make_perimeter_space(2).unwrap(), make_max_space(2).unwrap()] {
        let r = check_convexity(&cs, &SamplePlan::new(3, 2000, 2), DEFAULT_TOL).unwrap();
        assert!(r.passed, "{}: {:?}", cs.name(), r.violations.first());
        // four weights per random tuple plus three per grid tuple
        assert_eq!(r.total_checks, 4 * 2000 + 3 * 9usize.pow(4));
    }
}

#[test]
fn additive_structure_fails_with_witness() {
    let cs = make_perimeter_space(2).unwrap().with_structure(Arc::new(AdditiveStructure));
    let r = check_convexity(&cs, &SamplePlan::new(3, 2000, 2), DEFAULT_TOL).unwrap();
    assert!(!r.passed);
    let v = &r.violations[0];
    assert_eq!(v.witness.len(), 4);
    assert!(v.lambda.is_some());
    assert!(v.lhs > v.rhs);
    // The λ = 0 endpoint identity W(x, y; 0) = y is broken.
    let (x, y) = (p(&[1.0, 2.0]), p(&[-3.0, 0.5]));
    assert_ne!(AdditiveStructure.combine(&x, &y, 0.0), y);
}

#[test]
fn centroid_under_three_point_form() {
    let cs = make_perimeter_space(1).unwrap();
    let r = check_modi_convexity(&cs, &Centroid, &SamplePlan::new(5, 1000, 1), DEFAULT_TOL).unwrap();
    // Small weights shrink the right-hand side towards zero.
    assert!(!r.passed);
    assert!(r.violations.iter().all(|v| v.witness.len() == 5));

    // λ = 0.01 with u != v fixed.
    let (u, v) = (p(&[0.0]), p(&[1.0]));
    let (x, y, z) = (p(&[-2.0]), p(&[0.5]), p(&[3.0]));
    let (lhs, rhs) = modi_sides(&cs, &Centroid, &x, &y, &z, &u, &v, MODI_LAMBDAS[0]);
    assert!(lhs > rhs, "{lhs} <= {rhs}");
    assert!(lhs >= cs.g(&u, &u, &v) - 1e-12);

    // Fully coincident tuple: both sides vanish for every weight.
    let q = p(&[2.0]);
    for lambda in [0.01, 0.3, 1.0] {
        assert_eq!(modi_sides(&cs, &Centroid, &q, &q, &q, &q, &q, lambda), (0.0, 0.0));
    }
}

#[test]
fn centroid_at_full_weight_is_reported() {
    // At λ = 1 the centroid sits inside the convex hull; the report is data.
    let cs = make_perimeter_space(1).unwrap();
    let plan = SamplePlan::new(5, 500, 1);
    let a = check_modi_convexity(&cs, &Centroid, &plan, DEFAULT_TOL).unwrap();
    let b = check_modi_convexity(&cs, &Centroid, &plan, DEFAULT_TOL).unwrap();
    assert_eq!(a, b);
    assert!(a.violations.iter().all(|v| v.lambda.unwrap() < 1.0));
}
