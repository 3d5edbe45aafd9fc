use std::f64::consts::PI;

use csdesign::metrics::{separation, CoveringOptions};
use csdesign::optimizer::{find_design, initial_configuration, OptimizerConfig};
use csdesign::ortho_poly::design_lower_bound;
use csdesign::sphere::RealPoint;
use csdesign::Error;

fn config(t: usize, m: usize, n: usize) -> OptimizerConfig {
    let mut c = OptimizerConfig::new(t, m, n);
    c.covering = CoveringOptions::with_seeds(20_000);
    c
}

/// Normalized area of a cap of angular radius `theta` on S^3.
fn cap_fraction_s3(theta: f64) -> f64 {
    (theta - theta.sin() * theta.cos()) / PI
}

#[test]
fn random_start_is_uniform_on_s3() {
    let c = config(3, 3, 100);
    let x = initial_configuration(&c).unwrap();
    assert_eq!(x.len(), 100);
    assert!(separation(&x).unwrap() > 0.0);
    let theta = PI / 3.0;
    let p = cap_fraction_s3(theta);
    let sigma = (100.0 * p * (1.0 - p)).sqrt();
    let centers = (0..4).map(|k| RealPoint::basis(3, k)).chain([RealPoint::basis(3, 0).antipode()]);
    for center in centers {
        let count = x.iter().filter(|q| q.dot(&center) >= theta.cos()).count() as f64;
        assert!((count - 100.0 * p).abs() <= 3.0 * sigma, "{count} vs {}", 100.0 * p);
    }
}

#[test]
fn eight_point_three_design_within_twenty_restarts() {
    let mut c = config(3, 3, 8);
    c.restarts = 20;
    let s = find_design(&c).unwrap();
    assert!(s.succeeded());
    assert!(s.best.per_degree_max <= 1e-12);
    assert!(s.best.converged);
}

#[test]
fn eight_point_three_design_mesh_ratio() {
    let mut c = config(3, 3, 8);
    c.restarts = 5;
    let r = find_design(&c).unwrap().into_result().unwrap();
    assert!(r.mesh_ratio <= 1.45, "{}", r.mesh_ratio);
}

#[test]
fn symmetric_five_design_with_28_points() {
    let mut c = config(5, 3, 28);
    c.symmetric = true;
    c.restarts = 4;
    let r = find_design(&c).unwrap().into_result().unwrap();
    assert!(r.points.is_symmetric());
    assert!(r.metrics.separation >= 0.80, "{}", r.metrics.separation);
    assert!(r.per_degree_max <= c.feasibility_tol);
    assert!(r.v_history.windows(2).all(|w| w[1] <= w[0]));
    for p in r.points.iter() {
        let n: f64 = p.coords().iter().map(|v| v * v).sum();
        assert!((n.sqrt() - 1.0).abs() <= 1e-14);
    }
}

#[test]
fn symmetric_seven_design_with_60_points() {
    let mut c = config(7, 3, 60);
    c.symmetric = true;
    c.restarts = 3;
    let r = find_design(&c).unwrap().into_result().unwrap();
    assert!(r.mesh_ratio <= 2.1, "{}", r.mesh_ratio);
}

#[test]
fn requests_below_the_lower_bound_still_run() {
    let n = design_lower_bound(3, 5).unwrap() as usize - 2;
    let mut c = config(5, 3, n);
    c.restarts = 1;
    c.max_iterations = 2_000;
    let s = find_design(&c).unwrap();
    assert!(!s.succeeded());
    assert!(matches!(s.into_result(), Err(Error::Verification(_))));
}

#[test]
fn invalid_configurations_are_rejected() {
    let mut c = config(3, 3, 7);
    c.symmetric = true;
    assert!(matches!(find_design(&c), Err(Error::Config(_))));
    assert!(matches!(find_design(&config(3, 3, 1)), Err(Error::Config(_))));
}
