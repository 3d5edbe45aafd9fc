//! Property tests over random point sets.

use std::f64::consts::{FRAC_PI_2, PI};

use csdesign::bridge::{integrate, tight_design};
use csdesign::criteria::{
    complex_monomial_integral, is_spherical_design, per_degree_sums, variational_value,
};
use csdesign::metrics::{mesh_ratio, separation, CoveringOptions};
use csdesign::ortho_poly::{dim_harm, zonal_psi};
use csdesign::sdf;
use csdesign::sphere::{complex_to_real, real_to_complex, symmetrize, RealPoint, RealPointSet};
use num_complex::Complex64;
use proptest::prelude::*;

fn unit(dim: usize) -> impl Strategy<Value = RealPoint> {
    proptest::collection::vec(-1.0f64..1.0, dim)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| RealPoint::normalized(v).unwrap())
}

fn point_set(dim: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = RealPointSet> {
    proptest::collection::vec(unit(dim), n).prop_map(|p| RealPointSet::new(p).unwrap())
}

/// A rotation of `R^dim` as a product of Givens rotations.
fn rotate(x: &RealPointSet, angles: &[f64]) -> RealPointSet {
    let dim = x.sphere_dim().unwrap() + 1;
    let pts = x
        .iter()
        .map(|p| {
            let mut v = p.coords().to_vec();
            for (k, a) in angles.iter().enumerate() {
                let (i, j) = (k % dim, (k + 1) % dim);
                let (c, s) = (a.cos(), a.sin());
                let (vi, vj) = (v[i], v[j]);
                v[i] = c * vi - s * vj;
                v[j] = s * vi + c * vj;
            }
            RealPoint::normalized(v).unwrap()
        })
        .collect();
    RealPointSet::new(pts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn objective_is_nonnegative_and_bounded(x in point_set(4, 2..20), t in 1usize..8) {
        let v = variational_value(&x, t).unwrap();
        let top = zonal_psi(t, 3, 1.0).unwrap().0;
        prop_assert!(v >= -1e-12 * top);
        prop_assert!(v <= top * (1.0 + 1e-12));
    }

    #[test]
    fn objective_equals_weighted_per_degree_sums(x in point_set(5, 2..16), t in 1usize..7) {
        let w = per_degree_sums(&x, t).unwrap();
        let n2 = (x.len() * x.len()) as f64;
        let v: f64 = w.iter().enumerate().map(|(l, wl)| dim_harm(4, l + 1).unwrap() as f64 * wl / n2).sum();
        let direct = variational_value(&x, t).unwrap();
        prop_assert!((v - direct).abs() <= 1e-11 * zonal_psi(t, 4, 1.0).unwrap().0);
    }

    #[test]
    fn objective_is_rotation_invariant(x in point_set(4, 2..12), angles in proptest::collection::vec(-PI..PI, 6)) {
        let a = variational_value(&x, 5).unwrap();
        let b = variational_value(&rotate(&x, &angles), 5).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * zonal_psi(5, 3, 1.0).unwrap().0);
    }

    #[test]
    fn symmetric_sets_have_vanishing_odd_sums(x in point_set(4, 1..12), t in 1usize..10) {
        let s = symmetrize(&x);
        let n2 = (s.len() * s.len()) as f64;
        let w = per_degree_sums(&s, t).unwrap();
        for l in (1..=t).step_by(2) {
            prop_assert!(w[l - 1].abs() <= 1e-10 * n2);
        }
    }

    #[test]
    fn per_degree_sums_are_nonnegative(x in point_set(3, 2..15), t in 1usize..9) {
        let n2 = (x.len() * x.len()) as f64;
        let r = is_spherical_design(&x, t, 1e-12).unwrap();
        prop_assert!(r.per_degree.iter().all(|w| *w >= -1e-12 * n2));
    }

    #[test]
    fn metric_bounds_hold(x in point_set(4, 2..10)) {
        let s = symmetrize(&x);
        let r = mesh_ratio(&s, &CoveringOptions::with_seeds(4096)).unwrap();
        prop_assert!(r.separation > 0.0 && r.separation <= PI);
        prop_assert!(r.covering > 0.0 && r.covering <= FRAC_PI_2 + 1e-12);
        prop_assert!(r.mesh_ratio >= 1.0 - 1e-9);
    }

    #[test]
    fn complex_view_preserves_real_inner_product(x in unit(6), y in unit(6)) {
        let (u, v) = (real_to_complex(&x).unwrap(), real_to_complex(&y).unwrap());
        prop_assert!((u.re_inner(&v) - x.dot(&y)).abs() <= 1e-15);
        prop_assert!((u.hermitian(&v).re - x.dot(&y)).abs() <= 1e-15);
        prop_assert_eq!(complex_to_real(&u), x);
    }

    #[test]
    fn separation_is_the_same_through_the_bridge(x in point_set(6, 2..12)) {
        let z = csdesign::sphere::real_set_to_complex(&x).unwrap();
        prop_assert!((separation(&x).unwrap() - separation(&z).unwrap()).abs() <= 1e-15);
    }

    #[test]
    fn complex_files_round_trip(x in point_set(4, 1..8)) {
        let z = csdesign::sphere::real_set_to_complex(&x).unwrap();
        let back = sdf::parse(&sdf::format_complex(&z, Some(2))).unwrap();
        prop_assert_eq!(back.points, sdf::Points::Complex(z));
    }

    #[test]
    fn tight_rules_integrate_their_monomials(d in 2usize..5, k in 0usize..2, l in 0usize..2, i in 0usize..4, j in 0usize..4) {
        let rule = tight_design(d, 3).unwrap();
        let (i, j) = (i % d, j % d);
        let mut alpha = vec![0; d];
        let mut beta = vec![0; d];
        alpha[i] += k;
        alpha[j] += l;
        beta[(i + 1) % d] += 1;
        let got = integrate(&rule, |z| {
            z.coords().iter().enumerate().map(|(q, c)| c.powu(alpha[q] as u32) * c.conj().powu(beta[q] as u32)).product::<Complex64>()
        });
        prop_assert!((got - complex_monomial_integral(d, &alpha, &beta)).norm() <= 1e-11);
    }
}
