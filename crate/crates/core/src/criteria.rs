//! The variational objective `V`, its gradient, the per-degree sums `W_ℓ` and
//! exactness checks for real and complex designs.
//!
//! All pair sums are reduced row by row (rows may run in parallel), each row
//! and the final reduction with compensated summation in a fixed order, so
//! results do not depend on the thread count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::ortho_poly::{dim_harm, legendre_all, ZonalKernel};
use crate::sphere::{dot, ComplexPointSet, RealPointSet};
use crate::sum::{ComplexKahanSum, KahanSum};

/// Default acceptance threshold on `max_ℓ W_ℓ / N²`.
pub const DEFAULT_DESIGN_TOL: f64 = 1e-12;

/// Row-major copy of a point set's coordinates.
#[derive(Debug, Clone)]
pub(crate) struct Flat {
    pub n: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Flat {
    pub fn from_set(x: &RealPointSet) -> Result<Self> {
        let dim = x.sphere_dim().ok_or_else(|| domain("empty point set"))? + 1;
        let data = x.iter().flat_map(|p| p.coords().iter().copied()).collect();
        Ok(Self { n: x.len(), dim, data })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// `Σ_{i,j} f(x_i·x_j)` over all ordered pairs, deterministic.
pub(crate) fn pair_sum(x: &Flat, f: impl Fn(f64) -> f64 + Sync) -> f64 {
    let rows: Vec<f64> = (0..x.n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            let mut s = KahanSum::new();
            for j in 0..x.n {
                s.add(f(dot(xi, x.row(j))));
            }
            s.value()
        })
        .collect();
    crate::sum::kahan_sum(rows)
}

/// Per-point ambient gradient rows `G_i = c Σ_j f'(x_i·x_j) x_j`, projected
/// onto the tangent space at `x_i`.
pub(crate) fn pair_gradient(x: &Flat, c: f64, fprime: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    let dim = x.dim;
    let rows: Vec<Vec<f64>> = (0..x.n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            let mut g = vec![0.0; dim];
            for j in 0..x.n {
                let xj = x.row(j);
                let w = fprime(dot(xi, xj));
                for (gk, xk) in g.iter_mut().zip(xj) {
                    *gk += w * xk;
                }
            }
            let radial = dot(&g, xi);
            g.iter_mut().zip(xi).for_each(|(gk, xk)| *gk = c * (*gk - radial * xk));
            g
        })
        .collect();
    rows.concat()
}

fn check_inputs(x: &RealPointSet, t: usize) -> Result<usize> {
    if x.is_empty() {
        return Err(domain("point set is empty"));
    }
    if t < 1 {
        return Err(domain("degree t must be ≥ 1"));
    }
    let m = x.sphere_dim().unwrap_or(0);
    if m < 2 {
        return Err(domain("objective needs sphere dimension m ≥ 2"));
    }
    Ok(m)
}

/// `V_{t,N,ψ}(X) = N⁻² Σ_{i,j} ψ_t(x_i·x_j)`.
pub fn variational_value(x: &RealPointSet, t: usize) -> Result<f64> {
    let m = check_inputs(x, t)?;
    let kernel = ZonalKernel::new(t, m)?;
    let flat = Flat::from_set(x)?;
    let n = x.len() as f64;
    Ok(pair_sum(&flat, |u| kernel.eval(u).0) / (n * n))
}

/// Tangent gradient of `V` with respect to each point, one vector per point.
///
/// For a symmetric set the rows are computed on the generators with the
/// even kernel and the antipodal rows are their negations.
pub fn variational_gradient(x: &RealPointSet, t: usize) -> Result<Vec<Vec<f64>>> {
    let m = check_inputs(x, t)?;
    let n = x.len();
    let dim = m + 1;
    if x.is_symmetric() {
        let kernel = ZonalKernel::symmetric(t, m)?;
        let gens = RealPointSet::new(x.generators().to_vec())?;
        let flat = Flat::from_set(&gens)?;
        // ∂V/∂x_i = (2/N²) Σ_{all j} ψ'(x_i·x_j) x_j = (4/N²) Σ_{gens j} ψ_e'(x_i·x_j) x_j
        let c = 4.0 / (n * n) as f64;
        let g = pair_gradient(&flat, c, |u| kernel.eval(u).1);
        let mut out: Vec<Vec<f64>> = g.chunks(dim).map(<[f64]>::to_vec).collect();
        let neg: Vec<Vec<f64>> = out.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        out.extend(neg);
        Ok(out)
    } else {
        let kernel = ZonalKernel::new(t, m)?;
        let flat = Flat::from_set(x)?;
        let c = 2.0 / (n * n) as f64;
        let g = pair_gradient(&flat, c, |u| kernel.eval(u).1);
        Ok(g.chunks(dim).map(<[f64]>::to_vec).collect())
    }
}

/// `W_ℓ = Σ_{i,j} P_ℓ^{(m)}(x_i·x_j)` for `ℓ = 1..=t`.
pub fn per_degree_sums(x: &RealPointSet, t: usize) -> Result<Vec<f64>> {
    let m = check_inputs(x, t)?;
    let flat = Flat::from_set(x)?;
    Ok(per_degree_sums_flat(&flat, m, t))
}

pub(crate) fn per_degree_sums_flat(flat: &Flat, m: usize, t: usize) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = (0..flat.n)
        .into_par_iter()
        .map(|i| {
            let xi = flat.row(i);
            let mut p = vec![0.0; t + 1];
            let mut acc = vec![KahanSum::new(); t + 1];
            for j in 0..flat.n {
                legendre_all(m, dot(xi, flat.row(j)).clamp(-1.0, 1.0), &mut p);
                for l in 1..=t {
                    acc[l].add(p[l]);
                }
            }
            acc[1..].iter().map(KahanSum::value).collect()
        })
        .collect();
    (0..t)
        .map(|l| crate::sum::kahan_sum(rows.iter().map(|r| r[l])))
        .collect()
}

/// Exactness diagnostics for a real point set.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub t: usize,
    pub n: usize,
    /// `V_{t,N,ψ}` recomputed from the per-degree sums.
    pub v: f64,
    /// `W_ℓ` for `ℓ = 1..=t`.
    pub per_degree: Vec<f64>,
    pub is_design: bool,
    pub tolerance: f64,
}

impl DesignReport {
    /// `max_ℓ W_ℓ / N²`, the scale-free acceptance quantity.
    pub fn per_degree_max(&self) -> f64 {
        let n2 = (self.n * self.n) as f64;
        self.per_degree.iter().fold(f64::NEG_INFINITY, |a, &w| a.max(w / n2))
    }
}

/// Checks whether `X` is a spherical t-design: `max_ℓ W_ℓ/N² ≤ tol`.
pub fn is_spherical_design(x: &RealPointSet, t: usize, tol: f64) -> Result<DesignReport> {
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    let m = check_inputs(x, t)?;
    let w = per_degree_sums(x, t)?;
    let n = x.len();
    let n2 = (n * n) as f64;
    let mut v = KahanSum::new();
    for (l, wl) in w.iter().enumerate() {
        v.add(dim_harm(m, l + 1)? as f64 * wl / n2);
    }
    let mut report = DesignReport {
        t,
        n,
        v: v.value(),
        per_degree: w,
        is_design: false,
        tolerance: tol,
    };
    report.is_design = report.per_degree_max() <= tol;
    Ok(report)
}

/// `∫_{Ω^d} z^α conj(z)^β dμ` for the normalized Haar measure:
/// zero unless `α = β`, otherwise `(d−1)! Π α_j! / (d−1+|α|)!`.
pub fn complex_monomial_integral(d: usize, alpha: &[usize], beta: &[usize]) -> Complex64 {
    assert_eq!(alpha.len(), d, "alpha must have d entries");
    assert_eq!(beta.len(), d, "beta must have d entries");
    if alpha != beta {
        return Complex64::new(0.0, 0.0);
    }
    let total: usize = alpha.iter().sum();
    let mut v = 1.0;
    for &a in alpha {
        v *= (1..=a).map(|k| k as f64).product::<f64>();
    }
    for k in d..d + total {
        v /= k as f64;
    }
    Complex64::new(v, 0.0)
}

/// `∫_{S^m} x^α dσ` for the normalized surface measure, `m + 1 = α.len()`:
/// zero unless every exponent is even, otherwise
/// `Π (α_j − 1)!! / ((m+1)(m+3)⋯(m+|α|−1))`.
pub fn real_monomial_integral(alpha: &[usize]) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let dim = alpha.len();
    let mut v = 1.0;
    for &a in alpha {
        v *= (1..a).step_by(2).map(|k| k as f64).product::<f64>();
    }
    let half: usize = alpha.iter().sum::<usize>() / 2;
    for k in 0..half {
        v /= (dim + 2 * k) as f64;
    }
    v
}

/// All exponent vectors of length `len` with entries summing to `total`, in
/// lexicographic order.
pub(crate) fn compositions(len: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(len: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if len == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(len - 1, total - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if len > 0 {
        rec(len, total, &mut Vec::with_capacity(len), &mut out);
    }
    out
}

/// Monomial exponent pairs `(α, β)` with `|α| + |β| ≤ t`, graded then lexicographic.
pub fn monomial_pairs(d: usize, t: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    (0..=t)
        .flat_map(|k| compositions(2 * d, k))
        .map(|e| (e[..d].to_vec(), e[d..].to_vec()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VerifyMode {
    /// Stop at the first monomial whose error exceeds the tolerance.
    Fast,
    /// Sweep every monomial and report the worst one.
    #[default]
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangularReport {
    pub t: usize,
    pub n: usize,
    pub tolerance: f64,
    /// Largest `|average − integral|` over the monomials checked.
    pub max_error: f64,
    /// Exponents attaining `max_error`.
    pub worst: Option<(Vec<usize>, Vec<usize>)>,
    pub monomials_checked: usize,
    pub passed: bool,
}

/// Per-point power tables `z_j^k` and `conj(z_j)^k` for `k ≤ t`.
fn power_tables(z: &ComplexPointSet, t: usize) -> Vec<Vec<[Vec<Complex64>; 2]>> {
    z.iter()
        .map(|p| {
            p.coords()
                .iter()
                .map(|&c| {
                    let mut pw = vec![Complex64::new(1.0, 0.0); t + 1];
                    let mut cw = pw.clone();
                    for k in 1..=t {
                        pw[k] = pw[k - 1] * c;
                        cw[k] = cw[k - 1] * c.conj();
                    }
                    [pw, cw]
                })
                .collect()
        })
        .collect()
}

/// Equal-weight averages of `z^α conj(z)^β` over the nodes.
pub(crate) fn monomial_average(
    tables: &[Vec<[Vec<Complex64>; 2]>],
    alpha: &[usize],
    beta: &[usize],
) -> Complex64 {
    let mut s = ComplexKahanSum::new();
    for point in tables {
        let mut v = Complex64::new(1.0, 0.0);
        for (j, [pw, cw]) in point.iter().enumerate() {
            v *= pw[alpha[j]] * cw[beta[j]];
        }
        s.add(v);
    }
    s.value() / tables.len() as f64
}

/// Equal-weight average of `z^α conj(z)^β` over the points of `z`.
pub fn node_average(z: &ComplexPointSet, alpha: &[usize], beta: &[usize]) -> Complex64 {
    let t = alpha.iter().chain(beta).copied().max().unwrap_or(0);
    monomial_average(&power_tables(z, t), alpha, beta)
}

/// Checks triangular exactness on `Ω^d` by sweeping all monomials of
/// bidegree `(k, l)` with `k + l ≤ t`.
pub fn verify_triangular_design(
    z: &ComplexPointSet,
    t: usize,
    tol: f64,
    mode: VerifyMode,
) -> Result<TriangularReport> {
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    let d = z.complex_dim().ok_or_else(|| domain("point set is empty"))?;
    let tables = power_tables(z, t);
    let mut report = TriangularReport {
        t,
        n: z.len(),
        tolerance: tol,
        max_error: 0.0,
        worst: None,
        monomials_checked: 0,
        passed: true,
    };
    for (alpha, beta) in monomial_pairs(d, t) {
        let err = (monomial_average(&tables, &alpha, &beta) - complex_monomial_integral(d, &alpha, &beta)).norm();
        report.monomials_checked += 1;
        if err > report.max_error || report.worst.is_none() {
            report.max_error = err;
            report.worst = Some((alpha, beta));
        }
        if err > tol {
            report.passed = false;
            if mode == VerifyMode::Fast {
                break;
            }
        }
    }
    Ok(report)
}

/// Errors if `report` did not pass, carrying its diagnostics.
pub fn require_passed(report: &TriangularReport) -> Result<()> {
    if report.passed {
        Ok(())
    } else {
        Err(Error::Verification(format!(
            "max monomial error {:.3e} exceeds {:.1e} (worst exponents {:?})",
            report.max_error, report.tolerance, report.worst
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{real_set_to_complex, symmetrize, RealPoint};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn cross_polytope(m: usize) -> RealPointSet {
        let gens = (0..=m).map(|k| RealPoint::basis(m, k)).collect();
        RealPointSet::from_generators(gens).unwrap()
    }

    fn random_set(rng: &mut impl Rng, n: usize, dim: usize) -> RealPointSet {
        let pts = (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                RealPoint::normalized(v).unwrap()
            })
            .collect();
        RealPointSet::new(pts).unwrap()
    }

    #[test]
    fn cross_polytope_is_a_3_design_not_a_4_design() {
        let x = cross_polytope(3);
        assert!(variational_value(&x, 3).unwrap().abs() < 1e-12);
        let w = per_degree_sums(&x, 4).unwrap();
        for wl in &w[..3] {
            assert!(wl.abs() < 1e-12 * 64.0);
        }
        assert!(w[3] > 1.0);
        assert!(is_spherical_design(&x, 3, 1e-10).unwrap().is_design);
        assert!(!is_spherical_design(&x, 4, 1e-10).unwrap().is_design);
    }

    #[test]
    fn single_point_value_is_kernel_at_one() {
        let x = RealPointSet::new(vec![RealPoint::basis(2, 0)]).unwrap();
        assert!((variational_value(&x, 1).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn repeated_point_gives_n_squared() {
        let x = RealPointSet::new(vec![RealPoint::basis(3, 2); 5]).unwrap();
        for w in per_degree_sums(&x, 6).unwrap() {
            assert!((w - 25.0).abs() < 1e-12);
        }
    }

    #[test]
    fn antipodal_pair_is_a_1_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let p = random_set(&mut rng, 1, 5);
            let x = symmetrize(&p);
            assert!(is_spherical_design(&x, 1, 1e-10).unwrap().is_design);
            let g = variational_gradient(&x, 1).unwrap();
            assert!(g.iter().flatten().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn cross_polytope_is_critical() {
        let x = cross_polytope(3);
        let g = variational_gradient(&x, 3).unwrap();
        let norm: f64 = g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-10);
        let plain = RealPointSet::new(x.points().to_vec()).unwrap();
        let g = variational_gradient(&plain, 3).unwrap();
        let norm: f64 = g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-10);
    }

    #[test]
    fn symmetric_gradient_agrees_with_plain_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = symmetrize(&random_set(&mut rng, 7, 4));
        let plain = RealPointSet::new(x.points().to_vec()).unwrap();
        let a = variational_gradient(&x, 5).unwrap();
        let b = variational_gradient(&plain, 5).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            for (u, v) in ra.iter().zip(rb) {
                assert!((u - v).abs() < 1e-12, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn symmetric_sets_have_vanishing_odd_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = symmetrize(&random_set(&mut rng, 20, 6));
        let n2 = (x.len() * x.len()) as f64;
        let w = per_degree_sums(&x, 9).unwrap();
        for l in (0..9).step_by(2) {
            assert!(w[l].abs() <= 1e-10 * n2, "ℓ={} W={}", l + 1, w[l]);
        }
    }

    #[test]
    fn empty_set_is_rejected() {
        let x = RealPointSet::new(vec![]).unwrap();
        assert!(variational_value(&x, 3).is_err());
        assert!(per_degree_sums(&x, 3).is_err());
    }

    #[test]
    fn monomial_integral_examples() {
        assert_eq!(complex_monomial_integral(3, &[0; 3], &[0; 3]), Complex64::new(1.0, 0.0));
        assert_eq!(complex_monomial_integral(2, &[1, 0], &[0, 1]), Complex64::new(0.0, 0.0));
        assert_eq!(complex_monomial_integral(2, &[1, 0], &[1, 0]), Complex64::new(0.5, 0.0));
        // |z_1|^2 |z_2|^2 on Ω^2: 1!·1!·1!/3! = 1/6
        assert!((complex_monomial_integral(2, &[1, 1], &[1, 1]).re - 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn real_monomial_integral_examples() {
        assert_eq!(real_monomial_integral(&[0, 0, 0]), 1.0);
        assert_eq!(real_monomial_integral(&[1, 1, 0, 0]), 0.0);
        assert_eq!(real_monomial_integral(&[2, 0, 0, 0]), 0.25);
        assert!((real_monomial_integral(&[4, 0, 0]) - 0.2).abs() < 1e-16);
        assert!((real_monomial_integral(&[2, 2, 0, 0]) - 1.0 / 24.0).abs() < 1e-16);
        // |z_1|^2 |z_2|^2 expands to four real monomials x_a² x_b²
        let s = 4.0 * real_monomial_integral(&[2, 0, 2, 0]);
        assert!((s - complex_monomial_integral(2, &[1, 1], &[1, 1]).re).abs() < 1e-16);
    }

    #[test]
    fn monomial_pairs_are_graded() {
        let pairs = monomial_pairs(2, 2);
        // C(2 + 4, 4) exponent vectors of total degree ≤ 2 in 4 variables
        assert_eq!(pairs.len(), 15);
        assert_eq!(pairs[0], (vec![0, 0], vec![0, 0]));
        let degrees: Vec<usize> = pairs.iter().map(|(a, b)| a.iter().sum::<usize>() + b.iter().sum::<usize>()).collect();
        assert!(degrees.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn complex_cross_polytope_verification() {
        let z = real_set_to_complex(&cross_polytope(3)).unwrap();
        let r = verify_triangular_design(&z, 3, 1e-12, VerifyMode::Full).unwrap();
        assert!(r.passed, "{r:?}");
        let r = verify_triangular_design(&z, 4, 1e-12, VerifyMode::Full).unwrap();
        assert!(!r.passed);
        assert!(r.max_error > 1e-3);
        let fast = verify_triangular_design(&z, 4, 1e-12, VerifyMode::Fast).unwrap();
        assert!(!fast.passed);
        assert!(fast.monomials_checked <= r.monomials_checked);
    }
}
