//! Levenberg–Marquardt refinement of a near-design on the moment equations
//! `N⁻¹ Σ_i x_i^α = ∫ x^α dσ`, with `α` ranging over a monomial basis of
//! polynomials of degree `1..=t` restricted to `S^m` (those with `α_1 ≤ 1`).
//!
//! `V` is quadratic in these residuals, so once it reaches its rounding floor
//! its value no longer resolves the remaining error; the residuals are linear
//! in the error and stay resolvable down to `~1e-16`.

use nalgebra::{DMatrix, DVector};

use crate::criteria::{compositions, real_monomial_integral};
use crate::sphere::dot;

pub(crate) struct MomentSystem {
    dim: usize,
    t: usize,
    exponents: Vec<Vec<usize>>,
    targets: Vec<f64>,
}

impl MomentSystem {
    /// `even_only` keeps even-degree monomials, the only nontrivial ones for
    /// antipodal sets.
    pub fn new(dim: usize, t: usize, even_only: bool) -> Self {
        let exponents: Vec<Vec<usize>> = (1..=t)
            .filter(|k| !even_only || k % 2 == 0)
            .flat_map(|k| compositions(dim, k))
            .filter(|a| a[0] <= 1)
            .collect();
        let targets = exponents.iter().map(|a| real_monomial_integral(a)).collect();
        Self { dim, t, exponents, targets }
    }

    /// Number of equations `new(dim, t, even_only)` would set up.
    pub fn count(dim: usize, t: usize, even_only: bool) -> usize {
        (1..=t)
            .filter(|k| !even_only || k % 2 == 0)
            .map(|k| {
                // compositions of k into dim parts with first part 0 or 1
                let c = |n: usize| crate::ortho_poly::binomial((n + dim - 2) as u128, (dim - 2) as u128).unwrap_or(0) as usize;
                c(k) + c(k - 1)
            })
            .sum()
    }

    pub fn max_residual(&self, pts: &[Vec<f64>]) -> f64 {
        self.residuals(pts).iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    fn powers(&self, x: &[f64]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|&v| {
                let mut p = vec![1.0; self.t + 1];
                for k in 1..=self.t {
                    p[k] = p[k - 1] * v;
                }
                p
            })
            .collect()
    }

    pub fn residuals(&self, pts: &[Vec<f64>]) -> Vec<f64> {
        let n = pts.len() as f64;
        let tables: Vec<Vec<Vec<f64>>> = pts.iter().map(|x| self.powers(x)).collect();
        self.exponents
            .iter()
            .zip(&self.targets)
            .map(|(a, target)| {
                let s = crate::sum::kahan_sum(
                    tables.iter().map(|p| a.iter().enumerate().map(|(k, &e)| p[k][e]).product::<f64>()),
                );
                s / n - target
            })
            .collect()
    }

    /// Jacobian with respect to tangent coordinates: column `i·m + k` moves
    /// point `i` along `bases[i][k]`.
    fn jacobian(&self, pts: &[Vec<f64>], bases: &[Vec<Vec<f64>>]) -> DMatrix<f64> {
        let m = self.dim - 1;
        let n = pts.len();
        let mut jac = DMatrix::zeros(self.len(), n * m);
        let mut grad = vec![0.0; self.dim];
        for (i, x) in pts.iter().enumerate() {
            let p = self.powers(x);
            for (r, a) in self.exponents.iter().enumerate() {
                for (k, g) in grad.iter_mut().enumerate() {
                    *g = if a[k] == 0 {
                        0.0
                    } else {
                        let mut v = a[k] as f64 * p[k][a[k] - 1];
                        for (j, &e) in a.iter().enumerate() {
                            if j != k {
                                v *= p[j][e];
                            }
                        }
                        v
                    };
                }
                for (k, b) in bases[i].iter().enumerate() {
                    jac[(r, i * m + k)] = dot(&grad, b) / n as f64;
                }
            }
        }
        jac
    }
}

/// Orthonormal basis of the tangent space at `x`: columns 2.. of the
/// Householder reflection that swaps `x` and `∓e_1`.
pub(crate) fn tangent_basis(x: &[f64]) -> Vec<Vec<f64>> {
    let dim = x.len();
    let s = if x[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = x.to_vec();
    v[0] += s;
    let vv = dot(&v, &v);
    (1..dim)
        .map(|k| {
            let mut e: Vec<f64> = (0..dim).map(|j| -2.0 * v[j] * v[k] / vv).collect();
            e[k] += 1.0;
            e
        })
        .collect()
}

fn retract(x: &[f64], basis: &[Vec<f64>], step: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    for (b, s) in basis.iter().zip(step) {
        y.iter_mut().zip(b).for_each(|(yi, bi)| *yi += s * bi);
    }
    let n = dot(&y, &y).sqrt();
    y.iter_mut().for_each(|v| *v /= n);
    y
}

fn norm(r: &[f64]) -> f64 {
    dot(r, r).sqrt()
}

const SLOW_CHECK: usize = 10;

#[derive(Debug, Clone)]
pub(crate) struct PolishOutcome {
    pub points: Vec<Vec<f64>>,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub iterations: usize,
}

/// Runs damped Gauss–Newton steps on the moment residuals of `pts`, each
/// accepted only if it lowers the residual norm.
pub(crate) fn polish(sys: &MomentSystem, mut pts: Vec<Vec<f64>>, max_iter: usize) -> PolishOutcome {
    let mut r = sys.residuals(&pts);
    let initial = norm(&r);
    let mut rn = initial;
    let mut lambda = 1e-8;
    let mut iterations = 0;
    let floor = 1e-16 * (sys.len() as f64).sqrt();
    while iterations < max_iter && rn > floor {
        iterations += 1;
        let bases: Vec<Vec<Vec<f64>>> = pts.iter().map(|x| tangent_basis(x)).collect();
        let jac = sys.jacobian(&pts, &bases);
        let svd = jac.svd(true, true);
        let (u, vt) = (svd.u.as_ref().expect("U requested"), svd.v_t.as_ref().expect("V^T requested"));
        let utr = u.transpose() * DVector::from_column_slice(&r);
        let smax = svd.singular_values.max().max(1e-300);
        let mut accepted = false;
        for _ in 0..12 {
            // damped least squares: δ = −V diag(s/(s² + λ s_max²)) Uᵀ r
            let mut coef = utr.clone();
            for (c, &sv) in coef.iter_mut().zip(svd.singular_values.iter()) {
                *c *= -sv / (sv * sv + lambda * smax * smax);
            }
            let step = vt.transpose() * coef;
            let m = sys.dim - 1;
            let trial: Vec<Vec<f64>> = pts
                .iter()
                .enumerate()
                .map(|(i, x)| retract(x, &bases[i], &step.as_slice()[i * m..(i + 1) * m]))
                .collect();
            let rt = sys.residuals(&trial);
            let rtn = norm(&rt);
            if rtn < rn {
                pts = trial;
                r = rt;
                rn = rtn;
                lambda = (lambda * 0.1).max(1e-16);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        // Gauss–Newton converges in a handful of steps inside its basin;
        // slow progress means the start is outside it.
        if !accepted || (iterations >= SLOW_CHECK && rn > initial * 1e-3) {
            break;
        }
    }
    PolishOutcome { points: pts, initial_residual: initial, final_residual: rn, iterations }
}
