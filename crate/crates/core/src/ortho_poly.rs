//! Jacobi and normalized Gegenbauer polynomials, the zonal design kernel and
//! the exact dimension / point-count formulas.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{domain, Error, Result};

/// Parameters of a Jacobi polynomial `P_n^{(α,β)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiParams {
    pub alpha: f64,
    pub beta: f64,
    pub degree: usize,
}

impl JacobiParams {
    pub fn new(alpha: f64, beta: f64, degree: usize) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0) {
            return Err(domain(format!("Jacobi weight needs α, β > −1 (got {alpha}, {beta})")));
        }
        Ok(Self { alpha, beta, degree })
    }
}

fn check_unit_interval(u: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&u) {
        return Err(domain(format!("argument {u} outside [−1, 1]")));
    }
    Ok(())
}

/// `P_n^{(α,β)}(u)` by the upward three-term recurrence. No argument checks.
pub(crate) fn jacobi_value(n: usize, a: f64, b: f64, u: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut p0 = 1.0;
    let mut p1 = 0.5 * ((a + b + 2.0) * u + (a - b));
    let ab = a + b;
    let ab2 = a * a - b * b;
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + ab;
        let a1 = 2.0 * k * (k + ab) * (c - 2.0);
        let a2 = (c - 1.0) * ab2;
        let a3 = (c - 1.0) * c * (c - 2.0);
        let a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
        let p2 = ((a2 + a3 * u) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `P_n^{(α,β)}(1) = (α+1)_n / n!`.
pub(crate) fn jacobi_at_one(n: usize, a: f64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * (k as f64 + a) / k as f64)
}

/// Value and derivative of `P_n^{(α,β)}(u)`. The derivative uses
/// `d/du P_n^{(α,β)} = (n+α+β+1)/2 · P_{n−1}^{(α+1,β+1)}`.
pub fn jacobi_eval(p: JacobiParams, u: f64) -> Result<(f64, f64)> {
    check_unit_interval(u)?;
    Ok(jacobi_eval_unchecked(p, u))
}

pub(crate) fn jacobi_eval_unchecked(p: JacobiParams, u: f64) -> (f64, f64) {
    let JacobiParams { alpha: a, beta: b, degree: n } = p;
    let value = jacobi_value(n, a, b, u);
    let deriv = if n == 0 {
        0.0
    } else {
        0.5 * (n as f64 + a + b + 1.0) * jacobi_value(n - 1, a + 1.0, b + 1.0, u)
    };
    (value, deriv)
}

/// Normalized Legendre polynomial on `S^m`:
/// `P_ℓ^{(λ,λ)}(u) / P_ℓ^{(λ,λ)}(1)` with `λ = (m−2)/2`.
pub fn legendre_normalized(ell: usize, m: usize, u: f64) -> Result<f64> {
    if m < 2 {
        return Err(domain("legendre_normalized needs sphere dimension m ≥ 2"));
    }
    check_unit_interval(u)?;
    if u == 1.0 {
        return Ok(1.0);
    }
    let lambda = (m as f64 - 2.0) / 2.0;
    Ok(jacobi_value(ell, lambda, lambda, u) / jacobi_at_one(ell, lambda))
}

/// Fills `out[ℓ] = P_ℓ^{(m)}(u)` for `ℓ = 0..out.len()` using the normalized
/// Gegenbauer recurrence `(ℓ+m−2) p_ℓ = (2ℓ+m−3) u p_{ℓ−1} − (ℓ−1) p_{ℓ−2}`.
pub(crate) fn legendre_all(m: usize, u: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = u;
    }
    let mf = m as f64;
    for l in 2..out.len() {
        let lf = l as f64;
        out[l] = ((2.0 * lf + mf - 3.0) * u * out[l - 1] - (lf - 1.0) * out[l - 2]) / (lf + mf - 2.0);
    }
}

/// The design kernel `ψ_t(u) = Σ_{ℓ=1}^t Z(m,ℓ) P_ℓ^{(m)}(u)`, evaluated in
/// closed form as `c_{t,m} P_t^{(m/2,(m−2)/2)}(u) − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZonalKernel {
    t: usize,
    m: usize,
    scale: f64,
    symmetric_variant: bool,
}

impl ZonalKernel {
    pub fn new(t: usize, m: usize) -> Result<Self> {
        if t < 1 {
            return Err(domain("kernel degree t must be ≥ 1"));
        }
        if m < 2 {
            return Err(domain("kernel needs sphere dimension m ≥ 2"));
        }
        let total = harmonic_space_dim(m, t)? as f64;
        let alpha = m as f64 / 2.0;
        let scale = total / jacobi_at_one(t, alpha);
        Ok(Self { t, m, scale, symmetric_variant: false })
    }

    /// Even part `(ψ(u) + ψ(−u))/2 = Σ_{ℓ even} Z(m,ℓ) P_ℓ^{(m)}(u)`, the
    /// kernel used for antipodal point sets.
    pub fn symmetric(t: usize, m: usize) -> Result<Self> {
        Ok(Self { symmetric_variant: true, ..Self::new(t, m)? })
    }

    pub fn degree(&self) -> usize {
        self.t
    }

    pub fn sphere_dim(&self) -> usize {
        self.m
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_symmetric_variant(&self) -> bool {
        self.symmetric_variant
    }

    #[inline]
    fn raw(&self, u: f64) -> (f64, f64) {
        let a = self.m as f64 / 2.0;
        let b = a - 1.0;
        let (v, dv) = jacobi_eval_unchecked(JacobiParams { alpha: a, beta: b, degree: self.t }, u);
        (self.scale * v - 1.0, self.scale * dv)
    }

    /// Value and derivative at `u`; no range check.
    #[inline]
    pub fn eval(&self, u: f64) -> (f64, f64) {
        if self.symmetric_variant {
            let (p, dp) = self.raw(u);
            let (q, dq) = self.raw(-u);
            (0.5 * (p + q), 0.5 * (dp - dq))
        } else {
            self.raw(u)
        }
    }

    /// Expansion coefficients `a_0..=a_t` in the normalized Legendre basis,
    /// obtained by Gauss–Jacobi projection.
    pub fn gegenbauer_coefficients(&self) -> Vec<f64> {
        let lambda = (self.m as f64 - 2.0) / 2.0;
        let (nodes, weights) = gauss_jacobi_symmetric(self.t + 2, lambda);
        let mut p = vec![0.0; self.t + 1];
        let mut num = vec![0.0; self.t + 1];
        let mut den = vec![0.0; self.t + 1];
        for (&u, &w) in nodes.iter().zip(&weights) {
            legendre_all(self.m, u, &mut p);
            let psi = self.eval(u).0;
            for l in 0..=self.t {
                num[l] += w * psi * p[l];
                den[l] += w * p[l] * p[l];
            }
        }
        num.iter().zip(&den).map(|(n, d)| n / d).collect()
    }
}

/// `ψ_t(u)` and its derivative on `S^m`.
pub fn zonal_psi(t: usize, m: usize, u: f64) -> Result<(f64, f64)> {
    check_unit_interval(u)?;
    Ok(ZonalKernel::new(t, m)?.eval(u))
}

/// Gauss–Jacobi nodes and (unnormalized) weights for the weight `(1−u²)^λ`,
/// by Golub–Welsch.
pub(crate) fn gauss_jacobi_symmetric(n: usize, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let mut jm = DMatrix::<f64>::zeros(n, n);
    let a = lambda;
    for k in 1..n {
        let kf = k as f64;
        let b2 = kf * (kf + 2.0 * a) / ((2.0 * kf + 2.0 * a + 1.0) * (2.0 * kf + 2.0 * a - 1.0));
        let b = b2.sqrt();
        jm[(k - 1, k)] = b;
        jm[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.into_iter().unzip()
}

pub(crate) fn binomial(n: u128, k: u128) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r
            .checked_mul(n - i)
            .ok_or(Error::Overflow("binomial coefficient"))?
            / (i + 1);
    }
    Ok(r)
}

fn to_u64(x: u128, what: &'static str) -> Result<u64> {
    u64::try_from(x).map_err(|_| Error::Overflow(what))
}

fn mul(a: u128, b: u128, what: &'static str) -> Result<u128> {
    a.checked_mul(b).ok_or(Error::Overflow(what))
}

/// `Z(m, ℓ)`, the dimension of degree-ℓ spherical harmonics on `S^m`.
pub fn dim_harm(m: usize, ell: usize) -> Result<u64> {
    let (m, l) = (m as u128, ell as u128);
    match (m, l) {
        (0, _) => Err(domain("dim_harm needs m ≥ 1")),
        (_, 0) => Ok(1),
        (1, _) => Ok(2),
        _ => {
            let v = mul(2 * l + m - 1, binomial(l + m - 2, l)?, "Z(m, ℓ)")? / (m - 1);
            to_u64(v, "Z(m, ℓ)")
        }
    }
}

/// `Σ_{ℓ=0}^t Z(m, ℓ) = C(t+m, m) + C(t+m−1, m)`: polynomials of degree ≤ t on `S^m`.
pub(crate) fn harmonic_space_dim(m: usize, t: usize) -> Result<u64> {
    let (m, t) = (m as u128, t as u128);
    let v = binomial(t + m, m)?
        .checked_add(if t == 0 { 0 } else { binomial(t + m - 1, m)? })
        .ok_or(Error::Overflow("harmonic space dimension"))?;
    to_u64(v, "harmonic space dimension")
}

/// `Z^{(d)}_{k,l}`, the dimension of `H_{k,l}(Ω^d)`.
pub fn dim_complex_harm(d: usize, k: usize, l: usize) -> Result<u64> {
    if d < 2 {
        return Err(domain("dim_complex_harm needs d ≥ 2"));
    }
    let (d, k, l) = (d as u128, k as u128, l as u128);
    let v = mul(
        mul(k + l + d - 1, binomial(d + k - 2, k)?, "Z^(d)_{k,l}")?,
        binomial(d + l - 2, l)?,
        "Z^(d)_{k,l}",
    )? / (d - 1);
    to_u64(v, "Z^(d)_{k,l}")
}

/// `M^{(d)}_t`, the dimension of `H_t(Ω^d)`. The closed form is checked
/// against the sum of [`dim_complex_harm`] over `k + l ≤ t`.
pub fn dim_complex_space(d: usize, t: usize) -> Result<u64> {
    let closed = complex_space_closed_form(d, t)?;
    let mut sum: u64 = 0;
    for k in 0..=t {
        for l in 0..=(t - k) {
            sum = sum
                .checked_add(dim_complex_harm(d, k, l)?)
                .ok_or(Error::Overflow("M^(d)_t"))?;
        }
    }
    assert_eq!(closed, sum, "M^(d)_t closed form disagrees with the (k,l) sum for d={d}, t={t}");
    Ok(closed)
}

fn complex_space_closed_form(d: usize, t: usize) -> Result<u64> {
    if d < 2 {
        return Err(domain("dim_complex_space needs d ≥ 2"));
    }
    let (d, t) = (d as u128, t as u128);
    let v = mul(2 * d + 2 * t - 1, binomial(2 * d + t - 2, t)?, "M^(d)_t")? / (2 * d - 1);
    to_u64(v, "M^(d)_t")
}

/// Lower bound on the size of a t-design on `S^m`: `2 C(m+k, m)` for
/// `t = 2k+1`, `C(m+k, m) + C(m+k−1, m)` for `t = 2k`.
pub fn design_lower_bound(m: usize, t: usize) -> Result<u64> {
    if m < 1 {
        return Err(domain("design_lower_bound needs m ≥ 1"));
    }
    let (m, t) = (m as u128, t as u128);
    let k = t / 2;
    let v = if t % 2 == 1 {
        mul(2, binomial(m + k, m)?, "N*_t")?
    } else {
        binomial(m + k, m)?
            .checked_add(if k == 0 { 0 } else { binomial(m + k - 1, m)? })
            .ok_or(Error::Overflow("N*_t"))?
    };
    to_u64(v, "N*_t")
}

/// Node counts for designs on `S^{2d−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointCounts {
    /// Lower bound `N*_t` for any design.
    pub n_star: u64,
    /// Parameter/constraint balance `N̂_t`.
    pub n_hat: u64,
    /// Symmetric balance `N̄_t`, odd `t` only.
    pub n_bar: Option<u64>,
}

pub fn point_counts(d: usize, t: usize) -> Result<PointCounts> {
    if d < 2 {
        return Err(domain("point_counts needs d ≥ 2"));
    }
    if t < 1 {
        return Err(domain("point_counts needs t ≥ 1"));
    }
    let (d, t) = (d as u128, t as u128);
    let n = 2 * d; // ambient real dimension
    let n_star = design_lower_bound((n - 1) as usize, t as usize)? as u128;
    let m_t = complex_space_closed_form(d as usize, t as usize)? as u128;
    let n_hat = (m_t - 1).div_ceil(n - 1) + d;
    let n_bar = if t % 2 == 1 {
        let c = binomial(t + n - 2, n - 1)?;
        Some(to_u64(mul(2, (c - 1).div_ceil(n - 1) + d, "N̄_t")?, "N̄_t")?)
    } else {
        None
    };
    Ok(PointCounts {
        n_star: to_u64(n_star, "N*_t")?,
        n_hat: to_u64(n_hat, "N̂_t")?,
        n_bar,
    })
}
