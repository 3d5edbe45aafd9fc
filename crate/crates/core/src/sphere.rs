//! Points on the real sphere `S^m ⊂ R^(m+1)` and the complex sphere `Ω^d ⊂ C^d`.
//!
//! Cartesian coordinates are the source of truth. Spherical angles are a
//! view used by the optimizer.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{domain, Error, Result};

/// Tolerance on `|‖x‖ − 1|` accepted by the checked constructors.
pub const UNIT_TOL: f64 = 1e-14;

fn clamp_unit(c: f64) -> f64 {
    c.clamp(-1.0, 1.0)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A unit vector on `S^m`, stored as its `m + 1` Cartesian coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPoint(Vec<f64>);

impl RealPoint {
    /// Checked constructor: the coordinates must already have unit norm.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Dimension(format!(
                "a point on S^m needs at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        let norm = dot(&coords, &coords).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(domain(format!("point is not unit norm (‖x‖ = {norm:.17e})")));
        }
        Ok(Self(coords))
    }

    /// Scales a nonzero vector onto the sphere.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        let norm = dot(&coords, &coords).sqrt();
        if coords.len() < 2 || !norm.is_finite() || norm == 0.0 {
            return Err(domain("cannot normalize a zero, non-finite or 1-d vector"));
        }
        coords.iter_mut().for_each(|c| *c /= norm);
        Ok(Self(coords))
    }

    pub(crate) fn from_unchecked(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    /// Standard basis vector `e_k` (0-based) on `S^m`.
    pub fn basis(m: usize, k: usize) -> Self {
        let mut c = vec![0.0; m + 1];
        c[k] = 1.0;
        Self(c)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Sphere dimension `m`.
    pub fn sphere_dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn dot(&self, other: &RealPoint) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn antipode(&self) -> RealPoint {
        RealPoint(self.0.iter().map(|c| -c).collect())
    }
}

/// Angles `(φ_1, …, φ_m)` with `φ_1 ∈ [0, π]` and `φ_2, …, φ_m ∈ [0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalAngles(Vec<f64>);

impl SphericalAngles {
    pub fn new(phi: Vec<f64>) -> Result<Self> {
        if phi.is_empty() {
            return Err(Error::Dimension("need at least one angle".into()));
        }
        if !(0.0..=PI).contains(&phi[0]) {
            return Err(domain(format!("phi_1 = {} outside [0, π]", phi[0])));
        }
        if let Some((j, p)) = phi.iter().enumerate().skip(1).find(|(_, p)| !(0.0..TAU).contains(*p)) {
            return Err(domain(format!("phi_{} = {p} outside [0, 2π)", j + 1)));
        }
        Ok(Self(phi))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Writes the product-of-sines parametrization into `out` (length `phi.len() + 1`):
/// `x_1 = cos φ_1`, `x_i = sin φ_1 ⋯ sin φ_{i−1} cos φ_i`, `x_{m+1} = sin φ_1 ⋯ sin φ_m`.
pub(crate) fn angles_to_coords(phi: &[f64], out: &mut [f64]) {
    let mut prod = 1.0;
    for (i, &p) in phi.iter().enumerate() {
        let (s, c) = p.sin_cos();
        out[i] = prod * c;
        prod *= s;
    }
    out[phi.len()] = prod;
}

/// Pulls an ambient gradient `g` (length m+1) back to the angle gradient (length m).
pub(crate) fn angles_pullback(phi: &[f64], g: &[f64], out: &mut [f64]) {
    let m = phi.len();
    // tail_k = Σ_{i>k} g_i ∂x_i/∂φ_k / (S_{k-1} cos φ_k), accumulated from the back.
    let mut tail = g[m];
    let mut sines = Vec::with_capacity(m);
    let mut cosines = Vec::with_capacity(m);
    for &p in phi {
        let (s, c) = p.sin_cos();
        sines.push(s);
        cosines.push(c);
    }
    let mut prefix = vec![1.0; m];
    for k in 1..m {
        prefix[k] = prefix[k - 1] * sines[k - 1];
    }
    for k in (0..m).rev() {
        if k + 1 < m {
            tail = g[k + 1] * cosines[k + 1] + sines[k + 1] * tail;
        }
        out[k] = prefix[k] * (cosines[k] * tail - sines[k] * g[k]);
    }
}

pub fn angles_to_point(phi: &SphericalAngles) -> RealPoint {
    let mut out = vec![0.0; phi.0.len() + 1];
    angles_to_coords(&phi.0, &mut out);
    RealPoint(out)
}

/// Inverse of [`angles_to_point`]. Once the trailing coordinates vanish the
/// remaining angles are set to 0, the lexicographically smallest choice.
pub fn point_to_angles(x: &RealPoint) -> Result<SphericalAngles> {
    let c = x.coords();
    let norm = dot(c, c).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(domain(format!("point_to_angles needs a unit vector (‖x‖ = {norm})")));
    }
    let m = c.len() - 1;
    // tails[i] = ‖(x_{i}, …, x_m)‖ (0-based)
    let mut tails = vec![0.0f64; m + 2];
    for i in (0..=m).rev() {
        tails[i] = tails[i + 1].hypot(c[i]);
    }
    let mut phi = vec![0.0; m];
    for i in 0..m {
        if tails[i + 1] == 0.0 {
            // singular: remaining coordinates are zero
            phi[i] = if c[i] < 0.0 { PI } else { 0.0 };
            break;
        }
        if i + 1 < m {
            phi[i] = tails[i + 1].atan2(c[i]);
        } else {
            let a = c[m].atan2(c[m - 1]);
            phi[i] = if a < 0.0 { a + TAU } else { a };
            if phi[i] >= TAU {
                phi[i] = 0.0;
            }
        }
    }
    Ok(SphericalAngles(phi))
}

/// Geodesic distance on `S^m`: `arccos` of the clamped dot product.
pub fn geodesic_real(x: &RealPoint, y: &RealPoint) -> f64 {
    clamp_unit(x.dot(y)).acos()
}

/// An ordered list of points on one `S^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPointSet {
    points: Vec<RealPoint>,
    symmetric: bool,
}

impl RealPointSet {
    pub fn new(points: Vec<RealPoint>) -> Result<Self> {
        if let Some(first) = points.first() {
            let n = first.0.len();
            if let Some(bad) = points.iter().find(|p| p.0.len() != n) {
                return Err(Error::Dimension(format!(
                    "mixed coordinate counts {} and {}",
                    n,
                    bad.0.len()
                )));
            }
        }
        Ok(Self { points, symmetric: false })
    }

    /// Builds a set whose second half is the bit-exact negation of the first.
    pub fn from_generators(generators: Vec<RealPoint>) -> Result<Self> {
        let set = Self::new(generators)?;
        Ok(symmetrize(&set))
    }

    /// Marks the set symmetric after checking `points[n/2 + i] == -points[i]` exactly.
    pub fn into_symmetric(mut self) -> Result<Self> {
        if !is_antipodal_layout(&self.points) {
            return Err(domain("point set is not laid out as generators followed by antipodes"));
        }
        self.symmetric = true;
        Ok(self)
    }

    pub fn points(&self) -> &[RealPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Sphere dimension `m`, or `None` for an empty set.
    pub fn sphere_dim(&self) -> Option<usize> {
        self.points.first().map(RealPoint::sphere_dim)
    }

    /// First half of a symmetric set.
    pub fn generators(&self) -> &[RealPoint] {
        if self.symmetric {
            &self.points[..self.points.len() / 2]
        } else {
            &self.points
        }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RealPoint> {
        self.points.iter()
    }
}

fn is_antipodal_layout(points: &[RealPoint]) -> bool {
    if points.len() % 2 != 0 {
        return false;
    }
    let half = points.len() / 2;
    (0..half).all(|i| {
        points[i]
            .0
            .iter()
            .zip(&points[half + i].0)
            .all(|(a, b)| (-a).to_bits() == b.to_bits())
    })
}

/// Appends the exact antipode of every point.
pub fn symmetrize(x: &RealPointSet) -> RealPointSet {
    let mut points = x.points.clone();
    points.extend(x.points.iter().map(RealPoint::antipode));
    RealPointSet { points, symmetric: true }
}

/// A unit vector on `Ω^d ⊂ C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoint(Vec<Complex64>);

impl ComplexPoint {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Dimension("complex point needs at least one coordinate".into()));
        }
        let norm = coords.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(domain(format!("complex point is not unit norm (‖z‖ = {norm:.17e})")));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    /// Complex dimension `d`.
    pub fn complex_dim(&self) -> usize {
        self.0.len()
    }

    /// Hermitian inner product `⟨u, v⟩ = Σ u_j conj(v_j)`.
    pub fn hermitian(&self, other: &ComplexPoint) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(u, v)| u * v.conj()).sum()
    }

    /// `Re⟨u, v⟩`, accumulated component by component.
    pub fn re_inner(&self, other: &ComplexPoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |acc, (u, v)| acc + u.re * v.re + u.im * v.im)
    }
}

/// `arccos(Re⟨u, v⟩)`, clamped.
pub fn geodesic_complex(u: &ComplexPoint, v: &ComplexPoint) -> f64 {
    clamp_unit(u.hermitian(v).re).acos()
}

/// `z_j = x_{2j−1} + i x_{2j}`.
pub fn real_to_complex(x: &RealPoint) -> Result<ComplexPoint> {
    let c = x.coords();
    if c.len() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "real_to_complex needs an even coordinate count, got {}",
            c.len()
        )));
    }
    Ok(ComplexPoint(c.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()))
}

pub fn complex_to_real(u: &ComplexPoint) -> RealPoint {
    RealPoint(u.0.iter().flat_map(|z| [z.re, z.im]).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPointSet {
    points: Vec<ComplexPoint>,
    symmetric: bool,
}

impl ComplexPointSet {
    pub fn new(points: Vec<ComplexPoint>) -> Result<Self> {
        if let Some(first) = points.first() {
            let d = first.0.len();
            if points.iter().any(|p| p.0.len() != d) {
                return Err(Error::Dimension("mixed complex dimensions".into()));
            }
        }
        Ok(Self { points, symmetric: false })
    }

    pub fn points(&self) -> &[ComplexPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn complex_dim(&self) -> Option<usize> {
        self.points.first().map(ComplexPoint::complex_dim)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ComplexPoint> {
        self.points.iter()
    }
}

/// Applies [`real_to_complex`] to every point; symmetry carries over.
pub fn real_set_to_complex(x: &RealPointSet) -> Result<ComplexPointSet> {
    let points = x.iter().map(real_to_complex).collect::<Result<Vec<_>>>()?;
    Ok(ComplexPointSet { points, symmetric: x.is_symmetric() })
}

pub fn complex_set_to_real(z: &ComplexPointSet) -> RealPointSet {
    RealPointSet {
        points: z.iter().map(complex_to_real).collect(),
        symmetric: z.symmetric,
    }
}
