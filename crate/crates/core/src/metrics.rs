//! Separation, covering radius and mesh ratio, plus figure exports
//! (sorted inner products, stereographic coordinates).
//!
//! The covering radius `max_y min_i dist(y, x_i)` is estimated by
//! multistart projected ascent on `F(y) = min_i dist(y, x_i)`:
//!
//! 1. `F` is evaluated on a scrambled Sobol cloud of `seeds` probes;
//! 2. the best probes, plus the antipode of every node, are refined by
//!    backtracking ascent away from the nearest nodes;
//! 3. each refined probe is snapped onto the equidistant set of its nearest
//!    `k ≤ m+1` nodes, which reaches the circumcentre of a hole exactly.
//!
//! The reported value is `F` at an actual probe, so it never exceeds the
//! true covering radius. The uncertainty is the nominal covering radius of
//! the probe cloud, `2 (σ_m / (κ_m S))^{1/m}` for `S` probes, where `σ_m` is
//! the area of `S^m` and `κ_m` the volume of the unit `m`-ball: when the
//! cloud covers the sphere at that radius, the 1-Lipschitz `F` cannot exceed
//! the best probe by more.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::qmc::sobol_sphere;
use crate::sphere::{complex_to_real, dot, ComplexPointSet, RealPoint, RealPointSet};

/// A finite set of points on a sphere, seen through its inner products.
pub trait SpherePoints: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Real ambient dimension `m + 1` (`2d` for `Ω^d`).
    fn ambient_dim(&self) -> usize;

    /// Cosine of the geodesic distance between nodes `i` and `j`.
    fn cos_between(&self, i: usize, j: usize) -> f64;

    /// Cosine of the distance from node `i` to the probe `y`, given in real
    /// coordinates (interleaved `re, im` for complex sets).
    fn cos_to(&self, i: usize, y: &[f64]) -> f64;

    /// Real coordinates of node `i`.
    fn real_coords(&self, i: usize) -> Vec<f64>;
}

impl SpherePoints for RealPointSet {
    fn len(&self) -> usize {
        RealPointSet::len(self)
    }

    fn ambient_dim(&self) -> usize {
        self.sphere_dim().map_or(0, |m| m + 1)
    }

    fn cos_between(&self, i: usize, j: usize) -> f64 {
        self.points()[i].dot(&self.points()[j])
    }

    fn cos_to(&self, i: usize, y: &[f64]) -> f64 {
        dot(self.points()[i].coords(), y)
    }

    fn real_coords(&self, i: usize) -> Vec<f64> {
        self.points()[i].coords().to_vec()
    }
}

impl SpherePoints for ComplexPointSet {
    fn len(&self) -> usize {
        ComplexPointSet::len(self)
    }

    fn ambient_dim(&self) -> usize {
        self.complex_dim().map_or(0, |d| 2 * d)
    }

    // Re⟨u, v⟩ summed in the order of the real dot product, so metrics are
    // bit-identical on both sides of the bridge.
    fn cos_between(&self, i: usize, j: usize) -> f64 {
        self.points()[i].re_inner(&self.points()[j])
    }

    fn cos_to(&self, i: usize, y: &[f64]) -> f64 {
        self.points()[i]
            .coords()
            .iter()
            .zip(y.chunks_exact(2))
            .fold(0.0, |acc, (z, w)| acc + z.re * w[0] + z.im * w[1])
    }

    fn real_coords(&self, i: usize) -> Vec<f64> {
        complex_to_real(&self.points()[i]).into_coords()
    }
}

fn angle(c: f64) -> f64 {
    c.clamp(-1.0, 1.0).acos()
}

/// Minimum pairwise geodesic distance.
pub fn separation<X: SpherePoints + ?Sized>(x: &X) -> Result<f64> {
    if x.len() < 2 {
        return Err(domain("separation needs at least two points"));
    }
    let max_cos = (0..x.len())
        .into_par_iter()
        .map(|i| ((i + 1)..x.len()).map(|j| x.cos_between(i, j)).fold(f64::NEG_INFINITY, f64::max))
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(angle(max_cos))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveringOptions {
    /// Number of quasi-random probes; `None` means `4096·N` capped at `2^22`.
    pub seeds: Option<usize>,
    /// Backtracking ascent steps per refined probe.
    pub refine_iters: usize,
    /// Scrambling seed of the probe cloud.
    pub seed: u32,
}

impl Default for CoveringOptions {
    fn default() -> Self {
        Self { seeds: None, refine_iters: 50, seed: 0x5eed }
    }
}

impl CoveringOptions {
    pub fn with_seeds(seeds: usize) -> Self {
        Self { seeds: Some(seeds), ..Self::default() }
    }

    fn probe_count(&self, n: usize) -> usize {
        self.seeds.unwrap_or_else(|| (4096 * n.max(1)).min(1 << 22)).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringEstimate {
    /// Best `min_i dist(y, x_i)` found; a lower bound on the covering radius.
    pub value: f64,
    pub uncertainty: f64,
    /// Distinct refined local maxima, descending.
    pub local_maxima: Vec<f64>,
}

/// `2 (σ_m / (κ_m S))^{1/m}` on `S^m` with `S` probes, capped at π.
pub fn probe_cloud_radius(m: usize, probes: usize) -> f64 {
    let mf = m as f64;
    // ln σ_m = ln 2 + ((m+1)/2) ln π − ln Γ((m+1)/2);  ln κ_m = (m/2) ln π − ln Γ(m/2 + 1)
    let ln_sigma = 2f64.ln() + 0.5 * (mf + 1.0) * PI.ln() - ln_gamma(0.5 * (mf + 1.0));
    let ln_kappa = 0.5 * mf * PI.ln() - ln_gamma(0.5 * mf + 1.0);
    let r = 2.0 * ((ln_sigma - ln_kappa - (probes as f64).ln()) / mf).exp();
    r.min(PI)
}

struct Prober<'a, X: SpherePoints + ?Sized> {
    x: &'a X,
    coords: Vec<Vec<f64>>,
    dim: usize,
}

impl<X: SpherePoints + ?Sized> Prober<'_, X> {
    /// `F(y)` together with all node distances.
    fn distances(&self, y: &[f64]) -> Vec<f64> {
        (0..self.x.len()).map(|i| angle(self.x.cos_to(i, y))).collect()
    }

    fn value(&self, y: &[f64]) -> f64 {
        let max_cos = (0..self.x.len()).map(|i| self.x.cos_to(i, y)).fold(f64::NEG_INFINITY, f64::max);
        angle(max_cos)
    }

    fn ascend(&self, mut y: Vec<f64>, iters: usize) -> (Vec<f64>, f64) {
        let mut f = self.value(&y);
        let mut step = (0.5 * f).max(1e-3);
        for _ in 0..iters {
            let d = self.distances(&y);
            let active_tol = (0.25 * step).max(1e-12);
            let mut dir = vec![0.0; self.dim];
            for (i, &di) in d.iter().enumerate() {
                if di <= f + active_tol {
                    let xi = &self.coords[i];
                    let c = dot(xi, &y);
                    let mut t: Vec<f64> = xi.iter().zip(&y).map(|(a, b)| a - c * b).collect();
                    let tn = dot(&t, &t).sqrt();
                    if tn > 0.0 {
                        t.iter_mut().for_each(|v| *v /= tn);
                        dir.iter_mut().zip(&t).for_each(|(a, b)| *a -= b);
                    }
                }
            }
            let dn = dot(&dir, &dir).sqrt();
            if dn < 1e-14 {
                break;
            }
            dir.iter_mut().for_each(|v| *v /= dn);
            let mut accepted = false;
            for _ in 0..40 {
                let cand = normalized(y.iter().zip(&dir).map(|(a, b)| a + step * b).collect());
                let fc = self.value(&cand);
                if fc > f {
                    y = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
                step *= 0.5;
                if step < 1e-15 {
                    break;
                }
            }
            if !accepted {
                break;
            }
            step *= 1.5;
        }
        (y, f)
    }

    /// Moves `y` onto the equidistant set of its `k` nearest nodes.
    fn polish(&self, mut y: Vec<f64>, mut f: f64) -> (Vec<f64>, f64) {
        let kmax = self.dim.min(self.x.len());
        for _ in 0..20 {
            let d = self.distances(&y);
            let mut order: Vec<usize> = (0..d.len()).collect();
            order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
            let mut improved = false;
            for k in 2..=kmax {
                let nearest = &order[..k];
                let x0 = &self.coords[nearest[0]];
                // orthonormal basis of span{x_i − x_0}
                let mut basis: Vec<Vec<f64>> = Vec::new();
                for &i in &nearest[1..] {
                    let mut v: Vec<f64> = self.coords[i].iter().zip(x0).map(|(a, b)| a - b).collect();
                    for b in &basis {
                        let c = dot(&v, b);
                        v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
                    }
                    let n = dot(&v, &v).sqrt();
                    if n > 1e-10 {
                        v.iter_mut().for_each(|vi| *vi /= n);
                        basis.push(v);
                    }
                }
                let project = |v: &[f64]| {
                    let mut p = v.to_vec();
                    for b in &basis {
                        let c = dot(&p, b);
                        p.iter_mut().zip(b).for_each(|(pi, bi)| *pi -= c * bi);
                    }
                    p
                };
                let near = project(&y);
                let far: Vec<f64> = project(x0).into_iter().map(|v| -v).collect();
                for cand in [near, far] {
                    if dot(&cand, &cand) < 1e-20 {
                        continue;
                    }
                    let cand = normalized(cand);
                    let fc = self.value(&cand);
                    if fc > f + 1e-15 {
                        y = cand;
                        f = fc;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        (y, f)
    }
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Number of best cloud probes that are refined.
const REFINED_PROBES: usize = 64;

/// Multistart ascent estimate of the covering radius.
pub fn covering_estimate<X: SpherePoints + ?Sized>(x: &X, opts: &CoveringOptions) -> Result<CoveringEstimate> {
    if x.is_empty() {
        return Err(domain("covering radius needs at least one point"));
    }
    let dim = x.ambient_dim();
    if dim < 2 {
        return Err(Error::Dimension("covering radius needs points on S^m with m ≥ 1".into()));
    }
    if dim > crate::qmc::MAX_SOBOL_DIM {
        return Err(Error::Unsupported(format!("covering probes limited to {} dimensions", crate::qmc::MAX_SOBOL_DIM)));
    }
    let prober = Prober {
        x,
        coords: (0..x.len()).map(|i| x.real_coords(i)).collect(),
        dim,
    };
    let probes = opts.probe_count(x.len());
    let cloud = sobol_sphere(probes, dim, opts.seed);
    let mut scored: Vec<(f64, usize)> = cloud
        .par_chunks_exact(dim)
        .enumerate()
        .map(|(k, y)| (prober.value(y), k))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut starts: Vec<Vec<f64>> = scored
        .iter()
        .take(REFINED_PROBES)
        .map(|&(_, k)| cloud[k * dim..(k + 1) * dim].to_vec())
        .collect();
    starts.extend(prober.coords.iter().map(|c| c.iter().map(|v| -v).collect::<Vec<f64>>()));

    let mut maxima: Vec<f64> = starts
        .into_par_iter()
        .map(|y0| {
            let (y, f) = prober.ascend(y0, opts.refine_iters);
            prober.polish(y, f).1
        })
        .collect();
    let best_cloud = scored.first().map_or(0.0, |s| s.0);
    maxima.push(best_cloud);
    maxima.sort_by(|a, b| b.total_cmp(a));
    maxima.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(CoveringEstimate {
        value: maxima[0],
        uncertainty: probe_cloud_radius(dim - 1, probes),
        local_maxima: maxima,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub separation: f64,
    pub covering: f64,
    pub covering_uncertainty: f64,
    pub mesh_ratio: f64,
    pub n: usize,
}

pub fn mesh_ratio<X: SpherePoints + ?Sized>(x: &X, opts: &CoveringOptions) -> Result<MetricsReport> {
    let sep = separation(x)?;
    let cov = covering_estimate(x, opts)?;
    Ok(MetricsReport {
        separation: sep,
        covering: cov.value,
        covering_uncertainty: cov.uncertainty,
        mesh_ratio: 2.0 * cov.value / sep,
        n: x.len(),
    })
}

/// All `N(N−1)/2` pairwise inner products, descending.
pub fn sorted_inner_products<X: SpherePoints + ?Sized>(x: &X) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(domain("need at least two points"));
    }
    let mut v: Vec<f64> = (0..x.len())
        .flat_map(|i| ((i + 1)..x.len()).map(move |j| (i, j)))
        .map(|(i, j)| x.cos_between(i, j))
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

/// Householder reflection taking `pole` to `e_1`; applied as `H v`.
fn reflect_to_e1(pole: &[f64], v: &[f64]) -> Vec<f64> {
    let mut w = pole.to_vec();
    w[0] -= 1.0;
    let wn = dot(&w, &w);
    if wn < 1e-30 {
        return v.to_vec();
    }
    let c = 2.0 * dot(&w, v) / wn;
    v.iter().zip(&w).map(|(a, b)| a - c * b).collect()
}

/// Stereographic projection of points on `S^3` from `pole` onto `R^3`.
pub fn stereographic_projection(x: &RealPointSet, pole: &RealPoint) -> Result<Vec<[f64; 3]>> {
    if pole.sphere_dim() != 3 || x.sphere_dim().is_some_and(|m| m != 3) {
        return Err(Error::Dimension("stereographic projection is defined for S^3".into()));
    }
    x.iter()
        .map(|p| {
            let r = reflect_to_e1(pole.coords(), p.coords());
            let denom = 1.0 - r[0];
            if denom < 1e-12 {
                return Err(domain("point coincides with the projection pole"));
            }
            Ok([r[1] / denom, r[2] / denom, r[3] / denom])
        })
        .collect()
}

/// Inverse of [`stereographic_projection`].
pub fn inverse_stereographic(y: [f64; 3], pole: &RealPoint) -> RealPoint {
    let s = y.iter().map(|v| v * v).sum::<f64>();
    let r = [(s - 1.0) / (s + 1.0), 2.0 * y[0] / (s + 1.0), 2.0 * y[1] / (s + 1.0), 2.0 * y[2] / (s + 1.0)];
    RealPoint::from_unchecked(reflect_to_e1(pole.coords(), &r))
}

pub fn write_sorted_inner_products_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "rank,inner_product")?;
    for (k, v) in values.iter().enumerate() {
        writeln!(f, "{},{:.17e}", k + 1, v)?;
    }
    Ok(())
}

pub fn write_stereographic_csv(path: &Path, coords: &[[f64; 3]]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "x,y,z")?;
    for c in coords {
        writeln!(f, "{:.17e},{:.17e},{:.17e}", c[0], c[1], c[2])?;
    }
    Ok(())
}

pub fn write_covering_csv(path: &Path, estimate: &CoveringEstimate) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "rank,local_max_distance")?;
    for (k, v) in estimate.local_maxima.iter().enumerate() {
        writeln!(f, "{},{:.17e}", k + 1, v)?;
    }
    Ok(())
}
