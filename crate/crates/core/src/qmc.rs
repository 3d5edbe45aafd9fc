//! Point generators on `S^m`: scrambled Sobol, shifted Kronecker lattices and
//! i.i.d. uniform samples, all through the Gaussian map `y ↦ y/‖y‖`.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

/// Largest ambient dimension supported by the Sobol generator.
pub const MAX_SOBOL_DIM: usize = sobol_burley::NUM_DIMENSIONS as usize;

fn standard_normal() -> Normal {
    Normal::standard()
}

fn normalize_into(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

/// Length of one scrambled Sobol block; the generator supports no more.
pub const SOBOL_BLOCK: u32 = 1 << 16;

/// Scramble seed of block `block > 0`: splitmix64 of `(seed, block)`.
fn block_seed(seed: u32, block: u32) -> u32 {
    let mut z = ((seed as u64) << 32 | block as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (z ^ (z >> 31)) as u32
}

/// Owen-scrambled Sobol points in `[0,1)^dim`, offset by half a grid cell
/// so the inverse normal CDF stays finite. Indices past [`SOBOL_BLOCK`]
/// continue in independently scrambled blocks of that length.
pub fn sobol_unit_cube(index: u32, dim: usize, seed: u32, out: &mut [f64]) {
    assert!(dim <= MAX_SOBOL_DIM, "Sobol generator supports at most {MAX_SOBOL_DIM} dimensions");
    let block = index / SOBOL_BLOCK;
    let local = index % SOBOL_BLOCK;
    let seed = if block == 0 { seed } else { block_seed(seed, block) };
    for (k, o) in out.iter_mut().enumerate().take(dim) {
        let u = sobol_burley::sample(local, k as u32, seed) as f64;
        *o = u + 0.5 / (1u64 << 24) as f64;
    }
}

/// `count` scrambled-Sobol points on `S^{dim−1}`, row-major.
pub fn sobol_sphere(count: usize, dim: usize, seed: u32) -> Vec<f64> {
    let normal = standard_normal();
    let mut out = vec![0.0; count * dim];
    let mut u = vec![0.0; dim];
    for (i, row) in out.chunks_exact_mut(dim).enumerate() {
        sobol_unit_cube(i as u32, dim, seed, &mut u);
        for (r, &ui) in row.iter_mut().zip(&u) {
            *r = normal.inverse_cdf(ui);
        }
        if !normalize_into(row) {
            row.fill(0.0);
            row[0] = 1.0;
        }
    }
    out
}

/// Generalized golden-ratio constant: the positive root of `x^{k+1} = x + 1`.
fn kronecker_root(k: usize) -> f64 {
    let mut x = 2.0f64;
    for _ in 0..100 {
        x = (1.0 + x).powf(1.0 / (k as f64 + 1.0));
    }
    x
}

/// `count` points of the additive-recurrence lattice `frac(s + i·α)` with
/// `α_j = φ_k^{−j}`, mapped to `S^{dim−1}`.
pub fn kronecker_sphere(count: usize, dim: usize, shift: &[f64]) -> Vec<f64> {
    let phi = kronecker_root(dim);
    let alpha: Vec<f64> = (1..=dim).map(|j| phi.powi(-(j as i32))).collect();
    let normal = standard_normal();
    let mut out = vec![0.0; count * dim];
    for (i, row) in out.chunks_exact_mut(dim).enumerate() {
        for (j, r) in row.iter_mut().enumerate() {
            let u = (shift.get(j).copied().unwrap_or(0.5) + (i as f64 + 1.0) * alpha[j]).fract();
            let u = u.clamp(1e-12, 1.0 - 1e-12);
            *r = normal.inverse_cdf(u);
        }
        if !normalize_into(row) {
            row.fill(0.0);
            row[0] = 1.0;
        }
    }
    out
}

/// One uniformly distributed point on `S^{dim−1}`.
pub fn uniform_sphere_point(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if normalize_into(&mut v) {
            return v;
        }
    }
}
