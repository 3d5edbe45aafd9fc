//! Computing spherical t-designs on `S^m`.
//!
//! [`solve_feasibility`] drives `V_{t,N,ψ}` to zero with L-BFGS over the
//! spherical angles of the free points, then refines the result on the moment
//! equations. [`find_design`] runs it from several starts and keeps the
//! converged configuration with the smallest mesh ratio.

use std::io::Write;
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::criteria::{is_spherical_design, pair_gradient, pair_sum, DesignReport, Flat, DEFAULT_DESIGN_TOL};
use crate::error::{Error, Result};
use crate::lbfgs::{self, LbfgsOptions};
use crate::metrics::{mesh_ratio, CoveringOptions, MetricsReport};
use crate::ortho_poly::{design_lower_bound, ZonalKernel};
use crate::polish::{polish, MomentSystem};
use crate::qmc::{kronecker_sphere, uniform_sphere_point};
use crate::sphere::{angles_pullback, angles_to_coords, point_to_angles, symmetrize, RealPoint, RealPointSet, UNIT_TOL};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitStrategy {
    /// Normalized Gaussian vectors.
    RandomUniform,
    /// A randomly shifted Kronecker lattice pushed to the sphere.
    SpiralLike,
    /// Points read from a file for the first start; later starts are random.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub t: usize,
    /// Sphere dimension.
    pub m: usize,
    /// Number of points.
    pub n: usize,
    pub symmetric: bool,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Threshold on `max_ℓ W_ℓ / N²`.
    pub feasibility_tol: f64,
    pub seed: u64,
    pub init_strategy: InitStrategy,
    pub lbfgs_memory: usize,
    /// Refine near-designs on the moment equations after L-BFGS.
    pub polish: bool,
    /// If set, convergence also requires the max-norm of the monomial moment
    /// residuals (degree `1..=t`) to be at most this.
    pub moment_tol: Option<f64>,
    pub covering: CoveringOptions,
}

impl OptimizerConfig {
    pub fn new(t: usize, m: usize, n: usize) -> Self {
        Self {
            t,
            m,
            n,
            symmetric: false,
            restarts: 1,
            max_iterations: 100_000,
            feasibility_tol: DEFAULT_DESIGN_TOL,
            seed: 0,
            init_strategy: InitStrategy::RandomUniform,
            lbfgs_memory: 20,
            polish: true,
            moment_tol: None,
            covering: CoveringOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.t < 1 {
            return fail("degree t must be ≥ 1".into());
        }
        if self.m < 2 {
            return fail("sphere dimension m must be ≥ 2".into());
        }
        if self.n < 2 {
            return fail("need at least 2 points".into());
        }
        if self.symmetric && self.n % 2 != 0 {
            return fail(format!("symmetric configurations need an even N, got {}", self.n));
        }
        if self.restarts < 1 {
            return fail("restarts must be ≥ 1".into());
        }
        if !(self.feasibility_tol > 0.0) {
            return fail("feasibility tolerance must be positive".into());
        }
        Ok(())
    }

    fn warn_if_small(&self) {
        if let Ok(bound) = design_lower_bound(self.m, self.t) {
            if (self.n as u64) < bound {
                warn!(
                    "N = {} is below the lower bound {} for {}-designs on S^{}; no design exists",
                    self.n, bound, self.t, self.m
                );
            }
        }
    }
}

/// Outcome of one feasibility solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub points: RealPointSet,
    pub final_v: f64,
    pub per_degree_max: f64,
    /// Max-norm of the monomial moment residuals if the refinement ran,
    /// otherwise infinite.
    pub moment_residual: f64,
    /// L-BFGS iterations.
    pub iterations: usize,
    pub converged: bool,
    pub mesh_ratio: f64,
    pub metrics: MetricsReport,
    /// `V` after every accepted L-BFGS step.
    pub v_history: Vec<f64>,
}

/// Starting points for restart `restart`; the same config and restart index
/// always give the same points.
pub fn initial_configuration_for_restart(cfg: &OptimizerConfig, restart: usize) -> Result<RealPointSet> {
    cfg.validate()?;
    let dim = cfg.m + 1;
    let count = if cfg.symmetric { cfg.n / 2 } else { cfg.n };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let pts: Vec<RealPoint> = match (&cfg.init_strategy, restart) {
        (InitStrategy::File(path), 0) => return initial_from_file(cfg, path),
        (InitStrategy::SpiralLike, _) => {
            let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            kronecker_sphere(count, dim, &shift)
                .chunks_exact(dim)
                .map(|c| RealPoint::from_unchecked(c.to_vec()))
                .collect()
        }
        _ => (0..count).map(|_| RealPoint::from_unchecked(uniform_sphere_point(&mut rng, dim))).collect(),
    };
    let set = RealPointSet::new(pts)?;
    Ok(if cfg.symmetric { symmetrize(&set) } else { set })
}

/// Starting points for the first restart.
pub fn initial_configuration(cfg: &OptimizerConfig) -> Result<RealPointSet> {
    initial_configuration_for_restart(cfg, 0)
}

fn initial_from_file(cfg: &OptimizerConfig, path: &Path) -> Result<RealPointSet> {
    let x = crate::sdf::read_real(path)?;
    if x.sphere_dim() != Some(cfg.m) {
        return Err(Error::Dimension(format!("{} holds points on S^{:?}, expected S^{}", path.display(), x.sphere_dim(), cfg.m)));
    }
    if cfg.symmetric {
        if x.is_symmetric() && x.len() == cfg.n {
            return Ok(x);
        }
        if x.len() == cfg.n / 2 {
            return Ok(symmetrize(&x));
        }
    } else if x.len() == cfg.n {
        return Ok(x);
    }
    Err(Error::Config(format!("{} holds {} points, config asks for N = {}", path.display(), x.len(), cfg.n)))
}

/// Rotates the points so that point `i < m` lies in `span{e_1, …, e_{i+1}}`
/// with a positive last coordinate there; the remaining coordinates are set to
/// exactly zero.
pub fn rotation_normalize(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let Some(dim) = points.first().map(Vec::len) else {
        return Vec::new();
    };
    let k = points.len().min(dim - 1);
    // Square matrix: the first k points, padded with the identity.
    let a = DMatrix::from_fn(dim, dim, |r, c| if c < k { points[c][r] } else if r == c { 1.0 } else { 0.0 });
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let qt = q.transpose();
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut y: Vec<f64> = (0..dim).map(|row| (0..dim).map(|c| qt[(row, c)] * p[c]).sum()).collect();
            if i < k {
                y[i + 1..].fill(0.0);
            }
            let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            y.iter_mut().for_each(|v| *v /= n);
            y
        })
        .collect()
}

/// Free-angle layout: point `i` owns `min(i, m)` angles, trailing angles are 0.
struct Layout {
    m: usize,
    n: usize,
    offsets: Vec<usize>,
}

impl Layout {
    fn new(m: usize, n: usize) -> Self {
        let mut offsets = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for i in 0..n {
            offsets.push(acc);
            acc += i.min(m);
        }
        offsets.push(acc);
        Self { m, n, offsets }
    }

    fn free(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    fn len(&self) -> usize {
        self.offsets[self.n]
    }

    fn pack(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut theta = vec![0.0; self.len()];
        for (i, p) in points.iter().enumerate() {
            let phi = point_to_angles(&RealPoint::from_unchecked(p.clone()))?;
            let f = self.free(i);
            theta[self.offsets[i]..self.offsets[i] + f].copy_from_slice(&phi.as_slice()[..f]);
        }
        Ok(theta)
    }

    fn unpack_into(&self, theta: &[f64], flat: &mut [f64], phi: &mut [f64]) {
        let dim = self.m + 1;
        for i in 0..self.n {
            let f = self.free(i);
            phi.fill(0.0);
            phi[..f].copy_from_slice(&theta[self.offsets[i]..self.offsets[i] + f]);
            angles_to_coords(phi, &mut flat[i * dim..(i + 1) * dim]);
        }
    }
}

/// `V` and its angle gradient for the free generators.
struct Objective {
    layout: Layout,
    kernel: ZonalKernel,
    /// `V = scale · Σ ψ`, gradient rows `2·scale · Σ ψ' x_j`.
    scale: f64,
}

impl Objective {
    fn coords(&self, theta: &[f64]) -> Flat {
        let dim = self.layout.m + 1;
        let mut data = vec![0.0; self.layout.n * dim];
        let mut phi = vec![0.0; self.layout.m];
        self.layout.unpack_into(theta, &mut data, &mut phi);
        Flat { n: self.layout.n, dim, data }
    }

    fn value_of(&self, pts: &[Vec<f64>]) -> f64 {
        let dim = self.layout.m + 1;
        let flat = Flat { n: pts.len(), dim, data: pts.concat() };
        self.scale * pair_sum(&flat, |u| self.kernel.eval(u).0)
    }

    fn value_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let flat = self.coords(theta);
        let v = self.scale * pair_sum(&flat, |u| self.kernel.eval(u).0);
        let g = pair_gradient(&flat, 2.0 * self.scale, |u| self.kernel.eval(u).1);
        let dim = flat.dim;
        let mut phi = vec![0.0; self.layout.m];
        let mut pulled = vec![0.0; self.layout.m];
        for i in 0..self.layout.n {
            let f = self.layout.free(i);
            if f == 0 {
                continue;
            }
            let off = self.layout.offsets[i];
            phi.fill(0.0);
            phi[..f].copy_from_slice(&theta[off..off + f]);
            angles_pullback(&phi, &g[i * dim..(i + 1) * dim], &mut pulled);
            grad[off..off + f].copy_from_slice(&pulled[..f]);
        }
        v
    }
}

/// `V` at which L-BFGS first hands over to the moment refinement.
const SWITCH_V: f64 = 1e-9;
/// Largest `max_ℓ W_ℓ/N²` at which the moment refinement is attempted.
const POLISH_ENTRY: f64 = 1e-5;
/// Moment residual (max-norm) regarded as fully refined.
const MOMENT_FLOOR: f64 = 1e-14;
/// Relative rounding level of computed `V`, in units of `ψ(1)`.
const V_ROUNDING: f64 = 8.0 * f64::EPSILON;
/// Largest Jacobian (rows × columns) the refinement will factor.
const POLISH_MAX_ENTRIES: usize = 1_500_000;
const POLISH_MAX_ITER: usize = 60;
/// Iterations over which a relative decrease below `STALL_RTOL` counts as a stall.
const STALL_WINDOW: usize = 500;
const STALL_RTOL: f64 = 1e-9;

fn polish_is_affordable(m: usize, t: usize, ng: usize, symmetric: bool) -> bool {
    let rows = MomentSystem::count(m + 1, t, symmetric);
    rows.saturating_mul(ng * m) <= POLISH_MAX_ENTRIES
}

fn assemble(gens: Vec<Vec<f64>>, symmetric: bool) -> Result<RealPointSet> {
    let set = RealPointSet::new(gens.into_iter().map(RealPoint::from_unchecked).collect())?;
    Ok(if symmetric { symmetrize(&set) } else { set })
}

/// Runs L-BFGS on `V` from `x0`, then the moment refinement if the result is
/// close to a design. Non-convergence is reported in the result.
pub fn solve_feasibility(x0: &RealPointSet, cfg: &OptimizerConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if x0.sphere_dim() != Some(cfg.m) {
        return Err(Error::Dimension(format!("start points lie on S^{:?}, config says S^{}", x0.sphere_dim(), cfg.m)));
    }
    if x0.len() != cfg.n {
        return Err(Error::Config(format!("start has {} points, config says N = {}", x0.len(), cfg.n)));
    }
    let symmetric = cfg.symmetric;
    if symmetric && !x0.is_symmetric() {
        return Err(Error::Config("symmetric solve needs an antipodal start (generators then antipodes)".into()));
    }
    let (t, m) = (cfg.t, cfg.m);
    let gens: Vec<Vec<f64>> = if symmetric { x0.generators() } else { x0.points() }
        .iter()
        .map(|p| p.coords().to_vec())
        .collect();
    let ng = gens.len();
    let gens = rotation_normalize(&gens);
    let layout = Layout::new(m, ng);
    let theta0 = layout.pack(&gens)?;
    // For antipodal sets, V = ng⁻² Σ_{generators} ψ_e with the even kernel ψ_e.
    let kernel = if symmetric { ZonalKernel::symmetric(t, m)? } else { ZonalKernel::new(t, m)? };
    let obj = Objective { layout, kernel, scale: 1.0 / (ng * ng) as f64 };

    let certify_level = cfg.feasibility_tol * (m + 1) as f64;
    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut theta = theta0;
    let moments = (cfg.polish && polish_is_affordable(m, t, ng, symmetric)).then(|| MomentSystem::new(m + 1, t, symmetric));
    // Phase 1 hands over to the moment refinement early; if that does not
    // finish the job, phase 2 continues L-BFGS down to the certifying level.
    let targets: &[f64] = if moments.is_some() { &[SWITCH_V, 0.0] } else { &[0.0] };
    let mut best: Option<(RealPointSet, DesignReport, f64)> = None;
    for &switch in targets {
        let target = certify_level.max(switch);
        let outcome = run_lbfgs(&obj, theta.clone(), target, cfg.max_iterations - iterations, cfg.lbfgs_memory, iterations);
        debug!("L-BFGS stop {:?} after {} iterations, V = {:.3e}", outcome.stop, outcome.iterations, outcome.f);
        iterations += outcome.iterations;
        if history.is_empty() {
            history = outcome.history;
        } else {
            history.extend_from_slice(&outcome.history[1..]);
        }
        theta = outcome.x;
        let flat = obj.coords(&theta);
        let gens: Vec<Vec<f64>> = (0..flat.n).map(|i| flat.row(i).to_vec()).collect();
        let gens_before = gens.clone();
        let points = assemble(gens.clone(), symmetric)?;
        let report = is_spherical_design(&points, t, cfg.feasibility_tol)?;
        let mut candidate = (points, report, f64::INFINITY);
        if let Some(sys) = moments.as_ref().filter(|_| candidate.1.per_degree_max() <= POLISH_ENTRY) {
            let refined = polish(sys, gens, POLISH_MAX_ITER);
            debug!(
                "moment refinement: residual {:.3e} -> {:.3e} in {} steps",
                refined.initial_residual, refined.final_residual, refined.iterations
            );
            // The refinement is kept only if, as a whole, it does not raise V
            // beyond rounding.
            let slack = V_ROUNDING * obj.kernel.eval(1.0).0.abs().max(1.0);
            let polished = rotation_normalize(&refined.points);
            if obj.value_of(&polished) <= obj.value_of(&gens_before) + slack {
                let points = assemble(polished, symmetric)?;
                let report = is_spherical_design(&points, t, cfg.feasibility_tol)?;
                if report.per_degree_max() <= candidate.1.per_degree_max().max(cfg.feasibility_tol) {
                    let residual = sys.max_residual(&points_coords(&points, symmetric));
                    candidate = (points, report, residual);
                }
            }
        }
        let finished = candidate.1.is_design && (moments.is_none() || candidate.2 <= MOMENT_FLOOR);
        let better = best.as_ref().is_none_or(|b| rank(&candidate) < rank(b));
        if better {
            best = Some(candidate);
        }
        if finished || iterations >= cfg.max_iterations {
            break;
        }
    }
    let (points, report, residual) = best.expect("at least one phase ran");
    let moments_ok = cfg.moment_tol.is_none_or(|tol| {
        let r = if residual.is_finite() { residual } else { MomentSystem::new(m + 1, t, false).max_residual(&points_coords(&points, false)) };
        r <= tol
    });
    let metrics = mesh_ratio(&points, &cfg.covering)?;
    Ok(SolveResult {
        final_v: report.v,
        per_degree_max: report.per_degree_max(),
        moment_residual: residual,
        iterations,
        converged: report.is_design && moments_ok,
        mesh_ratio: metrics.mesh_ratio,
        metrics,
        points,
        v_history: history,
    })
}

/// Orders phase results: designs first, then by moment residual, then by
/// `max_ℓ W_ℓ/N²`.
fn rank(c: &(RealPointSet, DesignReport, f64)) -> (bool, f64, f64) {
    (!c.1.is_design, if c.1.is_design { c.2 } else { 0.0 }, c.1.per_degree_max())
}

fn points_coords(x: &RealPointSet, generators_only: bool) -> Vec<Vec<f64>> {
    let pts = if generators_only { x.generators() } else { x.points() };
    pts.iter().map(|p| p.coords().to_vec()).collect()
}

fn run_lbfgs(obj: &Objective, theta: Vec<f64>, target: f64, budget: usize, memory: usize, offset: usize) -> lbfgs::LbfgsOutcome {
    let opts = LbfgsOptions { memory, max_iterations: budget, ..LbfgsOptions::default() };
    let mut recent: Vec<f64> = Vec::new();
    lbfgs::minimize(
        |th, g| obj.value_grad(th, g),
        theta,
        &opts,
        |it, th, v| {
            let flat = obj.coords(th);
            for i in 0..flat.n {
                let norm = flat.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() <= UNIT_TOL, "point {i} left the sphere at iteration {}", offset + it);
            }
            recent.push(v);
            if v <= target {
                return true;
            }
            if recent.len() > STALL_WINDOW {
                let old = recent[recent.len() - 1 - STALL_WINDOW];
                if old - v <= STALL_RTOL * old.abs() {
                    debug!("stalled at V = {v:.3e}");
                    return true;
                }
            }
            false
        },
    )
}

/// One row of the multistart log.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub restart: usize,
    pub iterations: usize,
    pub final_v: f64,
    pub per_degree_max: f64,
    pub converged: bool,
    pub separation: f64,
    pub covering: f64,
    pub mesh_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct DesignSearch {
    /// The selected run, or the run with the smallest `V` if none converged.
    pub best: SolveResult,
    pub best_restart: usize,
    pub candidates: Vec<Candidate>,
}

impl DesignSearch {
    pub fn succeeded(&self) -> bool {
        self.best.converged
    }

    /// The selected result, or an error naming the best `V` reached.
    pub fn into_result(self) -> Result<SolveResult> {
        if self.best.converged {
            Ok(self.best)
        } else {
            Err(Error::Verification(format!(
                "no restart converged; best V = {:.3e}, max W_ℓ/N² = {:.3e}",
                self.best.final_v, self.best.per_degree_max
            )))
        }
    }
}

/// Multistart search: solves from `cfg.restarts` starts and keeps the
/// converged result with the smallest mesh ratio (ties go to the earlier
/// restart).
pub fn find_design(cfg: &OptimizerConfig) -> Result<DesignSearch> {
    cfg.validate()?;
    cfg.warn_if_small();
    let runs: Vec<SolveResult> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let x0 = initial_configuration_for_restart(cfg, k)?;
            let r = solve_feasibility(&x0, cfg)?;
            info!(
                "restart {k}: V = {:.3e}, max W/N² = {:.3e}, mesh ratio {:.4}, converged {}",
                r.final_v, r.per_degree_max, r.mesh_ratio, r.converged
            );
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let candidates: Vec<Candidate> = runs
        .iter()
        .enumerate()
        .map(|(k, r)| Candidate {
            restart: k,
            iterations: r.iterations,
            final_v: r.final_v,
            per_degree_max: r.per_degree_max,
            converged: r.converged,
            separation: r.metrics.separation,
            covering: r.metrics.covering,
            mesh_ratio: r.mesh_ratio,
        })
        .collect();
    let pick = |key: fn(&SolveResult) -> f64, only_converged: bool| {
        runs.iter()
            .enumerate()
            .filter(|(_, r)| !only_converged || r.converged)
            .min_by(|(i, a), (j, b)| key(a).total_cmp(&key(b)).then(i.cmp(j)))
            .map(|(i, _)| i)
    };
    let best_restart = pick(|r| r.mesh_ratio, true)
        .or_else(|| pick(|r| r.per_degree_max, false))
        .expect("at least one restart");
    let best = runs.into_iter().nth(best_restart).expect("index in range");
    Ok(DesignSearch { best, best_restart, candidates })
}

pub fn write_restart_log(path: &Path, candidates: &[Candidate]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "restart,iterations,final_V,separation,covering,mesh_ratio")?;
    for c in candidates {
        writeln!(
            f,
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e}",
            c.restart, c.iterations, c.final_v, c.separation, c.covering, c.mesh_ratio
        )?;
    }
    Ok(())
}
