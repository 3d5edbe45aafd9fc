//! The `csdesign` command line.
//!
//! Every subcommand writes a machine-readable result (a point file or a CSV)
//! and prints a short summary. Exit codes: 0 on success, 1 when a point set
//! fails verification, 2 on usage, input or I/O errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bridge::{demo_error_curve, map_design, parse_complex_vector, tight_design, write_demo_csv_file, QuadratureRule};
use crate::criteria::{is_spherical_design, verify_triangular_design, VerifyMode, DEFAULT_DESIGN_TOL};
use crate::error::{Error, Result};
use crate::metrics::{
    covering_estimate, separation, sorted_inner_products, stereographic_projection, write_covering_csv,
    write_sorted_inner_products_csv, write_stereographic_csv, CoveringOptions,
};
use crate::optimizer::{find_design, write_restart_log, InitStrategy, OptimizerConfig};
use crate::ortho_poly::point_counts;
use crate::sdf::{self, Points};
use crate::sphere::{real_set_to_complex, ComplexPointSet, RealPoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Default tolerance of `verify --complex`.
pub const COMPLEX_VERIFY_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "csdesign", version, about = "Triangular complex spherical t-designs on Ω^d")]
pub struct Cli {
    /// Worker threads for the parallel loops (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a real design on S^(2d−1) by multistart optimization.
    Gen(GenArgs),
    /// Check exactness of a point file.
    Verify(VerifyArgs),
    /// Separation, covering radius and mesh ratio of a point file.
    Metrics(MetricsArgs),
    /// Map a real design on S^(2d−1) to a complex rule on Ω^d.
    Map(MapArgs),
    /// Write a tight design (t = 1, 2, 3).
    Tight(TightArgs),
    /// Integrate 1/|z − x0|² with one or more rules on Ω^2.
    Integrate(IntegrateArgs),
    /// Node counts N*, N̂ and N̄ for designs on S^(2d−1).
    Counts(CountsArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long = "complex-dim")]
    pub complex_dim: usize,
    #[arg(long)]
    pub degree: usize,
    /// Number of points (default: N̄ for symmetric odd-degree runs, N̂ otherwise).
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub symmetric: bool,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Acceptance threshold on max W_ℓ/N².
    #[arg(long, default_value_t = DEFAULT_DESIGN_TOL)]
    pub tol: f64,
    #[arg(long = "max-iterations", default_value_t = 100_000)]
    pub max_iterations: usize,
    /// Starting configuration for the first restart.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-restart CSV (default: OUT.restarts.csv).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub degree: usize,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Check triangular exactness on Ω^d instead of the real design property.
    #[arg(long)]
    pub complex: bool,
    /// Report CSV (default: FILE.verify.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub file: PathBuf,
    /// Probe count of the covering estimator.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Report CSV (default: FILE.metrics.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sorted pairwise inner products as CSV.
    #[arg(long = "inner-products")]
    pub inner_products: Option<PathBuf>,
    /// Local maxima of the distance-to-nearest-node function as CSV.
    #[arg(long = "covering-maxima")]
    pub covering_maxima: Option<PathBuf>,
    /// Stereographic projection (points on S^3 only) as CSV.
    #[arg(long)]
    pub stereographic: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    pub file: PathBuf,
    /// Design degree (default: taken from the file header).
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TightArgs {
    #[arg(long = "complex-dim")]
    pub complex_dim: usize,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub degree: u8,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// Rule files on Ω^2 (or real designs on S^3); degrees come from their headers.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Singular point x0 ∈ C^2 with |x0| > 1, as "a+bi,c+di".
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    /// Error CSV (default: FIRST_FILE.integrate.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CountsArgs {
    #[arg(long = "complex-dim")]
    pub complex_dim: usize,
    #[arg(long)]
    pub degree: usize,
    /// Also write the counts as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code. The summary goes to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    if cli.threads > 0 {
        // only the first call in a process can set the global pool
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            log::debug!("thread pool already initialised: {e}");
        }
    }
    let result = match cli.command {
        Command::Gen(a) => gen(&a, out),
        Command::Verify(a) => verify(&a, out),
        Command::Metrics(a) => metrics(&a, out),
        Command::Map(a) => map(&a, out),
        Command::Tight(a) => tight(&a, out),
        Command::Integrate(a) => integrate(&a, out),
        Command::Counts(a) => counts(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Verification(_) => EXIT_VERIFY,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_key_values(path: &Path, rows: &[(&str, String)]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "key,value")?;
    for (k, v) in rows {
        writeln!(f, "{k},{v}")?;
    }
    f.flush()?;
    Ok(())
}

fn complex_view(file: &sdf::SdfFile) -> Result<ComplexPointSet> {
    match &file.points {
        Points::Complex(z) => Ok(z.clone()),
        Points::Real(x) => real_set_to_complex(x),
    }
}

fn gen(a: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    let d = a.complex_dim;
    let counts = point_counts(d, a.degree)?;
    let n = match (a.points, counts.n_bar) {
        (Some(n), _) => n,
        (None, Some(n_bar)) if a.symmetric => n_bar as usize,
        (None, _) => counts.n_hat as usize,
    };
    let mut cfg = OptimizerConfig::new(a.degree, 2 * d - 1, n);
    cfg.symmetric = a.symmetric;
    cfg.restarts = a.restarts;
    cfg.seed = a.seed;
    cfg.feasibility_tol = a.tol;
    cfg.max_iterations = a.max_iterations;
    if let Some(p) = &a.init {
        cfg.init_strategy = InitStrategy::File(p.clone());
    }
    let search = find_design(&cfg)?;
    let log_path = a.log.clone().unwrap_or_else(|| with_suffix(&a.out, ".restarts.csv"));
    write_restart_log(&log_path, &search.candidates)?;
    let best = &search.best;
    sdf::write_real(&a.out, &best.points, Some(a.degree))?;
    let converged = search.candidates.iter().filter(|c| c.converged).count();
    writeln!(out, "gen: d={d} (S^{}), t={}, N={n}, symmetric={}", 2 * d - 1, a.degree, a.symmetric)?;
    writeln!(out, "  restarts converged: {converged}/{}", search.candidates.len())?;
    writeln!(out, "  best restart: {}", search.best_restart)?;
    writeln!(out, "  V = {:.3e}, max W_l/N^2 = {:.3e}", best.final_v, best.per_degree_max)?;
    writeln!(
        out,
        "  separation = {:.6}, covering = {:.6} (±{:.1e}), mesh ratio = {:.6}",
        best.metrics.separation, best.metrics.covering, best.metrics.covering_uncertainty, best.mesh_ratio
    )?;
    writeln!(out, "  wrote {} and {}", a.out.display(), log_path.display())?;
    if best.converged {
        Ok(EXIT_OK)
    } else {
        writeln!(out, "  no restart reached the tolerance {:.1e}", a.tol)?;
        Ok(EXIT_VERIFY)
    }
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let file = sdf::read(&a.file)?;
    let report_path = a.out.clone().unwrap_or_else(|| with_suffix(&a.file, ".verify.csv"));
    let passed = if a.complex {
        let tol = a.tol.unwrap_or(COMPLEX_VERIFY_TOL);
        let z = complex_view(&file)?;
        let r = verify_triangular_design(&z, a.degree, tol, VerifyMode::Full)?;
        let worst = r.worst.as_ref().map_or(String::new(), |(al, be)| format!("{al:?};{be:?}").replace(',', " "));
        write_key_values(
            &report_path,
            &[
                ("mode", "complex".into()),
                ("degree", r.t.to_string()),
                ("npoints", r.n.to_string()),
                ("tolerance", format!("{:.17e}", r.tolerance)),
                ("max_error", format!("{:.17e}", r.max_error)),
                ("monomials_checked", r.monomials_checked.to_string()),
                ("worst", worst),
                ("passed", r.passed.to_string()),
            ],
        )?;
        writeln!(out, "verify --complex: N={}, t={}, {} monomials", r.n, r.t, r.monomials_checked)?;
        writeln!(out, "  max monomial error = {:.3e} (tol {:.1e})", r.max_error, r.tolerance)?;
        r.passed
    } else {
        let tol = a.tol.unwrap_or(DEFAULT_DESIGN_TOL);
        let x = file.to_real();
        let r = is_spherical_design(&x, a.degree, tol)?;
        let n2 = (r.n * r.n) as f64;
        let mut rows = vec![
            ("mode", "real".to_string()),
            ("degree", r.t.to_string()),
            ("npoints", r.n.to_string()),
            ("tolerance", format!("{:.17e}", r.tolerance)),
            ("v", format!("{:.17e}", r.v)),
            ("per_degree_max", format!("{:.17e}", r.per_degree_max())),
            ("passed", r.is_design.to_string()),
        ];
        let names: Vec<String> = (1..=r.t).map(|l| format!("w{l}_over_n2")).collect();
        for (name, w) in names.iter().zip(&r.per_degree) {
            rows.push((name, format!("{:.17e}", w / n2)));
        }
        write_key_values(&report_path, &rows)?;
        writeln!(out, "verify: N={}, t={}", r.n, r.t)?;
        writeln!(out, "  V = {:.3e}, max W_l/N^2 = {:.3e} (tol {:.1e})", r.v, r.per_degree_max(), r.tolerance)?;
        r.is_design
    };
    writeln!(out, "  {}; wrote {}", if passed { "PASSED" } else { "FAILED" }, report_path.display())?;
    Ok(if passed { EXIT_OK } else { EXIT_VERIFY })
}

fn metrics(a: &MetricsArgs, out: &mut dyn Write) -> Result<i32> {
    let x = sdf::read(&a.file)?.to_real();
    let opts = a.seeds.map_or_else(CoveringOptions::default, CoveringOptions::with_seeds);
    let sep = separation(&x)?;
    let cov = covering_estimate(&x, &opts)?;
    let ratio = 2.0 * cov.value / sep;
    let report_path = a.out.clone().unwrap_or_else(|| with_suffix(&a.file, ".metrics.csv"));
    write_key_values(
        &report_path,
        &[
            ("npoints", x.len().to_string()),
            ("separation", format!("{sep:.17e}")),
            ("covering", format!("{:.17e}", cov.value)),
            ("covering_uncertainty", format!("{:.17e}", cov.uncertainty)),
            ("mesh_ratio", format!("{ratio:.17e}")),
        ],
    )?;
    writeln!(out, "metrics: N={}", x.len())?;
    writeln!(out, "  separation = {sep:.6}")?;
    writeln!(out, "  covering   = {:.6} (±{:.1e})", cov.value, cov.uncertainty)?;
    writeln!(out, "  mesh ratio = {ratio:.6}")?;
    writeln!(out, "  wrote {}", report_path.display())?;
    if let Some(p) = &a.inner_products {
        write_sorted_inner_products_csv(p, &sorted_inner_products(&x)?)?;
        writeln!(out, "  wrote {}", p.display())?;
    }
    if let Some(p) = &a.covering_maxima {
        write_covering_csv(p, &cov)?;
        writeln!(out, "  wrote {}", p.display())?;
    }
    if let Some(p) = &a.stereographic {
        let dim = x.sphere_dim().unwrap_or(0);
        if dim != 3 {
            return Err(Error::Dimension(format!("stereographic projection needs points on S^3, got S^{dim}")));
        }
        // pole: the candidate direction farthest from its nearest node
        let candidates = (0..4)
            .map(|k| RealPoint::basis(3, k))
            .chain([RealPoint::normalized(vec![1.0, 2.0, 3.0, 5.0])?]);
        let nearest = |c: &RealPoint| x.iter().map(|p| p.dot(c)).fold(f64::NEG_INFINITY, f64::max);
        let pole = candidates
            .min_by(|a, b| nearest(a).total_cmp(&nearest(b)))
            .expect("nonempty candidate list");
        write_stereographic_csv(p, &stereographic_projection(&x, &pole)?)?;
        writeln!(out, "  wrote {}", p.display())?;
    }
    Ok(EXIT_OK)
}

fn map(a: &MapArgs, out: &mut dyn Write) -> Result<i32> {
    let file = sdf::read(&a.file)?;
    let t = a
        .degree
        .or(file.header.degree)
        .ok_or_else(|| Error::Config("degree missing: pass --degree or add a 'degree' header".into()))?;
    let rule = map_design(&file.to_real(), t)?;
    sdf::write_complex(&a.out, &rule.nodes, Some(t))?;
    writeln!(out, "map: N={}, d={}, t={t}", rule.len(), rule.complex_dim().unwrap_or(0))?;
    writeln!(out, "  max monomial error = {:.3e}", rule.report.max_error)?;
    writeln!(out, "  wrote {}", a.out.display())?;
    Ok(EXIT_OK)
}

fn tight(a: &TightArgs, out: &mut dyn Write) -> Result<i32> {
    let t = a.degree as usize;
    let rule = tight_design(a.complex_dim, t)?;
    sdf::write_complex(&a.out, &rule.nodes, Some(t))?;
    let g = rule.analytic.expect("tight designs carry their geometry");
    writeln!(out, "tight: d={}, t={t}, N={}", a.complex_dim, rule.len())?;
    writeln!(
        out,
        "  separation = {:.6}, covering = {:.6}, mesh ratio = {:.6}",
        g.separation, g.covering, g.mesh_ratio
    )?;
    writeln!(out, "  wrote {}", a.out.display())?;
    Ok(EXIT_OK)
}

fn load_rule(path: &Path) -> Result<QuadratureRule> {
    let file = sdf::read(path)?;
    let t = file
        .header
        .degree
        .ok_or_else(|| Error::Config(format!("{}: no 'degree' header", path.display())))?;
    QuadratureRule::from_nodes(complex_view(&file)?, t)
}

fn integrate(a: &IntegrateArgs, out: &mut dyn Write) -> Result<i32> {
    let x0 = parse_complex_vector(&a.x0)?;
    let rules = a.files.iter().map(|p| load_rule(p)).collect::<Result<Vec<_>>>()?;
    let rows = demo_error_curve(&rules, &x0)?;
    let path = a.out.clone().unwrap_or_else(|| with_suffix(&a.files[0], ".integrate.csv"));
    write_demo_csv_file(&path, &rows)?;
    let r2: f64 = x0.iter().map(|c| c.norm_sqr()).sum();
    writeln!(out, "integrate: f = 1/|z - x0|^2 on Ω^2, exact value {:.17e}", 1.0 / r2)?;
    for r in &rows {
        writeln!(out, "  t={:>3} N={:>6} abs_error={:.3e}", r.t, r.n, r.abs_error)?;
    }
    writeln!(out, "  wrote {}", path.display())?;
    Ok(EXIT_OK)
}

fn counts(a: &CountsArgs, out: &mut dyn Write) -> Result<i32> {
    let c = point_counts(a.complex_dim, a.degree)?;
    let n_bar = c.n_bar.map_or(String::new(), |v| v.to_string());
    writeln!(out, "counts: d={}, t={} (S^{})", a.complex_dim, a.degree, 2 * a.complex_dim - 1)?;
    writeln!(out, "  N* = {}", c.n_star)?;
    writeln!(out, "  N̂ = {}", c.n_hat)?;
    if let Some(v) = c.n_bar {
        writeln!(out, "  N̄ = {v}")?;
    }
    if let Some(p) = &a.out {
        let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
        writeln!(f, "d,t,n_star,n_hat,n_bar")?;
        writeln!(f, "{},{},{},{},{n_bar}", a.complex_dim, a.degree, c.n_star, c.n_hat)?;
        f.flush()?;
        writeln!(out, "  wrote {}", p.display())?;
    }
    Ok(EXIT_OK)
}
