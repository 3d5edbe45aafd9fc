//! Quadrature rules on `Ω^d` obtained from real designs on `S^{2d−1}`, the
//! analytic tight families, and the inverse-square-distance integration demo.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::criteria::{
    complex_monomial_integral, is_spherical_design, require_passed, verify_triangular_design, TriangularReport, VerifyMode,
    DEFAULT_DESIGN_TOL,
};
use crate::error::{domain, Error, Result};
use crate::sphere::{real_set_to_complex, ComplexPoint, ComplexPointSet, RealPoint, RealPointSet};
use crate::sum::ComplexKahanSum;

/// Tolerance of the monomial check attached to every rule.
pub const RULE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticMetrics {
    pub separation: f64,
    pub covering: f64,
    pub mesh_ratio: f64,
}

/// Equal-weight cubature on `Ω^d`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: ComplexPointSet,
    pub degree_claim: usize,
    pub report: TriangularReport,
    /// Exact geometry, known for the tight families.
    pub analytic: Option<AnalyticMetrics>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn complex_dim(&self) -> Option<usize> {
        self.nodes.complex_dim()
    }

    /// Wraps `nodes` after checking exactness up to `t`.
    pub fn from_nodes(nodes: ComplexPointSet, t: usize) -> Result<Self> {
        let report = verify_triangular_design(&nodes, t, RULE_TOL, VerifyMode::Full)?;
        require_passed(&report)?;
        Ok(Self { nodes, degree_claim: t, report, analytic: None })
    }
}

/// Turns a real t-design on `S^{2d−1}` into a triangular complex t-design on
/// `Ω^d`.
pub fn map_design(x: &RealPointSet, t: usize) -> Result<QuadratureRule> {
    match x.sphere_dim() {
        Some(m) if m % 2 == 1 => {}
        other => return Err(Error::Dimension(format!("need points on an odd-dimensional sphere S^(2d−1), got S^{other:?}"))),
    }
    let real = is_spherical_design(x, t, DEFAULT_DESIGN_TOL)?;
    if !real.is_design {
        return Err(Error::Verification(format!(
            "input is not a spherical {t}-design: max W_ℓ/N² = {:.3e} > {:.1e}",
            real.per_degree_max(),
            real.tolerance
        )));
    }
    QuadratureRule::from_nodes(real_set_to_complex(x)?, t)
}

/// Regular simplex with `n + 1` vertices on `S^{n−1}`: the centred standard
/// basis of `R^{n+1}` in the Helmert basis of the hyperplane `Σ x = 0`.
fn simplex(n: usize) -> Vec<RealPoint> {
    let scale = ((n + 1) as f64 / n as f64).sqrt();
    (0..=n)
        .map(|j| {
            let coords: Vec<f64> = (1..=n)
                .map(|k| {
                    // h_k = (1, …, 1, −k, 0, …) / sqrt(k(k+1)), with k leading ones
                    let norm = ((k * (k + 1)) as f64).sqrt();
                    let entry = if j < k {
                        1.0
                    } else if j == k {
                        -(k as f64)
                    } else {
                        0.0
                    };
                    scale * entry / norm
                })
                .collect();
            RealPoint::from_unchecked(coords)
        })
        .collect()
}

/// Tight designs on `Ω^d`: an antipodal pair (`t = 1`), the regular simplex
/// with `2d + 1` vertices (`t = 2`) and the cross-polytope with `4d` vertices
/// (`t = 3`), each with its exact geometry attached.
pub fn tight_design(d: usize, t: usize) -> Result<QuadratureRule> {
    if d < 1 {
        return Err(domain("complex dimension must be ≥ 1"));
    }
    let m = 2 * d - 1;
    let n = (2 * d) as f64;
    let (points, analytic) = match t {
        1 => {
            let e = RealPoint::basis(m, 0);
            let pts = vec![e.clone(), e.antipode()];
            (pts, AnalyticMetrics { separation: PI, covering: FRAC_PI_2, mesh_ratio: 1.0 })
        }
        2 => {
            let sep = (-1.0 / n).acos();
            let cov = (1.0 / n).acos();
            (simplex(2 * d), AnalyticMetrics { separation: sep, covering: cov, mesh_ratio: 2.0 * cov / sep })
        }
        3 => {
            let gens: Vec<RealPoint> = (0..=m).map(|k| RealPoint::basis(m, k)).collect();
            let mut pts = gens.clone();
            pts.extend(gens.iter().map(RealPoint::antipode));
            let cov = (1.0 / n.sqrt()).acos();
            (pts, AnalyticMetrics { separation: FRAC_PI_2, covering: cov, mesh_ratio: 4.0 * cov / PI })
        }
        _ => return Err(Error::Unsupported(format!("tight designs are available for t ∈ {{1, 2, 3}}, got {t}"))),
    };
    let symmetric = t != 2;
    let set = RealPointSet::new(points)?;
    let set = if symmetric { set.into_symmetric()? } else { set };
    let mut rule = QuadratureRule::from_nodes(real_set_to_complex(&set)?, t)?;
    rule.analytic = Some(analytic);
    Ok(rule)
}

/// Equal-weight average of `f` over the nodes.
pub fn integrate(rule: &QuadratureRule, f: impl Fn(&ComplexPoint) -> Complex64) -> Complex64 {
    let mut s = ComplexKahanSum::new();
    for p in rule.nodes.iter() {
        s.add(f(p));
    }
    s.value() / rule.len() as f64
}

/// Built-in integrands.
#[derive(Debug, Clone, PartialEq)]
pub enum Integrand {
    /// `1 / |z − x0|²`.
    InverseSquareDistance { x0: Vec<Complex64> },
    /// `z^α conj(z)^β`.
    Monomial { alpha: Vec<usize>, beta: Vec<usize> },
}

impl Integrand {
    pub fn eval(&self, z: &ComplexPoint) -> Complex64 {
        match self {
            Integrand::InverseSquareDistance { x0 } => {
                let r2: f64 = z.coords().iter().zip(x0).map(|(a, b)| (a - b).norm_sqr()).sum();
                Complex64::new(1.0 / r2, 0.0)
            }
            Integrand::Monomial { alpha, beta } => z
                .coords()
                .iter()
                .zip(alpha.iter().zip(beta))
                .map(|(c, (&a, &b))| c.powu(a as u32) * c.conj().powu(b as u32))
                .product(),
        }
    }

    /// Exact integral over `Ω^d` where one is known in closed form.
    pub fn exact(&self, d: usize) -> Result<Complex64> {
        match self {
            Integrand::InverseSquareDistance { x0 } => Ok(Complex64::new(inverse_square_exact(d, x0)?, 0.0)),
            Integrand::Monomial { alpha, beta } => {
                if alpha.len() != d || beta.len() != d {
                    return Err(Error::Dimension(format!("monomial exponents need {d} entries")));
                }
                Ok(complex_monomial_integral(d, alpha, beta))
            }
        }
    }
}

/// `∫_{Ω^2} |z − x0|^{−2} dμ = |x0|^{−2}` for `|x0| > 1`: the integrand is
/// harmonic on the ball of radius `|x0|` in `R^4`, so its sphere mean is its
/// value at the origin.
fn inverse_square_exact(d: usize, x0: &[Complex64]) -> Result<f64> {
    if d != 2 || x0.len() != 2 {
        return Err(Error::Dimension("the inverse-square-distance demo is defined on Ω^2 with x0 ∈ C^2".into()));
    }
    let r2: f64 = x0.iter().map(Complex64::norm_sqr).sum();
    if !(r2 > 1.0) {
        return Err(domain(format!("need |x0| > 1, got |x0| = {}", r2.sqrt())));
    }
    Ok(1.0 / r2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoRow {
    pub t: usize,
    pub n: usize,
    pub abs_error: f64,
}

/// Absolute error of every rule on `1/|z − x0|²` over `Ω^2`.
pub fn demo_error_curve(rules: &[QuadratureRule], x0: &[Complex64]) -> Result<Vec<DemoRow>> {
    let exact = inverse_square_exact(2, x0)?;
    let f = Integrand::InverseSquareDistance { x0: x0.to_vec() };
    rules
        .iter()
        .map(|rule| {
            if rule.complex_dim() != Some(2) {
                return Err(Error::Dimension("demo rules must live on Ω^2".into()));
            }
            let approx = integrate(rule, |z| f.eval(z));
            Ok(DemoRow { t: rule.degree_claim, n: rule.len(), abs_error: (approx - exact).norm() })
        })
        .collect()
}

pub fn write_demo_csv(out: &mut impl Write, rows: &[DemoRow]) -> Result<()> {
    writeln!(out, "t,N,abs_error")?;
    for r in rows {
        writeln!(out, "{},{},{:.17e}", r.t, r.n, r.abs_error)?;
    }
    Ok(())
}

pub fn write_demo_csv_file(path: &Path, rows: &[DemoRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_demo_csv(&mut f, rows)
}

/// Parses `"a+bi,c+di"` into a complex vector.
pub fn parse_complex_vector(s: &str) -> Result<Vec<Complex64>> {
    s.split(',')
        .map(|part| {
            let p = part.trim();
            p.parse::<Complex64>()
                .map_err(|e| domain(format!("cannot parse complex number '{p}': {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::node_average;
    use crate::metrics::{covering_estimate, mesh_ratio, separation, CoveringOptions};
    use crate::optimizer::{find_design, OptimizerConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cross_polytope_rule() {
        let rule = tight_design(2, 3).unwrap();
        assert_eq!(rule.len(), 8);
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        for expect in [[one, 0.0 * one], [i, 0.0 * one], [0.0 * one, one], [0.0 * one, i]] {
            assert!(rule.nodes.iter().any(|p| p.coords() == expect));
            assert!(rule.nodes.iter().any(|p| p.coords() == [-expect[0], -expect[1]]));
        }
        let a = rule.analytic.unwrap();
        assert!((a.mesh_ratio - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tight_families_match_their_analytic_geometry() {
        let opts = CoveringOptions::with_seeds(8192);
        for d in 2..=4 {
            for t in 1..=3 {
                let rule = tight_design(d, t).unwrap();
                let a = rule.analytic.unwrap();
                assert!((separation(&rule.nodes).unwrap() - a.separation).abs() < 1e-12, "d={d} t={t}");
                let c = covering_estimate(&rule.nodes, &opts).unwrap();
                assert!((c.value - a.covering).abs() < 1e-3, "d={d} t={t}: {} vs {}", c.value, a.covering);
            }
        }
        assert_eq!(tight_design(5, 1).unwrap().analytic.unwrap().mesh_ratio, 1.0);
        let a = tight_design(2, 2).unwrap().analytic.unwrap();
        assert!((a.mesh_ratio - 2.0 * 0.25f64.acos() / (-0.25f64).acos()).abs() < 1e-15);
        assert!(matches!(tight_design(2, 4), Err(Error::Unsupported(_))));
    }

    #[test]
    fn simplex_has_equal_inner_products() {
        for n in [2, 4, 6] {
            let s = simplex(n);
            for (i, p) in s.iter().enumerate() {
                assert!((p.dot(p) - 1.0).abs() < 1e-15);
                for q in &s[i + 1..] {
                    assert!((p.dot(q) + 1.0 / n as f64).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn integrate_examples() {
        for t in 1..=3 {
            let rule = tight_design(2, t).unwrap();
            assert!((integrate(&rule, |_| Complex64::new(1.0, 0.0)) - 1.0).norm() < 1e-15);
            assert!(integrate(&rule, |z| z.coords()[0]).norm() < 1e-12);
            if t >= 2 {
                assert!((integrate(&rule, |z| z.coords()[0] * z.coords()[0].conj()) - 0.5).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn triangular_two_design_passes_square_one_grid() {
        let rule = tight_design(3, 2).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let mut alpha = vec![0; 3];
                let mut beta = vec![0; 3];
                alpha[a] = 1;
                beta[b] = 1;
                for (al, be) in [(alpha.clone(), beta.clone()), (alpha.clone(), vec![0; 3]), (vec![0; 3], beta.clone())] {
                    let err = (node_average(&rule.nodes, &al, &be) - complex_monomial_integral(3, &al, &be)).norm();
                    assert!(err < 1e-14);
                }
            }
        }
    }

    #[test]
    fn map_design_accepts_designs_and_rejects_others() {
        let mut cfg = OptimizerConfig::new(5, 3, 28);
        cfg.symmetric = true;
        cfg.restarts = 2;
        cfg.covering = CoveringOptions::with_seeds(1024);
        let found = find_design(&cfg).unwrap().into_result().unwrap();
        let rule = map_design(&found.points, 5).unwrap();
        assert!(rule.report.passed);
        assert_eq!(rule.len(), 28);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = (0..28).map(|_| RealPoint::from_unchecked(crate::qmc::uniform_sphere_point(&mut rng, 4))).collect();
        let random = RealPointSet::new(pts).unwrap();
        assert!(matches!(map_design(&random, 5), Err(Error::Verification(_))));
        let odd = RealPointSet::new(vec![RealPoint::basis(2, 0)]).unwrap();
        assert!(matches!(map_design(&odd, 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn mapping_preserves_geometry() {
        let rule = tight_design(3, 2).unwrap();
        let real = crate::sphere::complex_set_to_real(&rule.nodes);
        let opts = CoveringOptions::with_seeds(2048);
        let a = mesh_ratio(&real, &opts).unwrap();
        let b = mesh_ratio(&rule.nodes, &opts).unwrap();
        assert!((a.separation - b.separation).abs() < 1e-12);
        assert!((a.mesh_ratio - b.mesh_ratio).abs() < 1e-12);
    }

    #[test]
    fn demo_examples() {
        let x0 = parse_complex_vector("1+1i, 1+1i").unwrap();
        assert_eq!(x0, vec![Complex64::new(1.0, 1.0); 2]);
        assert_eq!(inverse_square_exact(2, &x0).unwrap(), 0.25);
        let rules: Vec<QuadratureRule> = (1..=3).map(|t| tight_design(2, t).unwrap()).collect();
        let rows = demo_error_curve(&rules, &x0).unwrap();
        assert!(rows.iter().all(|r| r.abs_error > 0.0));
        assert_eq!(rows[2].n, 8);
        let inside = parse_complex_vector("0.5+0i,0.5+0i").unwrap();
        assert!(demo_error_curve(&rules, &inside).is_err());
        let mut buf = Vec::new();
        write_demo_csv(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,N,abs_error\n1,2,"));
    }
}
