//! Plain-text point-set files.
//!
//! ```text
//! # field: real
//! # dim: 3
//! # degree: 5
//! # npoints: 28
//! # symmetric: true
//! 1.0000000000000000e0 0.0000000000000000e0 0.0000000000000000e0 0.0000000000000000e0
//! ...
//! ```
//!
//! `dim` is the sphere dimension `m` for real files (rows of `m + 1`
//! numbers) and the complex dimension `d` for complex files (rows of `2d`
//! numbers, `re im` interleaved). Every header line is optional; a file
//! without a header is read as real points, one per row. Values are written
//! with 17 significant digits so they re-parse to the same bits.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sphere::{ComplexPoint, ComplexPointSet, RealPoint, RealPointSet};

/// Largest norm defect that is silently renormalized on import.
pub const IMPORT_NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    pub field: Option<Field>,
    pub dim: Option<usize>,
    pub degree: Option<usize>,
    pub npoints: Option<usize>,
    pub symmetric: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Points {
    Real(RealPointSet),
    Complex(ComplexPointSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdfFile {
    pub header: Header,
    pub points: Points,
}

impl SdfFile {
    /// The points as a real set; complex files go through the bridge map.
    pub fn to_real(&self) -> RealPointSet {
        match &self.points {
            Points::Real(x) => x.clone(),
            Points::Complex(z) => crate::sphere::complex_set_to_real(z),
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_header_line(h: &mut Header, body: &str, line: usize) -> Result<()> {
    let Some((key, value)) = body.split_once(':') else {
        return Ok(()); // free-form comment
    };
    let value = value.trim();
    let num = |v: &str| v.parse::<usize>().map_err(|e| parse_err(line, format!("{key}: {e}")));
    match key.trim() {
        "field" => {
            h.field = Some(match value {
                "real" => Field::Real,
                "complex" => Field::Complex,
                other => return Err(parse_err(line, format!("unknown field '{other}'"))),
            })
        }
        "dim" => h.dim = Some(num(value)?),
        "degree" => h.degree = Some(num(value)?),
        "npoints" => h.npoints = Some(num(value)?),
        "symmetric" => {
            h.symmetric = Some(match value {
                "true" | "1" | "yes" => true,
                "false" | "0" | "no" => false,
                other => return Err(parse_err(line, format!("symmetric: expected true/false, got '{other}'"))),
            })
        }
        _ => {}
    }
    Ok(())
}

fn unit_or_renormalized(coords: Vec<f64>, line: usize) -> Result<Vec<f64>> {
    let norm = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() <= crate::sphere::UNIT_TOL {
        Ok(coords)
    } else if (norm - 1.0).abs() <= IMPORT_NORM_TOL {
        Ok(coords.into_iter().map(|v| v / norm).collect())
    } else {
        Err(parse_err(line, format!("point is not on the unit sphere (norm {norm})")))
    }
}

pub fn parse(text: &str) -> Result<SdfFile> {
    let mut header = Header::default();
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = raw.trim();
        if s.is_empty() {
            continue;
        }
        if let Some(body) = s.strip_prefix('#') {
            parse_header_line(&mut header, body, line)?;
            continue;
        }
        let vals = s
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|e| parse_err(line, format!("'{v}': {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some((_, first)) = rows.first() {
            if first.len() != vals.len() {
                return Err(parse_err(line, format!("expected {} columns, found {}", first.len(), vals.len())));
            }
        }
        rows.push((line, vals));
    }
    let cols = rows.first().map(|(_, r)| r.len());
    if let Some(n) = header.npoints {
        if n != rows.len() {
            return Err(parse_err(0, format!("header says {n} points, found {}", rows.len())));
        }
    }
    let field = header.field.unwrap_or(Field::Real);
    if let (Some(dim), Some(cols)) = (header.dim, cols) {
        let expect = match field {
            Field::Real => dim + 1,
            Field::Complex => 2 * dim,
        };
        if cols != expect {
            return Err(Error::Dimension(format!("header dim {dim} implies {expect} columns, found {cols}")));
        }
    }
    let symmetric = header.symmetric.unwrap_or(false);
    let points = match field {
        Field::Real => {
            let pts = rows
                .into_iter()
                .map(|(line, r)| {
                    if r.len() < 2 {
                        return Err(parse_err(line, "real points need at least 2 coordinates"));
                    }
                    Ok(RealPoint::from_unchecked(unit_or_renormalized(r, line)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let set = RealPointSet::new(pts)?;
            Points::Real(if symmetric { set.into_symmetric()? } else { set })
        }
        Field::Complex => {
            let pts = rows
                .into_iter()
                .map(|(line, r)| {
                    if r.len() % 2 != 0 {
                        return Err(parse_err(line, "complex rows need an even number of columns"));
                    }
                    let r = unit_or_renormalized(r, line)?;
                    ComplexPoint::new(r.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
                })
                .collect::<Result<Vec<_>>>()?;
            let set = ComplexPointSet::new(pts)?;
            if symmetric {
                let real = crate::sphere::complex_set_to_real(&set).into_symmetric()?;
                Points::Complex(crate::sphere::real_set_to_complex(&real)?)
            } else {
                Points::Complex(set)
            }
        }
    };
    Ok(SdfFile { header, points })
}

pub fn read(path: &Path) -> Result<SdfFile> {
    parse(&std::fs::read_to_string(path)?)
}

/// Reads any point file as a real set.
pub fn read_real(path: &Path) -> Result<RealPointSet> {
    Ok(read(path)?.to_real())
}

fn push_row(out: &mut String, vals: impl Iterator<Item = f64>) {
    let mut first = true;
    for v in vals {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

pub fn format_real(x: &RealPointSet, degree: Option<usize>) -> String {
    let mut s = String::new();
    s.push_str("# field: real\n");
    if let Some(m) = x.sphere_dim() {
        let _ = writeln!(s, "# dim: {m}");
    }
    if let Some(t) = degree {
        let _ = writeln!(s, "# degree: {t}");
    }
    let _ = writeln!(s, "# npoints: {}", x.len());
    let _ = writeln!(s, "# symmetric: {}", x.is_symmetric());
    for p in x.iter() {
        push_row(&mut s, p.coords().iter().copied());
    }
    s
}

pub fn format_complex(z: &ComplexPointSet, degree: Option<usize>) -> String {
    let mut s = String::new();
    s.push_str("# field: complex\n");
    if let Some(d) = z.complex_dim() {
        let _ = writeln!(s, "# dim: {d}");
    }
    if let Some(t) = degree {
        let _ = writeln!(s, "# degree: {t}");
    }
    let _ = writeln!(s, "# npoints: {}", z.len());
    let _ = writeln!(s, "# symmetric: {}", z.is_symmetric());
    for p in z.iter() {
        push_row(&mut s, p.coords().iter().flat_map(|c| [c.re, c.im]));
    }
    s
}

pub fn write_real(path: &Path, x: &RealPointSet, degree: Option<usize>) -> Result<()> {
    Ok(std::fs::write(path, format_real(x, degree))?)
}

pub fn write_complex(path: &Path, z: &ComplexPointSet, degree: Option<usize>) -> Result<()> {
    Ok(std::fs::write(path, format_complex(z, degree))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{real_set_to_complex, symmetrize};
    use proptest::prelude::*;

    fn sample() -> RealPointSet {
        let pts = vec![
            RealPoint::normalized(vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
            RealPoint::normalized(vec![-1.0 / 3.0, 2.0, 1e-300, 7.0]).unwrap(),
        ];
        symmetrize(&RealPointSet::new(pts).unwrap())
    }

    #[test]
    fn real_round_trip_is_bit_exact() {
        let x = sample();
        let f = parse(&format_real(&x, Some(3))).unwrap();
        assert_eq!(f.header.degree, Some(3));
        assert_eq!(f.header.dim, Some(3));
        assert_eq!(f.points, Points::Real(x));
    }

    #[test]
    fn complex_round_trip_is_bit_exact() {
        let z = real_set_to_complex(&sample()).unwrap();
        let f = parse(&format_complex(&z, None)).unwrap();
        match f.points {
            Points::Complex(w) => assert_eq!(w.points(), z.points()),
            Points::Real(_) => panic!("expected complex points"),
        }
        let g = parse(&format_complex(&z, None)).unwrap();
        let Points::Complex(w) = g.points else { panic!() };
        assert!(w.is_symmetric());
    }

    #[test]
    fn headerless_files_infer_dimension() {
        let f = parse("1 0 0\n0 0.6 0.8\n\n0 0 1.000000001\n").unwrap();
        let Points::Real(x) = f.points else { panic!() };
        assert_eq!(x.sphere_dim(), Some(2));
        assert_eq!(x.len(), 3);
        assert_eq!(x.points()[2].coords()[2], 1.0);
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(matches!(parse("1 0\n0 1 0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("1 x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("0.5 0.5\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse("# dim: 4\n1 0 0\n"), Err(Error::Dimension(_))));
        assert!(parse("# npoints: 3\n1 0\n").is_err());
        assert!(parse("# symmetric: true\n1 0\n0 1\n").is_err());
    }

    proptest! {
        #[test]
        fn random_points_round_trip(v in proptest::collection::vec(-1.0f64..1.0, 4..24)) {
            let dim = 4;
            let pts: Vec<RealPoint> = v
                .chunks_exact(dim)
                .filter_map(|c| RealPoint::normalized(c.to_vec()).ok())
                .collect();
            prop_assume!(!pts.is_empty());
            let x = RealPointSet::new(pts).unwrap();
            let back = parse(&format_real(&x, None)).unwrap();
            prop_assert_eq!(back.points, Points::Real(x));
        }
    }
}
