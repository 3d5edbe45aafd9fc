//! End-to-end runs of the `csdesign` binary.

use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use csdesign::sdf::{self, Points};
use csdesign::sphere::{ComplexPoint, ComplexPointSet};
use num_complex::Complex64;

fn csdesign(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csdesign"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn counts_prints_table_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = csdesign(dir.path(), &["counts", "--complex-dim", "2", "--degree", "21", "--out", "c.csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("N̄ = 1184"));
    let csv = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    // S^3, t = 21 = 2·10 + 1: N* = 2 C(13, 3); dim Π_21 = Σ (ℓ+1)², N̂ = ⌈(dim − 1)/3⌉ + 2
    let n_star = 2 * (13 * 12 * 11 / 6);
    let dim: usize = (0..=21).map(|l| (l + 1) * (l + 1)).sum();
    let n_hat = (dim - 1).div_ceil(3) + 2;
    assert_eq!(csv, format!("d,t,n_star,n_hat,n_bar\n2,21,{n_star},{n_hat},1184\n"));
}

#[test]
fn tight_design_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let o = csdesign(dir.path(), &["tight", "--complex-dim", "2", "--degree", "3", "--out", "cp.sdf"]);
    assert_eq!(o.status.code(), Some(0));
    let o = csdesign(dir.path(), &["verify", "cp.sdf", "--degree", "3", "--complex"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(dir.path().join("cp.sdf.verify.csv").exists());
}

#[test]
fn rotated_node_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    csdesign(dir.path(), &["tight", "--complex-dim", "2", "--degree", "3", "--out", "cp.sdf"]);
    let Points::Complex(z) = sdf::read(&dir.path().join("cp.sdf")).unwrap().points else {
        panic!("tight writes complex files")
    };
    // rotate the first node by 1e-3 rad in the (z1, z2) real plane
    let (c, s) = (1e-3f64.cos(), 1e-3f64.sin());
    let mut pts = z.points().to_vec();
    let w = pts[0].coords().to_vec();
    pts[0] = ComplexPoint::new(vec![w[0] * c - w[1] * s, w[0] * s + w[1] * c]).unwrap();
    assert!((pts[0].coords()[1] - Complex64::new(s, 0.0)).norm() < 1e-15);
    let bent = ComplexPointSet::new(pts).unwrap();
    sdf::write_complex(&dir.path().join("bent.sdf"), &bent, Some(3)).unwrap();
    for mode in [&["--complex"][..], &[][..]] {
        let mut args = vec!["verify", "bent.sdf", "--degree", "3", "--tol", "1e-10"];
        args.extend_from_slice(mode);
        let o = csdesign(dir.path(), &args);
        assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    }
}

#[test]
fn round_trip_gen_verify_metrics_map() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let steps: [&[&str]; 5] = [
        &["gen", "--complex-dim", "2", "--degree", "3", "--restarts", "3", "--out", "x.sdf"],
        &["verify", "x.sdf", "--degree", "3"],
        &["metrics", "x.sdf", "--seeds", "20000", "--inner-products", "ip.csv", "--stereographic", "st.csv"],
        &["map", "x.sdf", "--out", "z.sdf"],
        &["verify", "z.sdf", "--degree", "3", "--complex"],
    ];
    for args in steps {
        let o = csdesign(dir.path(), args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    }
    assert!(start.elapsed().as_secs() < 60);
    for f in ["x.sdf.restarts.csv", "x.sdf.metrics.csv", "ip.csv", "st.csv", "z.sdf.verify.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let x = sdf::read(&dir.path().join("x.sdf")).unwrap();
    assert_eq!(x.header.degree, Some(3));
    assert_eq!(x.to_real().len(), 12);
    let log = std::fs::read_to_string(dir.path().join("x.sdf.restarts.csv")).unwrap();
    assert!(log.starts_with("restart,iterations,final_V,separation,covering,mesh_ratio\n"));
    assert_eq!(log.lines().count(), 4);
}

#[test]
fn integrate_writes_error_csv() {
    let dir = tempfile::tempdir().unwrap();
    for t in ["1", "2", "3"] {
        let out = format!("t{t}.sdf");
        csdesign(dir.path(), &["tight", "--complex-dim", "2", "--degree", t, "--out", &out]);
    }
    let o = csdesign(dir.path(), &["integrate", "t1.sdf", "t2.sdf", "t3.sdf", "--x0", "1+1i,1+1i", "--out", "e.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,N,abs_error");
    assert!(lines[3].starts_with("3,8,"));
    let o = csdesign(dir.path(), &["integrate", "t3.sdf", "--x0", "0.1+0i,0.1+0i"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.sdf"), "1 0 0\n0 1\n").unwrap();
    assert_eq!(csdesign(dir.path(), &["metrics", "bad.sdf"]).status.code(), Some(2));
    assert_eq!(csdesign(dir.path(), &["verify", "bad.sdf"]).status.code(), Some(2));
    assert_eq!(csdesign(dir.path(), &["map", "missing.sdf", "--out", "o"]).status.code(), Some(2));
}
