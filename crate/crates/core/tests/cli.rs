use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str =
    "t,S,sigma_loc,Sigma_loc,U_loc,W_loc,Q_loc,Q_gl,Sigma_gl,U_elb,W_elb,U_lp,W_lp";

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dephasing-thermo"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn evolve_is_deterministic_with_exact_header() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# short run\nt_max = 2\ndt = 0.01 # fine grid\n",
    )
    .unwrap();
    let a = bin(
        &["evolve", "--config", "run.cfg", "--out", "a.csv"],
        dir.path(),
    );
    let b = bin(
        &["evolve", "--config", "run.cfg", "--out", "b.csv"],
        dir.path(),
    );
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(b.status.success());
    let ta = std::fs::read(dir.path().join("a.csv")).unwrap();
    let tb = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().next().unwrap(), HEADER);
    assert_eq!(text.lines().count(), 202);
    let q = column(&text, "Q_gl");
    let t = column(&text, "t");
    for (t, q) in t.iter().zip(&q) {
        let expected = -2.0 * t * t / (1.0 + t * t);
        assert!((q - expected).abs() <= 1e-8, "t = {t}: {q} vs {expected}");
    }
}

#[test]
fn diagonal_initial_state_has_no_entropy_production() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        &[
            "evolve",
            "--out",
            "d.csv",
            "--set",
            "t_max=1",
            "--set",
            "rho01_re=0",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    for name in ["sigma_loc", "Sigma_loc"] {
        assert!(column(&text, name).iter().all(|v| *v == 0.0), "{name}");
    }
    let u = column(&text, "U_loc");
    assert!(u.iter().all(|v| *v == u[0]));
}

#[test]
fn invalid_configs_exit_with_field_messages() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("rho11_0=1.5", "rho11_0"),
        ("alpha=abc", "alpha"),
        ("colour=red", "colour"),
        ("rho01_re=0.9", "rho01"),
    ];
    for (set, field) in cases {
        let out = bin(&["evolve", "--out", "x.csv", "--set", set], dir.path());
        assert_eq!(out.status.code(), Some(1), "{set}");
        assert!(
            String::from_utf8_lossy(&out.stderr).contains(field),
            "{set}"
        );
    }
    std::fs::write(dir.path().join("dup.cfg"), "alpha = 1\nalpha = 2\n").unwrap();
    let out = bin(
        &["evolve", "--config", "dup.cfg", "--out", "x.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let out = bin(
        &["evolve", "--config", "missing.cfg", "--out", "x.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let out = bin(&["figures", "fig3", "--out", "f"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        &[
            "evolve", "--out", "x.csv", "--set", "t_max=1", "--set", "dt=0.1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("endpoint"));
}

#[test]
fn fig1_saturation_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["figures", "fig1", "--out", "figs"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let figs = dir.path().join("figs");
    let text = std::fs::read_to_string(figs.join("fig1.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), format!("{HEADER},cutoff"));
    let t = column(&text, "t");
    let cutoff = column(&text, "cutoff");
    let sl = column(&text, "Sigma_loc");
    let sg = column(&text, "Sigma_gl");
    let finals: Vec<(f64, f64, f64)> = (0..t.len())
        .filter(|&i| t[i] == 20.0)
        .map(|i| (cutoff[i], sl[i], sg[i]))
        .collect();
    assert_eq!(
        finals.iter().map(|f| f.0).collect::<Vec<_>>(),
        vec![0.5, 1.0, 2.0]
    );
    for w in finals.windows(2) {
        assert!((w[0].1 - w[1].1).abs() <= 1e-3);
        assert!(w[1].2 > w[0].2);
    }
    let svg = std::fs::read_to_string(figs.join("fig1.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 6);
    let meta = std::fs::read_to_string(figs.join("fig1_metadata.txt")).unwrap();
    assert!(meta.contains("cutoff_sweep_source = default choice"));
}

#[test]
fn fig2_panels() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["figures", "fig2", "--out", "figs"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("figs/fig2.csv")).unwrap();
    for v in column(&text, "U_loc") {
        assert!((v - 0.25).abs() <= 1e-10);
    }
    for name in ["W_loc", "Q_loc", "W_elb"] {
        assert!(
            column(&text, name).iter().all(|v| v.abs() <= 1e-10),
            "{name}"
        );
    }
    let u = column(&text, "U_elb");
    let q = column(&text, "Q_gl");
    let u0 = u[0];
    assert!(u.iter().zip(&q).all(|(u, q)| ((u - u0) - q).abs() <= 1e-10));
    assert!((q.last().unwrap() + 2.0).abs() <= 0.02);
    let svg = std::fs::read_to_string(dir.path().join("figs/fig2.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 9);
}

#[test]
fn oracle_exit_code_follows_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["oracle", "--out", "oracle.csv"], dir.path());
    let summary = std::fs::read_to_string(dir.path().join("oracle.summary.txt")).unwrap();
    let passed = summary.contains("overall: PASS");
    assert_eq!(out.status.code(), Some(if passed { 0 } else { 3 }));
    let text = std::fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    let first: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(first[0], 0.0);
    assert!((first[1] - first[2]).abs() <= 1e-12);
    assert!(first[3..].iter().all(|v| v.abs() <= 1e-12));
}

#[test]
fn oracle_refuses_thin_thermal_tail() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        &[
            "oracle", "--out", "o.csv", "--set", "n_max=2", "--set", "beta=0.2",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_max"));
    assert!(!dir.path().join("o.csv").exists());
}
