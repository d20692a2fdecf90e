use std::path::Path;
use std::process::{Command, Output};

fn phiac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phiac")).args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn list_contains_paper_preset() {
    let o = phiac(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let s = text(&o.stdout);
    assert!(s.contains("vtol.paper") && s.contains("[paper]"));
    let o = phiac(&["list", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.as_array().unwrap().iter().any(|p| p["name"] == "pmsm.default" && p["provenance"] == "non-paper"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(phiac(&["simulate", "--preset", "missing"]).status.code(), Some(2));
    assert_eq!(phiac(&["audit", "--preset", "pmsm.default", "--prop", "9"]).status.code(), Some(2));
    assert_eq!(phiac(&[]).status.code(), Some(2));
    assert_eq!(phiac(&["simulate", "--preset", "pmsm.default", "--override", "dt=fast"]).status.code(), Some(2));
}

#[test]
fn flagship_run_converges_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let o = phiac(&["simulate", "--preset", "vtol.paper", "--out", dir.to_str().unwrap(), "--json"]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["verdict"]["converged"], true);
        assert_eq!(v["schema_version"], 1);
    }
    for f in ["vtol.paper.trajectory.csv", "vtol.paper.verdict.json", "vtol.paper.plot.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs between runs");
    }
    let csv = std::fs::read_to_string(a.path().join("vtol.paper.trajectory.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,x,y,theta,p_x,p_y,p_theta,x_c1,x_c2,u1,u2,H_cl,W,|Y_a|,|Y_u|"
    );
    let plot = std::fs::read_to_string(a.path().join("vtol.paper.plot.csv")).unwrap();
    for panel in [",configuration,", ",momentum,", ",controller,", ",lyapunov,"] {
        assert!(plot.contains(panel), "{panel}");
    }
}

#[test]
fn short_horizon_is_not_converged() {
    let dir = tempfile::tempdir().unwrap();
    let o = phiac(&[
        "simulate", "--preset", "vtol.paper", "--override", "t_end=1", "--json", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"]["converged"], false);
}

#[test]
fn config_file_then_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[scenario]\nt_end = 2.0\ndt = 0.01\n").unwrap();
    let out = dir.path().join("out");
    let o = phiac(&[
        "simulate", "--preset", "pmsm.default", "--config", cfg.to_str().unwrap(), "--override", "t_end=3",
        "--json", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["t_final"], 3.0);
    let rows = std::fs::read_to_string(Path::new(&out).join("pmsm.default.trajectory.csv")).unwrap();
    // 300 steps at stride 10 plus the header and the initial sample.
    assert_eq!(rows.lines().count(), 32);
}

#[test]
fn audit_passes_and_repeats_byte_for_byte() {
    let a = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "audit".to_string(),
            "--preset".into(),
            "pmsm.default".into(),
            "--prop".into(),
            "3".into(),
            "--seed".into(),
            "42".into(),
            "--out".into(),
            d.to_str().unwrap().into(),
        ]
    };
    let o1 = Command::new(env!("CARGO_BIN_EXE_phiac")).args(args(a.path())).output().unwrap();
    assert_eq!(o1.status.code(), Some(0), "{}", text(&o1.stdout));
    assert!(text(&o1.stdout).contains("summary: PASS"));
    let first = std::fs::read(a.path().join("pmsm.default.audit-3.json")).unwrap();
    let o2 = Command::new(env!("CARGO_BIN_EXE_phiac")).args(args(a.path())).output().unwrap();
    assert_eq!(o2.status.code(), Some(0));
    assert_eq!(first, std::fs::read(a.path().join("pmsm.default.audit-3.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["passed"], true);
}

#[test]
fn export_plot_writes_only_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = phiac(&["export-plot", "--preset", "manipulator.default", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("manipulator.default.plot.csv")]);
}

#[test]
fn divergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = phiac(&["simulate", "--preset", "pmsm.default", "--override", "dt=0.5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["error"], "divergence");
}
