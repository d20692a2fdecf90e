use super::*;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["phiac"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn list_names_presets_with_provenance() {
    let (code, out, _) = call(&["list"]);
    assert_eq!(code, 0);
    assert!(out.contains("vtol.paper") && out.contains("[paper]") && out.contains("[non-paper]"));
    let (code, out, _) = call(&["list", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = call(&["simulate", "--preset", "nope", "--out", out]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("unknown preset 'nope'"));
}

#[test]
fn bad_audit_number_and_flags_are_usage_errors() {
    assert_eq!(call(&["audit", "--preset", "pmsm.default", "--prop", "9"]).0, EXIT_USAGE);
    assert_eq!(call(&["simulate", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(call(&["simulate", "--preset", "pmsm.default", "--override", "nokey"]).0, EXIT_USAGE);
    assert_eq!(call(&["audit", "--preset", "vtol.paper", "--prop", "3"]).0, EXIT_USAGE);
}

#[test]
fn short_simulation_writes_files_and_is_not_converged() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, _) =
        call(&["simulate", "--preset", "vtol.paper", "--override", "t_end=1", "--out", out, "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["verdict"]["converged"], false);
    for p in [
        trajectory_path(dir.path(), "vtol.paper"),
        verdict_path(dir.path(), "vtol.paper"),
        plot_path(dir.path(), "vtol.paper"),
    ] {
        assert!(p.exists(), "{}", p.display());
    }
}

#[test]
fn divergence_exits_three_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // A step far outside the RK4 stability region.
    let (code, stdout, _) = call(&["simulate", "--preset", "pmsm.default", "--override", "dt=0.5", "--out", out]);
    assert_eq!(code, EXIT_NUMERIC, "{stdout}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["error"], "divergence");
    assert!(diagnostic_path(dir.path(), "pmsm.default").exists());
}

#[test]
fn audit_report_is_reproducible() {
    let args = ["audit", "--preset", "pmsm.default", "--prop", "3", "--json", "--samples", "20"];
    let (c1, a, _) = call(&args);
    let (c2, b, _) = call(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
}

#[test]
fn config_file_without_preset_name() {
    let dir = tempfile::tempdir().unwrap();
    let text = load_preset_text("manipulator.default");
    let path = dir.path().join("arm.toml");
    std::fs::write(&path, text).unwrap();
    let src = Source {
        preset: None,
        config: Some(path),
        overrides: vec![("t_end".into(), "2".into())],
    };
    let p = src.resolve().unwrap();
    assert_eq!(p.scenario.t_end, 2.0);
}

fn load_preset_text(name: &str) -> String {
    crate::systems::load_preset(name).unwrap().to_toml().unwrap()
}
