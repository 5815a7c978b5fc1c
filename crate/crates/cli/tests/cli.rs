use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use schottky_mem::Error as CoreError;
use schottky_mem_cli::config::RunConfig;
use schottky_mem_cli::error::CliError;
use schottky_mem_cli::io::read_trace;
use schottky_mem_cli::manifest::read_manifest;
use schottky_mem_cli::{apply_overrides, Command as Cmd, Overrides};

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn smem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smem")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> PathBuf {
    let out = smem(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    PathBuf::from(String::from_utf8(out.stdout).unwrap().trim())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

// ------------------------------------------------------------- config

#[test]
fn shipped_default_config_matches_built_in_defaults() {
    let cfg = RunConfig::load(&manifest_dir().join("config/default.json")).unwrap();
    assert_eq!(cfg, RunConfig::default());
}

fn schema_keys(schema: &Value, config: &Value, path: &str, out: &mut Vec<String>) {
    let props = schema["properties"].as_object().unwrap_or_else(|| panic!("{path} has no properties"));
    assert_eq!(schema["additionalProperties"], Value::Bool(false), "{path}");
    let cfg = config.as_object().unwrap();
    let mut a: Vec<&String> = props.keys().collect();
    let mut b: Vec<&String> = cfg.keys().collect();
    a.sort();
    b.sort();
    assert_eq!(a, b, "schema and config keys differ at `{path}`");
    for (k, v) in cfg {
        let sub = &props[k];
        assert!(sub["description"].is_string(), "{path}.{k} undocumented");
        if v.is_object() {
            schema_keys(sub, v, &format!("{path}.{k}"), out);
        } else {
            assert_eq!(&sub["default"], v, "{path}.{k} default");
            out.push(format!("{path}.{k}"));
        }
    }
}

#[test]
fn schema_documents_every_config_key() {
    let schema = json(&manifest_dir().join("config/config.schema.json"));
    let config = serde_json::to_value(RunConfig::default()).unwrap();
    let mut leaves = Vec::new();
    schema_keys(&schema, &config, "", &mut leaves);
    assert!(leaves.len() > 60);
}

#[test]
fn partial_config_fills_defaults() {
    let cfg = RunConfig::from_json(r#"{"geometry": {"radii": [2e-6]}, "device": {"pulse_width": 0.5}}"#).unwrap();
    assert_eq!(cfg.geometry.radii, vec![2e-6]);
    assert_eq!(cfg.device.pulse_width, 0.5);
    assert_eq!(cfg.material, RunConfig::default().material);
}

#[test]
fn unknown_keys_are_rejected_at_any_depth() {
    for text in [
        r#"{"materials": {}}"#,
        r#"{"material": {"eps": 300}}"#,
        r#"{"solver": {"study": {"mesh": {"growth_rate": 1.2}}}}"#,
        r#"{"protocol": {"sweep": {"cycle": 3}}}"#,
    ] {
        let err = RunConfig::from_json(text).unwrap_err();
        assert!(matches!(err, CliError::Config(_)), "{text}: {err}");
        assert!(err.to_string().contains("unknown field"), "{err}");
    }
}

#[test]
fn physical_values_are_validated_on_load() {
    for text in [
        r#"{"material": {"eps_zero": -1}}"#,
        r#"{"trapping": {"sigma": 0}}"#,
        r#"{"transport": {"j_ref": -5}}"#,
        r#"{"geometry": {"radii": []}}"#,
        r#"{"geometry": {"radii": [1e-6], "edge_zone_width": 2e-6}}"#,
        r#"{"geometry": {"edge_gains": [2, 2]}}"#,
        r#"{"geometry": {"edge_gains": [0.5, 2, 2]}}"#,
        r#"{"protocol": {"retention": {"read_v": [0.7]}}}"#,
        r#"{"protocol": {"sweep": {"v_lo": 1}}}"#,
        r#"{"protocol": {"endurance": {"cycles": 0}}}"#,
    ] {
        let err = RunConfig::from_json(text).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}: {err}");
    }
}

#[test]
fn config_hash_tracks_content() {
    let a = RunConfig::default();
    let mut b = a.clone();
    assert_eq!(a.hash(), b.hash());
    b.device.pulse_width = 0.31;
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn overrides_follow_the_command() {
    let mut cfg = RunConfig::default();
    let ov = Overrides {
        radius: Some(vec![5e-6]),
        set_v: Some(vec![1.0, 1.5]),
        reset_v: Some(vec![-2.0]),
        read_v: Some(vec![0.2]),
        ..Default::default()
    };
    apply_overrides(&mut cfg, Cmd::Multilevel, &ov).unwrap();
    assert_eq!(cfg.geometry.radii, vec![5e-6]);
    assert_eq!(cfg.protocol.multilevel.set_levels, vec![1.0, 1.5]);
    assert_eq!(cfg.protocol.multilevel.read_v, 0.2);

    let mut cfg = RunConfig::default();
    let err = apply_overrides(&mut cfg, Cmd::Endurance, &ov).unwrap_err();
    assert!(err.to_string().contains("--set-v"));

    let mut cfg = RunConfig::default();
    let ov = Overrides { radius: Some(vec![1e-5]), v: Some(-1.0), cycles: Some(4), ..Default::default() };
    apply_overrides(&mut cfg, Cmd::FieldMap, &ov).unwrap();
    assert_eq!(cfg.protocol.field_map.radii, Some(vec![1e-5]));
    assert_eq!(cfg.protocol.field_map.v_applied, -1.0);
    assert_eq!(cfg.geometry.radii, RunConfig::default().geometry.radii);
    assert_eq!((cfg.protocol.sweep.cycles, cfg.protocol.endurance.cycles), (4, 4));

    let mut cfg = RunConfig::default();
    let ov = Overrides { set_v: Some(vec![1.5]), ..Default::default() };
    apply_overrides(&mut cfg, Cmd::Retention, &ov).unwrap();
    assert_eq!(cfg.protocol.retention.write_v, vec![1.5, -3.0]);
}

#[test]
fn overrides_are_validated() {
    let mut cfg = RunConfig::default();
    let ov = Overrides { read_v: Some(vec![0.0]), ..Default::default() };
    // Zero lies inside the read bound; 0.8 V does not.
    apply_overrides(&mut cfg, Cmd::Retention, &ov).unwrap();
    let ov = Overrides { read_v: Some(vec![0.8]), ..Default::default() };
    assert_eq!(apply_overrides(&mut cfg, Cmd::Retention, &ov).unwrap_err().exit_code(), 2);
}

#[test]
fn core_errors_map_to_exit_classes() {
    let param = CoreError::Parameter { name: "x", reason: "bad".into() };
    assert_eq!(CliError::from(param.clone()).exit_code(), 2);
    let wrapped = CoreError::AtRadius { radius: 1e-6, source: Box::new(param) };
    assert_eq!(CliError::from(wrapped).exit_code(), 2);
    let conv = CoreError::Convergence { method: "cg", iterations: 10, residual: 1.0, history: vec![] };
    assert_eq!(CliError::from(conv.clone()).exit_code(), 3);
    assert_eq!(CliError::from(CoreError::AtRadius { radius: 1e-6, source: Box::new(conv) }).exit_code(), 3);
    assert_eq!(CliError::from(CoreError::Mesh("coarse".into())).exit_code(), 3);
    assert_eq!(CliError::from(std::io::Error::other("disk")).exit_code(), 4);
}

// ------------------------------------------------------------- binary

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"material": {"colour": "blue"}}"#);
    let out = smem(&["endurance", "--config", &cfg, "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
    assert!(!dir.path().join("run").exists());
}

#[test]
fn missing_config_or_input_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = smem(&["endurance", "--config", "/nonexistent.json", "--out", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let out = smem(&["fit", "--input", "/nonexistent.csv", "--out", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn bad_flag_exits_2() {
    assert_eq!(smem(&["endurance", "--cycles", "many"]).status.code(), Some(2));
    assert_eq!(smem(&["transmogrify"]).status.code(), Some(2));
}

#[test]
fn malformed_input_trace_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "t.csv", "t_s,v_V,i_A\n1,0.3,1e-9\n2,0.3,NaN\n");
    let out = smem(&["fit", "--input", &input, "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn run_directories_are_not_overwritten_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let args = ["endurance", "--radius", "1e-6", "--cycles", "2", "--out", run.to_str().unwrap()];
    ok(&args);
    let out = smem(&args);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    ok(&forced);
}

#[test]
fn default_run_dir_is_named_by_command_and_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &format!(r#"{{"output": {{"dir": "{}"}}}}"#, dir.path().join("runs").display()));
    let run = ok(&["endurance", "--config", &cfg, "--radius", "1e-6", "--cycles", "1"]);
    let name = run.file_name().unwrap().to_str().unwrap().to_string();
    assert!(name.starts_with("endurance-") && name.len() == "endurance-".len() + 12, "{name}");
    let m = read_manifest(&run).unwrap();
    assert!(m.config_sha256.starts_with(&name["endurance-".len()..]));
}

#[test]
fn identical_configs_give_identical_artifact_checksums() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for run in [&a, &b] {
        ok(&["retention", "--radius", "1e-6,1e-5", "--out", run.to_str().unwrap()]);
    }
    let (ma, mb) = (read_manifest(&a).unwrap(), read_manifest(&b).unwrap());
    assert_eq!(ma.artifacts, mb.artifacts);
    assert_eq!(ma.config_sha256, mb.config_sha256);
    assert_eq!(ma.artifacts.len(), 2 * 4 + 2);
    for art in &ma.artifacts {
        let again = schottky_mem_cli::manifest::checksum(&a.join(&art.file)).unwrap();
        assert_eq!(&again, art);
    }
    assert!(ma.wall_time_s > 0.0);
    assert_eq!(ma.cli_version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn fit_recovers_a_synthetic_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("t_s,v_V,i_A\n");
    for k in 0..40 {
        let t = 10f64.powf(k as f64 / 13.0);
        text.push_str(&format!("{t:.16e},0.3,{:.16e}\n", 2e-9 * (t + 0.5).powf(-0.5)));
    }
    let input = write(dir.path(), "synthetic_alpha0.5.csv", &text);
    let run = ok(&["fit", "--input", &input, "--out", dir.path().join("run").to_str().unwrap()]);
    let v = json(&run.join("fit.json"));
    let fit = &v["fits"][0];
    assert!((fit["alpha"].as_f64().unwrap() - 0.5).abs() < 1e-6, "{fit}");
    assert!((fit["t0"].as_f64().unwrap() + 0.5).abs() < 1e-4);
    assert_eq!(fit["read_v_V"].as_f64(), Some(0.3));
    assert!(v.get("scaling").is_none());
}

#[test]
fn synthetic_fit_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        ok(&["fit", "--radius", "1e-6", "--read-v", "0.3", "--noise", "0.02", "--seed", seed, "--out", dir.path().join(name).to_str().unwrap()])
    };
    let (a, b, c) = (run("a", "7"), run("b", "7"), run("c", "8"));
    let fa = std::fs::read(a.join("fit.json")).unwrap();
    assert_eq!(fa, std::fs::read(b.join("fit.json")).unwrap());
    assert_ne!(fa, std::fs::read(c.join("fit.json")).unwrap());
    let clean = ok(&["fit", "--radius", "1e-6", "--read-v", "0.3", "--out", dir.path().join("clean").to_str().unwrap()]);
    let truth = json(&clean.join("fit.json"))["fits"][0]["alpha"].as_f64().unwrap();
    let noisy = &json(&a.join("fit.json"))["fits"][0];
    let (alpha, stderr) = (noisy["alpha"].as_f64().unwrap(), noisy["stderr"].as_f64().unwrap());
    assert!((alpha - truth).abs() < 3.0 * stderr, "{alpha} +- {stderr} vs {truth}");
}

#[test]
fn field_map_orders_edge_fields_by_radius() {
    let dir = tempfile::tempdir().unwrap();
    let run = ok(&["field-map", "--radii", "1e-4,1e-5,1e-6", "--v", "-3", "--out", dir.path().join("run").to_str().unwrap()]);
    let s = json(&run.join("field_map_summary.json"));
    let e: Vec<f64> = s.as_array().unwrap().iter().map(|p| p["e_max_Vpm"].as_f64().unwrap()).collect();
    assert_eq!(e.len(), 3);
    assert!(e[0] < e[1] && e[1] < e[2], "{e:?}");
    let profile = std::fs::read_to_string(run.join("profile_r1e-6.csv")).unwrap();
    assert!(profile.starts_with("r_m,e_z_Vpm\n"));
    let field = std::fs::read_to_string(run.join("field_r1e-6.csv")).unwrap();
    assert!(field.starts_with("r_m,z_m,phi_V\n"));
    // Rows run from the grounded back contact (z = 0) up to the interface,
    // where the axis node lies under the electrode.
    let rows: Vec<Vec<f64>> =
        field.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.iter().filter(|r| r[1] == 0.0).all(|r| r[2] == 0.0));
    let z_top = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    let axis_top = rows.iter().find(|r| r[0] == 0.0 && r[1] == z_top).unwrap();
    assert_eq!(axis_top[2], -3.0);
}

#[test]
fn sweep_trace_is_pinched_at_zero_bias() {
    let dir = tempfile::tempdir().unwrap();
    let run = ok(&["sweep", "--radius", "1e-6", "--cycles", "3", "--out", dir.path().join("run").to_str().unwrap()]);
    let text = std::fs::read_to_string(run.join("sweep_r1e-6.csv")).unwrap();
    let trace = read_trace(text.as_bytes(), Default::default()).unwrap();
    let zeros: Vec<f64> = trace.records().iter().filter(|r| r.v == 0.0).map(|r| r.i).collect();
    assert_eq!(zeros.len(), 4);
    assert!(zeros.iter().all(|i| *i == 0.0));
    let s = json(&run.join("sweep_summary.json"));
    assert_eq!(s[0]["pinched_every_cycle"], Value::Bool(true));
    assert_eq!(s[0]["cycles"].as_u64(), Some(3));
}

#[test]
fn endurance_and_scaling_report_the_window_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let run = ok(&["scaling", "--cycles", "12", "--out", dir.path().join("run").to_str().unwrap()]);
    let s = json(&run.join("scaling_summary.json"));
    assert_eq!(s["window_trend"], "holds");
    assert_eq!(s["exponents"]["trend_positive"], "holds");
    assert!(s["null_window_spread"].as_f64().unwrap() < 0.01);
    let run = ok(&["endurance", "--radius", "1e-6", "--cycles", "3", "--format", "json", "--out", dir.path().join("e").to_str().unwrap()]);
    let t = json(&run.join("endurance_r1e-6.json"));
    assert_eq!(t["columns"], serde_json::json!(["cycle", "lrs_A", "hrs_A", "window"]));
    assert_eq!(t["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn multilevel_writes_one_band_per_level_pair() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"protocol": {"multilevel": {"repeats": 4}}}"#);
    let run = ok(&["multilevel", "--config", &cfg, "--radius", "1e-6", "--out", dir.path().join("run").to_str().unwrap()]);
    let s = json(&run.join("multilevel_summary.json"));
    let bands = s[0]["bands"].as_array().unwrap();
    assert_eq!(bands.len(), 6);
    assert!(bands.iter().all(|b| b["repeats"] == 4));
    let rows = std::fs::read_to_string(run.join("multilevel_r1e-6.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 6 * 4);
}

#[test]
fn configured_edge_gains_skip_the_solver() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"geometry": {"radii": [1e-6], "edge_gains": [1.0]}, "device": {"edge_trap_boost": 1.0}}"#);
    let run = ok(&["endurance", "--config", &cfg, "--cycles", "2", "--out", dir.path().join("run").to_str().unwrap()]);
    let s = json(&run.join("endurance_summary.json"));
    assert_eq!(s[0]["edge_gain"].as_f64(), Some(1.0));
    assert!((s[0]["final_window"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}
