use serde_json::Value;
use std::path::PathBuf;
use std::process::Command;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn galdef(args: &[&str], scenario_path: Option<&PathBuf>) -> (i32, Vec<u8>) {
    let mut c = Command::new(env!("CARGO_BIN_EXE_galdef"));
    c.env_remove("GALDEF_SEED").args(args);
    if let Some(p) = scenario_path {
        c.arg(p);
    }
    let out = c.output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

#[test]
fn shipped_scenarios_pass() {
    for name in ["nice-table.toml", "selmer.toml", "plan.toml", "rings.toml"] {
        let (code, out) = galdef(&["run"], Some(&scenario(name)));
        assert_eq!(code, 0, "{name}");
        let v: Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(v["passed"], Value::Bool(true), "{name}");
        assert!(v.get("timings_ms").is_none());
    }
}

#[test]
fn nice_table_rows() {
    let (_, out) = galdef(&["run"], Some(&scenario("nice-table.toml")));
    let v: Value = serde_json::from_slice(&out).unwrap();
    for row in &v["results"].as_array().unwrap()[..5] {
        assert_eq!((row["h0"].as_u64(), row["h1"].as_u64(), row["h2"].as_u64()), (Some(1), Some(2), Some(1)));
        assert_eq!(row["nq_length"].as_u64(), Some(1));
    }
}

#[test]
fn out_file_and_timings() {
    let dir = std::env::temp_dir().join(format!("galdef-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("report.json");
    let path = scenario("rings.toml");
    let (code, stdout) = galdef(&["run", "--out", out.to_str().unwrap()], Some(&path));
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let (_, again) = galdef(&["run"], Some(&path));
    assert_eq!(std::fs::read(&out).unwrap(), again);
    let (_, timed) = galdef(&["run", "--timings"], Some(&path));
    let v: Value = serde_json::from_slice(&timed).unwrap();
    assert!(v["timings_ms"].is_u64());
}

#[test]
fn seed_flag_overrides_scenario() {
    let path = scenario("plan.toml");
    let (_, a) = galdef(&["run", "--seed", "42"], Some(&path));
    let (_, b) = galdef(&["run"], Some(&path));
    let (_, c) = galdef(&["run", "--seed", "43"], Some(&path));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn verify_rings_suite() {
    let (code, out) = galdef(&["verify", "rings"], None);
    assert_eq!(code, 0);
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("PASS criterion  9"), "{text}");
}
