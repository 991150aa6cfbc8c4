//! One PASS/FAIL line per acceptance criterion. Time budgets are pinned in
//! `galdef_core::acceptance`; criterion 10 additionally drives the binary,
//! whose process start-up time is not counted against the budget.

use galdef_core::acceptance::{self, render, CriterionResult};
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_galdef"));
    c.env_remove("GALDEF_SEED");
    c
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("galdef-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn exit_code(cmd: &mut Command) -> (i32, String, Vec<u8>) {
    let out = cmd.output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned(), out.stdout)
}

/// The command-line half of the negative controls.
fn cli_contracts() -> Result<String, String> {
    let unknown = scratch("unknown.toml", "suite = \"plan\"\nn = 1\nwidth = 3\n");
    let (code, err, _) = exit_code(bin().arg("run").arg(&unknown));
    if code != 2 || !err.contains("width") {
        return Err(format!("unknown key: exit {code}, stderr {err:?}"));
    }
    let zero = scratch("zero.toml", "suite = \"plan\"\nn = 0\n");
    let (code, _, _) = exit_code(bin().arg("run").arg(&zero));
    if code != 2 {
        return Err(format!("n = 0: exit {code}"));
    }
    let starved = scratch("starved.toml", "suite = \"plan\"\nn = 2\nforce_case = \"case3\"\nretry_budget = 1\nseed = 1\n");
    let (code, _, _) = exit_code(bin().arg("run").arg(&starved));
    if code != 1 {
        return Err(format!("exhausted retry budget: exit {code}"));
    }
    let (code, _, _) = exit_code(bin().args(["verify", "no-such-suite"]));
    if code != 2 {
        return Err(format!("unknown suite: exit {code}"));
    }
    let plan = scratch("plan.toml", "suite = \"plan\"\nn = 3\nruns = 4\nretry_budget = 4096\n");
    let (a_code, _, a) = exit_code(bin().arg("run").arg(&plan).args(["--seed", "5"]));
    let (b_code, _, b) = exit_code(bin().arg("run").arg(&plan).env("GALDEF_SEED", "5"));
    if a_code != 0 || b_code != 0 || a != b {
        return Err(format!("seeded plan: exits {a_code}/{b_code}, identical {}", a == b));
    }
    Ok("exit codes 0/1/2 and byte-identical seeded reports".into())
}

fn main() {
    let mut results: Vec<CriterionResult> = acceptance::run_all();
    let cli = cli_contracts();
    let tenth = results.iter_mut().find(|r| r.id == 10).expect("criterion 10");
    match cli {
        Ok(d) => tenth.detail = format!("{}; {d}", tenth.detail),
        Err(e) => {
            tenth.passed = false;
            tenth.detail = format!("{}; {e}", tenth.detail);
        }
    }
    for r in &results {
        println!("{}", render(r));
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
