//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are never captured.
//!
//! Criteria 1 to 9 call the library. Criterion 10 drives the `hblab`
//! binary: `selftest` must exit 0 and every checked-in recipe must write
//! identical bytes on two runs.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use hblab_cli::selftest::{self, Check};

fn hblab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hblab"))
}

fn recipe_files() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("recipes");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    files
}

fn harness_determinism() -> Check {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();

    let selftest = hblab().arg("selftest").output().unwrap();
    let selftest_ok = selftest.status.code() == Some(0);
    ok &= selftest_ok;
    parts.push(format!("selftest exit {:?}", selftest.status.code()));
    if !selftest_ok {
        parts.push(String::from_utf8_lossy(&selftest.stdout).replace('\n', " | "));
    }

    let tmp = tempfile::tempdir().unwrap();
    let files = recipe_files();
    ok &= files.len() == hblab_cli::recipes::RECIPES.len();
    for file in &files {
        let name = file.file_stem().unwrap().to_string_lossy().into_owned();
        let mut outputs = Vec::new();
        let mut codes = Vec::new();
        for run in 0..2 {
            let out = tmp.path().join(format!("{name}-{run}.csv"));
            let status = hblab()
                .args(["--quiet", "--config"])
                .arg(file)
                .arg("--out")
                .arg(&out)
                .status()
                .unwrap();
            codes.push(status.code());
            outputs.push(std::fs::read(&out).unwrap_or_default());
        }
        let same = !outputs[0].is_empty() && outputs[0] == outputs[1] && codes[0] == codes[1];
        let expected_code = codes[0].is_some_and(|c| c == 0 || c == 3);
        ok &= same && expected_code;
        parts.push(format!(
            "{name}: exit {:?}, {} bytes, {}",
            codes[0],
            outputs[0].len(),
            if same { "identical" } else { "DIFFERENT" }
        ));
    }

    Check {
        id: 10,
        name: "harness determinism",
        ok,
        detail: parts.join("; "),
        elapsed: start.elapsed(),
        budget: Duration::from_secs(30),
    }
}

fn main() {
    let mut checks = selftest::library_checks();
    checks.push(harness_determinism());
    for c in &checks {
        println!("{}", c.line());
    }
    let failed: Vec<u32> = checks.iter().filter(|c| !c.passed()).map(|c| c.id).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
