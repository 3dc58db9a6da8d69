//! CLI acceptance: determinism, full-precision round-trips, report
//! verification, and exit-code discipline.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fracheat")
}

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

/// Criterion 11: repeated runs with a warm cache and fixed seed produce
/// byte-identical outputs, and every emitted number parses back exactly.
#[test]
fn criterion_11_determinism_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "--s",
        "0.75",
        "--grid",
        "96",
        "--modes",
        "8",
        "--region",
        "1.5:2.5",
        "--seed",
        "42",
        "--out",
        "out",
        "--cache",
        "cache",
    ];

    // Cold run.
    for cmd in ["eigen", "trace", "solve", "dual", "control", "muntz"] {
        let out = run(&[&base[..], &[cmd]].concat(), dir.path());
        assert!(
            out.status.success(),
            "{cmd} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let files = [
        "out/eigenvalues.csv",
        "out/traces.csv",
        "out/trajectory.csv",
        "out/dual_trajectory.csv",
        "out/dual_trace.csv",
        "out/controlled_trajectory.csv",
        "out/control_report.json",
        "out/muntz.csv",
    ];
    let cold: Vec<Vec<u8>> = files.iter().map(|f| read(&dir.path().join(f))).collect();

    // Warm rerun: cache hit, same seed; outputs must be byte-identical.
    for cmd in ["eigen", "trace", "solve", "dual", "control", "muntz"] {
        let out = run(&[&base[..], &[cmd]].concat(), dir.path());
        assert!(out.status.success(), "warm {cmd} failed");
    }
    for (f, before) in files.iter().zip(&cold) {
        let after = read(&dir.path().join(f));
        assert_eq!(
            &after, before,
            "[FAIL] criterion 11: {f} differs between identical runs"
        );
    }

    // Every CSV number round-trips at full precision: parse and re-format.
    let mut numbers = 0usize;
    for f in files.iter().filter(|f| f.ends_with(".csv")) {
        let text = String::from_utf8(read(&dir.path().join(f))).unwrap();
        for line in text.lines().skip(1) {
            for cell in line.split(',') {
                if cell.contains('e') {
                    let v: f64 = cell.parse().unwrap_or_else(|_| {
                        panic!("[FAIL] criterion 11: unparseable cell `{cell}` in {f}")
                    });
                    assert_eq!(
                        format!("{v:.16e}"),
                        cell,
                        "[FAIL] criterion 11: cell in {f} does not round-trip"
                    );
                    numbers += 1;
                }
            }
        }
    }
    assert!(numbers > 100, "round-trip check saw too few numbers");

    // The report verifies, and a tampered copy is rejected with the
    // numerical-failure exit code.
    let report = dir.path().join("out/control_report.json");
    let ok = run(&["verify", report.to_str().unwrap()], dir.path());
    assert!(ok.status.success(), "fresh report must verify");

    let tampered = dir.path().join("out/tampered.json");
    let text = String::from_utf8(read(&report)).unwrap();
    let defect_line = text
        .lines()
        .find(|l| l.contains("\"terminal_defect\""))
        .expect("report carries a defect");
    let edited = text.replace(defect_line, "  \"terminal_defect\": 1.2345000000000000e-2,");
    assert_ne!(edited, text, "tampering must change the document");
    std::fs::write(&tampered, edited).unwrap();
    let bad = run(&["verify", tampered.to_str().unwrap()], dir.path());
    assert!(!bad.status.success());
    assert_eq!(
        bad.status.code(),
        Some(3),
        "tampered report is a numerical failure"
    );
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert!(
        stdout.contains("[FAIL] terminal_defect"),
        "mismatch detail missing:\n{stdout}"
    );

    println!(
        "[PASS] criterion 11: byte-identical reruns, {numbers} numbers round-trip exactly, tampered report rejected with exit code 3"
    );
}

/// Exit-code classes: 2 for configuration, 3 for numerical, 4 for I/O.
#[test]
fn exit_code_discipline() {
    let dir = tempfile::tempdir().unwrap();

    // Config class: invalid order.
    let out = run(&["--s", "1.2", "eigen"], dir.path());
    assert_eq!(out.status.code(), Some(2), "s outside (0,1) is a config error");
    // Config class: malformed region.
    let out = run(&["--region", "0:0.5", "eigen"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // Config class: unknown key in the config file.
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "[problem]\nwat = 1\n").unwrap();
    let out = run(&["--config", conf.to_str().unwrap(), "eigen"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.lines().count() <= 2, "single-line diagnostic, got: {err}");

    // Numerical class: region touching the boundary with s >= 1/2 has a
    // divergent observation norm.
    let out = run(
        &[
            "--s", "0.75", "--grid", "32", "--modes", "4", "--region", "1:1.5", "--out", "o",
            "--cache", "c", "control",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "divergent trace is numerical");

    // I/O class: missing report file.
    let out = run(&["verify", "does-not-exist.json"], dir.path());
    assert_eq!(out.status.code(), Some(4));

    println!("[PASS] exit codes: config 2, numerical 3, i/o 4");
}

/// The example configuration in the repository parses, validates and
/// drives a full control run.
#[test]
fn example_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let conf = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/example.conf");
    let out = run(
        &[
            "--config",
            conf.to_str().unwrap(),
            "--grid",
            "64",
            "--modes",
            "6",
            "control",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "example config failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("out/control_report.json").exists());
}
