use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hintlock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hintlock"))
        .args(args)
        .env_remove("HINTLOCK_JOBS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn entropy_of_uniform_four_is_two_bits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e.json", r#"{"source": {"probs": [0.25, 0.25, 0.25, 0.25]}}"#);
    let o = hintlock(&["entropy", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    for line in text.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 2.0).abs() < 1e-12, "{text}");
    }
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn two_hint_sweep_on_four_symbols_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "t.json",
        r#"{"source": {"probs": [0.4, 0.3, 0.2, 0.1]}, "rho": [1.0], "twohint": {"m1": 4, "m2": 4}}"#,
    );
    let out = dir.path().join("t.csv");
    let o = hintlock(&["twohint", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("suite,instance,theorem,inequality,lhs,rhs,slack,pass,runtime_ms\r\n"));
    assert!(!csv.contains(",false,"));
    let md = fs::read_to_string(dir.path().join("t.md")).unwrap();
    assert!(md.contains("seed: 2024") && md.contains("All checks pass."));
}

#[test]
fn failing_check_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    // Constant hints leave Bob at E[G] = 2.5 on four equally likely symbols.
    let cfg = write_config(
        dir.path(),
        "f.json",
        r#"{"source": {"probs": [0.25, 0.25, 0.25, 0.25]}, "version": "guessing",
            "twohint": {"m1": 1, "m2": 1, "triples": [[1, 1, 1]], "u_bound": 1.5}}"#,
    );
    let o = hintlock(&["twohint", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("bob-below-target"));
}

#[test]
fn exponent_below_threshold_is_minus_infinity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "x.json",
        r#"{"exponent": [{"kind": "two-hint", "r1": 0.5, "r2": 0.5, "rho": 1, "entropy_rate": 1.5},
                         {"kind": "rd-privacy", "r1": 1, "r2": 1, "rho": 1, "functional": 1.5}]}"#,
    );
    let o = hintlock(&["exponent", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("0,two-hint,-inf,"), "{text}");
    assert!(text.contains("1,rd-privacy,1,"), "{text}");
}

#[test]
fn functional_query_dumps_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "w.json",
        r#"{"source": {"probs": [0.5, 0.3, 0.2]}, "distortion": {"level": 0.0},
            "exponent": [{"kind": "rd-functional", "level": 0.0, "rho": 1, "dump_witness": true},
                         {"kind": "rd-function", "level": 0.0}]}"#,
    );
    let out = dir.path().join("w.csv");
    let o = hintlock(&["exponent", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let witness = fs::read_to_string(dir.path().join("w.witness0.json")).unwrap();
    assert!(witness.contains("\"p\""));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn verify_all_is_reproducible() {
    let run = || hintlock(&["verify-all", "--suite", "secrecy-notions", "--suite", "eve-list", "--no-runtime", "--seed", "5"]);
    let (a, b) = (run(), run());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stderr).contains("seed: 5"));
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"source": {"probs": [1.0]}, "disks": {"delta": 3, "nu": "two", "eta": 1, "s": 4}}"#);
    let o = hintlock(&["disks", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("disks.nu"));
}

#[test]
fn rational_mode_wants_exact_sums() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "r.json", r#"{"source": {"probs": [0.3333333333, 0.3333333333, 0.3333333334]}}"#);
    assert!(hintlock(&["entropy", cfg.to_str().unwrap()]).status.success());
    let cfg = write_config(dir.path(), "r2.json", r#"{"source": {"probs": [0.3333333333, 0.3333333333, 0.3333333333]}}"#);
    assert_eq!(hintlock(&["entropy", cfg.to_str().unwrap(), "--rational"]).status.code(), Some(2));
}

#[test]
fn jobs_variable_must_be_a_count() {
    let o = Command::new(env!("CARGO_BIN_EXE_hintlock"))
        .args(["verify-all", "--suite", "secrecy-notions", "--jobs", "2"])
        .env("HINTLOCK_JOBS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("HINTLOCK_JOBS"));
}

#[test]
fn disks_choose_the_split_from_a_target() {
    let dir = tempfile::tempdir().unwrap();
    let probs: Vec<String> = (0..16).map(|_| "0.0625".to_string()).collect();
    let body = format!(
        r#"{{"source": {{"probs": [{}]}}, "disks": {{"delta": 3, "nu": 2, "eta": 1, "s": 4, "u_bound": 5}}}}"#,
        probs.join(",")
    );
    let cfg = write_config(dir.path(), "d.json", &body);
    let o = hintlock(&["disks", cfg.to_str().unwrap(), "--rational", "--no-runtime"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("bob-below-target"));
}

#[test]
fn guess_task_and_distortion_commands_pass() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), "x,a,b,c\na,0,0.4,1\nb,0.7,0,0.3\nc,0.2,0.9,0\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "g.json",
        r#"{"source": {"x": ["a","b","c"], "y": ["u","v"], "p": [[0.2, 0.1], [0.15, 0.25], [0.05, 0.25]]},
            "rho": [0.5, 2.0], "z_counts": [2, 3],
            "distortion": {"table": "d.csv", "level": 0.35, "n": 2, "z_count": 2}}"#,
    );
    for cmd in ["guess", "task", "distortion"] {
        let o = hintlock(&[cmd, cfg.to_str().unwrap()]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).lines().count() > 2, "{cmd}");
    }
}
