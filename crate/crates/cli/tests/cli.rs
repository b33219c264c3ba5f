use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn crt(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crt"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("CRT_OUT_DIR")
        .output()
        .expect("spawn crt")
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let args = ["simulate", "--model", "marchal", "--beta", "0.5", "--n", "100", "--seed", "1"];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(crt(&args, a.path()).status.success());
    assert!(crt(&args, b.path()).status.success());
    for file in ["marchal_trajectory.csv", "marchal_r0.json"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, workers) in dirs.iter().zip(["1", "3"]) {
        let args = [
            "--workers",
            workers,
            "simulate",
            "--model",
            "two_colour",
            "--beta",
            "1/3",
            "--k",
            "15",
            "--replicates",
            "6",
            "--seed",
            "9",
            "--format",
            "csv",
        ];
        assert!(crt(&args, dir.path()).status.success());
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("two_colour_trajectory.csv")).unwrap();
    assert_eq!(read(&dirs[0]), read(&dirs[1]));
}

#[test]
fn every_model_simulates() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 8] = [
        &["--model", "two_colour", "--beta", "1/3"],
        &["--model", "stable_mass", "--beta", "0.25"],
        &["--model", "ford", "--beta-prime", "1/2"],
        &["--model", "marchal", "--beta", "1/2"],
        &["--model", "alpha_gamma", "--alpha", "0.5", "--gamma", "0.25"],
        &["--model", "discrete_two_colour", "--beta", "1/3"],
        &["--model", "recursive", "--beta", "1/3", "--depth", "2"],
        &["--model", "branch_replace", "--beta", "1/3"],
    ];
    for case in cases {
        let mut args = vec!["simulate", "--k", "8", "--seed", "3", "--format", "newick"];
        args.extend_from_slice(case);
        let out = crt(&args, dir.path());
        assert!(out.status.success(), "{case:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 16);
}

#[test]
fn bad_input_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| crt(args, dir.path()).status.code();
    assert_eq!(code(&["simulate", "--model", "marchal", "--beta", "0.7", "--seed", "1"]), Some(2));
    assert_eq!(code(&["simulate", "--model", "ford", "--seed", "1"]), Some(2));
    assert_eq!(code(&["oracle", "--model", "marchal", "--beta", "1/2", "--n", "20"]), Some(3));
    assert_eq!(code(&["verify", "--bundle", "metrics"]), Some(2));
}

#[test]
fn oracle_probabilities_sum_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = crt(&["oracle", "--model", "alpha_gamma", "--alpha", "1/2", "--gamma", "1/4", "--n", "5"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("total probability 1\n"));
    let csv = fs::read_to_string(dir.path().join("oracle_alpha_gamma_n5.csv")).unwrap();
    let total: f64 = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn verify_writes_report_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = crt(&["verify", "--bundle", "duality", "--beta", "1/3", "--n", "5", "--seed", "1"], dir.path());
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("verify_duality.json")).unwrap()).unwrap();
    assert_eq!(report.as_array().unwrap().len(), 2);
}

#[test]
fn export_round_trips_through_newick() {
    let dir = tempfile::tempdir().unwrap();
    assert!(crt(&["simulate", "--model", "stable_mass", "--beta", "1/3", "--k", "6", "--seed", "2"], dir.path())
        .status
        .success());
    let json = dir.path().join("stable_mass_r0.json");
    let nwk = dir.path().join("t.nwk");
    let back = dir.path().join("t.json");
    let run = |input: &Path, from: &str, to: &str, output: &Path| {
        Command::new(env!("CARGO_BIN_EXE_crt"))
            .args(["export", "--from", from, "--to", to, "--input"])
            .arg(input)
            .arg("--output")
            .arg(output)
            .status()
            .unwrap()
    };
    assert!(run(&json, "json", "newick", &nwk).success());
    assert!(run(&nwk, "newick", "json", &back).success());
    assert!(run(&back, "json", "newick", &dir.path().join("u.nwk")).success());
    assert_eq!(fs::read(&nwk).unwrap(), fs::read(dir.path().join("u.nwk")).unwrap());
}
