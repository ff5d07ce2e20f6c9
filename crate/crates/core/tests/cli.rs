use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_liouville-pt"));
    c.env_remove("LIOUVILLE_PT_THREADS");
    c
}

fn run_small(out: &std::path::Path, threads: &str) -> std::process::Output {
    bin()
        .args(["run", "--model", "spin_ring", "--sites", "3", "--sweep", "delta_omega_over_gamma:-2:2:9", "--threads", threads])
        .arg("--output")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn run_writes_identical_csv_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let oa = run_small(&a, "1");
    let ob = run_small(&b, "3");
    assert_eq!(oa.status.code(), Some(0), "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(ob.status.code(), Some(0));
    let ca = std::fs::read(a.join("spin_ring.csv")).unwrap();
    let cb = std::fs::read(b.join("spin_ring.csv")).unwrap();
    assert_eq!(ca, cb);
    assert_eq!(String::from_utf8(ca).unwrap().lines().count(), 11);

    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["failed_points"], 0);
    assert_eq!(manifest["grid"].as_array().unwrap().len(), 9);
    assert_eq!(manifest["threads"], 1);
    assert!(a.join("spin_ring_sigma_minus_1.svg").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["frobnicate"],
        vec!["run", "--sweep", "delta_omega_over_gamma:0:1:1"],
        vec!["run", "--sweep", "nonsense:0:1:5"],
        vec!["run", "--threads", "0"],
        vec!["run", "--eps-over-gamma", "abc"],
        vec!["verify", "--criteria", "11"],
    ] {
        let mut cmd = bin();
        cmd.args(&args);
        if args[0] == "run" {
            cmd.arg("--output").arg(dir.path());
        }
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn verify_subset_passes_and_reports_json() {
    let out = bin().args(["verify", "--criteria", "1,2,9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["all_passed"], true);
    assert_eq!(report["criteria"].as_array().unwrap().len(), 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().filter(|l| l.contains("PASS")).count(), 3);
}

#[test]
fn verify_with_flipped_perturbation_exits_with_one() {
    let out = bin().args(["verify", "--criteria", "2", "--mutate-l1-sign"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["criteria"][0]["passed"], false);
}

#[test]
fn help_exits_with_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verify"));
}
