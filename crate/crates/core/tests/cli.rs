use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_meo-rrm"))
}

fn desk() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/desk_3sat_120users.json")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().arg("run").args(args).arg("--out").arg(out).output().unwrap()
}

#[test]
fn help_lists_every_option() {
    let o = bin().args(["run", "--help"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in [
        "--scenario",
        "--algorithm",
        "--out",
        "--seed",
        "--slots",
        "--solver",
        "--verbose",
    ] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn run_writes_both_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--scenario", desk().to_str().unwrap(), "--dump-matching"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for alg in ["proposed", "greedy"] {
        for f in ["metrics.csv", "summary.json", "clusters.json", "matching.json"] {
            assert!(dir.path().join(alg).join(f).exists(), "{alg}/{f}");
        }
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("proposed/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["algorithm"], "proposed");
    assert_eq!(summary["num_users"], 120);
}

#[test]
fn seed_and_slot_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let s = desk();
    let base = [
        "--scenario",
        s.to_str().unwrap(),
        "--algorithm",
        "greedy",
        "--slots",
        "2:6",
    ];
    assert!(run(&base, &dir.path().join("a")).status.success());
    let mut seeded = base.to_vec();
    seeded.extend(["--seed", "99"]);
    assert!(run(&seeded, &dir.path().join("b")).status.success());
    let a = std::fs::read_to_string(dir.path().join("a/greedy/metrics.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b/greedy/metrics.csv")).unwrap();
    assert_eq!(a.lines().count(), 5);
    assert!(a.lines().nth(1).unwrap().starts_with("2,"));
    assert_ne!(a, b);
    assert!(!dir.path().join("a/proposed").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    let missing = run(&["--scenario", "/nonexistent/scenario.json"], dir.path());
    assert_eq!(missing.status.code(), Some(3));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"cities": [], "power": {"rf_power_max_w": "lots"}}"#).unwrap();
    let o = run(&["--scenario", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("power.rf_power_max_w"));

    let o = run(&["--scenario", desk().to_str().unwrap(), "--slots", "5:2"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    let wide = dir.path().join("wide.json");
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(desk()).unwrap()).unwrap();
    doc["user_spread_km"] = 250.0.into();
    std::fs::write(&wide, doc.to_string()).unwrap();
    let o = run(
        &[
            "--scenario",
            wide.to_str().unwrap(),
            "--solver",
            "exact",
            "--algorithm",
            "proposed",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = bin()
        .args(["run", "--scenario", desk().to_str().unwrap(), "--out"])
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn beamwidth_subcommand() {
    let o = bin().args(["beamwidth", "15"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("15,1.9653,"));
}
