use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_moritakit"));
    c.env_remove("MORITAKIT_SEED");
    c
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/co5_columns.json")
}

fn run(args: &[&str], scene: &Path) -> Output {
    bin().args(args).arg(scene).output().unwrap()
}

fn json_report(out: &Output) -> Value {
    let mut v: Value = serde_json::from_slice(&out.stdout).unwrap();
    v.as_object_mut().unwrap().remove("timings");
    v
}

#[test]
fn fixture_passes_every_command() {
    for cmd in ["check", "dilate", "induce", "sme", "linking", "transfer", "roundtrip"] {
        let out = run(&[cmd], &fixture());
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn json_report_lists_residuals_and_witnesses() {
    let out = run(&["transfer", "--json"], &fixture());
    assert_eq!(out.status.code(), Some(0));
    let v = json_report(&out);
    let tasks = v["tasks"].as_array().unwrap();
    assert_eq!(tasks.len(), 2);
    for t in tasks {
        assert_eq!(t["verdict"], "pass");
        assert!(t["residuals"]["intertwining"].as_f64().unwrap() < 1e-9);
        assert_eq!(t["witnesses"][0]["name"], "U");
    }
    assert_eq!(v["passed"], 2);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("rel7.json");
    let gen = bin().args(["gen", "rel7-instance", "--seed", "11", "--out"]).arg(&scene).output().unwrap();
    assert_eq!(gen.status.code(), Some(0));
    let a = run(&["rel7", "--json", "--seed", "4"], &scene);
    let b = run(&["rel7", "--json", "--seed", "4"], &scene);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(json_report(&a), json_report(&b));
    let l1 = run(&["linking", "--json", "--seed", "9"], &fixture());
    let l2 = run(&["linking", "--json", "--seed", "9"], &fixture());
    assert_eq!(json_report(&l1), json_report(&l2));
}

#[test]
fn perturbed_bimodule_action_fails_with_residual() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture()).unwrap();
    let perturbed = text.replace(
        r#""action": [[[1], [0]], [[0], [1]]]"#,
        r#""action": [[[1.001], [0]], [[0], [1]]]"#,
    );
    assert_ne!(text, perturbed);
    let scene = dir.path().join("perturbed.json");
    std::fs::write(&scene, perturbed).unwrap();
    let out = run(&["check", "--json"], &scene);
    assert_eq!(out.status.code(), Some(1));
    let v = json_report(&out);
    let w = v["tasks"].as_array().unwrap().iter().find(|t| t["label"] == "W").unwrap();
    assert_eq!(w["verdict"], "fail");
    let worst = w["residuals"].as_object().unwrap().values().map(|r| r.as_f64().unwrap()).fold(0.0, f64::max);
    assert!(worst > 1e-4, "{worst}");
}

#[test]
fn invalid_scenes_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture()).unwrap();
    let dangling = dir.path().join("dangling.json");
    std::fs::write(&dangling, text.replace(r#""right": "C""#, r#""right": "D""#)).unwrap();
    let out = run(&["check"], &dangling);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("invalid object 'X'") && err.contains("unknown algebra 'D'"), "{err}");

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"objects\": [").unwrap();
    assert_eq!(run(&["check"], &broken).status.code(), Some(2));
    assert_eq!(run(&["check"], &dir.path().join("missing.json")).status.code(), Some(2));
    assert_eq!(run(&["rel7"], &fixture()).status.code(), Some(2));
}

#[test]
fn generated_scenes_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, cmds) in [
        ("algebra", &["check"][..]),
        ("bimodule", &["check"]),
        ("cpmap", &["check", "dilate"]),
        ("expectation-pair", &["check", "rel7", "rel10"]),
        ("co5-instance", &["check", "transfer", "roundtrip"]),
        ("rel7-instance", &["rel7", "rel10"]),
    ] {
        let scene = dir.path().join(format!("{kind}.json"));
        let gen = bin().args(["gen", kind, "--seed", "2", "--out"]).arg(&scene).output().unwrap();
        assert_eq!(gen.status.code(), Some(0), "{kind}");
        for cmd in cmds {
            let out = run(&[cmd], &scene);
            assert_eq!(out.status.code(), Some(0), "{kind} {cmd}: {}", String::from_utf8_lossy(&out.stdout));
        }
    }
}

#[test]
fn incompatible_pair_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("inc.json");
    let gen = bin().args(["gen", "expectation-pair", "--incompatible", "--out"]).arg(&scene).output().unwrap();
    assert_eq!(gen.status.code(), Some(0));
    assert_eq!(run(&["rel10"], &scene).status.code(), Some(1));
}

#[test]
fn seed_can_come_from_the_environment() {
    let gen = |seed: Option<&str>, flag: Option<&str>| {
        let mut c = bin();
        c.args(["gen", "co5-instance"]);
        if let Some(s) = seed {
            c.env("MORITAKIT_SEED", s);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        c.output().unwrap().stdout
    };
    assert_eq!(gen(Some("5"), None), gen(None, Some("5")));
    assert_ne!(gen(Some("5"), None), gen(None, Some("6")));
}

#[test]
fn report_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("out.txt");
    let out = bin().arg("dilate").arg(fixture()).arg("--report").arg(&report).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(report).unwrap();
    assert!(text.contains("summary  2 passed  0 failed"), "{text}");
}

#[test]
fn transfer_instances_up_to_ambient_six_pass() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..8 {
        let scene = dir.path().join(format!("co5-{seed}.json"));
        let args = ["gen", "co5-instance", "--max-ambient", "6", "--seed", &seed.to_string(), "--out"];
        assert_eq!(bin().args(args).arg(&scene).output().unwrap().status.code(), Some(0));
        for cmd in ["transfer", "roundtrip"] {
            let out = run(&[cmd], &scene);
            assert_eq!(out.status.code(), Some(0), "seed {seed} {cmd}: {}", String::from_utf8_lossy(&out.stdout));
        }
    }
}
