use std::path::Path;
use std::process::{Command, Output};

use mcss::synth::SceneBundle;
use mcss_cli::SolutionReport;

fn mcss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcss")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let o = mcss(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = "[synth.views]\ncount = 3\nwidth = 64\nheight = 48\n[mcss]\niterations = 50\n";

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    std::fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn synth_then_search_then_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let scene = tmp.path().join("scene");
    ok(&["--config", &cfg, "--seed", "3", "synth", "--out", s(&scene)]);
    let bundle = SceneBundle::load(&scene).unwrap();
    assert_eq!(bundle.obs.views.len(), 3);
    assert!(bundle.gt.is_some());

    let out = tmp.path().join("run");
    ok(&["--config", &cfg, "search", "--scene", s(&scene), "--out", s(&out), "--iterations", "1"]);
    let report: SolutionReport = serde_json::from_str(&std::fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
    assert!(report.feasible);
    assert_eq!(std::fs::read_to_string(out.join("convergence.csv")).unwrap().lines().count(), 2);

    let eval = tmp.path().join("eval.json");
    ok(&["eval", "--scene", s(&scene), "--solution", s(&out.join("solution.json")), "--out", s(&eval)]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(eval).unwrap()).unwrap();
    assert!(v.get("corners").is_some());

    let base = tmp.path().join("hill");
    ok(&["--config", &cfg, "baseline", "--scene", s(&scene), "--out", s(&base), "--method", "hill-climb-global"]);
    assert!(base.join("solution.json").exists());
}

#[test]
fn same_seed_writes_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["--config", &cfg, "--seed", "9", "synth", "--out", s(&a)]);
    ok(&["--config", &cfg, "--seed", "9", "synth", "--out", s(&b)]);
    for name in ["pool.json", "gt.json", "views.json", "cloud.ply"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    for run in ["ra", "rb"] {
        ok(&["--config", &cfg, "--seed", "9", "search", "--scene", s(&a), "--out", s(&tmp.path().join(run)), "--mode", "objects"]);
    }
    for name in ["solution.json", "convergence.csv"] {
        assert_eq!(
            std::fs::read(tmp.path().join("ra").join(name)).unwrap(),
            std::fs::read(tmp.path().join("rb").join(name)).unwrap()
        );
    }
}

#[test]
fn bad_config_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[weights]\nlambda_p = -2.0\n").unwrap();
    let o = mcss(&["--config", s(&cfg), "synth", "--out", s(&tmp.path().join("x"))]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert!(!tmp.path().join("x").exists());

    std::fs::write(&cfg, "[weights]\nlambda = 1.0\n").unwrap();
    assert!(!mcss(&["--config", s(&cfg), "synth", "--out", s(&tmp.path().join("x"))]).status.success());
}

#[test]
fn missing_inputs_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mcss(&["search", "--scene", s(&tmp.path().join("nowhere")), "--out", s(&tmp.path().join("o"))]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("not found"));
    let o = mcss(&["ransac", "--cloud", s(&tmp.path().join("c.ply")), "--out", s(&tmp.path().join("p.json"))]);
    assert!(!o.status.success());
    assert!(!mcss(&["search"]).status.success());
}
