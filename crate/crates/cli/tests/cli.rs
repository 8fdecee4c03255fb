use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::Command;
use wlat_cli::cache::{Cache, Entry};
use wlat_cli::{run, EXIT_GUARD, EXIT_NOT_QP, EXIT_OK, EXIT_USAGE};

fn wlat(cache: &Path, args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["wlat".to_string(), "--cache-dir".into(), cache.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (vec![], vec![]);
    let code = run(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json_of(s: &str) -> Value {
    serde_json::from_str(s.trim()).unwrap_or_else(|e| panic!("not json ({e}): {s}"))
}

fn entries(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.extension().is_some_and(|x| x == "json")).collect())
        .unwrap_or_default();
    v.sort();
    v
}

#[test]
fn sha1_on_table_subgroup() {
    let d = tempfile::tempdir().unwrap();
    let (code, out, _) = wlat(d.path(), &["--json", "sha", "--lattice", "Q:8:4", "--subgroup", "table:8:2", "--degree", "1"]);
    assert_eq!(code, EXIT_OK);
    let v = json_of(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["invariants"]["torsion"], serde_json::json!([2]));
    assert_eq!(v["invariants"]["free_rank"], 0);
    assert_eq!(v["subgroup_order"], 4);
}

#[test]
fn cohomology_degrees() {
    let d = tempfile::tempdir().unwrap();
    let cases = [("-1", vec![]), ("0", vec![]), ("1", vec![3]), ("2", vec![])];
    for (deg, torsion) in cases {
        let (code, out, _) = wlat(d.path(), &["--json", "cohom", "--lattice", "ZA:3", "--degree", deg]);
        assert_eq!(code, EXIT_OK, "degree {deg}");
        assert_eq!(json_of(&out)["invariants"]["torsion"], serde_json::json!(torsion), "degree {deg}");
    }
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert_eq!(wlat(p, &["qp-check", "--lattice", "Lambda:4"]).0, EXIT_NOT_QP);
    assert_eq!(wlat(p, &["qp-check", "--lattice", "ZA:4"]).0, EXIT_OK);
    assert_eq!(wlat(p, &["reproduce", "an", "--n", "6", "--d", "3"]).0, EXIT_NOT_QP);
    assert_eq!(wlat(p, &["qp-check", "--lattice", "ZA:7"]).0, EXIT_GUARD);
    assert_eq!(wlat(p, &["cohom", "--lattice", "ZA:4", "--degree", "2", "--guard", "10"]).0, EXIT_GUARD);
    assert_eq!(wlat(p, &["sha", "--lattice", "ZA:4", "--degree", "3"]).0, EXIT_USAGE);
    assert_eq!(wlat(p, &["cohom", "--lattice", "Nope:4", "--degree", "1"]).0, EXIT_USAGE);
    assert_eq!(wlat(p, &["cohom", "--lattice", "Q:6:4", "--degree", "1"]).0, EXIT_USAGE);
    assert_eq!(wlat(p, &["sha", "--lattice", "ZA:4", "--subgroup", "table:6:2", "--degree", "1"]).0, EXIT_USAGE);
    assert_eq!(wlat(p, &["reproduce", "an", "--n", "6", "--d", "1"]).0, EXIT_USAGE);
    assert_eq!(wlat(p, &["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(wlat(p, &["--help"]).0, EXIT_OK);
    assert_eq!(wlat(p, &["--version"]).0, EXIT_OK);
}

#[test]
fn guard_error_is_json_in_json_mode() {
    let d = tempfile::tempdir().unwrap();
    let (code, out, _) = wlat(d.path(), &["--json", "qp-check", "--lattice", "ZA:7"]);
    assert_eq!(code, EXIT_GUARD);
    let v = json_of(&out);
    assert_eq!(v["error"]["kind"], "guard");
}

#[test]
fn oversized_groups_are_refused_not_enumerated() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["--json", "cohom", "--lattice", "ZA:9", "--degree", "1"][..],
        &["--json", "sha", "--lattice", "ZA:9", "--degree", "1"],
        &["--json", "qp-check", "--lattice", "ZA:9", "--scope", "full"],
        &["--json", "sha", "--lattice", "Q:6:3", "--degree", "2"],
    ] {
        let (code, out, _) = wlat(d.path(), args);
        assert_eq!(code, EXIT_GUARD, "{args:?}");
        assert_eq!(json_of(&out)["error"]["kind"], "guard", "{args:?}");
    }
    let (code, out, _) = wlat(d.path(), &["--json", "catalog", "--lattice", "Q:8:4"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(json_of(&out)["lattice"]["action_verified"], Value::Null);
}

#[test]
fn json_output_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--json", "reproduce", "an", "--n", "6", "--d", "3"];
    let first = wlat(a.path(), &args).1;
    let cached = wlat(a.path(), &args).1;
    let fresh = wlat(b.path(), &args).1;
    let uncached = wlat(b.path(), &["--no-cache", "--json", "reproduce", "an", "--n", "6", "--d", "3"]).1;
    assert_eq!(first, cached);
    assert_eq!(first, fresh);
    assert_eq!(first, uncached);
    assert!(!first.contains("millis"));
}

#[test]
fn cache_hit_serves_stored_value() {
    let d = tempfile::tempdir().unwrap();
    let args = ["--json", "sha", "--lattice", "ZA:4", "--degree", "1"];
    let (_, out, _) = wlat(d.path(), &args);
    assert_eq!(json_of(&out)["invariants"]["torsion"], serde_json::json!([]));
    let files = entries(d.path());
    assert_eq!(files.len(), 1);
    // overwrite the stored value; a hit must return it unchanged
    let mut e: Entry = serde_json::from_slice(&fs::read(&files[0]).unwrap()).unwrap();
    e.value["method"] = "planted".into();
    fs::write(&files[0], serde_json::to_vec(&e).unwrap()).unwrap();
    let (_, out, _) = wlat(d.path(), &args);
    assert_eq!(json_of(&out)["method"], "planted");
    let (_, out, _) = wlat(d.path(), &["--no-cache", "--json", "sha", "--lattice", "ZA:4", "--degree", "1"]);
    assert_ne!(json_of(&out)["method"], "planted");
}

#[test]
fn corrupt_entry_is_evicted_and_recomputed() {
    let d = tempfile::tempdir().unwrap();
    let args = ["--json", "cohom", "--lattice", "ZA:3", "--degree", "1"];
    let good = wlat(d.path(), &args).1;
    let files = entries(d.path());
    fs::write(&files[0], b"{\"truncated").unwrap();
    let (code, out, _) = wlat(d.path(), &args);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, good);
    let e: Entry = serde_json::from_slice(&fs::read(&files[0]).unwrap()).unwrap();
    assert_eq!(e.version, wlat_cli::cache::TOOL_VERSION);
}

#[test]
fn version_mismatch_is_a_miss() {
    let d = tempfile::tempdir().unwrap();
    let args = ["--json", "cohom", "--lattice", "ZA:3", "--degree", "1"];
    let good = wlat(d.path(), &args).1;
    let files = entries(d.path());
    let mut e: Entry = serde_json::from_slice(&fs::read(&files[0]).unwrap()).unwrap();
    e.version = "0.0.0".into();
    e.value["method"] = "stale".into();
    fs::write(&files[0], serde_json::to_vec(&e).unwrap()).unwrap();
    assert_eq!(wlat(d.path(), &args).1, good);
    let e: Entry = serde_json::from_slice(&fs::read(&files[0]).unwrap()).unwrap();
    assert_eq!(e.version, wlat_cli::cache::TOOL_VERSION);
}

#[test]
fn no_cache_writes_nothing() {
    let d = tempfile::tempdir().unwrap();
    let sub = d.path().join("c");
    wlat(&sub, &["--no-cache", "cohom", "--lattice", "ZA:3", "--degree", "1"]);
    assert!(!sub.exists());
}

#[test]
fn cache_verbs() {
    let d = tempfile::tempdir().unwrap();
    wlat(d.path(), &["cohom", "--lattice", "ZA:3", "--degree", "1"]);
    wlat(d.path(), &["cohom", "--lattice", "ZA:3", "--degree", "2"]);
    let (_, out, _) = wlat(d.path(), &["--json", "cache", "stats"]);
    assert_eq!(json_of(&out)["stats"]["entries"], 2);
    let (_, out, _) = wlat(d.path(), &["--json", "cache", "clear"]);
    assert_eq!(json_of(&out)["removed"], 2);
    assert!(entries(d.path()).is_empty());
    let (_, out, _) = wlat(d.path(), &["--json", "cache", "path"]);
    assert_eq!(json_of(&out)["path"], d.path().display().to_string());
    assert_eq!(Cache::new(d.path()).stats().entries, 0);
}

#[test]
fn env_var_sets_cache_dir() {
    let d = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wlat"))
        .args(["--json", "cohom", "--lattice", "ZA:3", "--degree", "1"])
        .env("WLAT_CACHE_DIR", d.path())
        .current_dir(d.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(entries(d.path()).len(), 1);
    let out = Command::new(env!("CARGO_BIN_EXE_wlat")).args(["qp-check", "--lattice", "Lambda:4"]).env("WLAT_CACHE_DIR", d.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn subgroup_descriptors() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let order = |args: &[&str]| json_of(&wlat(p, args).1)["subgroup_order"].clone();
    assert_eq!(order(&["--json", "cohom", "--lattice", "ZA:4", "--subgroup", "cyclic:(1 2 3)", "--degree", "0"]), 3);
    assert_eq!(order(&["--json", "cohom", "--lattice", "ZA:4", "--subgroup", "gens:(1 2)(3 4);(1 3)(2 4)", "--degree", "0"]), 4);
    assert_eq!(order(&["--json", "cohom", "--lattice", "ZA:6", "--subgroup", "table:6:2", "--degree", "0"]), 4);
    assert_eq!(wlat(p, &["cohom", "--lattice", "ZA:6", "--subgroup", "table:6:3", "--degree", "0"]).0, EXIT_USAGE);
    assert_eq!(order(&["--json", "cohom", "--lattice", "ZA:6", "--subgroup", "diag:3", "--degree", "0"]), 36);
    assert_eq!(wlat(p, &["cohom", "--lattice", "ZA:6", "--subgroup", "diag:4", "--degree", "0"]).0, EXIT_USAGE);
    assert_eq!(wlat(p, &["cohom", "--lattice", "ZA:6", "--subgroup", "cyclic:(1 9)", "--degree", "0"]).0, EXIT_USAGE);
}

#[test]
fn custom_spec_file() {
    let d = tempfile::tempdir().unwrap();
    let spec = d.path().join("sign.json");
    fs::write(
        &spec,
        r#"{"custom":{"name":"sign","group":{"type":"symmetric","degree":2},"rank":1,"generatorMatrices":[[[-1]]]}}"#,
    )
    .unwrap();
    let s = spec.display().to_string();
    let (code, out, _) = wlat(d.path(), &["--json", "cohom", "--spec", &s, "--degree", "1"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(json_of(&out)["invariants"]["torsion"], serde_json::json!([2]));
    fs::write(&spec, r#"{"custom":{"group":{"type":"symmetric","degree":2},"rank":1,"generatorMatrices":[[[2]]]}}"#).unwrap();
    assert_eq!(wlat(d.path(), &["cohom", "--spec", &s, "--degree", "1"]).0, EXIT_USAGE);
    assert_eq!(wlat(d.path(), &["cohom", "--spec", &s, "--lattice", "ZA:3", "--degree", "1"]).0, EXIT_USAGE);
}

#[test]
fn resolve_and_verify_map() {
    let d = tempfile::tempdir().unwrap();
    for kind in ["flasque", "coflasque"] {
        let (code, out, _) = wlat(d.path(), &["--json", "resolve", "--lattice", "Lambda:3", "--kind", kind]);
        assert_eq!(code, EXIT_OK);
        let v = json_of(&out);
        assert_eq!(v["exact"], true);
        assert_eq!(v["end_term_ok"], true);
    }
    for map in ["so", "sp", "pgl", "weil-so", "weil-sp", "unipotent", "torus", "sl3"] {
        let (code, out, _) = wlat(d.path(), &["--json", "verify-map", "--map", map, "--trials", "10", "--seed", "3"]);
        assert_eq!(code, EXIT_OK, "{map}");
        assert_eq!(json_of(&out)["ok"], true, "{map}");
    }
}
