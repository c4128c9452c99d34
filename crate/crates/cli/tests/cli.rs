use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;
use tlg_core::io::{graph_from_json, graph_to_json, tower_from_json};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn tlg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlg")).args(args).current_dir(dir).env_remove("TLG_SEED").output().expect("runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn checksum(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Files and checksums listed in a manifest; every other file in the directory must be listed.
fn manifest_files(dir: &Path) -> Vec<(String, String)> {
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let files: Vec<(String, String)> = m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["name"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect();
    let on_disk = fs::read_dir(dir).unwrap().filter(|e| e.as_ref().unwrap().file_name() != "manifest.json").count();
    assert_eq!(files.len(), on_disk, "manifest lists every output");
    files
}

#[test]
fn verify_reports_printed_verdicts() {
    let tmp = TempDir::new().unwrap();
    let o = tlg(&["verify", fixture("pic1.json").to_str().unwrap(), "--out", "pic1"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("TLG: yes, TLG*: no"), "{}", stdout(&o));
    assert!(!tmp.path().join("pic1").exists());
    for name in ["minimal", "sl3"] {
        let o = tlg(&["verify", fixture(&format!("{name}.json")).to_str().unwrap(), "--out", name], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("TLG*: yes"));
        let tower = tower_from_json(&fs::read_to_string(tmp.path().join(name).join("tower.json")).unwrap()).unwrap();
        let graph = graph_from_json(&fs::read_to_string(fixture(&format!("{name}.json"))).unwrap()).unwrap();
        assert!(tower.reproduces(&graph));
    }
}

#[test]
fn general_graphs_get_star_star_verdicts() {
    let tmp = TempDir::new().unwrap();
    let o = tlg(&["verify", fixture("sl27.json").to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("TLG**: no"));
    let o = tlg(&["verify", fixture("binary-split.json").to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(tmp.path().join("tlg-out/verify/tower.json").exists());
}

#[test]
fn parse_errors_name_the_position() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("bad.json"), "{\"kind\": \"simple\",\n \"vertices\": [{\"id\": 0}], \"edges\": []}").unwrap();
    let o = tlg(&["verify", "bad.json"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("time") && e.contains("line 2"), "{e}");
}

#[test]
fn missing_input_is_an_error() {
    let tmp = TempDir::new().unwrap();
    let o = tlg(&["verify", "nowhere.json"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere.json"));
}

#[test]
fn stochastic_commands_need_a_seed() {
    let tmp = TempDir::new().unwrap();
    let o = tlg(&["she", "--n", "16"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("TLG_SEED"));
    let o = Command::new(env!("CARGO_BIN_EXE_tlg"))
        .args(["she", "--n", "16", "--pixels", "8"])
        .current_dir(tmp.path())
        .env("TLG_SEED", "4")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = fs::read_to_string(tmp.path().join("tlg-out/she/manifest.json")).unwrap();
    assert!(m.contains("\"seed\": 4"));
}

#[test]
fn outputs_are_not_overwritten_without_force() {
    let tmp = TempDir::new().unwrap();
    let args = ["she", "--n", "16", "--seed", "1", "--pixels", "8", "--out", "o"];
    assert_eq!(tlg(&args, tmp.path()).status.code(), Some(0));
    let again = tlg(&args, tmp.path());
    assert_eq!(again.status.code(), Some(1));
    assert!(stderr(&again).contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(tlg(&forced, tmp.path()).status.code(), Some(0));
}

#[test]
fn stochastic_commands_are_byte_identical_on_rerun() {
    let one_cell = fixture("models/one-cell-brownian.json");
    let runs: Vec<Vec<&str>> = vec![
        vec!["she", "--n", "64", "--pixels", "32"],
        vec!["she", "--mode", "weak", "--ns", "16,64", "--reps", "3"],
        vec!["she", "--mode", "mse", "--ns", "16,64", "--reps", "2"],
        vec!["rhombus", "--n", "16", "--pixels", "32", "--reps", "3", "--ns", "16"],
        vec!["gwtree", "--reps", "20", "--horizon", "1.5"],
        vec!["maxima", "--ns", "1,3", "--reps", "50", "--grid", "6"],
        vec!["sample", "--model", one_cell.to_str().unwrap(), "--reps", "5"],
        vec!["counterexample", "--reps", "200"],
    ];
    let tmp = TempDir::new().unwrap();
    for (i, args) in runs.iter().enumerate() {
        let mut seen = Vec::new();
        for pass in 0..2 {
            let out = format!("run{i}-{pass}");
            let mut a = args.clone();
            a.extend(["--seed", "7", "--out", &out]);
            let o = tlg(&a, tmp.path());
            assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
            let dir = tmp.path().join(&out);
            let files = manifest_files(&dir);
            for (name, sum) in &files {
                assert_eq!(&checksum(&fs::read(dir.join(name)).unwrap()), sum, "{name}");
            }
            seen.push(fs::read(dir.join("manifest.json")).unwrap());
        }
        assert_eq!(seen[0], seen[1], "{args:?}: manifests differ");
    }
}

#[test]
fn different_seeds_give_different_fields() {
    let tmp = TempDir::new().unwrap();
    for s in ["1", "2"] {
        tlg(&["she", "--n", "16", "--pixels", "8", "--seed", s, "--out", s], tmp.path());
    }
    assert_ne!(fs::read(tmp.path().join("1/field.csv")).unwrap(), fs::read(tmp.path().join("2/field.csv")).unwrap());
}

#[test]
fn counterexample_table_shows_both_values() {
    let tmp = TempDir::new().unwrap();
    let o = tlg(&["counterexample"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("tlg-out/counterexample/counterexample.csv")).unwrap();
    let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').skip(1).take(3).map(|v| v.parse().unwrap()).collect();
    assert!((row[0] - 2.0 / 15.0).abs() < 1e-12);
    assert!((row[1] - 1.0 / 3.0).abs() < 1e-15);
    assert!((row[2] - 0.2).abs() < 1e-15);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("tlg-out/counterexample/manifest.json")).unwrap()).unwrap();
    assert!(m["seed"].is_null());
}

#[test]
fn heatmaps_are_plain_pgm() {
    let tmp = TempDir::new().unwrap();
    tlg(&["rhombus", "--n", "16", "--pixels", "20", "--seed", "3", "--out", "r"], tmp.path());
    let p = fs::read_to_string(tmp.path().join("r/heatmap.pgm")).unwrap();
    let mut lines = p.lines();
    assert_eq!(lines.next(), Some("P2"));
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(lines.next(), Some("20 20"));
    assert_eq!(lines.next(), Some("255"));
    let px: Vec<u32> = lines.flat_map(|l| l.split_whitespace().map(|v| v.parse::<u32>().unwrap()).collect::<Vec<_>>()).collect();
    assert_eq!(px.len(), 400);
    assert!(px.iter().all(|&v| v <= 255));
    assert!(px.contains(&0) && px.contains(&255));
}

#[test]
fn cellcheck_passes_on_fixture_models() {
    let tmp = TempDir::new().unwrap();
    for m in ["one-cell-brownian", "pic34-brownian", "sl3-brownian", "coupling-bridge"] {
        let o = tlg(&["cellcheck", "--model", fixture(&format!("models/{m}.json")).to_str().unwrap(), "--out", m], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{m}: {}", stderr(&o));
        assert!(!stdout(&o).contains("FAIL"));
    }
}

#[test]
fn covariance_of_one_cell_sides() {
    let tmp = TempDir::new().unwrap();
    let o = tlg(&["covariance", "--graph", fixture("one-cell.json").to_str().unwrap(), "--points", "0@0.5,1@0.5"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("tlg-out/covariance/covariance.csv")).unwrap();
    let cross: f64 = csv.lines().nth(2).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((cross - 0.25).abs() < 1e-12, "{csv}");
}

#[test]
fn gwtree_writes_tree_and_sidecars() {
    let tmp = TempDir::new().unwrap();
    let o = tlg(&["gwtree", "--reps", "10", "--seed", "2", "--out", "g"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d = tmp.path().join("g");
    let g = graph_from_json(&fs::read_to_string(d.join("tree.json")).unwrap()).unwrap();
    let nodes = fs::read_to_string(d.join("nodes.csv")).unwrap();
    assert_eq!(nodes.lines().count() - 1, g.num_edges());
    assert!(fs::read_to_string(d.join("field.csv")).unwrap().starts_with("label,time,value\nroot,0,0\n"));
    assert!(d.join("population.csv").exists());
}

#[test]
fn fixture_files_match_the_library() {
    for (name, g) in tlg_core::fixtures::all() {
        let text = fs::read_to_string(fixture(&format!("{name}.json"))).unwrap();
        assert_eq!(text, graph_to_json(&g), "{name}");
        assert_eq!(graph_to_json(&graph_from_json(&text).unwrap()), text);
    }
}
