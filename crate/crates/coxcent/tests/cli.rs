use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use coxcent::report::Report;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_coxcent");
const EXAMPLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/instances/worked_example.toml");
const TREE: &str = "!s1,s5,s6:s2; !s2,s4,s5:s3; !s2,s6,s5:s1";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn analyze_json(extra: &[&str]) -> (String, Report) {
    let mut args = vec!["analyze", EXAMPLE, "--json", "--bound", "2", "--tree-prefer", TREE];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let report: Report = serde_json::from_str(&text).unwrap();
    (text, report)
}

fn set<T: Ord>(it: impl IntoIterator<Item = T>) -> BTreeSet<T> {
    it.into_iter().collect()
}

#[test]
fn worked_example_matches_golden() {
    let golden: Value = serde_json::from_str(include_str!("golden/worked_example.json")).unwrap();
    let (_, r) = analyze_json(&[]);
    let strs = |v: &Value| -> Vec<String> { v.as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect() };
    let vs = &r.cgraph.vertices;
    assert_eq!(set(vs.clone()), set(strs(&golden["vertices"])));
    let loops = set(r.cgraph.loops.iter().map(|l| (vs[l.vertex].clone(), l.generator.clone())));
    let want_loops = set(golden["loops"].as_array().unwrap().iter().map(|p| {
        let p = strs(p);
        (p[0].clone(), p[1].clone())
    }));
    assert_eq!(loops, want_loops);
    assert_eq!(r.cgraph.edges.len() as u64, golden["non_loop_edges"].as_u64().unwrap());
    let cells = set(r.cgraph.cells.iter().map(|c| set(c.iter().map(|&v| vs[v].clone()))));
    let want_cells = set(golden["cells"].as_array().unwrap().iter().map(|c| set(strs(c))));
    assert_eq!(cells, want_cells);
    let tours = set(r.tours.iter().map(|t| (set([vs[t.x].clone(), vs[t.y].clone()]), t.order as u64)));
    let want_tours = set(golden["tours"].as_array().unwrap().iter().map(|t| {
        let a = t.as_array().unwrap();
        (set([a[0].as_str().unwrap().to_string(), a[1].as_str().unwrap().to_string()]), a[2].as_u64().unwrap())
    }));
    assert_eq!(tours, want_tours);
    assert_eq!(r.y_presentation.free_rank, Some(golden["free_rank"].as_u64().unwrap() as usize));
    assert_eq!(r.zwi_decomposition.center, strs(&golden["center"]));
    let to_sets = |v: &Value| -> Vec<Vec<usize>> { serde_json::from_value(v.clone()).unwrap() };
    assert_eq!(r.zwi_decomposition.a_group, to_sets(&golden["a_group"]));
    assert_eq!(r.zwi_decomposition.a_prime, to_sets(&golden["a_prime"]));
    assert_eq!(r.normalizer.a_n, to_sets(&golden["a_n"]));
    let a = r.zwi_decomposition.a_tilde.iter().position(|s| s == &vec![2, 3]).unwrap();
    assert_eq!(vs[r.zwi_decomposition.half_turn_vertices[a]], golden["half_turn_vertex"].as_str().unwrap());
    assert!(r.zwi_decomposition.b_presentation.infinite_dihedral.is_some());
    assert!(r.normalizer.presentation.infinite_dihedral.is_some());
}

#[test]
fn json_round_trips_and_is_deterministic() {
    let (text, report) = analyze_json(&[]);
    let again = serde_json::to_string_pretty(&report).unwrap();
    assert_eq!(again.trim_end(), text.trim_end());
    let (text2, _) = analyze_json(&[]);
    assert_eq!(text, text2);
    assert_eq!(report.schema_version, coxcent::report::SCHEMA_VERSION);
}

#[test]
fn text_and_normalizer_output() {
    let out = run(&["analyze", EXAMPLE, "--bound", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("10 vertices, 6 loops, 12 non-loop edges, 2 2-cells, 6 shuttling tours"));
    assert!(text.contains("free of rank 1"));
    assert!(text.contains("Z(W_I) generators: s1"));
    let out = run(&["normalizer", EXAMPLE, "--bound", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("A_N: 2 permutations"));
    assert!(text.contains("infinite dihedral"));
}

#[test]
fn dot_exports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_string_lossy().into_owned();
    let out = run(&["analyze", EXAMPLE, "--bound", "1", "--dot", &d]);
    assert!(out.status.success());
    let c = std::fs::read_to_string(dir.path().join("cgraph.dot")).unwrap();
    assert!(c.starts_with("graph C {"));
    assert_eq!(c.matches("[label=\"s6\"]").count() + c.matches("[label=\"s3\"]").count(), 6);
    let y = std::fs::read_to_string(dir.path().join("ygraph.dot")).unwrap();
    assert_eq!(y.matches("// 2-cell").count(), 2);
    let w = std::fs::read_to_string(dir.path().join("window.dot")).unwrap();
    assert!(w.contains("edges = commuting pairs"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        "name = \"bad\"\ngenerators = [\"a\", \"b\"]\nsubset = [\"a\"]\nedges = [{ a = \"a\", b = \"b\", m = 1 }]\n",
    );
    assert_eq!(run(&["analyze", &bad]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "/nonexistent/file.toml"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", EXAMPLE, "--budget", "3"]).status.code(), Some(3));
    assert_eq!(run(&["oracle", EXAMPLE, "--cap", "100"]).status.code(), Some(3));
    assert_eq!(run(&["analyze", EXAMPLE, "--tree-prefer", "s1,s2,s3:s4"]).status.code(), Some(2));
}

#[test]
fn empty_subset_degenerates_to_the_system() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "a3.toml",
        "name = \"A3\"\ngenerators = [\"a\", \"b\", \"c\"]\nsubset = []\nedges = [{ a = \"a\", b = \"b\", m = 3 }, { a = \"b\", b = \"c\", m = 3 }]\n",
    );
    let out = run(&["analyze", &f, "--json", "--bound", "1"]);
    assert!(out.status.success());
    let r: Report = serde_json::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(r.cgraph.vertices.len(), 1);
    assert_eq!(r.cgraph.loops.len(), 3);
    assert_eq!(r.wperp_window.classes.len(), 3);
    let finite: Vec<_> = r.wperp_window.orders.iter().filter(|(_, _, m)| m.is_finite()).map(|&(i, j, m)| (i, j, m.to_string())).collect();
    assert_eq!(finite, vec![(0, 1, "3".to_string()), (0, 2, "2".to_string()), (1, 2, "3".to_string())]);
}

#[test]
fn oracle_agrees_on_small_finite_groups() {
    let dir = tempfile::tempdir().unwrap();
    let b3 = write(
        dir.path(),
        "b3.toml",
        "name = \"B3\"\ngenerators = [\"r1\", \"r2\", \"r3\"]\nsubset = [\"r3\"]\nedges = [{ a = \"r1\", b = \"r2\", m = 4 }, { a = \"r2\", b = \"r3\", m = 3 }]\n",
    );
    let h3 = write(
        dir.path(),
        "h3.toml",
        "name = \"H3\"\ngenerators = [\"r1\", \"r2\", \"r3\"]\nsubset = [\"r1\", \"r2\"]\nedges = [{ a = \"r1\", b = \"r2\", m = 5 }, { a = \"r2\", b = \"r3\", m = 3 }]\n",
    );
    for f in [&b3, &h3] {
        let out = run(&["oracle", f, "--json"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
        let v: Value = serde_json::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
        assert_eq!(v["agree"], true);
        let (c, n) = (v["oracle"]["centralizer_order"].as_u64().unwrap(), v["oracle"]["normalizer_order"].as_u64().unwrap());
        assert_eq!(v["pipeline"], serde_json::json!([c, n]));
    }
}

#[test]
fn verify_tables_command() {
    let out = run(&["verify-tables"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains("FAIL"));
    assert!(text.lines().count() > 50);
}
