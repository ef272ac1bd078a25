use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use exgraph::graphio::graph_to_string;
use exgraph::{extract, read_graph, GraphKind, PipelineOptions, ScalarField};

fn exgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exgraph"))
        .args(args)
        .env_remove("EXGRAPH_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn generate_simplify_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.txt");
    let report = dir.path().join("r.json");
    let o = exgraph(&[
        "--generate", "schwefel", "--dims", "64,64,64", "--blocks-budget", "1e5", "--kind", "max",
        "--simplify", "bundle", "--simplify", "persist:0.05", "--out", s(&out), "--report", s(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());

    let g = read_graph(&out).unwrap();
    assert!(!g.maxima().is_empty() && !g.saddles().is_empty());
    assert_eq!(g.header().trail, vec!["bundle", "persist:0.05"]);

    let r = json(&report);
    assert_eq!(r["block_count"], 3);
    assert_eq!(r["nodes"], g.node_count());
    assert_eq!(r["arcs"], g.arc_count());
    assert!(r["raw_arcs"].as_u64().unwrap() >= r["arcs"].as_u64().unwrap());
    let st = &r["stages"];
    let sum: f64 = ["load", "extract", "simplify", "write"].iter().map(|k| st[k].as_f64().unwrap()).sum();
    assert!(sum <= st["total"].as_f64().unwrap());
    assert!(st.as_object().unwrap().values().all(|v| v.as_f64().unwrap() >= 0.0));
}

#[test]
fn single_block_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = exgraph(&["--generate", "schwefel", "--dims", "16,16,16", "--report", s(&report)]);
    assert_eq!(code(&o), 0);
    let r = json(&report);
    assert_eq!(r["block_count"], 1);
    assert_eq!(r["parked_peak"], 0);
}

#[test]
fn raw_input_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("v.raw");
    let dims = [9usize, 7, 11];
    let n: usize = dims.iter().product();
    let bytes: Vec<u16> = (0..n).map(|i| ((i * 7919) % 251) as u16 * 3).collect();
    let field = ScalarField::from_vec(&dims, bytes).unwrap();
    field.write_raw(&raw, exgraph::Endian::Big).unwrap();

    for kind in ["max", "min"] {
        let out = dir.path().join(format!("{kind}.txt"));
        let o = exgraph(&[
            "--in", s(&raw), "--dims", "9,7,11", "--dtype", "u16", "--endian", "be", "--kind", kind,
            "--block-budget", "200", "--out", s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let opts = PipelineOptions {
            kind: kind.parse().unwrap(),
            workers: 1,
            ..PipelineOptions::default()
        };
        let expected = extract(&field, usize::MAX, &opts).unwrap().graph;
        assert_eq!(fs::read_to_string(&out).unwrap(), graph_to_string(&expected));
        let g = read_graph(&out).unwrap();
        assert_eq!(g.header().kind, kind.parse::<GraphKind>().unwrap());
    }
}

#[test]
fn output_is_identical_across_threads_and_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let mut docs = Vec::new();
    for (i, (threads, budget)) in [("1", "1e9"), ("3", "3000"), ("8", "1200")].iter().enumerate() {
        let out = dir.path().join(format!("g{i}.txt"));
        let o = exgraph(&[
            "--generate", "schwefel", "--dims", "20,20,20", "--threads", threads, "--block-budget", budget,
            "--simplify", "bundle", "--out", s(&out),
        ]);
        assert_eq!(code(&o), 0);
        docs.push(fs::read(&out).unwrap());
    }
    assert!(docs.windows(2).all(|w| w[0] == w[1]));

    let out = dir.path().join("env.txt");
    let o = Command::new(env!("CARGO_BIN_EXE_exgraph"))
        .args(["--generate", "schwefel", "--dims", "20,20,20", "--simplify", "bundle", "--out", s(&out)])
        .env("EXGRAPH_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(&out).unwrap(), docs[0]);
}

#[test]
fn tabular_export() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("g");
    let o = exgraph(&[
        "--generate", "schwefel", "--dims", "12,12", "--format", "tabular", "--geometry", "off", "--out", s(&base),
    ]);
    assert_eq!(code(&o), 0);
    let nodes = fs::read_to_string(dir.path().join("g.nodes.csv")).unwrap();
    let arcs = fs::read_to_string(dir.path().join("g.arcs.csv")).unwrap();
    assert!(nodes.starts_with("vertex,kind,value\n"));
    assert!(arcs.starts_with("saddle,maximum,first,npoints,vertices\n"));
    assert!(arcs.lines().skip(1).all(|l| l.ends_with(",0,")));
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("v.raw");
    fs::write(&raw, [0u8; 8]).unwrap();
    for args in [
        &["--in", s(&raw), "--dtype", "u8"][..],
        &["--in", s(&raw), "--generate", "schwefel", "--dims", "2,4", "--dtype", "u8"],
        &["--generate", "schwefel", "--dims", "2,2,2,2,2,2,2,2,2"],
        &["--generate", "schwefel", "--dims", "8,8", "--dtype", "float"],
        &["--generate", "schwefel", "--dims", "8,8", "--simplify", "persist"],
        &["--generate", "schwefel", "--dims", "8,8", "--kind", "mid"],
        &["--dims", "8,8"],
    ] {
        let o = exgraph(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn engine_errors_leave_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("v.raw");
    fs::write(&raw, [1u8, 2, 3, 4, 5]).unwrap();
    let out = dir.path().join("g.txt");
    let report = dir.path().join("r.json");

    let o = exgraph(&["--in", s(&raw), "--dims", "2,2", "--dtype", "u8", "--out", s(&out), "--report", s(&report)]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("expected 4 bytes, found 5"));

    let o = exgraph(&[
        "--generate", "schwefel", "--dims", "8,8,8", "--block-budget", "100", "--out", s(&out), "--report", s(&report),
    ]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("192"));

    let o = exgraph(&["--in", s(&dir.path().join("missing.raw")), "--dims", "5", "--dtype", "u8", "--out", s(&out)]);
    assert_eq!(code(&o), 6);

    let o = exgraph(&[
        "--generate", "schwefel", "--dims", "8,8", "--out", s(&out), "--report", s(&dir.path().join("no/r.json")),
    ]);
    assert_eq!(code(&o), 6);

    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn progress_goes_to_stdout_only_when_asked() {
    let o = exgraph(&["--generate", "schwefel", "--dims", "10,10", "--progress", "--simplify", "bundle"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("extracted")));
    assert!(text.lines().any(|l| l.starts_with("simplified")));
}

#[test]
fn bench_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("b.json");
    let o = exgraph(&[
        "--generate", "schwefel", "--dims", "16,16,16", "--bench", "blocks:1,2,4", "--report", s(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&report);
    assert_eq!(r["sweep"], "blocks");
    assert_eq!(r["identical_graphs"], true);
    let blocks: Vec<u64> = r["points"].as_array().unwrap().iter().map(|p| p["blocks"].as_u64().unwrap()).collect();
    assert_eq!(blocks, vec![1, 2, 4]);

    let o = exgraph(&["--bench", "resolution:8,12,16", "--report", s(&report), "--threads", "1"]);
    assert_eq!(code(&o), 0);
    let r = json(&report);
    let vertices: Vec<u64> = r["points"].as_array().unwrap().iter().map(|p| p["vertices"].as_u64().unwrap()).collect();
    assert_eq!(vertices, vec![512, 1728, 4096]);
    assert!(r["classify_fit"]["r2"].is_number());

    let o = exgraph(&["--generate", "schwefel", "--dims", "12,12,12", "--bench", "threads:1,2", "--report", s(&report)]);
    assert_eq!(code(&o), 0);
    let r = json(&report);
    assert_eq!(r["speedup"][0], 1.0);
    assert_eq!(r["identical_graphs"], true);

    let o = exgraph(&["--generate", "schwefel", "--dims", "8,8", "--bench", "blocks:9"]);
    assert_eq!(code(&o), 3);
}
