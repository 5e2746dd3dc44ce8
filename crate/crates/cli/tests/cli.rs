//! End-to-end tests of the `dynhom` binary: determinism, round trips, and
//! the documented output schemas.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dynhom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynhom"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// All files under a directory as relative-path -> bytes.
fn dir_contents(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn simulate_is_byte_identical_under_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = dynhom(&[
            "simulate",
            "--structure",
            "regular",
            "--nodes",
            "60",
            "--degree",
            "3",
            "--timesteps",
            "6",
            "--replicates",
            "2",
            "--seed",
            "42",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_ok(&out);
    }
    let ca = dir_contents(&a);
    let cb = dir_contents(&b);
    assert_eq!(ca.len(), cb.len());
    for (path, bytes) in &ca {
        assert_eq!(Some(bytes), cb.get(path), "file {path} differs");
    }
    assert!(ca.contains_key("manifest.json"));
    assert!(ca.contains_key("rep_000/edges.txt"));
    assert!(ca.contains_key("rep_001/node_index.csv"));
}

#[test]
fn simulate_output_reloads_to_an_equal_graph() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("sim");
    assert_ok(&dynhom(&[
        "simulate",
        "--structure",
        "regular",
        "--nodes",
        "40",
        "--degree",
        "3",
        "--timesteps",
        "5",
        "--seed",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let rep = out_dir.join("rep_000");
    let loaded = dynhom::io::load_graph_dir(&rep).unwrap();
    assert_eq!(loaded.graph.horizon(), 6);

    // writing the loaded graph again reproduces the files byte for byte
    let rewrite = tmp.path().join("rewrite");
    dynhom::io::write_graph_dir(&rewrite, &loaded.graph, Some(&loaded.names)).unwrap();
    for file in ["edges.txt", "labels.txt", "features.csv", "node_index.csv"] {
        assert_eq!(
            fs::read(rep.join(file)).unwrap(),
            fs::read(rewrite.join(file)).unwrap(),
            "file {file} differs after reload"
        );
    }
}

#[test]
fn ingest_discretizes_and_reports_errors_with_line_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let edges = tmp.path().join("edges.txt");
    fs::write(&edges, "# toy stream\nu v 0\nu x 5\n").unwrap();
    let labels = tmp.path().join("labels.txt");
    fs::write(&labels, "u 0 1\nv 0 -1\nx 1 1\nu 1 1\nv 1 -1\n").unwrap();
    let out_dir = tmp.path().join("graph");
    assert_ok(&dynhom(&[
        "ingest",
        "--edges",
        edges.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--window",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["horizon"], 2);
    assert_eq!(manifest["events"], 2);
    assert_eq!(manifest["schema_version"], 1);
    let loaded = dynhom::io::load_graph_dir(&out_dir).unwrap();
    assert_eq!(loaded.graph.horizon(), 2);
    assert_eq!(loaded.names.lookup("u"), Some(dynhom::NodeId(0)));
    // edges reload onto the ids recorded in node_index.csv
    let u = loaded.names.lookup("u").unwrap();
    let v = loaded.names.lookup("v").unwrap();
    let x = loaded.names.lookup("x").unwrap();
    let s0 = loaded.graph.snapshot(0).unwrap();
    let s1 = loaded.graph.snapshot(1).unwrap();
    assert_eq!(s0.edges().collect::<Vec<_>>(), vec![(u, v)]);
    assert_eq!(s1.edges().collect::<Vec<_>>(), vec![(u, x)]);
    assert_eq!(s0.label(u), Some(1));
    assert_eq!(s1.label(v), Some(-1));

    // malformed line: error names the file and line
    let bad = tmp.path().join("bad.txt");
    fs::write(&bad, "u v 0\nu v\n").unwrap();
    let out = dynhom(&[
        "ingest",
        "--edges",
        bad.to_str().unwrap(),
        "--window",
        "5",
        "--out",
        tmp.path().join("bad_graph").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.txt:2"), "stderr: {stderr}");
}

#[test]
fn measure_single_snapshot_graph_is_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let edges = tmp.path().join("edges.txt");
    fs::write(&edges, "a b 1\n").unwrap();
    let graph_dir = tmp.path().join("graph");
    assert_ok(&dynhom(&[
        "ingest",
        "--edges",
        edges.to_str().unwrap(),
        "--window",
        "10",
        "--out",
        graph_dir.to_str().unwrap(),
    ]));
    let csv = tmp.path().join("series.csv");
    let out = dynhom(&[
        "measure",
        "--graph",
        graph_dir.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_ok(&out);
    assert_eq!(
        fs::read_to_string(&csv).unwrap(),
        "t,h_static,h_dynamic,h_plus,h_minus\n"
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn measure_correlate_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    assert_ok(&dynhom(&[
        "simulate",
        "--structure",
        "regular",
        "--nodes",
        "200",
        "--degree",
        "3",
        "--timesteps",
        "12",
        "--seed",
        "11",
        "--out",
        sim.to_str().unwrap(),
    ]));
    let records = tmp.path().join("records.csv");
    assert_ok(&dynhom(&[
        "measure",
        "--graph",
        sim.join("rep_000").to_str().unwrap(),
        "--layers",
        "1",
        "--mode",
        "unreached",
        "--out",
        records.to_str().unwrap(),
        "--compat-out",
        tmp.path().join("compat.json").to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&records).unwrap();
    assert!(
        text.starts_with("t,h_static,h_dynamic,h_plus,h_minus,layer,auroc,bound,n_plus,n_minus\n")
    );
    assert_eq!(text.lines().count(), 13); // header + 12 timesteps
    assert!(tmp.path().join("compat.json").exists());
    assert!(records.with_extension("meta.json").exists());

    let corr = tmp.path().join("corr.json");
    assert_ok(&dynhom(&[
        "correlate",
        "--records",
        records.to_str().unwrap(),
        "--layer",
        "1",
        "--out",
        corr.to_str().unwrap(),
    ]));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&corr).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["timesteps"], 12);
}

#[test]
fn correlate_identity_records_give_perfect_rho() {
    let tmp = tempfile::tempdir().unwrap();
    let records = tmp.path().join("records.csv");
    let mut text =
        String::from("t,h_static,h_dynamic,h_plus,h_minus,layer,auroc,bound,n_plus,n_minus\n");
    for t in 0..5 {
        let h = 0.2 + 0.1 * t as f64;
        text.push_str(&format!("{t},0.5,{h},{h},{h},1,{h},,10,10\n"));
    }
    fs::write(&records, text).unwrap();
    let out_path = tmp.path().join("corr.json");
    assert_ok(&dynhom(&[
        "correlate",
        "--records",
        records.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["spearman_h_dynamic"], 1.0);
    assert_eq!(doc["spearman_h_static"], serde_json::Value::Null);
}

#[test]
fn bound_grid_csv_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("grid.csv");
    assert_ok(&dynhom(&[
        "bound-grid",
        "--resolution",
        "5",
        "--layers",
        "1,2",
        "--out",
        csv.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("h_plus,h_minus,layers,bound"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 * 25);
    for row in rows {
        let bound: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&bound));
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(csv.with_extension("meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["denominator"], "variance");
}

#[test]
fn validate_emits_report_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("planted.json");
    fs::write(
        &cfg,
        r#"{"n_per_class": 300, "neighbor_count": 10, "h_plus": 0.8, "h_minus": 0.7}"#,
    )
    .unwrap();
    let out_path = tmp.path().join("report.json");
    assert_ok(&dynhom(&[
        "validate",
        "--config",
        cfg.to_str().unwrap(),
        "--replicates",
        "2",
        "--seed",
        "9",
        "--out",
        out_path.to_str().unwrap(),
    ]));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    let report = &doc["report"];
    assert_eq!(report["replicates"], 2);
    assert!(report["measured_h_plus"].as_f64().unwrap() > 0.6);
    assert!(report["per_layer"][0]["empirical_gap"].as_f64().is_some());
}

#[test]
fn propagate_dumps_per_layer_representations() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    assert_ok(&dynhom(&[
        "simulate",
        "--structure",
        "regular",
        "--nodes",
        "30",
        "--degree",
        "3",
        "--timesteps",
        "2",
        "--seed",
        "3",
        "--out",
        sim.to_str().unwrap(),
    ]));
    let csv = tmp.path().join("reps.csv");
    assert_ok(&dynhom(&[
        "propagate",
        "--graph",
        sim.join("rep_000").to_str().unwrap(),
        "--timestep",
        "1",
        "--layers",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("node,layer,dim,value"));
    // 30 nodes x 3 layers (0, 1, 2) x 3 feature dims
    assert_eq!(lines.count(), 30 * 3 * 3);
}
