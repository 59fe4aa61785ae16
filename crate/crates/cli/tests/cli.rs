//! End-to-end runs of the `kpath` binary on small fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use connect_core::pathfind::ConnectRecord;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/paper_example").join(name)
}

fn kpath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpath")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn connect(corpus: &Path, out: &Path, extra: &[&str]) -> Output {
    let (g, i, e) = (fixture("graph.tsv"), fixture("inventory.txt"), fixture("embeddings.txt"));
    let mut args = vec![
        "connect",
        "--graph",
        s(&g),
        "--inventory",
        s(&i),
        "--embeddings",
        s(&e),
        "--corpus",
        s(corpus),
        "--out",
        s(out),
    ];
    args.extend_from_slice(extra);
    kpath(&args)
}

fn records(path: &Path) -> Vec<ConnectRecord> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn empty_corpus_gives_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty.jsonl");
    std::fs::write(&corpus, "").unwrap();
    let out = dir.path().join("out.jsonl");
    let run = connect(&corpus, &out, &[]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
    assert!(!dir.path().join("out.jsonl.failures.jsonl").exists());
}

#[test]
fn output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    let run = connect(&fixture("corpus.jsonl"), &out, &["--workers", "2"]);
    assert_eq!(run.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let recs = records(&out);
    assert_eq!(recs.len(), 4);
    for (line, rec) in text.lines().zip(&recs) {
        let result = rec.to_result().unwrap();
        let back = ConnectRecord::from_result(
            &rec.sentence_id,
            rec.pair_id.split('#').nth(1).unwrap().parse().unwrap(),
            &result,
        );
        assert_eq!(&back, rec);
        assert_eq!(serde_json::to_string(&back).unwrap(), line);
    }
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.jsonl.stats.json")).unwrap()).unwrap();
    assert_eq!(stats["stats"]["linked_pairs"], 4);
    assert_eq!(stats["failed_pairs"], 0);
}

#[test]
fn unreachable_service_lists_every_pair() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let url = format!("http://127.0.0.1:{port}");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    let run = connect(
        &fixture("corpus.jsonl"),
        &out,
        &["--backend", "remote", "--remote-url", &url, "--remote-retries", "0", "--remote-timeout-ms", "2000"],
    );
    assert_eq!(run.status.code(), Some(1));
    let failures = std::fs::read_to_string(dir.path().join("out.jsonl.failures.jsonl")).unwrap();
    let ids: Vec<String> = failures
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["pair_id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ids, ["s1#0", "s2#0", "s3#0", "s4#0"]);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let body = format!(
        "graph = {}\ninventory = {}\nembeddings = {}\ncorpus = {}\nbeam = 0\nworkers = 1\n",
        s(&fixture("graph.tsv")),
        s(&fixture("inventory.txt")),
        s(&fixture("embeddings.txt")),
        s(&fixture("corpus.jsonl"))
    );
    std::fs::write(&cfg, body).unwrap();
    let out = dir.path().join("out.jsonl");
    let bad = kpath(&["connect", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(bad.status.code(), Some(2), "beam 0 from the file is rejected");
    let good = kpath(&["connect", "--config", s(&cfg), "--out", s(&out), "--beam", "10"]);
    assert_eq!(good.status.code(), Some(0), "{}", String::from_utf8_lossy(&good.stderr));
    assert_eq!(records(&out).len(), 4);
}

#[test]
fn missing_inputs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    let run = connect(&dir.path().join("nope.jsonl"), &out, &[]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("file not found"));
    let run = connect(&fixture("corpus.jsonl"), &out, &["--threshold", "0"]);
    assert_eq!(run.status.code(), Some(2));
}

fn evaluate(setting: &str, corpus: &Path, results: &Path, extra: &[&str]) -> Output {
    let e = fixture("embeddings.txt");
    let mut args =
        vec!["evaluate", "--setting", setting, "--corpus", s(corpus), "--results", s(results), "--embeddings", s(&e)];
    args.extend_from_slice(extra);
    kpath(&args)
}

#[test]
fn evaluate_settings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    assert_eq!(connect(&fixture("corpus.jsonl"), &out, &[]).status.code(), Some(0));

    let run = evaluate("c", &fixture("corpus.jsonl"), &out, &[]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("gold_path"));

    let corpus = dir.path().join("gold.jsonl");
    std::fs::write(
        &corpus,
        concat!(
            r#"{"id":"s1","s1":"The car was too old.","s2":"The engine broke down.","gold_implicit":"A car has an engine.","gold_path":[["car","HasA","engine"]]}"#,
            "\n",
            r#"{"id":"s2","s1":"Berliners produce too much waste.","s2":"Environmental protection should play a more important role.","gold_implicit":"Waste can be recycled."}"#,
            "\n"
        ),
    )
    .unwrap();
    let run = evaluate("c", &corpus, &out, &[]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    let c = &report["settings"]["c"];
    assert_eq!(c["scored"], 1);
    // s2 has no gold path; s3 and s4 are not in this corpus.
    assert_eq!(c["skipped"], 3);
    assert!((c["cosim"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let report_path = dir.path().join("b.json");
    let run = evaluate("b", &corpus, &out, &["--out", s(&report_path)]);
    assert_eq!(run.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["settings"]["b"]["scored"], 2);

    let (g, i) = (fixture("graph.tsv"), fixture("inventory.txt"));
    let run = evaluate("a", &corpus, &out, &["--graph", s(&g), "--inventory", s(&i)]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    // "A car has an engine." yields the silver path car HasA engine, identical to the direct link.
    assert_eq!(report["settings"]["a"]["scored"], 1);
    assert!((report["settings"]["a"]["cosim"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn baseline_with_vague_replacement() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("cn.tsv");
    std::fs::write(
        &graph,
        "RelatedTo\twaste\trecycle\t2.0\nReceivesAction\twaste\trecycle\nRelatedTo\trecycle\tenvironmental protection\nAtLocation\twaste\tlandfill\n",
    )
    .unwrap();
    let corpus = fixture("corpus.jsonl");
    let run_baseline = |out: &Path, extra: &[&str]| {
        let mut args = vec!["baseline", "--graph", s(&graph), "--corpus", s(&corpus), "--out", s(out)];
        args.extend_from_slice(extra);
        kpath(&args)
    };
    let plain = dir.path().join("cn.jsonl");
    assert_eq!(run_baseline(&plain, &[]).status.code(), Some(0));
    let recs = records(&plain);
    let waste = recs.iter().find(|r| r.c_s == "waste").unwrap();
    assert_eq!(waste.verdict, "multihop");
    let hops: Vec<(&str, &str, &str)> =
        waste.paths[0].hops.iter().map(|h| (h.source.as_str(), h.relation.as_str(), h.target.as_str())).collect();
    assert_eq!(hops, [("waste", "RelatedTo", "recycle"), ("recycle", "RelatedTo", "environmental protection")]);
    assert!(waste.paths[0].score.is_some());

    let replaced = dir.path().join("cnr.jsonl");
    assert_eq!(run_baseline(&replaced, &["--replace-vague"]).status.code(), Some(0));
    let waste = records(&replaced).into_iter().find(|r| r.c_s == "waste").unwrap();
    let rels: Vec<&str> = waste.paths[0].hops.iter().map(|h| h.relation.as_str()).collect();
    assert_eq!(rels, ["ReceivesAction", "RelatedTo"]);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cnr.jsonl.stats.json")).unwrap()).unwrap();
    assert_eq!(stats["replace_vague"]["vague_hops"], 2);
    assert_eq!(stats["replace_vague"]["replaced"], 1);
}

#[test]
fn stats_and_random_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("connect.jsonl");
    assert_eq!(connect(&fixture("corpus.jsonl"), &out, &[]).status.code(), Some(0));
    let json = dir.path().join("stats.json");
    let run = kpath(&["stats", "--input", &format!("co-nnect={}", s(&out)), "--out", s(&json)]);
    assert_eq!(run.status.code(), Some(0));
    let table = String::from_utf8(run.stdout).unwrap();
    assert!(table.starts_with("Method    Linked pairs  Avg. hops\n"), "{table}");
    assert!(table.contains("co-nnect             4       1.50"), "{table}");

    let g = fixture("graph.tsv");
    let i = fixture("inventory.txt");
    let sample =
        |seed: &str| kpath(&["random-class", "--graph", s(&g), "--inventory", s(&i), "--n", "4", "--seed", seed]);
    let a = sample("7");
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(String::from_utf8_lossy(&a.stdout).lines().count(), 4);
    assert_eq!(a.stdout, sample("7").stdout);
    let odd = kpath(&["random-class", "--graph", s(&g), "--inventory", s(&i), "--n", "3"]);
    assert_eq!(odd.status.code(), Some(2));
}
