use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use senseloom::embedstore::{write_embeddings, EmbeddingMatrix};

fn senseloom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_senseloom"))
        .args(args)
        .env_remove("SENSELOOM_DATA")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = senseloom(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_lines(path: &Path, rows: &[Value]) {
    let mut s = String::new();
    for r in rows {
        s.push_str(&r.to_string());
        s.push('\n');
    }
    fs::write(path, s).unwrap();
}

fn gold_row(lang: &str, lemma: &str, sense: &str, i: usize) -> Value {
    let text = format!("the {lemma} stands in sentence number {i}");
    let start = 4;
    json!({
        "id": format!("{lemma}-{sense}-{i:03}"),
        "lang": lang,
        "lemma": lemma,
        "surface_form": lemma,
        "text": text,
        "target_span": [start, start + lemma.chars().count()],
        "source": "fixture",
        "sense_id": sense,
        "annotator": "a1",
        "provenance": "manual",
    })
}

/// `words` lemmas, each with two senses of `per_sense` sentences.
fn gold_file(dir: &Path, words: usize, per_sense: usize) -> PathBuf {
    let mut rows = Vec::new();
    for w in 0..words {
        let lemma = format!("word{w:02}");
        for sense in ["s1", "s2"] {
            for i in 0..per_sense + w % 3 {
                rows.push(gold_row("az", &lemma, sense, i));
            }
        }
    }
    let path = dir.join("gold.jsonl");
    write_lines(&path, &rows);
    path
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn wic_build_is_byte_identical_for_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let gold = gold_file(tmp.path(), 20, 8);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    ok(&[
        "--seed",
        "42",
        "wic",
        "build",
        "--gold",
        p(&gold),
        "--out-dir",
        p(&a),
    ]);
    ok(&[
        "--seed",
        "42",
        "wic",
        "build",
        "--gold",
        p(&gold),
        "--out-dir",
        p(&b),
    ]);
    ok(&[
        "--seed",
        "43",
        "wic",
        "build",
        "--gold",
        p(&gold),
        "--out-dir",
        p(&c),
    ]);

    let fa = files_in(&a);
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    for split in ["train", "dev", "test"] {
        assert!(
            names.contains(&format!("{split}.jsonl").as_str()),
            "{names:?}"
        );
        assert!(
            names.contains(&format!("{split}.tsv").as_str()),
            "{names:?}"
        );
    }
    assert!(names.contains(&"manifest.json"));
    assert_eq!(fa, files_in(&b));
    assert_ne!(
        fs::read(a.join("train.jsonl")).unwrap(),
        fs::read(c.join("train.jsonl")).unwrap()
    );

    let manifest: Value =
        serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["meta"]["seed"], 42);
    assert_eq!(
        manifest["words"]["train_words"].as_array().unwrap().len(),
        14
    );

    let text = ok(&["wic", "stats", "--dir", p(&a), "--json"]);
    let stats: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(stats, manifest["stats"]);
}

#[test]
fn config_file_supplies_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let gold = gold_file(tmp.path(), 10, 6);
    let cfg = tmp.path().join("run.conf");
    fs::write(&cfg, "# fixed run\nseed = 42\n").unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&[
        "--config",
        p(&cfg),
        "wic",
        "build",
        "--gold",
        p(&gold),
        "--out-dir",
        p(&a),
    ]);
    ok(&[
        "--seed",
        "42",
        "wic",
        "build",
        "--gold",
        p(&gold),
        "--out-dir",
        p(&b),
    ]);
    assert_eq!(
        fs::read(a.join("train.jsonl")).unwrap(),
        fs::read(b.join("train.jsonl")).unwrap()
    );
}

#[test]
fn lift_direct_mode_reports_worked_example() {
    let out = ok(&["lift", "--prior", "0.04", "--precision", "0.36"]);
    assert!(out.contains("900%"), "{out}");
    assert!(out.contains("8×"), "{out}");

    let out = ok(&["lift", "--prior", "0", "--precision", "0.2"]);
    assert!(out.contains("∞ (prior = 0)"), "{out}");
}

#[test]
fn lift_report_mode_builds_table() {
    let tmp = tempfile::tempdir().unwrap();
    let prior: Vec<Value> = (0..100)
        .map(|i| json!({ "lemma": "bat", "sentence_id": format!("r{i}"), "sense_id": if i < 4 { "rare" } else { "common" } }))
        .collect();
    let selected: Vec<Value> = (0..25)
        .map(|i| json!({ "lemma": "bat", "sentence_id": format!("q{i}"), "target_sense": "rare", "gold_sense": if i < 9 { "rare" } else { "common" } }))
        .collect();
    let senses = json!({ "bat": [{ "sense_id": "rare", "gloss": "seldom seen" }, { "sense_id": "common", "gloss": "often seen" }] });
    let (pp, sp, gp, out) = (
        tmp.path().join("prior.jsonl"),
        tmp.path().join("selected.jsonl"),
        tmp.path().join("senses.json"),
        tmp.path().join("lift.json"),
    );
    write_lines(&pp, &prior);
    write_lines(&sp, &selected);
    fs::write(&gp, senses.to_string()).unwrap();
    let table = ok(&[
        "lift",
        "--prior-sample",
        p(&pp),
        "--selected",
        p(&sp),
        "--senses",
        p(&gp),
        "--out",
        p(&out),
    ]);
    assert!(table.contains("seldom seen"), "{table}");
    assert!(table.contains("900%"), "{table}");
    assert!(table.contains("8×"), "{table}");
    let report: Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    let rare = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["sense_id"] == "rare")
        .unwrap();
    assert_eq!(rare["lift"], 9.0);
    assert!(tmp.path().join("lift.json.meta.json").is_file());
}

#[test]
fn stats_renders_two_decimals() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rows = Vec::new();
    for w in 0..60 {
        let lemma = format!("w{w:02}");
        let senses: &[&str] = if w == 0 { &["a"] } else { &["a", "b"] };
        for s in senses {
            rows.push(gold_row("az", &lemma, s, 0));
        }
    }
    let path = tmp.path().join("gold.jsonl");
    write_lines(&path, &rows);
    let out = ok(&["stats", p(&path)]);
    assert!(out.contains("1.98 ± 0.13"), "{out}");
    let json: Value = serde_json::from_str(&ok(&["stats", p(&path), "--json"])).unwrap();
    assert_eq!(json[0]["senses"], 119);
}

#[test]
fn exit_codes_follow_error_class() {
    assert_eq!(senseloom(&["--no-such-flag"]).status.code(), Some(64));
    assert_eq!(senseloom(&["stats"]).status.code(), Some(64));
    assert_eq!(senseloom(&["--help"]).status.code(), Some(0));
    assert_eq!(
        senseloom(&["stats", "/definitely/not/here.jsonl"])
            .status
            .code(),
        Some(2)
    );
    let undefined = senseloom(&["lift", "--prior", "0", "--precision", "0"]);
    assert_eq!(undefined.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&undefined.stderr).contains("error"));

    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(
        senseloom(&["--config", p(&cfg), "stats", "x"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        senseloom(&["export-gold", "--project", "x", "--out", "y"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn corpus_pipeline_to_project() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let raw = d.join("news.txt");
    let mut text = String::new();
    for i in 0..30 {
        if i % 2 == 0 {
            text.push_str(&format!("a bat flew over the river at dusk {i}\n"));
        } else {
            text.push_str(&format!("nothing relevant is written on line {i}\n"));
        }
    }
    text.push_str("bats\n");
    fs::write(&raw, text).unwrap();
    let lemmas = d.join("lemmas.jsonl");
    write_lines(
        &lemmas,
        &[json!({ "lemma": "bat", "forms": ["bats"], "lang": "en" })],
    );

    let corpus = d.join("corpus.jsonl");
    ok(&["ingest", "--input", p(&raw), "--out", p(&corpus)]);
    assert_eq!(fs::read_to_string(&corpus).unwrap().lines().count(), 31);
    assert!(d.join("corpus.jsonl.meta.json").is_file());

    let occ = d.join("occ.jsonl");
    let out = ok(&[
        "occurrences",
        "--corpus",
        p(&corpus),
        "--lemmas",
        p(&lemmas),
        "--out",
        p(&occ),
    ]);
    assert!(out.contains("bat\t15"), "{out}");

    let sample = d.join("sample.jsonl");
    ok(&[
        "--seed",
        "7",
        "sample",
        "--input",
        p(&occ),
        "-n",
        "10",
        "--out",
        p(&sample),
    ]);
    let picked = fs::read_to_string(&sample).unwrap();
    assert_eq!(picked.lines().count(), 10);
    let again = d.join("again.jsonl");
    ok(&[
        "--seed",
        "7",
        "sample",
        "--input",
        p(&occ),
        "-n",
        "10",
        "--out",
        p(&again),
    ]);
    assert_eq!(picked, fs::read_to_string(&again).unwrap());

    let data = d.join("projects");
    let senses = d.join("senses.json");
    fs::write(
        &senses,
        json!({ "bat": [{ "sense_id": "animal", "gloss": "flying mammal" }] }).to_string(),
    )
    .unwrap();
    ok(&[
        "--data",
        p(&data),
        "init",
        "--project",
        "demo",
        "--lang",
        "en",
        "--lemmas",
        p(&lemmas),
        "--sentences",
        p(&sample),
        "--senses",
        p(&senses),
    ]);
    assert!(data.join("demo").is_dir());

    let gold = d.join("gold.jsonl");
    ok(&[
        "--data",
        p(&data),
        "export-gold",
        "--project",
        "demo",
        "--min-per-sense",
        "0",
        "--out",
        p(&gold),
    ]);
    assert_eq!(fs::read_to_string(&gold).unwrap(), "");
}

fn embeddings(dir: &Path) -> PathBuf {
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    for i in 0..12 {
        let t = i as f32 * 0.01;
        rows.push(if i < 6 {
            vec![1.0, t, 0.0]
        } else {
            vec![0.0, t, 1.0]
        });
        ids.push(format!("s:{i}"));
    }
    let m = EmbeddingMatrix::from_rows("bat", "fixture-model", ids, &rows).unwrap();
    let path = dir.join("bat.semb");
    write_embeddings(&m, &path).unwrap();
    path
}

#[test]
fn embedding_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let semb = embeddings(tmp.path());
    let out = ok(&["validate-embeddings", "--embeddings", p(&semb)]);
    assert!(out.contains("12 rows x 3 dims"), "{out}");

    let clusters = tmp.path().join("clusters.json");
    ok(&[
        "cluster",
        "--embeddings",
        p(&semb),
        "--k",
        "2",
        "--restarts",
        "3",
        "--out",
        p(&clusters),
    ]);
    let c: Value = serde_json::from_slice(&fs::read(&clusters).unwrap()).unwrap();
    let labels: Vec<u64> = c["labels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert!(labels[..6].iter().all(|&l| l == labels[0]));
    assert!(labels[6..].iter().all(|&l| l == labels[6]));
    assert_ne!(labels[0], labels[6]);

    let agg = tmp.path().join("agg.json");
    ok(&[
        "cluster",
        "--embeddings",
        p(&semb),
        "--method",
        "agglomerative",
        "--out",
        p(&agg),
    ]);
    let a: Value = serde_json::from_slice(&fs::read(&agg).unwrap()).unwrap();
    assert_eq!(a["method"], "agglomerative");

    let proj = tmp.path().join("proj.json");
    ok(&[
        "project",
        "--embeddings",
        p(&semb),
        "--method",
        "pca",
        "--k",
        "2",
        "--out",
        p(&proj),
    ]);
    let pj: Value = serde_json::from_slice(&fs::read(&proj).unwrap()).unwrap();
    assert_eq!(pj["points"].as_array().unwrap().len(), 12);

    let sug = tmp.path().join("sug.json");
    let printed = ok(&[
        "suggest",
        "--projection",
        p(&proj),
        "-m",
        "4",
        "--out",
        p(&sug),
    ]);
    assert_eq!(printed.lines().count(), 4);
    let s: Value = serde_json::from_slice(&fs::read(&sug).unwrap()).unwrap();
    assert_eq!(s["ids"].as_array().unwrap().len(), 4);

    assert_eq!(
        senseloom(&[
            "cluster",
            "--embeddings",
            p(&semb),
            "--k",
            "99",
            "--out",
            p(&clusters)
        ])
        .status
        .code(),
        Some(1)
    );
    fs::write(&semb, b"SEMBgarbage").unwrap();
    assert_eq!(
        senseloom(&["validate-embeddings", "--embeddings", p(&semb)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn eval_commands_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let gold = gold_file(tmp.path(), 20, 8);
    let dir = tmp.path().join("wic");
    ok(&["wic", "build", "--gold", p(&gold), "--out-dir", p(&dir)]);

    let marked = tmp.path().join("marked.jsonl");
    ok(&[
        "eval",
        "mark",
        "--pairs",
        p(&dir.join("dev.jsonl")),
        "--out",
        p(&marked),
    ]);
    let first: Value =
        serde_json::from_str(fs::read_to_string(&marked).unwrap().lines().next().unwrap()).unwrap();
    assert!(first.to_string().contains("<t>"));

    // A perfect scorer: distance 0 for same-sense pairs and 1 otherwise.
    let mut scores = Vec::new();
    for split in ["dev", "test"] {
        for line in fs::read_to_string(dir.join(format!("{split}.jsonl")))
            .unwrap()
            .lines()
        {
            let r: Value = serde_json::from_str(line).unwrap();
            let d = if r["label"] == 1 { 0.0 } else { 1.0 };
            scores.push(json!({ "pair_id": r["pair_id"], "distance": d }));
        }
    }
    let sp = tmp.path().join("scores.jsonl");
    write_lines(&sp, &scores);

    let out = ok(&[
        "eval",
        "tune",
        "--dev",
        p(&dir.join("dev.jsonl")),
        "--scores",
        p(&sp),
    ]);
    assert!(out.contains("100.0"), "{out}");
    let report = tmp.path().join("report.json");
    let out = ok(&[
        "eval",
        "test",
        "--dev",
        p(&dir.join("dev.jsonl")),
        "--test",
        p(&dir.join("test.jsonl")),
        "--scores",
        p(&sp),
        "--out",
        p(&report),
    ]);
    assert!(out.contains("test accuracy  100.0"), "{out}");
    let r: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["test_accuracy"], 1.0);

    write_lines(&sp, &scores[..1]);
    assert_eq!(
        senseloom(&[
            "eval",
            "tune",
            "--dev",
            p(&dir.join("dev.jsonl")),
            "--scores",
            p(&sp)
        ])
        .status
        .code(),
        Some(1)
    );
}
