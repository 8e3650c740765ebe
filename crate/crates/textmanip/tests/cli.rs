mod common;

use std::fs;
use std::path::Path;

use common::{path, run, run_ok};
use serde_json::Value;

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn lines(p: &Path) -> Vec<Value> {
    fs::read_to_string(p).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["generate", "--corpus", "x"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["generate", "--corpus", "a", "--vectors", "b", "--ratios", "0.5,0.5"]).status.code(), Some(2));
    assert_eq!(run(&["train-baseline"]).status.code(), Some(2));
}

#[test]
fn operational_errors_exit_one_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("bad.tsv");
    fs::write(&corpus, "a\tN\nb\n").unwrap();
    let vectors = dir.path().join("v.vec");
    fs::write(&vectors, "1 2\na 1 0\n").unwrap();
    let out = run(&["generate", "--corpus", path(&corpus), "--vectors", path(&vectors), "--out", path(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");

    let missing = run(&["stats", "--dataset", path(&dir.path().join("none.jsonl")), "--out", path(dir.path())]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn generate_writes_dataset_stats_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let toy = common::toy(1);
    let (corpus, vectors) = toy.write(dir.path());
    let out = dir.path().join("gen");
    run_ok(&["generate", "--corpus", path(&corpus), "--vectors", path(&vectors), "--per-class", "100", "--out", path(&out)]);
    let records = lines(&out.join("dataset.jsonl"));
    assert_eq!(records.len(), 200);
    let machine = records.iter().filter(|r| r["label"] == "machine").count();
    assert_eq!(machine, 100);
    for r in records.iter().filter(|r| r["label"] == "machine") {
        for m in r["records"].as_array().unwrap() {
            let sub = m["substitute"].as_str().unwrap();
            if m["kind"] == "embedding_swap" {
                let c = toy.clusters.iter().find(|c| c.root == m["original"].as_str().unwrap()).unwrap();
                assert!(c.related.iter().any(|w| w == sub), "{sub} is not a related word");
            }
        }
    }
    let stats = json(&out.join("stats.json"));
    assert!(stats["per_label"]["machine"].as_u64().unwrap() == 100);

    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "generate");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert_eq!(outputs, ["dataset.jsonl", "stats.json", "config.json"]);
    let config = json(&out.join("config.json"));
    assert_eq!(config["per_class"], 100);
    assert_eq!(config["seed"], 0);

    // `stats` over the written dataset agrees with the stats from `generate`.
    let st = dir.path().join("st");
    run_ok(&["stats", "--dataset", path(&out.join("dataset.jsonl")), "--out", path(&st)]);
    assert_eq!(json(&st.join("stats.json"))["per_pos"], stats["per_pos"]);
}

#[test]
fn config_file_and_data_dir_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let toy = common::toy(2);
    let (corpus, vectors) = toy.write(dir.path());
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 9\nper_class = 40\n[manipulation]\ntarget_pos = [\"N_PROP\"]\n").unwrap();
    let data = dir.path().join("data");
    let out = std::process::Command::new(common::bin())
        .args(["--config", path(&cfg), "generate", "--corpus", path(&corpus), "--vectors", path(&vectors), "--per-class", "30"])
        .env("TEXTMANIP_DATA_DIR", &data)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let config = json(&data.join("generate/config.json"));
    assert_eq!(config["seed"], 9);
    assert_eq!(config["per_class"], 30);
    assert_eq!(config["manipulation"]["target_pos"], serde_json::json!(["N_PROP"]));
    assert_eq!(config["manipulation"]["seed"], 9);
    for r in lines(&data.join("generate/dataset.jsonl")) {
        for m in r["records"].as_array().unwrap() {
            assert_eq!(m["pos"], "N_PROP");
        }
    }

    fs::write(&cfg, "sed = 1\n").unwrap();
    let bad = run(&["--config", path(&cfg), "stats", "--dataset", "x"]);
    assert_eq!(bad.status.code(), Some(1));
}

fn kappa_oracle(a: &[&str], b: &[&str]) -> f64 {
    let n = a.len() as f64;
    let labels = ["human", "machine"];
    let p_o = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let p_e: f64 = labels
        .iter()
        .map(|l| (a.iter().filter(|x| *x == l).count() as f64 / n) * (b.iter().filter(|x| *x == l).count() as f64 / n))
        .sum();
    (p_o - p_e) / (1.0 - p_e)
}

#[test]
fn study_labels_and_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let toy = common::toy(4);
    let (corpus, vectors) = toy.write(dir.path());
    let gen = dir.path().join("gen");
    run_ok(&["generate", "--corpus", path(&corpus), "--vectors", path(&vectors), "--out", path(&gen)]);
    let study = dir.path().join("study");
    run_ok(&[
        "sample-study",
        "--dataset",
        path(&gen.join("dataset.jsonl")),
        "--n-human",
        "20",
        "--n-machine",
        "25",
        "--out",
        path(&study),
    ]);
    let tasks = lines(&study.join("tasks.jsonl"));
    assert_eq!(tasks.iter().filter(|t| t["stage"] == 1).count(), 45);
    assert_eq!(tasks.iter().filter(|t| t["stage"] == 2).count(), 25);

    // Two annotators in two files, stage 1 only.
    let stage1: Vec<&Value> = tasks.iter().filter(|t| t["stage"] == 1).collect();
    let mut a_vals = Vec::new();
    let mut b_vals = Vec::new();
    let mut a_log = String::new();
    let mut b_log = String::new();
    for (i, t) in stage1.iter().enumerate() {
        let gold = t["gold_origin"].as_str().unwrap();
        let flip = |g: &str| if g == "human" { "machine" } else { "human" };
        let a = if i % 7 == 0 { flip(gold) } else { gold };
        let b = if i % 5 == 0 { flip(gold) } else { gold };
        a_vals.push(a);
        b_vals.push(b);
        for (who, v, log) in [("ann-a", a, &mut a_log), ("ann-b", b, &mut b_log)] {
            log.push_str(&serde_json::json!({"task_id": t["task_id"], "annotator_id": who, "stage": 1, "value": v}).to_string());
            log.push('\n');
        }
    }
    let (fa, fb) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    fs::write(&fa, a_log).unwrap();
    fs::write(&fb, b_log).unwrap();
    let agr = dir.path().join("agr");
    run_ok(&["agreement", "--labels", path(&fa), path(&fb), "--out", path(&agr)]);
    let report = json(&agr.join("agreement.json"));
    assert_eq!(report["annotator_a"], "ann-a");
    let got = report["kappa_stage1"].as_f64().unwrap();
    assert!((got - kappa_oracle(&a_vals, &b_vals)).abs() < 1e-9, "{got}");
    assert_eq!(report["stage2"]["status"], "insufficient_data");

    let one = run(&["agreement", "--labels", path(&fa), "--out", path(&agr)]);
    assert_eq!(one.status.code(), Some(1));
}

#[test]
fn claims_train_evaluate_and_compose() {
    let dir = tempfile::tempdir().unwrap();
    let claims = dir.path().join("claims.tsv");
    let mut text = String::new();
    for i in 0..80 {
        let (label, verb) = if i % 2 == 0 { ("fake", "نفى") } else { ("true", "اكد") };
        text.push_str(&format!("{label}\t{verb} المتحدث الخبر رقم {i}\n"));
    }
    fs::write(&claims, text).unwrap();
    let model = dir.path().join("m");
    run_ok(&["train-baseline", "--claims", path(&claims), "--epochs", "5", "--ngram", "2,3", "--out", path(&model)]);
    let m = json(&model.join("model.json"));
    assert_eq!(m["format_version"], 1);
    let ev = dir.path().join("ev");
    run_ok(&["evaluate", "--model", path(&model.join("model.json")), "--claims", path(&claims), "--out", path(&ev)]);
    let report = json(&ev.join("report.json"));
    assert_eq!(report["n"], 80);
    assert!(report["accuracy"].as_f64().unwrap() > 0.9);

    let toy = common::toy(5);
    let (corpus, vectors) = toy.write(dir.path());
    let gen = dir.path().join("gen");
    run_ok(&["generate", "--corpus", path(&corpus), "--vectors", path(&vectors), "--out", path(&gen)]);
    let dataset = gen.join("dataset.jsonl");
    let train_texts: std::collections::BTreeSet<String> = lines(&dataset)
        .iter()
        .filter(|r| r["split"] == "train")
        .map(|r| r["text"].as_str().unwrap().to_string())
        .collect();

    let compose = |setting: &str, extra: &[&str]| {
        let out = dir.path().join(setting);
        let mut args = vec!["compose-training", "--setting", setting, "--out", path(&out)];
        args.extend_from_slice(extra);
        run_ok(&args);
        fs::read_to_string(out.join("training.tsv")).unwrap()
    };
    let base = compose("baseline", &["--gold", path(&claims)]);
    assert_eq!(base.lines().count(), 80);
    let zs = compose("zero_shot", &["--generated", path(&dataset)]);
    assert!(zs.lines().count() > 0);
    assert!(zs.lines().all(|l| l.starts_with("fake\t") || l.starts_with("true\t")));
    let aug = compose("augment", &["--gold", path(&claims), "--generated", path(&dataset), "--factor", "2"]);
    assert_eq!(aug.lines().count(), 80 + 2 * train_texts.len());

    let refused = run(&["compose-training", "--setting", "augment", "--generated", path(&dataset), "--out", path(dir.path())]);
    assert_eq!(refused.status.code(), Some(1));
}

#[test]
fn split_normalizes_categories() {
    let dir = tempfile::tempdir().unwrap();
    let articles = dir.path().join("articles.jsonl");
    let mut text = String::new();
    for i in 0..20 {
        let topic = ["رياضة", "Sports", "غير معروف", "Politics"][i % 4];
        let a = serde_json::json!({
            "newspaper_name_ar": "الجريدة",
            "newspaper_name_en": "The Paper",
            "country": "EG",
            "newspaper_link": "https://paper.example",
            "title": format!("عنوان {i}"),
            "content": format!("نص المقال رقم {i}"),
            "url": format!("https://paper.example/{i}"),
            "date": "2019-12-01",
            "topic": topic,
        });
        text.push_str(&a.to_string());
        text.push('\n');
    }
    fs::write(&articles, text).unwrap();
    let map = dir.path().join("map.tsv");
    fs::write(&map, "رياضة\tSports\n").unwrap();
    let out = dir.path().join("split");
    let res = run(&["split", "--articles", path(&articles), "--category-map", path(&map), "--out", path(&out)]);
    if !res.status.success() {
        panic!("{}", String::from_utf8_lossy(&res.stderr));
    }
    let mut all = Vec::new();
    for s in ["train", "dev", "test"] {
        all.extend(lines(&out.join(format!("{s}.jsonl"))));
    }
    assert_eq!(all.len(), 20);
    assert_eq!(lines(&out.join("train.jsonl")).len(), 16);
    assert_eq!(all.iter().filter(|a| a["topic"] == "Sports").count(), 10);
    assert_eq!(lines(&out.join("warnings.jsonl")).len(), 5);
}
