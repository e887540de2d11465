use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use extsum::corpus::write_records;
use extsum::synthetic::{self, SyntheticSpec};

fn extsum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extsum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 stdout")
}

fn ok(o: Output) -> Output {
    assert!(o.status.success(), "command failed: {}", stderr(&o));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Workspace {
        let dir = tempfile::tempdir().unwrap();
        let splits = [("train", 12, 1), ("valid", 4, 2), ("test", 5, 3)];
        for (name, documents, seed) in splits {
            let spec = SyntheticSpec {
                documents,
                seed,
                ..SyntheticSpec::default()
            };
            write_records(
                dir.path().join(format!("{name}.raw.jsonl")),
                &synthetic::corpus(&spec),
            )
            .unwrap();
        }
        let words = synthetic::vocabulary(&SyntheticSpec::default());
        fs::write(
            dir.path().join("vectors.txt"),
            synthetic::embeddings_text(&words, 8, 1),
        )
        .unwrap();
        fs::write(
            dir.path().join("run.toml"),
            r#"[paths]
train = "train.jsonl"
valid = "valid.jsonl"
test = "test.jsonl"
embeddings = "vectors.txt"
checkpoint = "model"
reports = "report"

[model]
d_emb = 8
d_hid = 6
d_mlp = 6

[train]
lr = 0.01
batch_size = 4
max_epochs = 3
seed = 5
summary_limit = 10
"#,
        )
        .unwrap();
        Workspace { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn label_all(&self) {
        for split in ["train", "valid", "test"] {
            ok(extsum(&[
                "label",
                s(&self.path(&format!("{split}.raw.jsonl"))),
                s(&self.path(&format!("{split}.jsonl"))),
            ]));
        }
    }
}

#[test]
fn label_writes_deterministic_labels() {
    let ws = Workspace::new();
    let input = ws.path("train.raw.jsonl");
    let (a, b) = (ws.path("a.jsonl"), ws.path("b.jsonl"));
    let out = ok(extsum(&["label", s(&input), s(&a), "--limit", "50"]));
    assert!(stderr(&out).contains("positive"));
    ok(extsum(&[
        "--threads",
        "1",
        "label",
        s(&input),
        s(&b),
        "--limit",
        "50",
    ]));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    for line in fs::read_to_string(&a).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let sentences: usize = v["sections"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s.as_array().unwrap().len())
            .sum();
        assert_eq!(v["labels"].as_array().unwrap().len(), sentences);
        assert!(v["picked_order"].is_array());
    }
}

#[test]
fn label_rejects_zero_limit_and_missing_input() {
    let ws = Workspace::new();
    let out = extsum(&[
        "label",
        s(&ws.path("train.raw.jsonl")),
        s(&ws.path("x.jsonl")),
        "--limit",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = extsum(&["label", s(&ws.path("nope.jsonl")), s(&ws.path("x.jsonl"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope.jsonl"));
}

#[test]
fn train_requires_labels() {
    let ws = Workspace::new();
    for split in ["train", "valid"] {
        fs::copy(
            ws.path(&format!("{split}.raw.jsonl")),
            ws.path(&format!("{split}.jsonl")),
        )
        .unwrap();
    }
    let out = extsum(&["train", s(&ws.path("run.toml"))]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("`label`"), "{}", stderr(&out));
}

#[test]
fn train_evaluate_summarize_compare() {
    let ws = Workspace::new();
    ws.label_all();
    let config = ws.path("run.toml");
    ok(extsum(&["train", s(&config)]));
    let model = ws.path("model");
    for f in [
        "model.json",
        "params.bin",
        "vocab.txt",
        "train_log.jsonl",
        "run.json",
    ] {
        assert!(model.join(f).exists(), "{f}");
    }
    let log = fs::read_to_string(model.join("train_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3);
    for (i, line) in log.lines().enumerate() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["epoch"], i + 1);
        for key in ["train_loss", "val_rouge2_f", "wall_time"] {
            assert!(v[key].is_number(), "{key}");
        }
    }

    // Evaluation with a single default bucket.
    let out = ok(extsum(&["evaluate", s(&config)]));
    assert!(stdout(&out).starts_with("system\t"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ws.path("report/report.json")).unwrap()).unwrap();
    let names: Vec<&str> = report["systems"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["model", "lead", "oracle"]);
    let tsv = fs::read_to_string(ws.path("report/buckets.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1 + 3);

    // Bucket edges split every system into two rows.
    let split = ws.path("split");
    ok(extsum(&[
        "evaluate",
        s(&config),
        "--buckets",
        "30",
        "--out",
        s(&split),
    ]));
    let tsv = fs::read_to_string(split.join("buckets.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1 + 6);

    // A config describing another architecture is refused.
    let out = extsum(&["evaluate", s(&config), "--ablation", "bsl"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("trained with"));

    // Summaries.
    let doc = ws.path("doc.json");
    let first = fs::read_to_string(ws.path("test.raw.jsonl"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    fs::write(&doc, &first).unwrap();
    let out = ok(extsum(&[
        "summarize",
        "--checkpoint",
        s(&model),
        s(&doc),
        "--limit",
        "1",
    ]));
    let text = stdout(&out);
    assert!(text.ends_with('\n'));
    assert_eq!(text.lines().count(), 1);
    let out = ok(extsum(&[
        "summarize",
        "--checkpoint",
        s(&model),
        s(&doc),
        "--verbose",
    ]));
    for line in stdout(&out).lines() {
        let fields: Vec<&str> = line.splitn(3, '\t').collect();
        assert_eq!(fields.len(), 3);
        fields[0].parse::<usize>().unwrap();
        let p: f64 = fields[1].parse().unwrap();
        assert!(p > 0.0 && p < 1.0);
    }
    let out = ok(extsum(&[
        "summarize",
        "--checkpoint",
        s(&model),
        s(&ws.path("test.raw.jsonl")),
    ]));
    assert_eq!(stdout(&out).split("\n\n").count(), 5);
    fs::write(ws.path("bad.json"), "{\"sections\": 3}\n").unwrap();
    let out = extsum(&[
        "summarize",
        "--checkpoint",
        s(&model),
        s(&ws.path("bad.json")),
    ]);
    assert!(!out.status.success());

    // Comparison between two reports.
    let out = extsum(&["compare", s(&ws.path("report/report.json"))]);
    assert_eq!(out.status.code(), Some(2));
    let cmp = ws.path("cmp.json");
    let out = ok(extsum(&[
        "compare",
        s(&ws.path("report/report.json")),
        s(&split.join("report.json")),
        "--trials",
        "500",
        "--out",
        s(&cmp),
    ]));
    let table = stdout(&out);
    assert_eq!(table.lines().filter(|l| l.starts_with('*')).count(), 1);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cmp).unwrap()).unwrap();
    assert_eq!(v["systems"].as_array().unwrap().len(), 6);
    assert_eq!(v["comparisons"], 15);
}

#[test]
fn ablation_flag_sets_context_flags() {
    let ws = Workspace::new();
    ws.label_all();
    let model = ws.path("local");
    ok(extsum(&[
        "train",
        s(&ws.path("run.toml")),
        "--ablation",
        "bsl+l",
        "--epochs",
        "1",
        "--precision",
        "f32",
        "--checkpoint",
        s(&model),
    ]));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(model.join("model.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["use_local"], true);
    assert_eq!(manifest["config"]["use_global"], false);
    assert_eq!(manifest["config"]["decoder"], "concat");
    let log = fs::read_to_string(model.join("train_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 1);
}

#[test]
fn rouge_prints_scores() {
    let ws = Workspace::new();
    fs::write(ws.path("hyp.txt"), "The cat sat.\n").unwrap();
    fs::write(ws.path("ref.txt"), "the cat\n").unwrap();
    let out = ok(extsum(&[
        "rouge",
        s(&ws.path("hyp.txt")),
        s(&ws.path("ref.txt")),
    ]));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["rouge1"]["f1"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(v["rouge2"]["recall"].as_f64().unwrap(), 1.0);
}
