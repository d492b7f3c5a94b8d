mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use finet::encoders::{names, EncoderKind};
use finet::numeric::{Rng, Tensor};
use finet::synthetic::separable;
use finet::trainer::{load_checkpoint, save_checkpoint, Checkpoint};
use tempfile::TempDir;

fn finet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finet"))
        .args(args)
        .env("FINET_LOG", "info")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
    train: PathBuf,
    dev: PathBuf,
    emb: PathBuf,
}

fn fixture(n: usize) -> Fixture {
    let dir = TempDir::new().unwrap();
    let mut corpus = separable(n, 16, 3);
    let dev = corpus.split_off(n / 4);
    let train = common::write_instances(&dir.path().join("train.jsonl"), &corpus.instances);
    let dev = common::write_instances(&dir.path().join("dev.jsonl"), &dev.instances);
    let emb = common::write_table(&dir.path().join("emb.txt"), &corpus.embeddings);
    Fixture {
        dir,
        train,
        dev,
        emb,
    }
}

impl Fixture {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn train(&self, ckpt: &Path, extra: &[&str]) -> Output {
        let mut args = vec![
            "train",
            "--train",
            s(&self.train),
            "--dev",
            s(&self.dev),
            "--embeddings",
            s(&self.emb),
            "--checkpoint",
            s(ckpt),
        ];
        args.extend_from_slice(extra);
        finet(&args)
    }
}

const SMALL: &[&str] = &[
    "--encoder",
    "lstm",
    "--hidden",
    "8",
    "--batch",
    "16",
    "--max-passes",
    "3",
    "--eval-every",
    "1",
];

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_embeddings_is_a_usage_error() {
    let f = fixture(40);
    let out = finet(&[
        "train",
        "--train",
        s(&f.train),
        "--dev",
        s(&f.dev),
        "--checkpoint",
        s(&f.path("m.ckpt")),
        "--max-passes",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_encoder_is_a_usage_error() {
    let f = fixture(40);
    let out = f.train(
        &f.path("m.ckpt"),
        &["--encoder", "gru", "--max-passes", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn default_config_is_echoed() {
    let f = fixture(20);
    let out = f.train(&f.path("m.ckpt"), &["--max-passes", "1"]);
    assert_ok(&out);
    let log = String::from_utf8_lossy(&out.stderr);
    for part in [
        "encoder=attentive",
        "C=15",
        "M=5",
        "D_h=100",
        "D_a=50",
        "alpha=0.005",
        "batch=1000",
        "dropout=0.5",
        "seed=0",
    ] {
        assert!(log.contains(part), "missing `{part}` in:\n{log}");
    }
}

#[test]
fn same_seed_gives_identical_history() {
    let f = fixture(60);
    let mut histories = Vec::new();
    for run in 0..2 {
        let ckpt = f.path(&format!("run{run}.ckpt"));
        let mut args = SMALL.to_vec();
        args.extend(["--seed", "7", "--deterministic"]);
        assert_ok(&f.train(&ckpt, &args));
        histories.push(fs::read(f.path(&format!("run{run}.ckpt.history.csv"))).unwrap());
    }
    assert_eq!(histories[0], histories[1]);
    let text = String::from_utf8(histories.remove(0)).unwrap();
    assert!(text.starts_with("pass,loss,strict,loose_macro,loose_micro\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn empty_data_is_an_input_error() {
    let f = fixture(40);
    let ckpt = f.path("m.ckpt");
    assert_ok(&f.train(&ckpt, SMALL));
    let empty = f.path("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = finet(&["eval", "--checkpoint", s(&ckpt), "--data", s(&empty)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no instances"));

    let out = finet(&[
        "train",
        "--train",
        s(&empty),
        "--dev",
        s(&f.dev),
        "--embeddings",
        s(&f.emb),
        "--checkpoint",
        s(&f.path("other.ckpt")),
        "--max-passes",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!f.path("other.ckpt").exists());
}

#[test]
fn eval_after_overfitting_scores_high() {
    let f = fixture(160);
    let ckpt = f.path("m.ckpt");
    let out = f.train(
        &ckpt,
        &[
            "--encoder",
            "lstm",
            "--hidden",
            "16",
            "--batch",
            "32",
            "--max-passes",
            "60",
            "--eval-every",
            "60",
            "--dropout",
            "0",
        ],
    );
    assert_ok(&out);
    let report = f.path("report.json");
    let out = finet(&[
        "eval",
        "--checkpoint",
        s(&ckpt),
        "--data",
        s(&f.train),
        "--out",
        s(&report),
    ]);
    assert_ok(&out);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("loose-micro"), "{table}");
    let json: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    for m in ["strict", "loose_macro", "loose_micro"] {
        for v in ["precision", "recall", "f1"] {
            let x = json[m][v].as_f64().unwrap();
            assert!(x >= 0.95, "{m}.{v} = {x}");
        }
    }
}

#[test]
fn predictions_are_well_formed_and_reproducible() {
    let f = fixture(60);
    let ckpt = f.path("m.ckpt");
    assert_ok(&f.train(&ckpt, SMALL));
    let k = load_checkpoint(std::io::BufReader::new(fs::File::open(&ckpt).unwrap()))
        .unwrap()
        .labels
        .len();

    // One unlabeled line: "gold" must be omitted there.
    let mut data = fs::read_to_string(&f.dev).unwrap();
    data.push_str(r#"{"tokens":["w1","name0_1","w2"],"mention_start":1,"mention_end":2}"#);
    data.push('\n');
    let input = f.path("mixed.jsonl");
    fs::write(&input, data).unwrap();

    let mut outputs = Vec::new();
    for run in 0..2 {
        let out_path = f.path(&format!("pred{run}.jsonl"));
        assert_ok(&finet(&[
            "predict",
            "--checkpoint",
            s(&ckpt),
            "--data",
            s(&input),
            "--out",
            s(&out_path),
        ]));
        outputs.push(fs::read(&out_path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    let lines: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    for (i, v) in lines.iter().enumerate() {
        assert!(!v["pred"].as_array().unwrap().is_empty());
        assert_eq!(v["proba"].as_array().unwrap().len(), k);
        assert_eq!(v.get("gold").is_some(), i + 1 < lines.len(), "line {i}");
    }
}

#[test]
fn attend_requires_an_attentive_checkpoint() {
    let f = fixture(40);
    let ckpt = f.path("m.ckpt");
    assert_ok(&f.train(&ckpt, SMALL));
    let out = finet(&[
        "attend",
        "--checkpoint",
        s(&ckpt),
        "--data",
        s(&f.dev),
        "--out",
        s(&f.path("att.tsv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("attentive"));
}

fn read_attention(path: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(finet::cli::ATTEND_HEADER));
    let mut per_instance: Vec<Vec<f64>> = Vec::new();
    for line in lines {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 6, "{line}");
        let i: usize = cols[0].parse().unwrap();
        assert!(cols[2] == "L" || cols[2] == "R");
        assert!(!cols[5].is_empty());
        if per_instance.len() <= i {
            per_instance.resize(i + 1, Vec::new());
        }
        per_instance[i].push(cols[4].parse().unwrap());
    }
    per_instance
}

#[test]
fn attention_dump_is_normalized() {
    let f = fixture(40);
    let ckpt = f.path("m.ckpt");
    assert_ok(&f.train(
        &ckpt,
        &[
            "--encoder",
            "attentive",
            "--hidden",
            "6",
            "--att-hidden",
            "4",
            "--ctx-window",
            "6",
            "--max-passes",
            "2",
        ],
    ));
    let att = f.path("att.tsv");
    assert_ok(&finet(&[
        "attend",
        "--checkpoint",
        s(&ckpt),
        "--data",
        s(&f.dev),
        "--out",
        s(&att),
    ]));
    let rows = read_attention(&att);
    assert_eq!(rows.len(), 10);
    for a in rows {
        assert_eq!(a.len(), 12);
        assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn zero_attention_weights_give_uniform_dump() {
    let f = fixture(40);
    let ckpt_path = f.path("m.ckpt");
    assert_ok(&f.train(
        &ckpt_path,
        &[
            "--encoder",
            "attentive",
            "--hidden",
            "4",
            "--att-hidden",
            "3",
            "--ctx-window",
            "5",
            "--max-passes",
            "1",
        ],
    ));
    let mut ckpt: Checkpoint =
        load_checkpoint(std::io::BufReader::new(fs::File::open(&ckpt_path).unwrap())).unwrap();
    assert_eq!(ckpt.config.encoder, EncoderKind::Attentive);
    *ckpt.params.get_mut(names::W_A).unwrap() = Tensor::zeros(&[1, 3]);
    let zeroed = f.path("zeroed.ckpt");
    save_checkpoint(&ckpt, fs::File::create(&zeroed).unwrap()).unwrap();

    let att = f.path("att.tsv");
    assert_ok(&finet(&[
        "attend",
        "--checkpoint",
        s(&zeroed),
        "--data",
        s(&f.dev),
        "--out",
        s(&att),
    ]));
    for a in read_attention(&att) {
        for x in a {
            assert!((x - 0.1).abs() < 1e-12, "{x}");
        }
    }
}

#[test]
fn embeddings_fall_back_to_recorded_path() {
    let f = fixture(40);
    let ckpt = f.path("m.ckpt");
    assert_ok(&f.train(&ckpt, SMALL));
    let c = load_checkpoint(std::io::BufReader::new(fs::File::open(&ckpt).unwrap())).unwrap();
    assert_eq!(c.config.embeddings.as_deref(), Some(s(&f.emb)));
    // Mismatched dimension is rejected.
    let other = common::write_table(
        &f.path("emb8.txt"),
        &finet::synthetic::random_embeddings(&["x".to_string()], 8, &mut Rng::new(0)),
    );
    let out = finet(&[
        "eval",
        "--checkpoint",
        s(&ckpt),
        "--data",
        s(&f.dev),
        "--embeddings",
        s(&other),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
