//! Writes a ready-to-run toy dataset: embedding table, train/dev
//! corpora, verbalizer document, inference labels, and a matching CLI
//! config.
//!
//! Usage: `cargo run -p softprompt --example make_toy_data -- <out-dir> [seed]`

use softprompt::synthetic::{separable_topic_task, ToyTaskConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "toy-data".to_string()));
    let seed: u64 = args
        .next()
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(42);
    std::fs::create_dir_all(&out).expect("create output directory");

    let task = separable_topic_task(&ToyTaskConfig {
        seed,
        languages: vec!["en".into(), "de".into(), "es".into()],
        ..ToyTaskConfig::default()
    })
    .expect("task generates");

    task.table
        .write_text_path(out.join("embeddings.emb"))
        .expect("write embeddings");
    task.train
        .write_jsonl(out.join("train.jsonl"))
        .expect("write train corpus");
    task.heldout
        .write_jsonl(out.join("dev.jsonl"))
        .expect("write dev corpus");
    std::fs::write(out.join("verbalizer.json"), &task.verbalizer_doc)
        .expect("write verbalizer");
    let labels: serde_json::Map<String, serde_json::Value> = task
        .class_labels
        .iter()
        .map(|(c, w)| (c.clone(), serde_json::json!(w)))
        .collect();
    std::fs::write(
        out.join("labels.json"),
        serde_json::to_string_pretty(&serde_json::Value::Object(labels)).unwrap(),
    )
    .expect("write labels");

    let config = serde_json::json!({
        "backend": {
            "name": "toy",
            "kind": "decoder-only",
            "embeddings": out.join("embeddings.emb"),
            "max_length": 64
        },
        "train": {
            "batch_size": 8,
            "learning_rate": 0.05,
            "epochs": 25,
            "loss": { "epsilon": 0.1, "alpha": 1.0 },
            "prompt_length": 8,
            "shots_per_class": 8,
            "seed": 0
        },
        "inference": { "k": 3 },
        "data": {
            "train_corpus": out.join("train.jsonl"),
            "eval_corpora": [out.join("dev.jsonl")],
            "verbalizer": out.join("verbalizer.json"),
            "labels": out.join("labels.json"),
            "prompt": out.join("out/prompt.bin")
        }
    });
    std::fs::write(
        out.join("config.json"),
        serde_json::to_string_pretty(&config).unwrap(),
    )
    .expect("write config");

    println!("toy dataset written to {}", out.display());
    println!("try: softprompt train --config {}/config.json --out {}/out", out.display(), out.display());
}
