use std::path::PathBuf;

use softprompt::eval::corpus::load_documents;
use softprompt::inference::{classify, PredictionRecord};
use softprompt::verbalizer::build_inference_verbalizer;

use crate::commands::Context;
use crate::CliError;

pub fn run(
    ctx: &Context,
    prompt_flag: Option<PathBuf>,
    input_flag: Option<PathBuf>,
) -> Result<i32, CliError> {
    let backend = ctx.create_backend()?;
    let labels = ctx.load_class_labels()?;
    let k = ctx.config.resolve_k()?;
    let verbalizer = build_inference_verbalizer(
        &labels,
        backend.embedding_table(),
        backend.tokenizer(),
        k,
    )?;
    let prompt = ctx.load_prompt(prompt_flag.as_deref(), backend.as_ref())?;
    let input = input_flag
        .or_else(|| ctx.config.data.documents.clone())
        .ok_or_else(|| {
            CliError::validation("CONFIG_INVALID", "pass --input or set data.documents")
        })?;
    let documents = load_documents(&input)?;

    let mut lines = String::new();
    for (id, text) in &documents {
        let (predicted, scores) = classify(
            text,
            &prompt,
            &verbalizer,
            backend.as_ref(),
            ctx.config.inference.aggregate_on,
        )?;
        let record = PredictionRecord::new(id.clone(), predicted, &scores);
        lines.push_str(&serde_json::to_string(&record).expect("record serializes"));
        lines.push('\n');
    }
    let out_path = ctx.out.join("predictions.jsonl");
    std::fs::write(&out_path, lines).map_err(softprompt::Error::from)?;
    println!(
        "classified {} documents with k={k}; predictions at {}",
        documents.len(),
        out_path.display()
    );
    Ok(0)
}
