use softprompt::trainer::{sample_few_shot, train};
use softprompt::verbalizer::LabelMode;

use crate::commands::Context;
use crate::CliError;

pub fn run(ctx: &Context) -> Result<i32, CliError> {
    let backend = ctx.create_backend()?;
    let verbalizer = ctx.load_verbalizer(backend.as_ref(), LabelMode::Strict)?;
    let corpus = ctx.load_train_corpus()?;
    let config = &ctx.config.train;

    ctx.progress(format!(
        "sampling {} shots per class from {} examples",
        config.shots_per_class,
        corpus.examples.len()
    ));
    let samples = sample_few_shot(&corpus, config.shots_per_class, config.seed)?;
    ctx.progress(format!("training on {} samples", samples.len()));
    let (prompt, log) = train(config, &samples, &verbalizer, backend.as_ref())?;

    let prompt_path = ctx.out.join("prompt.bin");
    prompt.save_to_path(&prompt_path)?;
    let log_path = ctx.out.join("train_log.jsonl");
    log.write_jsonl(&log_path)?;
    std::fs::write(
        ctx.out.join("resolved_config.json"),
        serde_json::to_string_pretty(&ctx.config_snapshot()).expect("snapshot serializes"),
    )
    .map_err(softprompt::Error::from)?;

    let last = log.steps.last();
    println!(
        "trained {} steps (final total loss {}); checkpoint at {}",
        prompt.trained_steps(),
        last.map(|s| format!("{:.4}", s.total)).unwrap_or_else(|| "n/a".into()),
        prompt_path.display()
    );
    Ok(0)
}
