use std::path::PathBuf;

use softprompt::eval::LabeledCorpus;
use softprompt::inference::sweep_k;

use crate::commands::Context;
use crate::CliError;

pub fn run(
    ctx: &Context,
    prompt_flag: Option<PathBuf>,
    candidate_flags: Vec<usize>,
) -> Result<i32, CliError> {
    let backend = ctx.create_backend()?;
    let labels = ctx.load_class_labels()?;
    let prompt = ctx.load_prompt(prompt_flag.as_deref(), backend.as_ref())?;
    let candidates = if candidate_flags.is_empty() {
        ctx.config.eval.k_candidates.clone()
    } else {
        candidate_flags
    };
    let dev_paths = if ctx.config.data.dev_corpora.is_empty() {
        &ctx.config.data.eval_corpora
    } else {
        &ctx.config.data.dev_corpora
    };
    let dev_sets = ctx.load_eval_corpora(dev_paths)?;
    let refs: Vec<&LabeledCorpus> = dev_sets.iter().collect();

    ctx.progress(format!("sweeping k over {candidates:?}"));
    let result = sweep_k(
        &candidates,
        &refs,
        &prompt,
        backend.as_ref(),
        &labels,
        ctx.config.inference.aggregate_on,
    )?;

    std::fs::write(
        ctx.out.join("k_sweep.json"),
        serde_json::to_string_pretty(&result).expect("sweep serializes"),
    )
    .map_err(softprompt::Error::from)?;

    println!("{:<6} {:>14}", "k", "mean_accuracy");
    for outcome in &result.outcomes {
        println!("{:<6} {:>14.4}", outcome.k, outcome.mean_accuracy);
    }
    println!("chosen k: {}", result.chosen_k);
    Ok(0)
}
