use std::path::PathBuf;

use softprompt::eval::{evaluate_prompt, group_by_tag, run_protocol, ExperimentSetup};
use softprompt::verbalizer::LabelMode;

use crate::commands::Context;
use crate::CliError;

pub fn run(ctx: &Context, prompt_flag: Option<PathBuf>) -> Result<i32, CliError> {
    let backend = ctx.create_backend()?;
    let labels = ctx.load_class_labels()?;
    let k = ctx.config.resolve_k()?;
    let verbalizer = ctx.load_verbalizer(backend.as_ref(), LabelMode::Strict)?;
    let eval_corpora = ctx.load_eval_corpora(&ctx.config.data.eval_corpora)?;
    let setup = ExperimentSetup {
        backend: backend.as_ref(),
        verbalizer: &verbalizer,
        class_labels: &labels,
        train: &ctx.config.train,
        k,
        aggregate_on: ctx.config.inference.aggregate_on,
    };
    let snapshot = ctx.config_snapshot();

    let evaluate_checkpoint = prompt_flag.is_some() || ctx.config.data.prompt.is_some();
    let report = if evaluate_checkpoint {
        let prompt = ctx.load_prompt(prompt_flag.as_deref(), backend.as_ref())?;
        ctx.progress("evaluating existing checkpoint");
        evaluate_prompt(&setup, &prompt, &eval_corpora, "eval", snapshot)?
    } else {
        let train_corpus = ctx.load_train_corpus()?;
        ctx.progress(format!(
            "running the seeded protocol over {:?}",
            ctx.config.eval.seeds
        ));
        run_protocol(
            &setup,
            &train_corpus,
            &eval_corpora,
            &ctx.config.eval.seeds,
            "full",
            snapshot,
        )?
    };

    report.write_json(ctx.out.join("report.json"))?;
    report.write_csv(ctx.out.join("report.csv"))?;
    print!("{}", report.summary_table());
    if let Some(groups) = &ctx.config.eval.language_groups {
        let accuracies: Vec<(String, f64)> = report
            .mean_per_language
            .iter()
            .map(|lm| (lm.language.clone(), lm.accuracy))
            .collect();
        println!("grouped accuracy:");
        for (tag, mean) in group_by_tag(&accuracies, groups) {
            println!("{tag:<20} {mean:>10.4}");
        }
    }
    Ok(0)
}
