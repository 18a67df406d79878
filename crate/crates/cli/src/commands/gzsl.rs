use softprompt::eval::{gzsl_protocol, ExperimentSetup};
use softprompt::verbalizer::LabelMode;

use crate::commands::Context;
use crate::CliError;

pub fn run(ctx: &Context) -> Result<i32, CliError> {
    let backend = ctx.create_backend()?;
    let labels = ctx.load_class_labels()?;
    let k = ctx.config.resolve_k()?;
    let verbalizer = ctx.load_verbalizer(backend.as_ref(), LabelMode::Strict)?;
    let mut corpus = ctx.load_train_corpus()?;
    if let Some(languages) = &ctx.config.eval.languages {
        corpus = corpus.filter_languages(languages);
    }
    let setup = ExperimentSetup {
        backend: backend.as_ref(),
        verbalizer: &verbalizer,
        class_labels: &labels,
        train: &ctx.config.train,
        k,
        aggregate_on: ctx.config.inference.aggregate_on,
    };
    ctx.progress(format!(
        "gzsl: {} repetitions, seen fraction {}",
        ctx.config.eval.gzsl_repetitions, ctx.config.eval.gzsl_seen_fraction
    ));
    let report = gzsl_protocol(
        &setup,
        &corpus,
        ctx.config.eval.gzsl_repetitions,
        ctx.config.eval.gzsl_seen_fraction,
        ctx.config.train.seed,
        ctx.config_snapshot(),
    )?;
    report.write_json(ctx.out.join("gzsl_report.json"))?;
    report.write_csv(ctx.out.join("gzsl_report.csv"))?;
    print!("{}", report.summary_table());
    Ok(0)
}
