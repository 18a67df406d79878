use std::io::Write;

use softprompt::eval::{ablation_matrix, run_protocol, ExperimentSetup, RunReport};
use softprompt::verbalizer::LabelMode;

use crate::commands::Context;
use crate::CliError;

pub fn run(ctx: &Context) -> Result<i32, CliError> {
    let backend = ctx.create_backend()?;
    let labels = ctx.load_class_labels()?;
    let k = ctx.config.resolve_k()?;
    let verbalizer = ctx.load_verbalizer(backend.as_ref(), LabelMode::Strict)?;
    let english_only = verbalizer.single_language_variant(
        "en",
        backend.embedding_table(),
        backend.tokenizer(),
    )?;
    let train_corpus = ctx.load_train_corpus()?;
    let eval_corpora = ctx.load_eval_corpora(&ctx.config.data.eval_corpora)?;
    let snapshot = ctx.config_snapshot();

    let mut reports: Vec<RunReport> = Vec::new();
    for (variant, train_config) in ablation_matrix(&ctx.config.train) {
        ctx.progress(format!("ablation variant {}", variant.tag()));
        let setup = ExperimentSetup {
            backend: backend.as_ref(),
            verbalizer: if variant.english_only_labels() {
                &english_only
            } else {
                &verbalizer
            },
            class_labels: &labels,
            train: &train_config,
            k,
            aggregate_on: ctx.config.inference.aggregate_on,
        };
        reports.push(run_protocol(
            &setup,
            &train_corpus,
            &eval_corpora,
            &ctx.config.eval.seeds,
            variant.tag(),
            snapshot.clone(),
        )?);
    }

    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    std::fs::write(ctx.out.join("ablation_report.json"), json)
        .map_err(softprompt::Error::from)?;

    // one flat CSV across all variants; fields never contain commas
    let file = std::fs::File::create(ctx.out.join("ablation_report.csv"))
        .map_err(softprompt::Error::from)?;
    let mut csv = std::io::BufWriter::new(file);
    writeln!(csv, "variant,seed,language,metric,value").map_err(softprompt::Error::from)?;
    for report in &reports {
        for (variant, seed, language, metric, value) in report.csv_rows() {
            writeln!(csv, "{variant},{seed},{language},{metric},{value}")
                .map_err(softprompt::Error::from)?;
        }
    }
    csv.flush().map_err(softprompt::Error::from)?;

    println!("{:<24} {:>10} {:>10}", "variant", "accuracy", "macro_f1");
    for report in &reports {
        let n = report.mean_per_language.len().max(1) as f64;
        let acc: f64 = report.mean_per_language.iter().map(|l| l.accuracy).sum::<f64>() / n;
        let f1: f64 = report.mean_per_language.iter().map(|l| l.macro_f1).sum::<f64>() / n;
        println!("{:<24} {:>10.4} {:>10.4}", report.variant, acc, f1);
    }
    Ok(0)
}
