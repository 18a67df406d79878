use std::path::PathBuf;

use softprompt::verbalizer::inspect_training_verbalizer;

use crate::commands::{read_to_string, Context};
use crate::CliError;

pub fn run(
    ctx: &Context,
    verbalizer_flag: Option<PathBuf>,
    lenient: bool,
) -> Result<i32, CliError> {
    let backend = ctx.create_backend()?;
    let path = verbalizer_flag
        .or_else(|| ctx.config.data.verbalizer.clone())
        .ok_or_else(|| {
            CliError::validation("CONFIG_INVALID", "pass --verbalizer or set data.verbalizer")
        })?;
    let text = read_to_string(&path)?;
    let inspection = inspect_training_verbalizer(
        &text,
        backend.embedding_table(),
        backend.tokenizer(),
    )?;

    for diag in &inspection.diagnostics {
        println!("{diag}");
    }
    for class in &inspection.empty_classes {
        println!("{class}: no valid label tokens remain");
    }
    let valid = if lenient {
        inspection.valid_lenient
    } else {
        inspection.valid_strict
    };
    if valid {
        println!(
            "ok: document is valid in {} mode",
            if lenient { "lenient" } else { "strict" }
        );
        Ok(0)
    } else {
        Ok(1)
    }
}
