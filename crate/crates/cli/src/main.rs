//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 on validation errors (with a
//! machine-readable error JSON on stderr), 2 on runtime failures.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{ArgAction, Parser, Subcommand};

/// A failure with a stable machine-readable code.
#[derive(Debug)]
pub struct CliError {
    code: String,
    message: String,
    validation: bool,
}

impl CliError {
    pub fn validation(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
            validation: true,
        }
    }

    pub fn runtime(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
            validation: false,
        }
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn exit_code(&self) -> i32 {
        if self.validation {
            1
        } else {
            2
        }
    }

    /// `{"error": {"code", "message"}}` for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "code": self.code, "message": self.message }
        })
        .to_string()
    }
}

impl From<softprompt::Error> for CliError {
    fn from(err: softprompt::Error) -> Self {
        Self {
            code: err.code().to_string(),
            message: err.to_string(),
            validation: err.is_validation(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "softprompt",
    version,
    about = "Soft prompt training and nonparametric zero-shot classification",
    after_help = "Config precedence: --set overrides > config file > bundled defaults."
)]
struct Cli {
    /// Experiment config JSON (falls back to $SOFTPROMPT_CONFIG_DIR/default.json).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Dotted-key config override, repeatable (e.g. --set train.seed=7).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,

    /// Master seed (shorthand for --set train.seed=N).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Increase progress output.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a soft prompt on few-shot samples; writes the checkpoint
    /// and the per-step loss log.
    Train,
    /// Classify unlabeled documents with a trained prompt; writes
    /// prediction JSON lines.
    Classify {
        /// Prompt checkpoint (overrides data.prompt).
        #[arg(long)]
        prompt: Option<PathBuf>,
        /// Documents file (overrides data.documents).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Evaluate on labeled corpora: with --prompt, score that checkpoint;
    /// without, run the full seeded train-and-evaluate protocol.
    Eval {
        /// Prompt checkpoint (overrides data.prompt).
        #[arg(long)]
        prompt: Option<PathBuf>,
    },
    /// Generalized zero-shot protocol over rotating seen-class subsets.
    Gzsl,
    /// Run the five-variant ablation grid.
    Ablate,
    /// Sweep the neighborhood number over development sets.
    #[command(name = "sweep-k")]
    SweepK {
        /// Prompt checkpoint (overrides data.prompt).
        #[arg(long)]
        prompt: Option<PathBuf>,
        /// Comma-separated candidates (overrides eval.k_candidates).
        #[arg(long, value_delimiter = ',')]
        candidates: Vec<usize>,
    },
    /// Check a training verbalizer document: per-label verdicts and a
    /// disjointness report.
    #[command(name = "validate-verbalizer")]
    ValidateVerbalizer {
        /// Verbalizer document (overrides data.verbalizer).
        #[arg(long)]
        verbalizer: Option<PathBuf>,
        /// Skip invalid labels instead of failing on them.
        #[arg(long)]
        lenient: bool,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let _ = err.print();
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                std::process::exit(0);
            }
            // clap rendered the usage; mirror it with a machine-readable line
            eprintln!(
                "{}",
                serde_json::json!({
                    "error": { "code": "USAGE", "message": err.to_string().lines().next().unwrap_or("bad arguments") }
                })
            );
            std::process::exit(1);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("{}", err.to_json());
            std::process::exit(err.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let config = config::resolve_config(cli.config.as_deref(), &cli.overrides, cli.seed)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| {
        CliError::validation(
            "OUT_DIR_UNWRITABLE",
            format!("cannot create {}: {e}", cli.out.display()),
        )
    })?;
    let ctx = commands::Context {
        config,
        out: cli.out,
        verbose: cli.verbose,
    };
    match cli.command {
        Command::Train => commands::train::run(&ctx),
        Command::Classify { prompt, input } => commands::classify::run(&ctx, prompt, input),
        Command::Eval { prompt } => commands::eval::run(&ctx, prompt),
        Command::Gzsl => commands::gzsl::run(&ctx),
        Command::Ablate => commands::ablate::run(&ctx),
        Command::SweepK { prompt, candidates } => commands::sweep::run(&ctx, prompt, candidates),
        Command::ValidateVerbalizer { verbalizer, lenient } => {
            commands::validate::run(&ctx, verbalizer, lenient)
        }
    }
}
