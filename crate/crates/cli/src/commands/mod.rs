//! Subcommand implementations. Each takes the resolved configuration
//! plus its own flags and returns a process exit code.

pub mod ablate;
pub mod classify;
pub mod eval;
pub mod gzsl;
pub mod sweep;
pub mod train;
pub mod validate;

use std::path::{Path, PathBuf};

use softprompt::backend::{Backend, BackendRegistry};
use softprompt::eval::LabeledCorpus;
use softprompt::prompt::SoftPrompt;
use softprompt::verbalizer::{
    load_training_verbalizer, parse_class_labels, LabelMode, TrainingVerbalizer,
};

use crate::config::ExperimentConfig;
use crate::CliError;

pub struct Context {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub verbose: u8,
}

impl Context {
    pub fn progress(&self, message: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("{}", message.as_ref());
        }
    }

    pub fn create_backend(&self) -> Result<Box<dyn Backend>, CliError> {
        let registry = BackendRegistry::with_builtins();
        Ok(registry.create(&self.config.backend)?)
    }

    pub fn load_verbalizer(
        &self,
        backend: &dyn Backend,
        mode: LabelMode,
    ) -> Result<TrainingVerbalizer, CliError> {
        let path = self.config.data.verbalizer.as_ref().ok_or_else(|| {
            CliError::validation("CONFIG_INVALID", "data.verbalizer is required")
        })?;
        let text = read_to_string(path)?;
        let (verbalizer, diagnostics) = load_training_verbalizer(
            &text,
            backend.embedding_table(),
            backend.tokenizer(),
            mode,
        )?;
        for diag in &diagnostics {
            eprintln!("warning: {diag}");
        }
        Ok(verbalizer)
    }

    pub fn load_class_labels(&self) -> Result<Vec<(String, String)>, CliError> {
        let path = self
            .config
            .data
            .labels
            .as_ref()
            .ok_or_else(|| CliError::validation("CONFIG_INVALID", "data.labels is required"))?;
        Ok(parse_class_labels(&read_to_string(path)?)?)
    }

    pub fn load_train_corpus(&self) -> Result<LabeledCorpus, CliError> {
        let path = self.config.data.train_corpus.as_ref().ok_or_else(|| {
            CliError::validation("CONFIG_INVALID", "data.train_corpus is required")
        })?;
        Ok(LabeledCorpus::load(path, None)?)
    }

    /// Eval corpora with the configured language filter applied.
    pub fn load_eval_corpora(&self, paths: &[PathBuf]) -> Result<Vec<LabeledCorpus>, CliError> {
        if paths.is_empty() {
            return Err(CliError::validation(
                "CONFIG_INVALID",
                "data.eval_corpora is required",
            ));
        }
        let mut out = Vec::with_capacity(paths.len());
        for path in paths {
            let mut corpus = LabeledCorpus::load(path, None)?;
            if let Some(languages) = &self.config.eval.languages {
                corpus = corpus.filter_languages(languages);
            }
            out.push(corpus);
        }
        Ok(out)
    }

    /// Resolves the checkpoint path (flag wins over config) and loads it
    /// against the backend dimension.
    pub fn load_prompt(
        &self,
        flag: Option<&Path>,
        backend: &dyn Backend,
    ) -> Result<SoftPrompt, CliError> {
        let path = flag
            .map(Path::to_path_buf)
            .or_else(|| self.config.data.prompt.clone())
            .ok_or_else(|| {
                CliError::validation("PROMPT_NOT_FOUND", "pass --prompt or set data.prompt")
            })?;
        if !path.exists() {
            return Err(CliError::validation(
                "PROMPT_NOT_FOUND",
                format!("no checkpoint at {}", path.display()),
            ));
        }
        Ok(SoftPrompt::load_for_backend(&path, backend.descriptor().dim)?)
    }

    pub fn config_snapshot(&self) -> serde_json::Value {
        serde_json::to_value(&self.config).expect("config serializes")
    }
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| {
        CliError::validation(
            "FILE_NOT_FOUND",
            format!("cannot read {}: {e}", path.display()),
        )
    })
}
