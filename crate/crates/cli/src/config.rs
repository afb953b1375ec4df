use std::path::{Path, PathBuf};

use clap::Args;
use morphoscope::data::Split;
use morphoscope::selection::DEFAULT_MAX_K;
use morphoscope::{Criterion, HyperPolicy, PriorScope};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct SharedArgs {
    /// JSON file with defaults for any of the flags below
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Embedding matrix (IPRB binary)
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    /// Labels TSV
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    #[arg(long, global = true)]
    pub attribute: Option<String>,
    /// Output directory (a file path for `scatter`)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Threads for candidate scoring; defaults to all cores
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub k0: Option<f64>,
    #[arg(long = "nu0-offset", global = true, allow_negative_numbers = true)]
    pub nu0_offset: Option<f64>,
    #[arg(long = "prior-scope", global = true, value_parser = ["value", "pooled"])]
    pub prior_scope: Option<String>,
    #[arg(long = "max-dims", global = true)]
    pub max_dims: Option<usize>,
    #[arg(long, global = true, value_parser = ["loglik", "accuracy"])]
    pub criterion: Option<String>,
    #[arg(long, global = true, value_parser = ["train", "validation", "test"])]
    pub split: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    dataset: Option<PathBuf>,
    labels: Option<PathBuf>,
    attribute: Option<String>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    k0: Option<f64>,
    nu0_offset: Option<f64>,
    prior_scope: Option<String>,
    max_dims: Option<usize>,
    criterion: Option<String>,
    split: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub attribute: Option<String>,
    pub out: Option<PathBuf>,
    /// Not recorded: results must not depend on it.
    #[serde(skip)]
    pub workers: Option<usize>,
    pub policy: HyperPolicy,
    pub max_k: usize,
    pub criterion: Criterion,
    pub split: Option<Split>,
}

impl RunConfig {
    pub fn resolve(args: &SharedArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => read_config(path)?,
            None => ConfigFile::default(),
        };
        let scope = match args.prior_scope.as_deref().or(file.prior_scope.as_deref()) {
            None | Some("value") => PriorScope::Value,
            Some("pooled") => PriorScope::Pooled,
            Some(other) => return Err(CliError::Usage(format!("unknown prior scope `{other}`"))),
        };
        let defaults = HyperPolicy::default();
        let policy = HyperPolicy {
            k0: args.k0.or(file.k0).unwrap_or(defaults.k0),
            nu0_offset: args.nu0_offset.or(file.nu0_offset).unwrap_or(defaults.nu0_offset),
            scope,
            mle: false,
        };
        policy.validate()?;
        let max_k = args.max_dims.or(file.max_dims).unwrap_or(DEFAULT_MAX_K);
        if max_k == 0 {
            return Err(CliError::Usage("--max-dims must be at least 1".into()));
        }
        let criterion = args
            .criterion
            .as_deref()
            .or(file.criterion.as_deref())
            .map(str::parse)
            .transpose()?
            .unwrap_or_default();
        let split = args.split.as_deref().or(file.split.as_deref()).map(str::parse).transpose()?;
        let attribute = args.attribute.clone().or(file.attribute);
        if attribute.as_deref() == Some("") {
            return Err(CliError::Usage("--attribute must not be empty".into()));
        }
        let workers = args.workers.or(file.workers);
        if workers == Some(0) {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        Ok(Self {
            dataset: args.dataset.clone().or(file.dataset),
            labels: args.labels.clone().or(file.labels),
            attribute,
            out: args.out.clone().or(file.out),
            workers,
            policy,
            max_k,
            criterion,
            split,
        })
    }

    pub fn dataset_paths(&self) -> Result<(&Path, &Path), CliError> {
        match (&self.dataset, &self.labels) {
            (Some(d), Some(l)) => Ok((d, l)),
            _ => Err(CliError::Usage("--dataset and --labels are required".into())),
        }
    }

    pub fn attribute(&self) -> Result<&str, CliError> {
        self.attribute
            .as_deref()
            .ok_or_else(|| CliError::Usage("--attribute is required".into()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn split_or(&self, default: Split) -> Split {
        self.split.unwrap_or(default)
    }
}

fn read_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}
