//! Flags, config-file merging and parsing helpers.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::Failure;

pub const TASKS: [&str; 8] =
    ["synth", "featurize", "cluster-kmeans", "cluster-dec", "train-mlp", "train-dbn", "evaluate", "elbow"];

#[derive(Debug, Parser)]
#[command(name = "popstrat", version, about = "Population stratification from SNP genotypes")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub task: Task,
}

#[derive(Debug, Args)]
pub struct Common {
    /// key=value file; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; a timestamp suffix is added if it already exists
    #[arg(long, global = true, default_value = "popstrat-run")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Cap on data-parallel worker threads
    #[arg(long, global = true, env = "POPSTRAT_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args, Clone)]
pub struct Input {
    /// VCF file(s), plain or gzip; all must share one sample header
    #[arg(long, num_args = 1..)]
    pub vcf: Vec<PathBuf>,
    /// Panel file mapping samples to populations
    #[arg(long)]
    pub panel: Option<PathBuf>,
    /// Directory written by `synth` or `featurize`
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    pub min_alt: u32,
    /// impute-zero | drop-variant
    #[arg(long, default_value = "impute-zero")]
    pub missing: String,
    /// none | half | unit-norm
    #[arg(long, default_value = "half")]
    pub scaling: String,
    /// population | super-population
    #[arg(long, default_value = "population")]
    pub label_level: String,
}

#[derive(Debug, Args, Clone)]
pub struct SplitArgs {
    #[arg(long, default_value_t = 0.6)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0.2)]
    pub validation_fraction: f64,
}

#[derive(Debug, Subcommand)]
pub enum Task {
    /// Write a seeded synthetic cohort (VCF + panel)
    Synth {
        #[arg(long, default_value_t = 3)]
        populations: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 3000)]
        variants: usize,
        #[arg(long, default_value_t = 0.1)]
        divergence: f64,
    },
    /// Build and cache the samples x variants matrix
    Featurize {
        #[command(flatten)]
        input: Input,
    },
    ClusterKmeans {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        #[arg(long, default_value_t = 300)]
        max_iterations: usize,
    },
    ClusterDec {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        k: usize,
        /// Encoder widths, comma separated
        #[arg(long, default_value = "500,250,100")]
        hidden: String,
        #[arg(long, default_value_t = 0.2)]
        corruption: f64,
        #[arg(long, default_value_t = 5000)]
        sae_iterations: usize,
        #[arg(long, default_value_t = 5000)]
        finetune_iterations: usize,
        #[arg(long, default_value_t = 5000)]
        max_iterations: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.001)]
        tol: f64,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        #[arg(long, default_value_t = 20)]
        kmeans_restarts: usize,
    },
    TrainMlp {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, default_value = "256,256,256,256")]
        hidden: String,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 0.5)]
        dropout: f64,
    },
    TrainDbn {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, default_value = "256,256,256,256")]
        hidden: String,
        #[arg(long, default_value_t = 10)]
        pretrain_epochs: usize,
        #[arg(long, default_value_t = 0.01)]
        cd_learning_rate: f64,
        /// Fine-tune from the random initialization
        #[arg(long)]
        no_pretrain: bool,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        dropout: f64,
    },
    /// Score predicted labels against true labels (CSV: sample_id,label)
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
    /// WCSS sweep over k
    Elbow {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1)]
        k_min: usize,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 300)]
        max_iterations: usize,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Synth { .. } => "synth",
            Task::Featurize { .. } => "featurize",
            Task::ClusterKmeans { .. } => "cluster-kmeans",
            Task::ClusterDec { .. } => "cluster-dec",
            Task::TrainMlp { .. } => "train-mlp",
            Task::TrainDbn { .. } => "train-dbn",
            Task::Evaluate { .. } => "evaluate",
            Task::Elbow { .. } => "elbow",
        }
    }
}

/// `key = value` lines; `#` starts a comment.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::config(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(Failure::config(format!("{}:{}: empty key", path.display(), i + 1)));
        }
        pairs.push((key, v.trim().to_string()));
    }
    Ok(pairs)
}

/// Splice config entries in front of the user's flags so later (command-line)
/// occurrences win. A `task` entry supplies the subcommand when none is given.
pub fn merge_config(argv: Vec<String>) -> Result<Vec<String>, Failure> {
    let config = argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(config) = config else { return Ok(argv) };
    let pairs = read_config(Path::new(&config))?;

    let mut task_pos = argv.iter().position(|a| TASKS.contains(&a.as_str()));
    let mut argv = argv;
    if task_pos.is_none() {
        let task = pairs
            .iter()
            .find(|(k, _)| k == "task")
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Failure::config("no task given on the command line or in the config"))?;
        argv.insert(1, task);
        task_pos = Some(1);
    }
    let at = task_pos.expect("task position") + 1;
    let mut spliced = Vec::new();
    for (k, v) in pairs.into_iter().filter(|(k, _)| k != "task" && k != "config") {
        match v.as_str() {
            "true" => spliced.push(format!("--{k}")),
            "false" => {}
            _ if k == "vcf" => {
                spliced.push(format!("--{k}"));
                spliced.extend(v.split_whitespace().map(str::to_string));
            }
            _ => spliced.push(format!("--{k}={v}")),
        }
    }
    argv.splice(at..at, spliced);
    Ok(argv)
}

pub fn parse_widths(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(|w| {
            w.trim()
                .parse::<usize>()
                .ok()
                .filter(|&w| w > 0)
                .ok_or_else(|| Failure::config(format!("bad layer width {w:?} in {s:?}")))
        })
        .collect()
}
