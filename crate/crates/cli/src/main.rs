mod args;
mod tasks;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::Parser;
use popstrat_core::report::Report;
use popstrat_core::ErrorCategory;

use args::Cli;

/// A categorized failure; the category picks the exit code.
#[derive(Debug)]
pub struct Failure {
    pub category: ErrorCategory,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { category: ErrorCategory::Config, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure { category: ErrorCategory::Data, message: message.into() }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Failure { category: ErrorCategory::Parse, message: message.into() }
    }
}

impl<E: Into<popstrat_core::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        Failure { category: e.category(), message: e.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.category.name(), self.message)
    }
}

/// `base` if it is free, otherwise `base-<unix seconds>[-n]`.
fn fresh_dir(base: &Path) -> Result<PathBuf, Failure> {
    let mut candidate = base.to_path_buf();
    if candidate.exists() {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let name = base.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
        let mut n = 0;
        while candidate.exists() {
            let suffix = if n == 0 { format!("{name}-{secs}") } else { format!("{name}-{secs}-{n}") };
            candidate = base.with_file_name(suffix);
            n += 1;
        }
    }
    fs::create_dir_all(&candidate)?;
    Ok(candidate)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.common.workers {
        if n == 0 {
            return Err(Failure::config("workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(format!("cannot size worker pool: {e}")))?;
    }
    let out = fresh_dir(&cli.common.out)?;
    let start = Instant::now();
    let outcome = tasks::run(&cli.task, cli.common.seed, &out)?;
    outcome.report.write(&out, "report")?;

    let mut summary = Report::new();
    summary
        .text("task", cli.task.name())
        .text("version", env!("CARGO_PKG_VERSION"))
        .text("seed", cli.common.seed)
        .text("featurize_hash", outcome.featurize_hash.as_deref().unwrap_or("none"))
        .text("inputs", outcome.inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(" "))
        .text("config", cli.common.config.as_ref().map(|p| p.display().to_string()).unwrap_or_default())
        .text("workers", rayon::current_num_threads())
        .text("out", out.display())
        .float("wall_time_s", start.elapsed().as_secs_f64());
    fs::write(out.join("run_summary.txt"), summary.to_text())?;
    print!("{}", summary.to_text());
    print!("{}", outcome.report.to_text());
    Ok(())
}

fn main() -> ExitCode {
    let argv = match args::merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(f) => {
            eprintln!("popstrat: {f}");
            return ExitCode::from(f.category.exit_code() as u8);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(ErrorCategory::Config.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("popstrat: {f}");
            ExitCode::from(f.category.exit_code() as u8)
        }
    }
}
