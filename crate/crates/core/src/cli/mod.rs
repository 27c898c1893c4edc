//! Command-line front end: config loading, dispatch and result files.
//!
//! Exit codes: 0 success, 1 failed check or run error, 2 config error.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

pub use config::{
    CensusConfig, DomainConfig, Format, KacRiceConfig, MuSpec, OutputConfig, Resolved, RunConfig,
    ValidityConfig, VerifyConfig,
};
pub use output::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "landscape", version, about = "Annealed complexity of random landscapes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the structure function against the model assumptions.
    Validate,
    /// Complexity over a mu sweep.
    Complexity,
    /// Maximizers of the variational problem over a mu sweep.
    Optimize,
    /// Monte Carlo checks of the Hessian law and the Kac–Rice limit.
    Verify,
    /// Finite-N Kac–Rice integrals.
    Kacrice,
    /// Brute-force critical point counts on sampled fields.
    Census,
}

impl Command {
    pub fn run(self, r: &Resolved) -> Result<Report> {
        match self {
            Command::Validate => commands::validate(r),
            Command::Complexity => commands::complexity(r),
            Command::Optimize => commands::optimize(r),
            Command::Verify => commands::verify(r),
            Command::Kacrice => commands::kacrice(r),
            Command::Census => commands::census(r),
        }
    }
}

/// Loads the config named by `cli` and applies the flag overrides.
pub fn resolve(cli: &Cli) -> Result<Resolved> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut r = Resolved::from_json(&text)?;
    if let Some(s) = cli.seed {
        r.config.seed = s;
    }
    if let Some(o) = &cli.out {
        r.config.output.path = Some(o.display().to_string());
    }
    if let Some(f) = cli.format {
        r.config.output.format = f;
    }
    Ok(r)
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_CONFIG;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    let resolved = match resolve(&cli) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let report = match cli.workers {
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build() {
            Ok(pool) => pool.install(|| cli.command.run(&resolved)),
            Err(e) => Err(Error::Config(format!("cannot start {w} workers: {e}"))),
        },
        None => cli.command.run(&resolved),
    };
    let report = match report {
        Ok(r) => r,
        Err(e @ Error::Config(_)) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_FAILED;
        }
    };
    let echo = resolved.echo();
    let format = resolved.config.output.format;
    let written = match &resolved.config.output.path {
        Some(p) => std::fs::File::create(p)
            .map_err(Error::from)
            .and_then(|f| {
                let mut w = std::io::BufWriter::new(f);
                report.write(&mut w, format, &echo)?;
                w.flush().map_err(Error::from)
            }),
        None => report.write(stdout, format, &echo),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_FAILED;
    }
    if report.passed {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}
