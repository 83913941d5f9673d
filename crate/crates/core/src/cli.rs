//! Command-line front end: `validate`, `analyze`, `synth` and `report`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{EngineConfig, ProductivityIndicator, QualityIndicator};
use crate::corpus::{load_corpus, write_diagnostics};
use crate::error::{Error, Result};
use crate::pipeline::{analyze_dir, read_run, write_report_bundle, Format, MANIFEST_FILE};
use crate::synth::{write_synthetic_corpus, SynthParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Parameters file written next to a synthetic corpus.
pub const SYNTH_PARAMS_FILE: &str = "synth_params.json";

#[derive(Debug, Parser)]
#[command(
    name = "sciprod",
    version,
    about = "Productivity and quality analysis of research output"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and validate a corpus, printing diagnostics.
    Validate(CommonArgs),
    /// Run all analyses and write the report bundle.
    Analyze(CommonArgs),
    /// Generate a synthetic corpus from a parameters file.
    Synth {
        /// JSON parameters document; defaults apply when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Re-render the tables of an existing bundle.
    Report(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input_dir: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// csv, markdown, or both.
    #[arg(long, default_value = "both")]
    format: String,
    #[arg(long)]
    productivity: Option<ProductivityIndicator>,
    #[arg(long)]
    quality: Option<QualityIndicator>,
    #[arg(long)]
    top_fraction: Option<f64>,
    #[arg(long)]
    min_publishing_fraction: Option<f64>,
    #[arg(long)]
    intersection: bool,
    #[arg(long)]
    precision: Option<usize>,
}

impl CommonArgs {
    /// Config file values overridden by command-line flags.
    fn config(&self) -> Result<EngineConfig> {
        let mut cfg = match &self.config {
            Some(path) => EngineConfig::from_file(path)?,
            None => EngineConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = Some(seed);
        }
        if let Some(p) = self.productivity {
            cfg.productivity_indicator = p;
        }
        if let Some(q) = self.quality {
            cfg.quality_indicator = q;
        }
        if let Some(f) = self.top_fraction {
            cfg.top_fraction = f;
        }
        if let Some(f) = self.min_publishing_fraction {
            cfg.min_publishing_fraction = f;
        }
        if self.intersection {
            cfg.intersection_mode = true;
        }
        if let Some(p) = self.precision {
            cfg.precision = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn formats(&self) -> Result<Vec<Format>> {
        if self.format == "both" {
            return Ok(vec![Format::Csv, Format::Markdown]);
        }
        Ok(vec![self.format.parse()?])
    }

    fn input_dir(&self) -> Result<&Path> {
        self.input_dir
            .as_deref()
            .ok_or_else(|| Error::Config("--input-dir is required".into()))
    }

    fn output_dir(&self) -> Result<&Path> {
        self.output_dir
            .as_deref()
            .ok_or_else(|| Error::Config("--output-dir is required".into()))
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run_command<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Config(_) => EXIT_USAGE,
                e if e.is_data_error() => EXIT_DATA,
                _ => EXIT_INTERNAL,
            }
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Internal(format!("writing output: {e}"))
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Validate(args) => {
            let cfg = args.config()?;
            let dir = args.input_dir()?;
            let corpus = load_corpus(dir, &cfg)?;
            write_diagnostics(&corpus, &cfg, out).map_err(io_err)?;
            Ok(())
        }
        Command::Analyze(args) => {
            let mut cfg = args.config()?;
            let dir = args.input_dir()?;
            let out_dir = args.output_dir()?;
            let formats = args.formats()?;
            if cfg.seed.is_none() {
                cfg.seed = synthetic_seed(dir)?;
            }
            let run = analyze_dir(dir, &cfg)?;
            let manifest = write_report_bundle(&run, out_dir, &formats)?;
            for w in &run.warnings {
                log::warn!("{w}");
            }
            writeln!(
                out,
                "analyzed {} researchers in {} eligible SDS; {} tables written to {}",
                manifest.researchers,
                manifest.eligible_sds,
                manifest.tables.len(),
                out_dir.display()
            )
            .map_err(io_err)?;
            Ok(())
        }
        Command::Synth { params, common } => {
            let mut p = match &params {
                Some(path) => SynthParams::from_file(path)?,
                None => SynthParams::default(),
            };
            if let Some(seed) = common.seed {
                p.seed = seed;
            }
            p.validate()?;
            let dir = common.output_dir()?;
            let corpus = write_synthetic_corpus(&p, dir)?;
            let path = dir.join(SYNTH_PARAMS_FILE);
            let text =
                serde_json::to_string_pretty(&p).map_err(|e| Error::Internal(e.to_string()))?;
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            writeln!(
                out,
                "wrote {} researchers, {} publications to {}",
                corpus.researchers().len(),
                corpus.publications().len(),
                dir.display()
            )
            .map_err(io_err)?;
            Ok(())
        }
        Command::Report(args) => {
            let dir = args.input_dir()?;
            let out_dir = args.output_dir()?;
            let formats = args.formats()?;
            let mut run = read_run(dir)?;
            if args.config.is_some() || args.precision.is_some() {
                run.config.precision = args.config()?.precision;
            }
            write_report_bundle(&run, out_dir, &formats)?;
            writeln!(
                out,
                "re-rendered {} into {}",
                MANIFEST_FILE,
                out_dir.display()
            )
            .map_err(io_err)?;
            Ok(())
        }
    }
}

/// Seed recorded by `synth` next to a generated corpus, if any.
fn synthetic_seed(dir: &Path) -> Result<Option<u64>> {
    let path = dir.join(SYNTH_PARAMS_FILE);
    if !path.is_file() {
        return Ok(None);
    }
    Ok(Some(SynthParams::from_file(&path)?.seed))
}
