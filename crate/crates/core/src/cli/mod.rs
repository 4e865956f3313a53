//! The `lazycore` command line: `run`, `trace`, `analyze` and `report`.
//!
//! Exit codes: 0 on success, 1 when the program or input is at fault
//! (parse or runtime error, nothing analyzable, missing summary files),
//! 2 on I/O errors and bad usage.

mod analyze;
mod report;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::machine::{self, Limits, Outcome};
use crate::syntax::{parse_source, Expr};
use crate::trace_format::{escape_field, TraceWriter, COMPRESSED_TRACE_EXTENSION, TRACE_EXTENSION};
use crate::tracer::trace_program;

pub use analyze::{analyze, discover, AnalyzeSummary, Input};
pub use report::{render_report, ReportFormat};

#[derive(Parser, Debug)]
#[command(name = "lazycore", version, about = "Run, trace and analyze lazy core-R programs")]
struct Cli {
    /// Reduction steps before a run is abandoned.
    #[arg(long, global = true, env = "LAZYCORE_MAX_STEPS", default_value_t = 1_000_000,
          value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a program and print its value.
    Run { file: PathBuf },
    /// Evaluate a program and write its trace.
    Trace {
        file: PathBuf,
        /// Trace file; defaults to the program path with a trace extension.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Gzip the trace.
        #[arg(long)]
        compress: bool,
    },
    /// Reduce every program and trace under a directory and summarize them.
    Analyze {
        corpus: PathBuf,
        /// Directory for reduction files and summary tables.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to the number of processors.
        #[arg(long)]
        jobs: Option<NonZeroUsize>,
    },
    /// Render the summary tables written by `analyze`.
    Report {
        summary: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Tsv,
    Markdown,
}

/// Failure of a subcommand, already reported or ready to report.
#[derive(Debug)]
pub enum CliError {
    /// Program or input problem (exit 1).
    Failed(String),
    /// I/O problem (exit 2).
    Io(String),
}

impl CliError {
    pub fn io(what: &Path, e: io::Error) -> CliError {
        CliError::Io(format!("{}: {e}", what.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let limits = Limits { max_steps: cli.max_steps };
    let result = match cli.command {
        Command::Run { file } => cmd_run(&file, limits, stdout),
        Command::Trace { file, out, compress } => cmd_trace(&file, out, compress, limits, stdout),
        Command::Analyze { corpus, out, jobs } => {
            let jobs = jobs.map_or_else(default_jobs, NonZeroUsize::get);
            analyze(&corpus, &out, jobs, limits).map(|s| {
                let _ = writeln!(stdout, "analyzed {} of {} inputs", s.analyzed, s.analyzed + s.skipped);
            })
        }
        Command::Report { summary, format, out } => {
            let format = match format {
                Format::Tsv => ReportFormat::Tsv,
                Format::Markdown => ReportFormat::Markdown,
            };
            render_report(&summary, format).and_then(|text| match out {
                Some(path) => fs::write(&path, text).map_err(|e| CliError::io(&path, e)),
                None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
            })
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Failed(msg) | CliError::Io(msg) if !msg.is_empty() => {
                    let _ = writeln!(stderr, "lazycore: {msg}");
                }
                _ => {}
            }
            e.code()
        }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

fn load(path: &Path, stdout: &mut dyn Write) -> Result<Expr, CliError> {
    let src = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_source(&src, 0).map_err(|e| {
        let _ = writeln!(stdout, "ERROR\tPARSE_ERROR\t{}", escape_field(&e.to_string()));
        CliError::Failed(String::new())
    })
}

/// Prints the outcome line; a runtime error makes the command fail.
fn report_outcome(outcome: &Outcome, stdout: &mut dyn Write) -> Result<(), CliError> {
    let line = match &outcome.result {
        Ok(v) => format!("VALUE\t{}", v.render()),
        Err(e) => format!("ERROR\t{}\t{}", e.code(), escape_field(&e.to_string())),
    };
    writeln!(stdout, "{line}").map_err(|e| CliError::Io(e.to_string()))?;
    match outcome.result {
        Ok(_) => Ok(()),
        Err(_) => Err(CliError::Failed(String::new())),
    }
}

fn cmd_run(file: &Path, limits: Limits, stdout: &mut dyn Write) -> Result<(), CliError> {
    let program = load(file, stdout)?;
    let outcome = machine::run(&program, limits, &mut ());
    report_outcome(&outcome, stdout)
}

fn program_name(file: &Path) -> String {
    file.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

/// Traces `program` into `out`, returning the outcome and the writer.
fn trace_into<W: Write>(program: &Expr, name: &str, limits: Limits, out: W) -> (Outcome, io::Result<W>) {
    let (outcome, writer) = trace_program(program, name, limits, TraceWriter::new(out));
    (outcome, writer.finish())
}

fn cmd_trace(
    file: &Path,
    out: Option<PathBuf>,
    compress: bool,
    limits: Limits,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let program = load(file, stdout)?;
    let ext = if compress { COMPRESSED_TRACE_EXTENSION } else { TRACE_EXTENSION };
    let path = out.unwrap_or_else(|| file.with_extension(ext));
    let sink = BufWriter::new(File::create(&path).map_err(|e| CliError::io(&path, e))?);
    let name = program_name(file);
    let (outcome, written) = if compress {
        let (outcome, w) = trace_into(&program, &name, limits, GzEncoder::new(sink, Compression::default()));
        (outcome, w.and_then(|gz| gz.finish()).and_then(|mut f| f.flush()))
    } else {
        let (outcome, w) = trace_into(&program, &name, limits, sink);
        (outcome, w.map(drop))
    };
    written.map_err(|e| CliError::io(&path, e))?;
    report_outcome(&outcome, stdout)
}

/// Entry point for the binary.
pub fn main() -> std::process::ExitCode {
    let code = main_with(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    std::process::ExitCode::from(code)
}
