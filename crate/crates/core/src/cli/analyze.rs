use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use walkdir::WalkDir;

use super::CliError;
use crate::analysis::{reduce_events, reduce_trace, write_reduction, Combined, Reduction};
use crate::machine::Limits;
use crate::syntax::parse_source;
use crate::trace_format::{escape_field, open_trace};
use crate::tracer::{trace_to_vec, Status};

const EXTENSIONS: [(&str, u8); 3] = [(".crtrace", 0), (".crtrace.z", 1), (".cr", 2)];

/// One program or trace found in a corpus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Input {
    /// Path relative to the corpus root without its extension, `/`-separated.
    pub key: String,
    pub path: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnalyzeSummary {
    pub analyzed: usize,
    pub skipped: usize,
}

/// Finds `.cr`, `.crtrace` and `.crtrace.z` files below `root`, sorted by
/// key. When several share a key the plain trace wins, then the
/// compressed trace, then the program.
pub fn discover(root: &Path) -> Result<Vec<Input>, CliError> {
    let mut found: BTreeMap<String, (u8, PathBuf)> = BTreeMap::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| CliError::Io(e.to_string()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
        let rel = rel.join("/");
        let Some((stem, rank)) = EXTENSIONS.iter().find_map(|&(ext, rank)| rel.strip_suffix(ext).map(|s| (s, rank)))
        else {
            continue;
        };
        if stem.is_empty() || stem.ends_with('/') {
            continue;
        }
        match found.get(stem) {
            Some((r, _)) if *r <= rank => {}
            _ => {
                found.insert(stem.to_string(), (rank, entry.path().to_path_buf()));
            }
        }
    }
    Ok(found.into_iter().map(|(key, (_, path))| Input { key, path }).collect())
}

/// Reduces one input; the error is the reason it was skipped.
fn reduce_input(input: &Input, limits: Limits) -> Result<Reduction, String> {
    let is_program = input.path.extension().is_some_and(|e| e == "cr");
    let mut reduction = if is_program {
        let src = fs::read_to_string(&input.path).map_err(|e| format!("I/O error: {e}"))?;
        let program = parse_source(&src, 0).map_err(|e| format!("PARSE_ERROR: {e}"))?;
        let (_, events) = trace_to_vec(&program, &input.key, limits);
        reduce_trace(&events).map_err(|e| e.to_string())?
    } else {
        let reader = open_trace(&input.path).map_err(|e| format!("I/O error: {e}"))?;
        reduce_events(reader).map_err(|e| e.to_string())?
    };
    if let Status::Error(code) = &reduction.status {
        return Err(format!("program failed: {code}"));
    }
    reduction.program = input.key.clone();
    Ok(reduction)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Reduces the corpus below `corpus` with `jobs` workers and writes
/// `reduce/<key>.crreduce`, one `<table>.tsv` per summary table and
/// `skipped.tsv` into `out`.
pub fn analyze(corpus: &Path, out: &Path, jobs: usize, limits: Limits) -> Result<AnalyzeSummary, CliError> {
    if !corpus.is_dir() {
        return Err(CliError::Io(format!("{}: not a directory", corpus.display())));
    }
    let inputs = discover(corpus)?;
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| CliError::Io(e.to_string()))?;
    let results: Vec<Result<Reduction, String>> =
        pool.install(|| inputs.par_iter().map(|input| reduce_input(input, limits)).collect());

    let mut combined = Combined::new();
    let mut skipped = String::from("path\treason\n");
    let mut analyzed = 0;
    for (input, result) in inputs.iter().zip(&results) {
        match result {
            Ok(r) => {
                write(&out.join("reduce").join(format!("{}.crreduce", input.key)), &write_reduction(r))?;
                combined.add(r);
                analyzed += 1;
            }
            Err(reason) => {
                let rel = input.path.strip_prefix(corpus).unwrap_or(&input.path);
                let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
                skipped.push_str(&format!("{}\t{}\n", escape_field(&rel.join("/")), escape_field(reason)));
            }
        }
    }
    write(&out.join("skipped.tsv"), &skipped)?;
    if analyzed == 0 {
        return Err(CliError::Failed(format!("no analyzable programs under {}", corpus.display())));
    }
    for table in combined.summary().tables {
        write(&out.join(format!("{}.tsv", table.name)), &table.to_tsv())?;
    }
    Ok(AnalyzeSummary { analyzed, skipped: inputs.len() - analyzed })
}
