mod support;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lazycore::trace_format::read_all_decompressed;
use support::golden_dir;

fn lazycore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lazycore")).args(args).env_remove("LAZYCORE_MAX_STEPS").output().unwrap()
}

fn golden(name: &str) -> String {
    golden_dir().join(format!("{name}.cr")).to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn run_prints_value() {
    let o = lazycore(&["run", &golden("concat")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "VALUE\t\"ab\"\n");
}

#[test]
fn run_reports_runtime_errors() {
    let o = lazycore(&["run", &golden("cycle")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("ERROR\tPROMISE_CYCLE\t"), "{}", stdout(&o));
}

#[test]
fn run_reports_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cr");
    fs::write(&bad, "f <- function(x").unwrap();
    let o = lazycore(&["run", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("ERROR\tPARSE_ERROR\t"));
}

#[test]
fn run_missing_file_is_io_error() {
    let o = lazycore(&["run", "no/such/file.cr"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn step_limit_from_flag_and_environment() {
    let o = lazycore(&["run", "--max-steps", "3", &golden("memo")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("ERROR\tSTEP_LIMIT_EXCEEDED\t"));
    let o = Command::new(env!("CARGO_BIN_EXE_lazycore"))
        .args(["run", &golden("memo")])
        .env("LAZYCORE_MAX_STEPS", "3")
        .output()
        .unwrap();
    assert!(stdout(&o).starts_with("ERROR\tSTEP_LIMIT_EXCEEDED\t"));
    assert_eq!(lazycore(&["run", "--max-steps", "24", &golden("memo")]).status.code(), Some(0));
    assert_eq!(lazycore(&["run", "--max-steps", "0", &golden("memo")]).status.code(), Some(2));
}

#[test]
fn trace_matches_golden_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("memo.cr");
    fs::copy(golden("memo"), &src).unwrap();
    let o = lazycore(&["trace", p(&src)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "VALUE\t\"Hi!\"\n");
    let first = fs::read(dir.path().join("memo.crtrace")).unwrap();
    assert_eq!(first, fs::read(golden_dir().join("memo.crtrace")).unwrap());

    let again = dir.path().join("again.crtrace");
    lazycore(&["trace", p(&src), "--out", p(&again)]);
    assert_eq!(fs::read(&again).unwrap(), first);

    lazycore(&["trace", "--compress", p(&src)]);
    let packed = fs::read(dir.path().join("memo.crtrace.z")).unwrap();
    assert_eq!(&packed[..2], &[0x1f, 0x8b]);
    assert_eq!(read_all_decompressed(&packed[..]).unwrap(), first);
}

#[test]
fn trace_of_failing_program_ends_with_error_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cycle.crtrace");
    let o = lazycore(&["trace", &golden("cycle"), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.ends_with("PROGRAM_END\t5\tPROMISE_CYCLE\n"), "{text}");
}

/// The unused, forced-then-read and escaping programs.
fn three_program_corpus(dir: &Path) -> PathBuf {
    let corpus = dir.join("corpus");
    fs::create_dir_all(corpus.join("pkg")).unwrap();
    fs::write(corpus.join("unused.cr"), "g <- function(a) \"k\"; g(\"z\")\n").unwrap();
    fs::write(corpus.join("pkg/twice.cr"), "f <- function(x) x + x; f(\"a\")\n").unwrap();
    fs::write(corpus.join("pkg/escape.cr"), "mk <- function(x) function() x; k <- mk(\"a\"); k()\n").unwrap();
    corpus
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = walkdir(dir);
    files.sort();
    files
}

fn walkdir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walkdir(&path));
        } else {
            out.push((path.to_string_lossy().into_owned(), fs::read(&path).unwrap()));
        }
    }
    out
}

#[test]
fn analyze_three_programs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = three_program_corpus(dir.path());
    let out = dir.path().join("out");
    let o = lazycore(&["analyze", p(&corpus), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(out.join("lifecycle.tsv")).unwrap(),
        "category\tlifecycle\tpromises\nargument\t\t1\nargument\tFR\t1\nescaped\tEF\t1\n"
    );
    assert_eq!(fs::read_to_string(out.join("skipped.tsv")).unwrap(), "path\treason\n");
    assert!(out.join("reduce/pkg/escape.crreduce").is_file());
    // every function runs once, so none is eligible for strictness
    let corpus_table = fs::read_to_string(out.join("corpus.tsv")).unwrap();
    assert!(corpus_table.contains("functions\t4\neligible_functions\t0\nstrict_functions\t0\n"), "{corpus_table}");
}

#[test]
fn analyze_counts_strict_functions() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = three_program_corpus(dir.path());
    fs::copy(golden("strict"), corpus.join("strict.cr")).unwrap();
    let out = dir.path().join("out");
    assert_eq!(lazycore(&["analyze", p(&corpus), "--out", p(&out)]).status.code(), Some(0));
    let corpus_table = fs::read_to_string(out.join("corpus.tsv")).unwrap();
    assert!(corpus_table.contains("eligible_functions\t1\nstrict_functions\t1\n"), "{corpus_table}");
    let report = stdout(&lazycore(&["report", p(&out)]));
    assert!(report.contains("| eligible_functions | 1 |\n| strict_functions | 1 |"), "{report}");
    assert!(report.contains("| strict | 0:5-25 | 2 | 0 | AA | (1,2) | yes | yes |"), "{report}");
}

#[test]
fn analyze_is_reproducible_and_parallelism_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir_all(&corpus).unwrap();
    for entry in fs::read_dir(golden_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cr") {
            fs::copy(&path, corpus.join(path.file_name().unwrap())).unwrap();
        }
    }
    let runs: Vec<Vec<(String, Vec<u8>)>> = ["1", "4", "4"]
        .iter()
        .enumerate()
        .map(|(i, jobs)| {
            let out = dir.path().join(format!("out{i}"));
            assert_eq!(lazycore(&["analyze", p(&corpus), "--out", p(&out), "--jobs", jobs]).status.code(), Some(0));
            dir_contents(&out).into_iter().map(|(name, bytes)| (name.replacen(p(&out), "", 1), bytes)).collect()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
    // failing programs are left out
    let skipped = &runs[0].iter().find(|(n, _)| n == "/skipped.tsv").unwrap().1;
    let skipped = String::from_utf8(skipped.clone()).unwrap();
    assert!(skipped.contains("cycle.cr\tprogram failed: PROMISE_CYCLE\n"), "{skipped}");
}

#[test]
fn analyze_skips_corrupt_traces() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = three_program_corpus(dir.path());
    let bytes = fs::read(golden_dir().join("nested.crtrace")).unwrap();
    fs::write(corpus.join("cut.crtrace"), &bytes[..bytes.len() - 10]).unwrap();
    fs::write(corpus.join("whole.crtrace"), &bytes).unwrap();
    fs::write(corpus.join("noise.txt"), "ignored").unwrap();
    let out = dir.path().join("out");
    let o = lazycore(&["analyze", p(&corpus), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let skipped = fs::read_to_string(out.join("skipped.tsv")).unwrap();
    let lines: Vec<&str> = skipped.lines().collect();
    assert_eq!(lines.len(), 2, "{skipped}");
    assert!(lines[1].starts_with("cut.crtrace\t"));
    assert!(out.join("reduce/whole.crreduce").is_file());
    assert_eq!(stdout(&o), "analyzed 4 of 5 inputs\n");
}

#[test]
fn trace_files_take_precedence_over_programs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir_all(&corpus).unwrap();
    fs::write(corpus.join("p.cr"), "this does not parse (").unwrap();
    fs::copy(golden_dir().join("escape.crtrace"), corpus.join("p.crtrace")).unwrap();
    let out = dir.path().join("out");
    assert_eq!(lazycore(&["analyze", p(&corpus), "--out", p(&out)]).status.code(), Some(0));
    assert!(fs::read_to_string(out.join("lifecycle.tsv")).unwrap().contains("escaped\tEF\t1\n"));
}

#[test]
fn analyze_with_nothing_usable_fails() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir_all(&corpus).unwrap();
    let out = dir.path().join("out");
    assert_eq!(lazycore(&["analyze", p(&corpus), "--out", p(&out)]).status.code(), Some(1));
    fs::write(corpus.join("bad.cr"), "(").unwrap();
    assert_eq!(lazycore(&["analyze", p(&corpus), "--out", p(&out)]).status.code(), Some(1));
    assert!(fs::read_to_string(out.join("skipped.tsv")).unwrap().contains("bad.cr\tPARSE_ERROR"));
    assert_eq!(lazycore(&["analyze", "no/such/dir", "--out", p(&out)]).status.code(), Some(2));
}

#[test]
fn report_renders_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = three_program_corpus(dir.path());
    let out = dir.path().join("out");
    lazycore(&["analyze", p(&corpus), "--out", p(&out)]);
    let first = lazycore(&["report", p(&out)]);
    assert_eq!(first.status.code(), Some(0));
    let text = stdout(&first);
    assert!(text.starts_with("# Laziness summary\n"));
    assert!(
        text.contains(
            "## Promise life cycle\n\n| category | lifecycle | promises | share |\n| --- | --- | --- | --- |\n\
         | argument | (none) | 1 | 50.0% |\n| argument | FR | 1 | 50.0% |\n| escaped | EF | 1 | 100.0% |\n"
        ),
        "{text}"
    );
    assert_eq!(stdout(&lazycore(&["report", p(&out)])), text);

    let file = dir.path().join("report.md");
    lazycore(&["report", p(&out), "--out", p(&file)]);
    assert_eq!(fs::read_to_string(&file).unwrap(), text);

    let tsv = stdout(&lazycore(&["report", p(&out), "--format", "tsv"]));
    assert!(tsv.starts_with("# corpus\nmetric\tvalue\nprograms\t3\n"), "{tsv}");
    assert!(tsv.contains("# lifecycle\ncategory\tlifecycle\tpromises\tshare\nargument\t\t1\t50.0%\n"));
}

#[test]
fn report_needs_summary_files() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lazycore(&["report", p(dir.path())]).status.code(), Some(1));
    let corpus = three_program_corpus(dir.path());
    let out = dir.path().join("out");
    lazycore(&["analyze", p(&corpus), "--out", p(&out)]);
    fs::remove_file(out.join("reads.tsv")).unwrap();
    let o = lazycore(&["report", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("reads.tsv"));
}
