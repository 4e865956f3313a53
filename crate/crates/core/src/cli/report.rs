use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use super::CliError;
use crate::analysis::{Combined, Table, TABLE_NAMES};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Markdown,
}

fn title(name: &str) -> &'static str {
    match name {
        "corpus" => "Corpus",
        "lifecycle" => "Promise life cycle",
        "strictness" => "Parameter strictness",
        "force_orders" => "Function force orders",
        "functions" => "Functions",
        "force_depth" => "Force depth",
        "reads" => "Promise reads",
        "expr_class" => "Promise expression types",
        "meta_usage" => "Meta-programmed promises",
        "side_effects" => "Side-effect locality",
        "escapes" => "Escaped promises",
        _ => "",
    }
}

/// For tables that get a share column: the count column, and the column
/// whose value groups rows into separate populations, if any.
fn share_layout(name: &str) -> Option<(usize, Option<usize>)> {
    match name {
        "lifecycle" => Some((2, Some(0))),
        "strictness" | "force_orders" | "force_depth" | "reads" | "meta_usage" => Some((1, None)),
        _ => None,
    }
}

fn with_shares(table: &Table) -> Result<Table, CliError> {
    let Some((count, group)) = share_layout(&table.name) else {
        return Ok(table.clone());
    };
    let value = |row: &Vec<String>| -> Result<u64, CliError> {
        row[count].parse().map_err(|_| CliError::Failed(format!("{}.tsv: bad count `{}`", table.name, row[count])))
    };
    let mut out = table.clone();
    out.columns.push("share".into());
    for (i, row) in table.rows.iter().enumerate() {
        let mut total = 0;
        for other in &table.rows {
            if group.is_none_or(|g| other[g] == row[g]) {
                total += value(other)?;
            }
        }
        let share =
            if total == 0 { "-".to_string() } else { format!("{:.1}%", 100.0 * value(row)? as f64 / total as f64) };
        out.rows[i].push(share);
    }
    Ok(out)
}

fn load_tables(dir: &Path) -> Result<Vec<Table>, CliError> {
    let expected = Combined::new().summary().tables;
    let mut tables = Vec::new();
    for blank in expected {
        let path = dir.join(format!("{}.tsv", blank.name));
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(CliError::Failed(format!("missing summary file {}", path.display())))
            }
            Err(e) => return Err(CliError::io(&path, e)),
        };
        let table = Table::from_tsv(&blank.name, &text).map_err(CliError::Failed)?;
        if table.columns != blank.columns {
            return Err(CliError::Failed(format!("{}: unexpected columns", path.display())));
        }
        tables.push(table);
    }
    debug_assert!(tables.iter().map(|t| t.name.as_str()).eq(TABLE_NAMES));
    Ok(tables)
}

fn markdown_cell(name: &str, column: &str, cell: &str) -> String {
    if name == "lifecycle" && column == "lifecycle" && cell.is_empty() {
        return "(none)".into();
    }
    if name == "functions" && column == "params" && cell.is_empty() {
        return "-".into();
    }
    cell.replace('|', "\\|")
}

/// Renders every summary table found in `dir`.
pub fn render_report(dir: &Path, format: ReportFormat) -> Result<String, CliError> {
    let tables = load_tables(dir)?;
    let mut out = String::new();
    if format == ReportFormat::Markdown {
        out.push_str("# Laziness summary\n");
    }
    for (i, table) in tables.iter().enumerate() {
        let table = with_shares(table)?;
        match format {
            ReportFormat::Tsv => {
                if i > 0 {
                    out.push('\n');
                }
                writeln!(out, "# {}", table.name).unwrap();
                out.push_str(&table.to_tsv());
            }
            ReportFormat::Markdown => {
                writeln!(out, "\n## {}\n", title(&table.name)).unwrap();
                writeln!(out, "| {} |", table.columns.join(" | ")).unwrap();
                writeln!(out, "|{}", " --- |".repeat(table.columns.len())).unwrap();
                for row in &table.rows {
                    let cells: Vec<String> = row
                        .iter()
                        .zip(&table.columns)
                        .map(|(cell, col)| markdown_cell(&table.name, col, cell))
                        .collect();
                    writeln!(out, "| {} |", cells.join(" | ")).unwrap();
                }
            }
        }
    }
    Ok(out)
}
