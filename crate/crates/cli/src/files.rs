//! Task file formats.
//!
//! * persons, professions, nationalities: one name per line
//! * `*.kb`: `person<TAB>value`
//! * `*.train`: `person<TAB>value<TAB>score`
//! * predictions: `person<TAB>value<TAB>score`, names as in the query file

use std::fs;
use std::path::Path;

use kbscore::corpus::{normalize_entity, normalize_term, Punctuation};
use kbscore::{Score, Triple};

use crate::error::{CliError, CliResult};

/// One row of a `.kb` or `.train` file, names as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleFileRow {
    pub person: String,
    pub value: String,
    pub score: Option<Score>,
}

impl TripleFileRow {
    /// The row with names turned into vocabulary tokens.
    pub fn triple(&self) -> Triple {
        let p = Punctuation::default();
        Triple::new(normalize_entity(&self.person, &p), normalize_term(&self.value, &p), self.score)
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))
}

fn line_error(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::data(format!("{}:{line}: {msg}", path.display()))
}

/// Reads rows with two columns, or three when `scored`.
pub fn read_rows(path: &Path, scored: bool) -> CliResult<Vec<TripleFileRow>> {
    let text = read(path)?;
    let want = if scored { 3 } else { 2 };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != want {
            return Err(line_error(
                path,
                i + 1,
                format!("expected {want} tab-separated columns, found {}", fields.len()),
            ));
        }
        let (person, value) = (fields[0].trim(), fields[1].trim());
        if person.is_empty() || value.is_empty() {
            return Err(line_error(path, i + 1, "empty person or value"));
        }
        let score = if scored {
            Some(fields[2].parse::<Score>().map_err(|e| line_error(path, i + 1, e))?)
        } else {
            None
        };
        rows.push(TripleFileRow {
            person: person.to_owned(),
            value: value.to_owned(),
            score,
        });
    }
    Ok(rows)
}

pub fn read_train_file(path: &Path) -> CliResult<Vec<Triple>> {
    Ok(read_rows(path, true)?.iter().map(TripleFileRow::triple).collect())
}

pub fn read_kb_file(path: &Path) -> CliResult<Vec<Triple>> {
    Ok(read_rows(path, false)?.iter().map(TripleFileRow::triple).collect())
}

/// Relation values (professions, nationalities) as tokens, in file order.
pub fn read_value_list(path: &Path) -> CliResult<Vec<String>> {
    let p = Punctuation::default();
    Ok(read_lines(path)?.iter().map(|l| normalize_term(l, &p)).collect())
}

/// Person names as tokens, in file order.
pub fn read_person_list(path: &Path) -> CliResult<Vec<String>> {
    let p = Punctuation::default();
    Ok(read_lines(path)?.iter().map(|l| normalize_entity(l, &p)).collect())
}

fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    Ok(read(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

pub fn write_rows(path: &Path, rows: &[TripleFileRow]) -> CliResult<()> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&r.person);
        out.push('\t');
        out.push_str(&r.value);
        if let Some(s) = r.score {
            out.push('\t');
            out.push_str(&s.to_string());
        }
        out.push('\n');
    }
    write(path, &out)
}

pub fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}
