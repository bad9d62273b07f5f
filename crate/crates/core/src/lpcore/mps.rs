//! Fixed-format MPS export and a tolerant reader.
//!
//! The writer follows the classic column layout (fields at columns 2, 5, 15,
//! 25, 40 and 50), one matrix entry per line. Names longer than eight
//! characters, containing blanks, or repeated are replaced wholesale by the
//! generated `R0001`/`C0001` scheme. Numbers are written in the shortest form
//! that fits the 12-character field; values that need more digits are rounded
//! to fit, so export is exact only for coefficients of at most ~11
//! significant digits.
//!
//! The reader splits on whitespace, so it accepts free-format files as well.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::problem::{is_neg_inf, is_pos_inf};
use super::{LpProblem, RowSense, Triplet};

const OBJ_NAME: &str = "COST";

#[derive(Debug, Error)]
#[error("MPS line {line}: {message}")]
pub struct MpsError {
    pub line: usize,
    pub message: String,
}

fn valid_names(names: &[String]) -> bool {
    let mut seen = HashSet::new();
    names.iter().all(|n| {
        !n.is_empty()
            && n.len() <= 8
            && n.is_ascii()
            && !n.contains(char::is_whitespace)
            && n != OBJ_NAME
            && seen.insert(n.as_str())
    })
}

fn export_names(given: &Option<Vec<String>>, count: usize, prefix: char) -> Vec<String> {
    match given {
        Some(names) if valid_names(names) => names.clone(),
        _ => (1..=count).map(|i| format!("{prefix}{i:04}")).collect(),
    }
}

/// Shortest decimal rendering of `v` that fits twelve characters.
pub fn format_number(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    let exp = format!("{v:e}");
    if exp.len() <= 12 {
        return exp;
    }
    let fixed = (0..=11usize)
        .rev()
        .map(|p| format!("{v:.p$}"))
        .find(|s| s.len() <= 12);
    let sci = (0..=11usize)
        .rev()
        .map(|p| format!("{v:.p$e}"))
        .find(|s| s.len() <= 12)
        .expect("exponent form always fits");
    let err = |s: &String| (s.parse::<f64>().unwrap() - v).abs();
    let best = match fixed {
        Some(f) if err(&f) <= err(&sci) => f,
        _ => sci,
    };
    trim_zeros(&best)
}

fn trim_zeros(s: &str) -> String {
    let (mant, exp) = match s.find('e') {
        Some(i) => s.split_at(i),
        None => (s, ""),
    };
    let mant = if mant.contains('.') {
        mant.trim_end_matches('0').trim_end_matches('.')
    } else {
        mant
    };
    format!("{mant}{exp}")
}

fn data_line(out: &mut String, kind: &str, name1: &str, name2: &str, value: Option<f64>) {
    let mut line = format!(" {kind:<2} {name1:<8}  {name2:<8}");
    if let Some(v) = value {
        let _ = write!(line, "  {}", format_number(v));
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

/// Renders `problem` as a fixed-format MPS document.
pub fn export_mps(problem: &LpProblem) -> String {
    let rows = export_names(&problem.row_names, problem.n_rows, 'R');
    let cols = export_names(&problem.col_names, problem.n_cols, 'C');
    let mut out = String::new();
    let _ = writeln!(out, "{}", format!("NAME          {}", problem.name).trim_end());

    out.push_str("ROWS\n");
    data_line(&mut out, "N", OBJ_NAME, "", None);
    for (r, name) in rows.iter().enumerate() {
        let kind = match problem.row_sense[r] {
            RowSense::Eq => "E",
            RowSense::Le => "L",
            RowSense::Ge => "G",
        };
        data_line(&mut out, kind, name, "", None);
    }

    out.push_str("COLUMNS\n");
    let triplets = problem.canonical_triplets();
    let mut k = 0;
    for (j, name) in cols.iter().enumerate() {
        let c = problem.objective[j];
        let start = k;
        while k < triplets.len() && triplets[k].col == j {
            k += 1;
        }
        if c != 0.0 || start == k {
            data_line(&mut out, "", name, OBJ_NAME, Some(c));
        }
        for t in &triplets[start..k] {
            data_line(&mut out, "", name, &rows[t.row], Some(t.value));
        }
    }

    out.push_str("RHS\n");
    for (r, name) in rows.iter().enumerate() {
        if problem.rhs[r] != 0.0 {
            data_line(&mut out, "", "RHS", name, Some(problem.rhs[r]));
        }
    }

    out.push_str("RANGES\n");
    for (r, name) in rows.iter().enumerate() {
        if let Some(range) = problem.row_range[r] {
            data_line(&mut out, "", "RNG", name, Some(range));
        }
    }

    out.push_str("BOUNDS\n");
    for (j, name) in cols.iter().enumerate() {
        let (lo, hi) = (problem.col_lower[j], problem.col_upper[j]);
        if problem.binary_cols.contains(&j) {
            data_line(&mut out, "BV", "BND", name, None);
            if lo == hi {
                data_line(&mut out, "FX", "BND", name, Some(lo));
            } else {
                if lo != 0.0 {
                    data_line(&mut out, "LO", "BND", name, Some(lo));
                }
                if hi != 1.0 {
                    data_line(&mut out, "UP", "BND", name, Some(hi));
                }
            }
            continue;
        }
        let (lo_inf, hi_inf) = (is_neg_inf(lo), is_pos_inf(hi));
        if lo == hi {
            data_line(&mut out, "FX", "BND", name, Some(lo));
        } else if lo_inf && hi_inf {
            data_line(&mut out, "FR", "BND", name, None);
        } else {
            if lo_inf {
                data_line(&mut out, "MI", "BND", name, None);
            } else if lo != 0.0 {
                data_line(&mut out, "LO", "BND", name, Some(lo));
            }
            if !hi_inf {
                data_line(&mut out, "UP", "BND", name, Some(hi));
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    ObjSense,
    End,
}

/// Parses an MPS document (fixed or free format).
pub fn parse_mps(text: &str) -> Result<LpProblem, MpsError> {
    let mut p = LpProblem::new("");
    let mut row_names = Vec::new();
    let mut col_names = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut obj_row: Option<String> = None;
    let mut section = Section::None;
    let mut in_int = false;
    let mut int_cols = BTreeSet::new();
    let mut lower_set = HashSet::new();
    let mut maximize = false;

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let err = |message: String| MpsError { line, message };
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match tokens[0] {
                "NAME" => {
                    p.name = tokens[1..].join(" ");
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "OBJSENSE" => {
                    if tokens.get(1).is_some_and(|t| t.starts_with("MAX")) {
                        maximize = true;
                    }
                    Section::ObjSense
                }
                "ENDATA" => Section::End,
                other => return Err(err(format!("unknown section {other}"))),
            };
            continue;
        }
        let num = |s: &str| -> Result<f64, MpsError> {
            s.parse::<f64>()
                .map_err(|_| err(format!("bad number {s:?}")))
        };
        match section {
            Section::ObjSense => {
                if tokens[0].starts_with("MAX") {
                    maximize = true;
                }
            }
            Section::Rows => {
                if tokens.len() < 2 {
                    return Err(err("row entry needs a type and a name".into()));
                }
                let sense = match tokens[0] {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(tokens[1].to_string());
                        }
                        continue;
                    }
                    "E" => RowSense::Eq,
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    t => return Err(err(format!("unknown row type {t}"))),
                };
                if row_index.insert(tokens[1].to_string(), p.n_rows).is_some() {
                    return Err(err(format!("duplicate row {}", tokens[1])));
                }
                row_names.push(tokens[1].to_string());
                p.add_row(sense, 0.0, &[]);
            }
            Section::Columns => {
                if tokens.len() >= 3 && tokens[1] == "'MARKER'" {
                    in_int = tokens[2] == "'INTORG'";
                    continue;
                }
                if tokens.len() < 3 || tokens.len() % 2 == 0 {
                    return Err(err("column entry needs name/value pairs".into()));
                }
                let col = match col_index.get(tokens[0]) {
                    Some(&c) => c,
                    None => {
                        let c = p.add_col(0.0, 0.0, f64::INFINITY);
                        col_index.insert(tokens[0].to_string(), c);
                        col_names.push(tokens[0].to_string());
                        if in_int {
                            int_cols.insert(c);
                            p.col_upper[c] = 1.0;
                        }
                        c
                    }
                };
                for pair in tokens[1..].chunks(2) {
                    let v = num(pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        p.objective[col] += v;
                    } else {
                        let row = *row_index
                            .get(pair[0])
                            .ok_or_else(|| err(format!("unknown row {}", pair[0])))?;
                        p.matrix.push(Triplet { row, col, value: v });
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                // the set name is optional in some writers
                let pairs = if tokens.len() % 2 == 1 { &tokens[1..] } else { &tokens[..] };
                for pair in pairs.chunks(2) {
                    if pair.len() < 2 {
                        return Err(err("dangling name without value".into()));
                    }
                    let v = num(pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        continue;
                    }
                    let row = *row_index
                        .get(pair[0])
                        .ok_or_else(|| err(format!("unknown row {}", pair[0])))?;
                    if section == Section::Rhs {
                        p.rhs[row] = v;
                    } else {
                        p.row_range[row] = Some(v);
                    }
                }
            }
            Section::Bounds => {
                if tokens.len() < 3 {
                    return Err(err("bound entry too short".into()));
                }
                let kind = tokens[0];
                let needs_value = matches!(kind, "UP" | "LO" | "FX");
                // "TYPE [set] column [value]"
                let (col_tok, val_tok) = match (tokens.len(), needs_value) {
                    (3, true) => (tokens[1], Some(tokens[2])),
                    (3, false) => (tokens[2], None),
                    (4, _) => (tokens[2], Some(tokens[3])),
                    _ => (tokens[2], None),
                };
                let col = *col_index
                    .get(col_tok)
                    .ok_or_else(|| err(format!("unknown column {col_tok}")))?;
                let value = val_tok.map(num).transpose()?;
                let need = || value.ok_or_else(|| err(format!("{kind} bound needs a value")));
                match kind {
                    "UP" => {
                        let v = need()?;
                        p.col_upper[col] = v;
                        if v < 0.0 && !lower_set.contains(&col) && p.col_lower[col] == 0.0 {
                            p.col_lower[col] = f64::NEG_INFINITY;
                        }
                    }
                    "LO" => {
                        p.col_lower[col] = need()?;
                        lower_set.insert(col);
                    }
                    "FX" => {
                        let v = need()?;
                        p.col_lower[col] = v;
                        p.col_upper[col] = v;
                        lower_set.insert(col);
                    }
                    "FR" => {
                        p.col_lower[col] = f64::NEG_INFINITY;
                        p.col_upper[col] = f64::INFINITY;
                    }
                    "MI" => {
                        p.col_lower[col] = f64::NEG_INFINITY;
                        lower_set.insert(col);
                    }
                    "PL" => p.col_upper[col] = f64::INFINITY,
                    "BV" => {
                        p.col_lower[col] = 0.0;
                        p.col_upper[col] = 1.0;
                        int_cols.insert(col);
                    }
                    other => return Err(err(format!("unsupported bound type {other}"))),
                }
            }
            Section::None => return Err(err("data outside of a section".into())),
            Section::End => break,
        }
    }
    for &c in &int_cols {
        if p.col_lower[c] < 0.0 || p.col_upper[c] > 1.0 {
            return Err(MpsError {
                line: 0,
                message: format!("integer column {} is not binary", col_names[c]),
            });
        }
    }
    if maximize {
        p.objective.iter_mut().for_each(|c| *c = -*c);
    }
    p.binary_cols = int_cols;
    p.row_names = Some(row_names);
    p.col_names = Some(col_names);
    Ok(p)
}
