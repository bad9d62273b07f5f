//! Human-readable CPLEX-LP style rendering, for debugging formulations.

use std::fmt::Write as _;

use super::problem::{is_neg_inf, is_pos_inf};
use super::{LpProblem, RowSense};

fn term(out: &mut String, first: bool, coef: f64, name: &str) {
    let mag = coef.abs();
    match (first, coef < 0.0) {
        (true, false) => out.push(' '),
        (true, true) => out.push_str(" -"),
        (false, neg) => out.push_str(if neg { " - " } else { " + " }),
    }
    if mag != 1.0 {
        let _ = write!(out, "{mag} ");
    }
    out.push_str(name);
}

/// Renders `problem` in LP text format using its row and column names.
pub fn export_lp(problem: &LpProblem) -> String {
    let cols: Vec<String> = (0..problem.n_cols).map(|j| problem.col_name(j)).collect();
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", problem.name);
    out.push_str("Minimize\n obj:");
    let mut first = true;
    for (j, &c) in problem.objective.iter().enumerate() {
        if c != 0.0 {
            term(&mut out, first, c, &cols[j]);
            first = false;
        }
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); problem.n_rows];
    for t in problem.canonical_triplets() {
        rows[t.row].push((t.col, t.value));
    }
    for (r, entries) in rows.iter_mut().enumerate() {
        entries.sort_by_key(|e| e.0);
        let _ = write!(out, " {}:", problem.row_name(r));
        let mut first = true;
        for &(j, v) in entries.iter() {
            term(&mut out, first, v, &cols[j]);
            first = false;
        }
        if first {
            out.push_str(" 0");
        }
        let (lo, hi) = problem.row_bounds(r);
        match (problem.row_sense[r], problem.row_range[r]) {
            (RowSense::Eq, None) => { let _ = writeln!(out, " = {}", problem.rhs[r]); }
            (RowSense::Le, None) => { let _ = writeln!(out, " <= {}", problem.rhs[r]); }
            (RowSense::Ge, None) => { let _ = writeln!(out, " >= {}", problem.rhs[r]); }
            _ => { let _ = writeln!(out, " >= {lo}\n \\ ranged: upper {hi}"); }
        }
    }

    out.push_str("Bounds\n");
    for (j, name) in cols.iter().enumerate() {
        let (lo, hi) = (problem.col_lower[j], problem.col_upper[j]);
        match (is_neg_inf(lo), is_pos_inf(hi)) {
            (true, true) => { let _ = writeln!(out, " {name} free"); }
            (true, false) => { let _ = writeln!(out, " -inf <= {name} <= {hi}"); }
            (false, true) if lo == 0.0 => {}
            (false, true) => { let _ = writeln!(out, " {name} >= {lo}"); }
            (false, false) if lo == hi => { let _ = writeln!(out, " {name} = {lo}"); }
            (false, false) => { let _ = writeln!(out, " {lo} <= {name} <= {hi}"); }
        }
    }
    if !problem.binary_cols.is_empty() {
        out.push_str("Binaries\n");
        for &j in &problem.binary_cols {
            let _ = writeln!(out, " {}", cols[j]);
        }
    }
    out.push_str("End\n");
    out
}
