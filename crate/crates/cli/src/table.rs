//! Average outer-iteration tables, one per problem, as markdown.

use std::fmt::Write;

use crate::sweep::{usable, ResultRow};

fn push_unique<T: PartialEq>(v: &mut Vec<T>, x: T) {
    if !v.contains(&x) {
        v.push(x);
    }
}

fn label(regime: &str, eps_ev: Option<f64>) -> String {
    match eps_ev {
        Some(e) => format!("{regime} (eps_ev={e})"),
        None => regime.to_string(),
    }
}

/// Rows are regimes (with their eavesdropper outage level), columns pair
/// counts; entries average the iterations of usable runs over every power
/// budget and seed.
pub fn iteration_tables(rows: &[ResultRow]) -> String {
    let mut problems = Vec::new();
    let mut ms = Vec::new();
    for r in rows {
        push_unique(&mut problems, r.problem.as_str());
        push_unique(&mut ms, r.m);
    }
    ms.sort_unstable();
    let mut out = String::new();
    for problem in problems {
        let mut regimes = Vec::new();
        for r in rows.iter().filter(|r| r.problem == problem) {
            push_unique(&mut regimes, (r.regime.as_str(), r.eps_ev.map(f64::to_bits)));
        }
        if !out.is_empty() {
            out.push('\n');
        }
        writeln!(out, "Average number of iterations ({problem})\n").unwrap();
        let cols: Vec<String> = ms.iter().map(|m| format!("M={m}")).collect();
        writeln!(out, "| regime | {} |", cols.join(" | ")).unwrap();
        writeln!(out, "|---|{}", "---|".repeat(ms.len())).unwrap();
        for (regime, eps) in regimes {
            let eps_ev = eps.map(f64::from_bits);
            let cells: Vec<String> = ms
                .iter()
                .map(|&m| {
                    let it: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.problem == problem && r.regime == regime && r.eps_ev == eps_ev && r.m == m)
                        .filter(|r| usable(&r.status))
                        .map(|r| r.iterations as f64)
                        .collect();
                    if it.is_empty() {
                        "-".into()
                    } else {
                        format!("{:.1}", it.iter().sum::<f64>() / it.len() as f64)
                    }
                })
                .collect();
            writeln!(out, "| {} | {} |", label(regime, eps_ev), cells.join(" | ")).unwrap();
        }
    }
    out
}
