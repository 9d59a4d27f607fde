//! CSV and aligned-text rendering of results.
//!
//! CSV bodies carry only quantities fixed by the resolved config, so
//! repeated runs give byte-identical files. Wall-clock timings appear in
//! the text tables and in the provenance record.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use stackga_core::metrics::METRIC_NAMES;
use stackga_core::{Dataset, MetricReport};

use crate::config::Reference;
use crate::pipeline::StageOutcome;

pub struct Table {
    pub csv: String,
    pub text: String,
}

/// Percent with `decimals` places, or `undefined`.
pub fn pct(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "undefined".into(), |x| format!("{:.decimals$}", 100.0 * x))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_line(cells: &[String]) -> String {
    let mut line = cells.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

/// Left-aligned first column, right-aligned others.
pub fn align(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width = vec![0; cols];
    for r in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let fmt_row = |r: &[String]| {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, c)| if i == 0 { format!("{c:<w$}", w = width[0]) } else { format!("{c:>w$}", w = width[i]) })
            .collect();
        cells.join("  ").trim_end().to_string()
    };
    let mut out = fmt_row(header);
    out.push('\n');
    out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * (cols - 1)));
    out.push('\n');
    for r in rows {
        out.push_str(&fmt_row(r));
        out.push('\n');
    }
    out
}

fn selected_cells(o: &StageOutcome, ds: &Dataset) -> (String, String) {
    match o.masks.as_slice() {
        [] => (ds.n().to_string(), "all".into()),
        [m] if !o.nested => {
            let names: Vec<&str> = m.indices().into_iter().map(|j| ds.specs()[j].name.as_str()).collect();
            (m.count().to_string(), names.join(";"))
        }
        masks => {
            let mean = masks.iter().map(|m| m.count() as f64).sum::<f64>() / masks.len() as f64;
            (format!("{mean:.2}"), "per-partition".into())
        }
    }
}

const SHORT: [&str; 8] = ["ACC", "Sen", "Spec", "PPV", "NPV", "F1", "Youden", "AUC"];

pub fn run_table(outcomes: &[StageOutcome], ds: &Dataset) -> Table {
    let mut header: Vec<String> = ["method", "stage", "plan", "mode", "n_selected", "features"].map(String::from).to_vec();
    header.extend(METRIC_NAMES.iter().map(|s| s.to_string()));
    let mut csv = csv_line(&header);

    let mut text_header: Vec<String> = ["method", "plan", "mode", "n_sel"].map(String::from).to_vec();
    text_header.extend(SHORT.iter().map(|s| s.to_string()));
    text_header.extend(["select ms", "total ms"].map(String::from));
    let mut text_rows = Vec::new();

    for o in outcomes {
        let (n_sel, features) = selected_cells(o, ds);
        let r = &o.evaluation.report;
        let mut row = vec![o.name.clone(), o.kind.into(), o.plan.clone(), o.mode().into(), n_sel.clone(), features];
        row.extend(r.values().iter().map(|v| pct(*v, 4)));
        csv.push_str(&csv_line(&row));

        let mut t = vec![o.name.clone(), o.plan.clone(), o.mode().into(), n_sel];
        t.extend(r.values().iter().map(|v| pct(*v, 2)));
        t.push(format!("{:.0}", o.selection_ms));
        t.push(format!("{:.0}", o.total_ms));
        text_rows.push(t);
    }
    let mut text = align(&text_header, &text_rows);
    text.push_str("\nMetrics in percent; k-fold values are means over folds.\n");
    Table { csv, text }
}

/// `outcomes[method][plan]`, methods and plans in config order.
pub fn matrix_table(
    outcomes: &[Vec<StageOutcome>],
    plans: &[String],
    references: &BTreeMap<String, Reference>,
) -> Table {
    let triple = |r: &MetricReport, d: usize| [pct(r.accuracy, d), pct(r.sensitivity, d), pct(r.specificity, d)];
    let mut header = vec!["method".to_string(), "mode".to_string()];
    for p in plans {
        header.extend(["acc", "sen", "spec"].map(|m| format!("{p}_{m}")));
    }
    let mut csv = csv_line(&header);
    let mut text_header = vec!["method".to_string()];
    for p in plans {
        text_header.extend(["ACC", "Sen", "Spec"].map(|m| format!("{p} {m}")));
    }
    let mut rows = Vec::new();
    for row in outcomes {
        let mode = row.first().map_or("single", StageOutcome::mode);
        let mut cells = vec![row[0].name.clone(), mode.to_string()];
        let mut text = vec![row[0].name.clone()];
        for o in row {
            cells.extend(triple(&o.evaluation.report, 4));
            text.extend(triple(&o.evaluation.report, 2));
        }
        csv.push_str(&csv_line(&cells));
        rows.push(text);
    }
    let mut text = align(&text_header, &rows);
    text.push_str("\nMetrics in percent: accuracy, sensitivity, specificity per split plan.\n");
    let notes = reference_notes(outcomes, references);
    if !notes.is_empty() {
        text.push_str("\nReference figures\n");
        text.push_str(&notes);
    }
    Table { csv, text }
}

/// One line per configured reference whose method and plan were run.
pub fn reference_notes(outcomes: &[Vec<StageOutcome>], references: &BTreeMap<String, Reference>) -> String {
    let mut out = String::new();
    for (method, reference) in references {
        let achieved = outcomes
            .iter()
            .flatten()
            .find(|o| &o.name == method && o.plan == reference.plan)
            .map(|o| pct(o.evaluation.report.accuracy, 2));
        match achieved {
            Some(acc) => {
                let _ = write!(
                    out,
                    "  {method} ({}): achieved {acc} vs reference {:.2}",
                    reference.plan, reference.accuracy
                );
            }
            None => {
                let _ = write!(out, "  {method} ({}): not run; reference {:.2}", reference.plan, reference.accuracy);
            }
        }
        if !reference.note.is_empty() {
            let _ = write!(out, ". {}", reference.note);
        }
        out.push('\n');
    }
    out
}

/// Selection frequency per feature, most frequent first.
pub fn importance_table(frequency: &[f64], ds: &Dataset, highlight: &[String], runs: usize) -> Table {
    let n = frequency.len();
    let rank = |j: usize| 1 + frequency.iter().filter(|&&f| f > frequency[j]).count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| frequency[b].total_cmp(&frequency[a]).then(a.cmp(&b)));

    let header: Vec<String> = ["rank", "feature", "index", "frequency"].map(String::from).to_vec();
    let mut csv = csv_line(&header);
    let mut rows = Vec::new();
    for &j in &order {
        let cells = vec![rank(j).to_string(), ds.specs()[j].name.clone(), j.to_string(), format!("{:.4}", frequency[j])];
        csv.push_str(&csv_line(&cells));
        rows.push(cells);
    }
    let mut text = format!("Selection frequency of each feature over {runs} runs\n\n");
    text.push_str(&align(&header, &rows));
    text.push('\n');
    let mut leads = !highlight.is_empty();
    for name in highlight {
        match ds.specs().iter().position(|s| &s.name == name) {
            Some(j) => {
                let r = rank(j);
                leads &= r <= highlight.len();
                let _ = writeln!(text, "{name}: frequency {:.4}, rank {r} of {n}", frequency[j]);
            }
            None => {
                leads = false;
                let _ = writeln!(text, "{name}: no such feature");
            }
        }
    }
    if !highlight.is_empty() {
        let _ = writeln!(
            text,
            "{} lead the ranking: {}",
            highlight.join(" and "),
            if leads { "yes" } else { "no" }
        );
    }
    Table { csv, text }
}
