//! Plain-text reports.

use std::fmt::{Display, Write};

use tokenlab_core::analytics::{CohortStats, CrossTable, Partition, SuccessSummary};
use tokenlab_core::tokens::TokenDistinctnessReport;
use tokenlab_core::{PerformanceRecord, TokenId};

const LEGEND: &str = "\
   Cell Contents
|-------------------------|
|                       N |
|           N / Row Total |
|           N / Col Total |
|         N / Table Total |
|-------------------------|
";

/// Contingency table in the stacked-cell layout: every cell shows its count
/// and its row, column and table proportions to three decimals, followed by
/// row and column totals.
pub fn render_crosstable_text<L: Display>(ct: &CrossTable<L>) -> String {
    let labels: Vec<String> = ct.classes.iter().map(|c| c.to_string()).collect();
    let lw = 12;
    let cw = labels.iter().map(String::len).max().unwrap_or(0).max(9);
    let rule = {
        let mut s = format!("{}|", "-".repeat(lw + 1));
        for _ in 0..=labels.len() {
            s.push_str(&"-".repeat(cw + 2));
            s.push('|');
        }
        s
    };
    let line = |head: &str, cells: &[String]| -> String {
        let mut s = format!("{head:>lw$} |");
        for c in cells {
            let _ = write!(s, " {c:>cw$} |");
        }
        s
    };
    let f3 = |x: f64| format!("{x:.3}");
    let blank = String::new();

    let mut out = String::new();
    out.push('\n');
    out.push_str(LEGEND);
    let _ = writeln!(out, "\nTotal Observations in Table: {}\n", ct.total());
    let _ = writeln!(out, "{:>lw$} | Predicted", "");
    let mut head = labels.clone();
    head.push("Row Total".into());
    let _ = writeln!(out, "{}", line("Actual", &head));
    let _ = writeln!(out, "{rule}");
    for (i, label) in labels.iter().enumerate() {
        let n = ct.len();
        let mut counts: Vec<String> = (0..n).map(|j| ct.counts[i][j].to_string()).collect();
        counts.push(ct.row_total(i).to_string());
        let mut row: Vec<String> = (0..n).map(|j| f3(ct.row_prop(i, j))).collect();
        row.push(f3(ct.row_share(i)));
        let mut col: Vec<String> = (0..n).map(|j| f3(ct.col_prop(i, j))).collect();
        col.push(blank.clone());
        let mut tab: Vec<String> = (0..n).map(|j| f3(ct.table_prop(i, j))).collect();
        tab.push(blank.clone());
        let _ = writeln!(out, "{}", line(label, &counts));
        let _ = writeln!(out, "{}", line("", &row));
        let _ = writeln!(out, "{}", line("", &col));
        let _ = writeln!(out, "{}", line("", &tab));
        let _ = writeln!(out, "{rule}");
    }
    let mut totals: Vec<String> = ct.col_totals().iter().map(u64::to_string).collect();
    totals.push(ct.total().to_string());
    let mut shares: Vec<String> = (0..ct.len()).map(|j| f3(ct.col_share(j))).collect();
    shares.push(blank);
    let _ = writeln!(out, "{}", line("Column Total", &totals));
    let _ = writeln!(out, "{}", line("", &shares));
    let _ = writeln!(out, "{rule}");
    out
}

/// The stacked values `[N, row, col, table]` of cell `(row, col)` as they
/// appear in a rendered table. Used to check renders against expectations.
pub fn stacked_cell(text: &str, row_label: &str, col: usize) -> Option<[String; 4]> {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines.iter().position(|l| l.split('|').next().map(str::trim) == Some(row_label))?;
    let cell = |l: &str| l.split('|').nth(col + 1).map(|c| c.trim().to_owned());
    Some([
        cell(lines[start])?,
        cell(lines.get(start + 1)?)?,
        cell(lines.get(start + 2)?)?,
        cell(lines.get(start + 3)?)?,
    ])
}

pub fn render_summary(summaries: &[SuccessSummary]) -> String {
    let mut out = String::from("Scope    Success   Missed   Success %\n");
    for s in summaries {
        let _ = writeln!(out, "{:<8} {:>7} {:>8} {:>10}%", s.scope, s.success, s.missed, s.success_pct);
    }
    out
}

/// Per-token subject counts, train/test split and profit moments.
pub fn render_cohort_stats(
    stats: &CohortStats,
    records: &[PerformanceRecord],
    partition: Option<&Partition>,
) -> String {
    let mut out = String::from("Token   Total   Train    Test      Mean profit         SD\n");
    let (mut total, mut train, mut test) = (0usize, 0usize, 0usize);
    for s in &stats.tokens {
        let (tr, te) = match partition {
            Some(p) => (
                p.train.iter().filter(|&&i| records[i].token_label == s.token).count(),
                p.test.iter().filter(|&&i| records[i].token_label == s.token).count(),
            ),
            None => (0, 0),
        };
        total += s.count;
        train += tr;
        test += te;
        let sd = s.sd.map_or_else(|| "-".to_owned(), |v| format!("{v:.1}"));
        let _ = writeln!(out, "{:<5} {:>7} {:>7} {:>7} {:>16.1} {:>10}", s.token, s.count, tr, te, s.mean, sd);
    }
    let _ = writeln!(out, "{:<5} {:>7} {:>7} {:>7}", "Total", total, train, test);
    let _ = writeln!(out, "means pairwise distinct: {}", stats.means_pairwise_distinct());
    out
}

pub fn render_distinctness(report: &TokenDistinctnessReport) -> String {
    let mut out = String::from("Pairwise encoding distances\n      ");
    for id in &report.ids {
        let _ = write!(out, "{id:>7}");
    }
    out.push('\n');
    for (id, row) in report.ids.iter().zip(&report.pairwise_distance) {
        let _ = write!(out, "{id:<6}");
        for d in row {
            let _ = write!(out, "{d:>7.3}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "min off-diagonal (informed tokens): {:.4}", report.min_offdiagonal);
    let _ = writeln!(out, "threshold: {}", report.threshold);
    let _ = writeln!(out, "sufficient: {}", report.sufficient);
    out
}

/// `record_id,actual,predicted` for the test set.
pub fn render_predictions(records: &[PerformanceRecord], test: &[usize], predicted: &[TokenId]) -> String {
    let mut out = String::from("record_id,actual,predicted\n");
    for (&i, p) in test.iter().zip(predicted) {
        let _ = writeln!(out, "{},{},{}", records[i].record_id, records[i].token_label, p);
    }
    out
}
