//! Text rendering of score reports and corpus statistics.

use super::CorpusStats;
use crate::score::{ScoreReport, SplitScores};
use crate::{ErrorType, Split};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Plain,
    Tsv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" | "table" => Ok(ReportFormat::Plain),
            "tsv" => Ok(ReportFormat::Tsv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format: {other:?}")),
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

struct TableBuilder {
    format: ReportFormat,
    widths: Vec<usize>,
    rows: Vec<Vec<String>>,
}

impl TableBuilder {
    fn new(format: ReportFormat, header: &[&str]) -> Self {
        let mut t = TableBuilder { format, widths: vec![0; header.len()], rows: Vec::new() };
        t.row(header.iter().map(|s| s.to_string()).collect());
        t
    }

    fn row(&mut self, cells: Vec<String>) {
        for (i, c) in cells.iter().enumerate() {
            if i < self.widths.len() {
                self.widths[i] = self.widths[i].max(c.chars().count());
            }
        }
        self.rows.push(cells);
    }

    fn render(self) -> String {
        let mut out = String::new();
        for (r, row) in self.rows.iter().enumerate() {
            match self.format {
                ReportFormat::Tsv => out.push_str(&row.join("\t")),
                ReportFormat::Markdown => {
                    out.push_str("| ");
                    out.push_str(&row.join(" | "));
                    out.push_str(" |");
                }
                ReportFormat::Plain => {
                    let padded: Vec<String> = row
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            let pad = self.widths[i].saturating_sub(c.chars().count());
                            if i == 0 {
                                format!("{c}{}", " ".repeat(pad))
                            } else {
                                format!("{}{c}", " ".repeat(pad))
                            }
                        })
                        .collect();
                    out.push_str(padded.join("  ").trim_end());
                }
            }
            out.push('\n');
            if r == 0 && self.format == ReportFormat::Markdown {
                out.push('|');
                for _ in row {
                    out.push_str(" --- |");
                }
                out.push('\n');
            }
        }
        out
    }
}

fn scores_row(name: &str, s: &SplitScores) -> Vec<String> {
    vec![
        name.to_owned(),
        s.n.to_string(),
        pct(s.detection.precision),
        pct(s.detection.recall),
        pct(s.detection.f1),
        pct(s.correction.precision),
        pct(s.correction.recall),
        pct(s.correction.f1),
    ]
}

/// Renders the three report tables: overall + per-split P/R/F1, per-type
/// recall, and per-split edit rates with the error-free false-positive count.
pub fn render_report(report: &ScoreReport, format: ReportFormat) -> String {
    let mut out = String::new();

    out.push_str("# Scores (percentages)\n");
    let mut table = TableBuilder::new(
        format,
        &["split", "n", "det-P", "det-R", "det-F1", "cor-P", "cor-R", "cor-F1"],
    );
    if report.overall.n == 0 {
        table.row(vec!["Overall (n=0)".to_owned(); 1].into_iter().chain(
            std::iter::repeat_n("0.00".to_owned(), 7),
        ).collect());
    } else {
        table.row(scores_row("Overall", &report.overall));
        for split in Split::ALL {
            if let Some(scores) = report.splits.get(&split) {
                table.row(scores_row(split.as_str(), scores));
            }
        }
    }
    out.push_str(&table.render());

    out.push_str("\n# Recall by error type\n");
    let mut table = TableBuilder::new(format, &["type", "recalled", "total", "recall"]);
    if report.recall_by_type.is_empty() {
        table.row(vec!["(n=0)".to_owned(), "0".to_owned(), "0".to_owned(), "0.00".to_owned()]);
    } else {
        for ty in ErrorType::ALL {
            if let Some(tally) = report.recall_by_type.get(&ty) {
                table.row(vec![
                    ty.as_str().to_owned(),
                    tally.recalled.to_string(),
                    tally.total.to_string(),
                    pct(tally.recall()),
                ]);
            }
        }
    }
    out.push_str(&table.render());

    out.push_str("\n# Edit rate (edits per 100 characters)\n");
    let mut table = TableBuilder::new(format, &["split", "edits", "chars", "rate"]);
    if report.edit_rates.is_empty() {
        table.row(vec!["(n=0)".to_owned(), "0".to_owned(), "0".to_owned(), "0.00".to_owned()]);
    } else {
        for split in Split::ALL {
            if let Some(tally) = report.edit_rates.get(&split) {
                table.row(vec![
                    split.as_str().to_owned(),
                    tally.edits.to_string(),
                    tally.chars.to_string(),
                    format!("{:.2}", tally.per_100_chars()),
                ]);
            }
        }
    }
    out.push_str(&table.render());
    out.push_str(&format!(
        "\nfalse positives on ErrorFree: {}\n",
        report.error_free_false_positives
    ));
    out
}

/// Renders corpus statistics as a small report.
pub fn render_stats(stats: &CorpusStats, format: ReportFormat) -> String {
    let mut out = String::new();
    out.push_str("# Corpus statistics\n");
    let mut table = TableBuilder::new(format, &["metric", "value"]);
    table.row(vec!["paragraphs".to_owned(), stats.records.to_string()]);
    table.row(vec!["total characters".to_owned(), stats.total_chars.to_string()]);
    table.row(vec!["mean paragraph length".to_owned(), format!("{:.2}", stats.mean_chars)]);
    table.row(vec!["annotated errors".to_owned(), stats.total_errors.to_string()]);
    table.row(vec![
        "errors per 10K characters".to_owned(),
        format!("{:.2}", stats.errors_per_10k_chars),
    ]);
    out.push_str(&table.render());

    out.push_str("\n# Paragraphs by split\n");
    let mut table = TableBuilder::new(format, &["split", "paragraphs"]);
    for split in Split::ALL {
        if let Some(n) = stats.by_split.get(&split) {
            table.row(vec![split.as_str().to_owned(), n.to_string()]);
        }
    }
    out.push_str(&table.render());

    if !stats.by_domain.is_empty() {
        out.push_str("\n# Paragraphs by domain\n");
        let mut table = TableBuilder::new(format, &["domain", "paragraphs"]);
        for (domain, n) in &stats.by_domain {
            table.row(vec![domain.clone(), n.to_string()]);
        }
        out.push_str(&table.render());
    }

    out.push_str("\n# Errors by type\n");
    let mut table = TableBuilder::new(format, &["type", "count"]);
    for ty in ErrorType::ALL {
        if let Some(n) = stats.errors_by_type.get(&ty) {
            table.row(vec![ty.as_str().to_owned(), n.to_string()]);
        }
    }
    out.push_str(&table.render());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::{EditRateTally, Prf, TypeTally};
    use std::collections::BTreeMap;

    fn perfect_report() -> ScoreReport {
        let prf = Prf { precision: 1.0, recall: 1.0, f1: 1.0 };
        let scores = SplitScores { n: 2, detection: prf, correction: prf };
        ScoreReport {
            overall: scores,
            splits: BTreeMap::from([(Split::Mix, scores)]),
            recall_by_type: BTreeMap::from([(ErrorType::Word, TypeTally { recalled: 2, total: 2 })]),
            edit_rates: BTreeMap::from([(Split::Mix, EditRateTally { edits: 3, chars: 300 })]),
            error_free_false_positives: 0,
        }
    }

    #[test]
    fn perfect_scores_render_as_100() {
        let text = render_report(&perfect_report(), ReportFormat::Plain);
        assert!(text.contains("100.00"));
        assert!(!text.contains("NaN"));
        assert!(text.contains("Overall"));
        assert!(text.contains("1.00")); // 3 edits / 300 chars
    }

    #[test]
    fn empty_report_renders_n0() {
        let text = render_report(&ScoreReport::default(), ReportFormat::Plain);
        assert!(text.contains("n=0"));
    }

    #[test]
    fn formats_differ_only_in_layout() {
        let plain = render_report(&perfect_report(), ReportFormat::Plain);
        let tsv = render_report(&perfect_report(), ReportFormat::Tsv);
        let md = render_report(&perfect_report(), ReportFormat::Markdown);
        assert!(tsv.contains("MIX\t"));
        assert!(md.contains("| MIX |"));
        assert_ne!(plain, tsv);
        for text in [&plain, &tsv, &md] {
            assert!(text.contains("false positives on ErrorFree: 0"));
        }
    }
}
