//! Table-style evaluation reports.
//!
//! Rows computed by this toolkit render meters and degrees with four
//! decimals, e.g. `0.5623m, 5.8011°`. Comparison rows supplied by the user
//! are echoed verbatim so published baseline numbers keep their original
//! precision.

use eulerpose::EvalSummary;

/// Render one median-or-mean cell: meters and degrees, four decimals each.
pub fn format_cell(meters: f64, degrees: f64) -> String {
    format!("{meters:.4}m, {degrees:.4}\u{00b0}")
}

/// One line of the evaluation table. `median` and `mean` are preformatted
/// cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scene: String,
    pub train_frames: Option<u64>,
    pub test_frames: Option<u64>,
    pub median: String,
    pub mean: String,
}

impl ReportRow {
    pub fn from_summary(summary: &EvalSummary, train_frames: Option<u64>) -> Self {
        Self {
            scene: summary.scene.clone(),
            train_frames,
            test_frames: Some(summary.n_frames as u64),
            median: format_cell(summary.median_translation_m, summary.median_angle_deg),
            mean: format_cell(summary.mean_translation_m, summary.mean_angle_deg),
        }
    }
}

/// Tab-separated table with a header row.
pub fn render_report(rows: &[ReportRow]) -> String {
    let mut out = String::from("scene\ttrain\ttest\tmedian\tmean\n");
    for row in rows {
        let fmt_count = |c: Option<u64>| c.map_or_else(|| "-".to_string(), |v| v.to_string());
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            row.scene,
            fmt_count(row.train_frames),
            fmt_count(row.test_frames),
            row.median,
            row.mean
        ));
    }
    out
}
