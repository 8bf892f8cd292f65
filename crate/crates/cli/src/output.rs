//! Human-readable rendering of ranked results.
//!
//! Tables round for the eye: probabilities print as integer percentages and
//! other quantities are trimmed to nine decimals so floating-point residue
//! does not leak into the output. JSON output keeps full precision.

use piqos_core::{Extraction, ParamValue, ParameterSchema, RankedResult};

/// Output format for command results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Aligned text table with display rounding.
    Table,
    /// Full-precision JSON.
    Json,
}

/// Formats a quantity for table display, trimming float residue.
pub fn display_number(v: f64) -> String {
    let rounded = (v * 1e9).round() / 1e9;
    // Normalize negative zero so "-0" never prints.
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded}")
}

/// Formats a probability in [0, 1] as an integer percentage.
pub fn display_percent(p: f64) -> String {
    format!("{}%", (p * 100.0).round() as i64)
}

fn display_value(value: &ParamValue) -> String {
    match value {
        ParamValue::Scalar(v) => display_number(*v),
        ParamValue::Normal { mean, var } => {
            format!("N({}, {})", display_number(*mean), display_number(*var))
        }
    }
}

/// Renders the ranked candidates as an aligned text table. Obfuscated
/// results carry no per-parameter data, so those columns show `-`.
pub fn render_table(result: &RankedResult, schema: &ParameterSchema) -> String {
    let mut headers: Vec<String> = vec!["Rank".into(), "Score".into(), "Path".into()];
    for decl in schema.params() {
        match decl.extraction {
            Extraction::Value => headers.push(format!("{} [{}]", decl.name, decl.unit)),
            Extraction::OnTimeProbability => headers.push(format!("P({})", decl.name)),
        }
    }
    headers.push("Allowed".into());

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, candidate) in result.candidates.iter().enumerate() {
        let mut row = vec![
            (i + 1).to_string(),
            display_number(candidate.score),
            candidate
                .path
                .iter()
                .map(|d| d.as_str())
                .collect::<Vec<_>>()
                .join("-"),
        ];
        match (&candidate.composed, &candidate.x) {
            (Some(composed), Some(x)) => {
                for (j, decl) in schema.params().iter().enumerate() {
                    match decl.extraction {
                        Extraction::Value => row.push(display_value(&composed.values[j])),
                        Extraction::OnTimeProbability => row.push(display_percent(x[j])),
                    }
                }
            }
            _ => row.extend(schema.params().iter().map(|_| "-".to_string())),
        }
        row.push(if candidate.allowed { "yes" } else { "no" }.to_string());
        rows.push(row);
    }

    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }

    // Numeric columns align right; Path and Allowed align left.
    let path_col = 2;
    let allowed_col = headers.len() - 1;
    let render_row = |cells: &[String]| -> String {
        let mut line = String::new();
        for (col, cell) in cells.iter().enumerate() {
            if col > 0 {
                line.push_str("  ");
            }
            let pad = " ".repeat(widths[col] - cell.chars().count());
            if col == path_col || col == allowed_col {
                line.push_str(cell);
                line.push_str(&pad);
            } else {
                line.push_str(&pad);
                line.push_str(cell);
            }
        }
        line.truncate(line.trim_end().len());
        line.push('\n');
        line
    };

    let mut out = render_row(&headers);
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in &rows {
        out.push_str(&render_row(row));
    }
    if rows.is_empty() {
        out.push_str("(no candidates)\n");
    }
    out
}
