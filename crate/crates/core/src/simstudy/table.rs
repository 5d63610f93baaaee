//! Table-shaped study output: CSV and markdown writers and readers, the
//! embedded reference table, and the sample-size consistency check.

use std::fmt;

use super::{StudyCell, StudyMode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(Error::Parse(format!("unknown table format '{other}'"))),
        }
    }
}

/// One (condition, N) row. `values` holds, in order: confidence-set major
/// mean and SD, minor mean and SD, then (major, minor) for each ε in the
/// ε̃ mode, then (major, minor) for each ε in the δ_F mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub condition: String,
    pub n: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyTable {
    pub epsilons: Vec<f64>,
    pub rows: Vec<TableRow>,
    /// Per-cell detail (SDs of FPE widths, exclusion counts); empty for
    /// tables read back from text.
    pub cells: Vec<StudyCell>,
}

const CS_COLUMNS: [&str; 4] = ["cs_major_mean", "cs_major_sd", "cs_minor_mean", "cs_minor_sd"];
const CS_LABELS: [&str; 4] = ["CS major mean", "CS major SD", "CS minor mean", "CS minor SD"];

fn eps_text(e: f64) -> String {
    format!("{e}")
}

fn mode_keys() -> [(StudyMode, &'static str, &'static str); 2] {
    [(StudyMode::EpsilonTilde, "eps_tilde", "eps-tilde"), (StudyMode::DeltaF, "delta_f", "delta-F")]
}

impl StudyTable {
    pub fn n_value_columns(epsilons: &[f64]) -> usize {
        4 + 4 * epsilons.len()
    }

    /// Machine-readable column names of the value columns.
    pub fn value_columns(epsilons: &[f64]) -> Vec<String> {
        let mut cols: Vec<String> = CS_COLUMNS.iter().map(|s| s.to_string()).collect();
        for (_, key, _) in mode_keys() {
            for &e in epsilons {
                for axis in ["major", "minor"] {
                    cols.push(format!("{key}_{}_{axis}", eps_text(e)));
                }
            }
        }
        cols
    }

    fn display_columns(epsilons: &[f64]) -> Vec<String> {
        let mut cols: Vec<String> = CS_LABELS.iter().map(|s| s.to_string()).collect();
        for (_, _, label) in mode_keys() {
            for &e in epsilons {
                for axis in ["major", "minor"] {
                    cols.push(format!("{label} e={} {axis}", eps_text(e)));
                }
            }
        }
        cols
    }

    /// Assembles rows from cells, in order of first appearance of each
    /// (condition, N). Missing cells show as NaN.
    pub fn from_cells(epsilons: &[f64], cells: Vec<StudyCell>) -> Self {
        let mut keys: Vec<(super::ConditionLabel, usize)> = Vec::new();
        for c in &cells {
            if !keys.contains(&(c.condition, c.n)) {
                keys.push((c.condition, c.n));
            }
        }
        let rows = keys
            .iter()
            .map(|&(label, n)| {
                let find = |mode: StudyMode, eps: Option<f64>| {
                    cells.iter().find(|c| {
                        c.condition == label && c.n == n && c.mode == mode && eps.is_none_or(|e| c.epsilon == e)
                    })
                };
                let mut values = match find(StudyMode::ConfidenceSet, None) {
                    Some(c) => vec![c.major_mean, c.major_sd, c.minor_mean, c.minor_sd],
                    None => vec![f64::NAN; 4],
                };
                for (mode, _, _) in mode_keys() {
                    for &e in epsilons {
                        match find(mode, Some(e)) {
                            Some(c) => values.extend([c.major_mean, c.minor_mean]),
                            None => values.extend([f64::NAN, f64::NAN]),
                        }
                    }
                }
                TableRow { condition: label.to_string(), n, values }
            })
            .collect();
        StudyTable { epsilons: epsilons.to_vec(), rows, cells }
    }

    pub fn emit(&self, format: TableFormat) -> String {
        match format {
            TableFormat::Csv => self.to_csv(),
            TableFormat::Markdown => self.to_markdown(),
        }
    }

    /// CSV with full-precision values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,n");
        for c in Self::value_columns(&self.epsilons) {
            out.push(',');
            out.push_str(&c);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{},{}", row.condition, row.n));
            for v in &row.values {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// One line per cell, with replication counts.
    pub fn cells_csv(&self) -> String {
        let mut out =
            String::from("condition,n,epsilon,mode,major_mean,major_sd,minor_mean,minor_sd,n_converged,n_excluded\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                c.condition,
                c.n,
                c.epsilon,
                c.mode.as_str(),
                c.major_mean,
                c.major_sd,
                c.minor_mean,
                c.minor_sd,
                c.n_converged,
                c.n_excluded
            ));
        }
        out
    }

    /// Markdown with values rounded to two decimals.
    pub fn to_markdown(&self) -> String {
        let cols = Self::display_columns(&self.epsilons);
        let mut out = String::from("| Condition | N |");
        for c in &cols {
            out.push_str(&format!(" {c} |"));
        }
        out.push_str("\n|---|---:|");
        for _ in &cols {
            out.push_str("---:|");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("| {} | {} |", row.condition, row.n));
            for v in &row.values {
                out.push_str(&format!(" {v:.2} |"));
            }
            out.push('\n');
        }
        out
    }

    fn epsilons_from_headers<'a>(headers: impl Iterator<Item = &'a str>, sep: &str) -> Result<Vec<f64>> {
        // ε levels appear in the major columns of the first FPE block
        let mut eps = Vec::new();
        for h in headers {
            let Some(rest) = h.strip_prefix(sep) else { continue };
            let Some(e) = rest.strip_suffix("_major").or_else(|| rest.strip_suffix(" major")) else { continue };
            let e: f64 = e.trim().parse().map_err(|_| Error::Parse(format!("bad column header '{h}'")))?;
            eps.push(e);
        }
        Ok(eps)
    }

    fn parse_rows<'a>(lines: impl Iterator<Item = Vec<&'a str>>, width: usize) -> Result<Vec<TableRow>> {
        lines
            .map(|fields| {
                if fields.len() != width + 2 {
                    return Err(Error::Parse(format!("row has {} fields, expected {}", fields.len(), width + 2)));
                }
                let n = fields[1].trim().parse().map_err(|_| Error::Parse(format!("bad N '{}'", fields[1])))?;
                let values = fields[2..]
                    .iter()
                    .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad value '{v}'"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(TableRow { condition: fields[0].trim().to_string(), n, values })
            })
            .collect()
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty table".into()))?;
        let headers: Vec<&str> = header.split(',').map(str::trim).collect();
        if headers.len() < 6 || headers[0] != "condition" || headers[1] != "n" {
            return Err(Error::Parse("table header must start with condition,n and the CS columns".into()));
        }
        let epsilons = Self::epsilons_from_headers(headers.iter().copied(), "eps_tilde_")?;
        let width = Self::n_value_columns(&epsilons);
        if headers.len() != width + 2 {
            return Err(Error::Parse("table header has unexpected column count".into()));
        }
        let rows = Self::parse_rows(lines.map(|l| l.split(',').collect()), width)?;
        Ok(StudyTable { epsilons, rows, cells: Vec::new() })
    }

    pub fn from_markdown(text: &str) -> Result<Self> {
        let split =
            |l: &str| -> Vec<String> { l.trim().trim_matches('|').split('|').map(|f| f.trim().to_string()).collect() };
        let mut lines = text.lines().filter(|l| l.trim().starts_with('|'));
        let header = split(lines.next().ok_or_else(|| Error::Parse("empty table".into()))?);
        let epsilons = Self::epsilons_from_headers(header.iter().map(String::as_str), "eps-tilde e=")?;
        let width = Self::n_value_columns(&epsilons);
        if header.len() != width + 2 {
            return Err(Error::Parse("table header has unexpected column count".into()));
        }
        let body: Vec<Vec<String>> = lines.skip(1).map(split).collect();
        let rows = Self::parse_rows(body.iter().map(|r| r.iter().map(String::as_str).collect()), width)?;
        Ok(StudyTable { epsilons, rows, cells: Vec::new() })
    }

    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('|') {
            Self::from_markdown(text)
        } else {
            Self::from_csv(text)
        }
    }

    fn value(&self, row: &TableRow, column: &str) -> Option<f64> {
        let idx = Self::value_columns(&self.epsilons).iter().position(|c| c == column)?;
        row.values.get(idx).copied()
    }
}

const PUBLISHED_TABLE: &str = "\
condition,n,cs_major_mean,cs_major_sd,cs_minor_mean,cs_minor_sd,eps_tilde_0_major,eps_tilde_0_minor,eps_tilde_0.03_major,eps_tilde_0.03_minor,eps_tilde_0.09_major,eps_tilde_0.09_minor,delta_f_0_major,delta_f_0_minor,delta_f_0.03_major,delta_f_0.03_minor,delta_f_0.09_major,delta_f_0.09_minor
Sigma1,1000,0.19,0,0.18,0,0.16,0.15,0.33,0.32,0.59,0.56,0.13,0.13,0.18,0.17,0.40,0.38
Sigma1,200,0.43,0,0.40,0,0.48,0.44,0.30,0.28,0.60,0.55,0.29,0.27,0.32,0.30,0.50,0.46
Sigma2,1000,0.17,0,0.16,0,0.18,0.18,0.29,0.29,0.51,0.50,0.11,0.11,0.16,0.15,0.36,0.35
Sigma2,200,0.38,0,0.36,0,0.39,0.38,0.26,0.25,0.52,0.50,0.26,0.25,0.28,0.27,0.43,0.42
Sigma3,1000,0.25,0,0.20,0,0.27,0.22,0.42,0.34,0.75,0.61,0.17,0.14,0.23,0.18,0.52,0.42
Sigma3,200,0.56,0,0.44,0,0.50,0.39,0.40,0.31,0.76,0.59,0.38,0.30,0.42,0.33,0.63,0.50
Sigma4,1000,0.20,0,0.17,0,0.25,0.22,0.35,0.30,0.62,0.53,0.14,0.12,0.19,0.16,0.43,0.37
Sigma4,200,0.46,0,0.39,0,0.46,0.39,0.32,0.27,0.63,0.53,0.32,0.27,0.35,0.29,0.53,0.45
";

/// The published widths table (two-decimal values, all 18 columns).
pub fn published_table() -> StudyTable {
    StudyTable::from_csv(PUBLISHED_TABLE).expect("embedded table parses")
}

/// One N-scaling comparison of a confidence-set width.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyCheck {
    pub condition: String,
    pub axis: &'static str,
    pub n_large: usize,
    pub n_small: usize,
    pub width_large: f64,
    pub width_small: f64,
    pub predicted_small: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub tolerance: f64,
    pub checks: Vec<ConsistencyCheck>,
}

impl ConsistencyReport {
    pub fn all_pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {} N={}->{}: {:.4} x {:.4} = {:.4} vs {:.4} (diff {:.4}) {}",
                c.condition,
                c.axis,
                c.n_large,
                c.n_small,
                c.width_large,
                c.predicted_small / c.width_large,
                c.predicted_small,
                c.width_small,
                (c.predicted_small - c.width_small).abs(),
                if c.pass { "PASS" } else { "FAIL" }
            )?;
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        write!(f, "{passed}/{} within +/-{}", self.checks.len(), self.tolerance)
    }
}

/// Checks that confidence-set widths scale as `sqrt((N₁ - 1) / (N₂ - 1))`
/// between the largest and smallest N of each condition, within `tolerance`.
pub fn table_check(table: &StudyTable, tolerance: f64) -> ConsistencyReport {
    let mut conditions: Vec<&str> = Vec::new();
    for r in &table.rows {
        if !conditions.contains(&r.condition.as_str()) {
            conditions.push(&r.condition);
        }
    }
    let mut checks = Vec::new();
    for cond in conditions {
        let rows: Vec<&TableRow> = table.rows.iter().filter(|r| r.condition == cond).collect();
        let large = rows.iter().max_by_key(|r| r.n).unwrap();
        let small = rows.iter().min_by_key(|r| r.n).unwrap();
        if large.n == small.n {
            continue;
        }
        let ratio = ((large.n - 1) as f64 / (small.n - 1) as f64).sqrt();
        for (axis, col) in [("major", "cs_major_mean"), ("minor", "cs_minor_mean")] {
            let (Some(wl), Some(ws)) = (table.value(large, col), table.value(small, col)) else { continue };
            let predicted = wl * ratio;
            checks.push(ConsistencyCheck {
                condition: cond.to_string(),
                axis,
                n_large: large.n,
                n_small: small.n,
                width_large: wl,
                width_small: ws,
                predicted_small: predicted,
                pass: (predicted - ws).abs() <= tolerance,
            });
        }
    }
    ConsistencyReport { tolerance, checks }
}
