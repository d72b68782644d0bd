use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::records::ExperimentRecord;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;

pub const COLUMNS: [&str; 7] = ["Method", "Acc_t", "Acc_r", "Acc_f", "ZRF", "MIA", "Time"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

/// One table row. `time_seconds` is `None` for rows without a meaningful
/// unlearning time (the baseline), rendered as `-`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub acc_t: f64,
    pub acc_r: f64,
    pub acc_f: f64,
    pub zrf: f64,
    pub mia: f64,
    pub time_seconds: Option<f64>,
}

impl ReportRow {
    pub fn new(method: impl Into<String>, m: &MetricsReport, time: Option<f64>) -> Self {
        Self { method: method.into(), acc_t: m.acc_t, acc_r: m.acc_r, acc_f: m.acc_f, zrf: m.zrf, mia: m.mia, time_seconds: time }
    }

    pub fn from_record(r: &ExperimentRecord) -> Self {
        Self::new(r.config.row_label(), &r.report, Some(r.report.time_seconds))
    }

    pub fn baseline(r: &ExperimentRecord) -> Self {
        Self::new("Baseline", &r.baseline_report, None)
    }

    fn cells(&self) -> [String; 7] {
        [
            self.method.clone(),
            format!("{:.2}", self.acc_t),
            format!("{:.2}", self.acc_r),
            format!("{:.2}", self.acc_f),
            format!("{:.4}", self.zrf),
            format!("{:.4}", self.mia),
            self.time_seconds.map_or_else(|| "-".to_string(), |t| format!("{t:.0}")),
        ]
    }

    /// The row as it reads back from a rendered table.
    pub fn rounded(&self) -> Self {
        let round = |v: f64, places: i32| {
            let s = format!("{v:.*}", places as usize);
            s.parse().unwrap_or(v)
        };
        Self {
            method: self.method.clone(),
            acc_t: round(self.acc_t, 2),
            acc_r: round(self.acc_r, 2),
            acc_f: round(self.acc_f, 2),
            zrf: round(self.zrf, 4),
            mia: round(self.mia, 4),
            time_seconds: self.time_seconds.map(|t| round(t, 0)),
        }
    }
}

/// One row per record, in order.
pub fn emit_report(records: &[ExperimentRecord], format: ReportFormat) -> Result<String> {
    let rows: Vec<ReportRow> = records.iter().map(ReportRow::from_record).collect();
    render_rows(&rows, format)
}

/// Rows for a results table: each distinct baseline once, ahead of the
/// records that share it.
pub fn rows_with_baselines(records: &[ExperimentRecord]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    let mut seen: Vec<(&str, &crate::harness::ExperimentConfig)> = Vec::new();
    for r in records {
        let same = |(key, cfg): &(&str, &crate::harness::ExperimentConfig)| {
            *key == r.baseline_key && cfg.scenario == r.config.scenario && cfg.metric_seed == r.config.metric_seed
        };
        if !seen.iter().any(same) {
            seen.push((&r.baseline_key, &r.config));
            rows.push(ReportRow::baseline(r));
        }
        rows.push(ReportRow::from_record(r));
    }
    rows
}

pub fn render_rows(rows: &[ReportRow], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(out, "| {} |", COLUMNS.join(" | "));
            let _ = writeln!(out, "|---|{}", "---:|".repeat(COLUMNS.len() - 1));
            for row in rows {
                let cells = row.cells().map(|c| c.replace('|', "\\|"));
                let _ = writeln!(out, "| {} |", cells.join(" | "));
            }
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(COLUMNS)?;
            for row in rows {
                w.write_record(row.cells())?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
        }
    }
}

/// Reads a table written by [`render_rows`] in csv format.
pub fn parse_csv_report(text: &str) -> Result<Vec<ReportRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != COLUMNS {
        return Err(Error::invalid(format!("unexpected report header {header:?}")));
    }
    let num = |s: &str, col: &str| -> Result<f64> {
        s.parse().map_err(|_| Error::invalid(format!("column {col}: `{s}` is not a number")))
    };
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let time = match &rec[6] {
            "-" => None,
            s => Some(num(s, "Time")?),
        };
        rows.push(ReportRow {
            method: rec[0].to_string(),
            acc_t: num(&rec[1], "Acc_t")?,
            acc_r: num(&rec[2], "Acc_r")?,
            acc_f: num(&rec[3], "Acc_f")?,
            zrf: num(&rec[4], "ZRF")?,
            mia: num(&rec[5], "MIA")?,
            time_seconds: time,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str) -> ReportRow {
        let m = MetricsReport { acc_t: 96.789, acc_r: 97.8251, acc_f: 0.0, zrf: 0.99886, mia: 0.00004, time_seconds: 187.4 };
        ReportRow::new(name, &m, Some(m.time_seconds))
    }

    #[test]
    fn header_only_when_empty() {
        assert_eq!(emit_report(&[], ReportFormat::Csv).unwrap(), "Method,Acc_t,Acc_r,Acc_f,ZRF,MIA,Time\n");
        let md = emit_report(&[], ReportFormat::Markdown).unwrap();
        assert_eq!(md.lines().count(), 2);
        assert!(md.starts_with("| Method | Acc_t | Acc_r | Acc_f | ZRF | MIA | Time |"));
    }

    #[test]
    fn precision_per_column() {
        let md = render_rows(&[row("Incompetent Teacher")], ReportFormat::Markdown).unwrap();
        assert_eq!(md.lines().nth(2).unwrap(), "| Incompetent Teacher | 96.79 | 97.83 | 0.00 | 0.9989 | 0.0000 | 187 |");
        let base = MetricsReport { acc_t: 100.0, acc_r: 100.0, acc_f: 100.0, zrf: 0.5, mia: 0.9, time_seconds: 0.0 };
        let csv = render_rows(&[ReportRow::new("Baseline", &base, None)], ReportFormat::Csv).unwrap();
        assert_eq!(csv.lines().nth(1).unwrap(), "Baseline,100.00,100.00,100.00,0.5000,0.9000,-");
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row("SSD"), row("Name, with comma"), ReportRow { time_seconds: None, ..row("Baseline") }];
        let text = render_rows(&rows, ReportFormat::Csv).unwrap();
        let back = parse_csv_report(&text).unwrap();
        assert_eq!(back, rows.iter().map(ReportRow::rounded).collect::<Vec<_>>());
        assert_eq!(render_rows(&back, ReportFormat::Csv).unwrap(), text);
    }

    #[test]
    fn unknown_format() {
        assert_eq!("CSV".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert!(matches!("latex".parse::<ReportFormat>(), Err(Error::UnknownFormat(_))));
    }
}
