//! CSV, JSON and plain-table rendering of [`SweepRow`]s.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::{Command, OutputFormat};
use crate::error::CliError;
use crate::row::SweepRow;

pub const CSV_COLUMNS: [&str; 10] = [
    "n",
    "r",
    "u",
    "quantity",
    "exact_log",
    "estimate_log",
    "regime",
    "ratio",
    "bound",
    "status",
];

pub const JSON_FORMAT: &str = "cycle-density-rows";
pub const JSON_VERSION: u32 = 1;

/// Top-level JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowsDocument {
    pub format: String,
    pub version: u32,
    pub command: Command,
    pub rows: Vec<SweepRow>,
}

impl RowsDocument {
    pub fn new(command: Command, rows: Vec<SweepRow>) -> Self {
        Self {
            format: JSON_FORMAT.to_string(),
            version: JSON_VERSION,
            command,
            rows,
        }
    }

    /// Parses a document and checks its format tag and version.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: RowsDocument = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("bad rows document: {e}")))?;
        if doc.format != JSON_FORMAT || doc.version != JSON_VERSION {
            return Err(CliError::Usage(format!(
                "unsupported rows document {} v{}",
                doc.format, doc.version
            )));
        }
        Ok(doc)
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

fn csv_fields(row: &SweepRow) -> [String; 10] {
    [
        row.n.to_string(),
        row.r.to_string(),
        fmt17(row.u),
        row.quantity.name().to_string(),
        opt17(row.exact_log),
        opt17(row.estimate_log),
        row.regime.clone().unwrap_or_default(),
        opt17(row.ratio),
        opt17(row.bound),
        row.status.clone(),
    ]
}

pub fn write_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for row in rows {
        w.write_record(csv_fields(row)).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(
    mut out: W,
    command: Command,
    rows: &[SweepRow],
) -> Result<(), CliError> {
    let doc = RowsDocument::new(command, rows.to_vec());
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| CliError::Io(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

fn short(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into())
}

/// Aligned columns for reading at a terminal; exact fractions are shown
/// when available.
pub fn write_table<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut cells: Vec<Vec<String>> = vec![[
        "n",
        "r",
        "u",
        "quantity",
        "exact",
        "exact_log",
        "estimate_log",
        "regime",
        "ratio",
        "bound",
        "status",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()];
    for row in rows {
        let exact = match (&row.exact_rational, row.exact) {
            (Some(q), _) => q.clone(),
            (None, v) => short(v),
        };
        cells.push(vec![
            row.n.to_string(),
            row.r.to_string(),
            format!("{:.6}", row.u),
            row.quantity.name().to_string(),
            exact,
            short(row.exact_log),
            short(row.estimate_log),
            row.regime.clone().unwrap_or_else(|| "-".into()),
            short(row.ratio),
            short(row.bound),
            row.status.clone(),
        ]);
    }
    let widths: Vec<usize> = (0..cells[0].len())
        .map(|c| {
            cells
                .iter()
                .map(|r| r[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    for line in &cells {
        let padded: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(s, &w)| format!("{s:<w$}"))
            .collect();
        writeln!(out, "{}", padded.join("  ").trim_end())?;
    }
    Ok(())
}

pub fn render(
    format: OutputFormat,
    command: Command,
    rows: &[SweepRow],
) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(&mut buf, rows)?,
        OutputFormat::Json => write_json(&mut buf, command, rows)?,
        OutputFormat::Table => write_table(&mut buf, rows)?,
    }
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::QuantityArg;
    use crate::row::{compute_row, RowSettings};
    use cycle_density::{Backend, SpecialGrids};

    fn rows() -> Vec<SweepRow> {
        let g = SpecialGrids::shared();
        let s = RowSettings {
            command: Command::Sweep,
            quantity: QuantityArg::Nu,
            backend: Backend::Float64,
            tol: 1e-12,
            require_exact: false,
        };
        [(100, 3), (1000, 500), (20_000_000, 4000)]
            .iter()
            .map(|&(n, r)| compute_row(n, r, &s, g).unwrap())
            .collect()
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mant = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mant.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn csv_schema_and_nulls() {
        let text =
            String::from_utf8(render(OutputFormat::Csv, Command::Sweep, &rows()).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "n,r,u,quantity,exact_log,estimate_log,regime,ratio,bound,status"
        );
        assert_eq!(lines.len(), 4);
        // above the exact ceiling: empty exact_log and ratio, explicit status
        let last: Vec<&str> = lines[3].split(',').collect();
        assert_eq!(last.len(), 10);
        assert_eq!((last[4], last[7], last[9]), ("", "", "no_exact"));
        assert!(!text.contains("NaN") && !text.contains("inf"));
    }

    #[test]
    fn json_round_trip() {
        let rows = rows();
        let bytes = render(OutputFormat::Json, Command::Sweep, &rows).unwrap();
        let doc = RowsDocument::from_json(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert_eq!(doc.rows, rows);
        assert_eq!(doc.command, Command::Sweep);
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert!(v["rows"][2]["exact_log"].is_null());
        let tampered = String::from_utf8(bytes)
            .unwrap()
            .replace("\"version\": 1", "\"version\": 9");
        assert!(RowsDocument::from_json(&tampered).is_err());
    }

    #[test]
    fn table_is_aligned() {
        let text = String::from_utf8(render(OutputFormat::Table, Command::Sweep, &rows()).unwrap())
            .unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let col = lines[0].find("quantity").unwrap();
        assert!(lines[1..].iter().all(|l| &l[col..col + 2] == "nu"));
    }
}
