//! CSV result tables: one row per measured configuration, a fixed column
//! order, and floats serialized with 17 significant digits so that parsing
//! a file back reproduces the rows exactly.

use std::path::Path;

use anyhow::{bail, Context, Result};

pub const COLUMNS: [&str; 13] = [
    "experiment",
    "p",
    "n_e",
    "alpha",
    "lambda",
    "method",
    "iterations",
    "setup_seconds",
    "run_seconds",
    "primary_muls",
    "condensed_muls",
    "max_error",
    "note",
];

/// One measured configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub p: usize,
    pub n_e: usize,
    pub alpha: f64,
    pub lambda: f64,
    /// Operator variant or solver configuration.
    pub method: String,
    pub iterations: Option<usize>,
    pub setup_seconds: f64,
    /// Mean apply time (operator benchmark) or total solve time.
    pub run_seconds: f64,
    pub primary_muls: u64,
    pub condensed_muls: u64,
    pub max_error: Option<f64>,
    pub note: String,
}

/// 17 significant digits — enough to round-trip any f64 exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn sanitize(s: &str) -> String {
    s.replace(',', ";")
}

pub fn rows_to_string(rows: &[ResultRow]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let fields = [
            sanitize(&r.experiment),
            r.p.to_string(),
            r.n_e.to_string(),
            fmt_float(r.alpha),
            fmt_float(r.lambda),
            sanitize(&r.method),
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            fmt_float(r.setup_seconds),
            fmt_float(r.run_seconds),
            r.primary_muls.to_string(),
            r.condensed_muls.to_string(),
            r.max_error.map(fmt_float).unwrap_or_default(),
            sanitize(&r.note),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    std::fs::write(path, rows_to_string(rows))
        .with_context(|| format!("writing results to {}", path.display()))
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    let header = lines.next().context("empty CSV")?;
    if header != COLUMNS.join(",") {
        bail!("unexpected CSV header: {header}");
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != COLUMNS.len() {
            bail!(
                "line {}: expected {} fields, got {}",
                lineno + 2,
                COLUMNS.len(),
                f.len()
            );
        }
        let opt_usize = |s: &str| -> Result<Option<usize>> {
            Ok(if s.is_empty() {
                None
            } else {
                Some(s.parse().with_context(|| format!("integer '{s}'"))?)
            })
        };
        let opt_f64 = |s: &str| -> Result<Option<f64>> {
            Ok(if s.is_empty() {
                None
            } else {
                Some(s.parse().with_context(|| format!("number '{s}'"))?)
            })
        };
        rows.push(ResultRow {
            experiment: f[0].to_string(),
            p: f[1].parse().context("p")?,
            n_e: f[2].parse().context("n_e")?,
            alpha: f[3].parse().context("alpha")?,
            lambda: f[4].parse().context("lambda")?,
            method: f[5].to_string(),
            iterations: opt_usize(f[6])?,
            setup_seconds: f[7].parse().context("setup_seconds")?,
            run_seconds: f[8].parse().context("run_seconds")?,
            primary_muls: f[9].parse().context("primary_muls")?,
            condensed_muls: f[10].parse().context("condensed_muls")?,
            max_error: opt_f64(f[11])?,
            note: f[12].to_string(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> ResultRow {
        ResultRow {
            experiment: "operator".into(),
            p: 7,
            n_e: 64,
            alpha: 1.5,
            lambda: std::f64::consts::PI,
            method: "tpc".into(),
            iterations: Some(42),
            setup_seconds: 0.012345678901234567,
            run_seconds: 1.0 / 3.0,
            primary_muls: 123456789,
            condensed_muls: 987654321,
            max_error: Some(3.3306690738754696e-16),
            note: String::new(),
        }
    }

    #[test]
    fn empty_rows_give_header_only() {
        let text = rows_to_string(&[]);
        assert_eq!(text, format!("{}\n", COLUMNS.join(",")));
        assert!(parse_csv(&text).unwrap().is_empty());
    }

    #[test]
    fn round_trip_is_exact() {
        let mut other = sample_row();
        other.iterations = None;
        other.max_error = None;
        other.note = "skipped: has, comma".into();
        let rows = vec![sample_row(), other];
        let parsed = parse_csv(&rows_to_string(&rows)).unwrap();
        assert_eq!(parsed.len(), 2);
        // floats must round-trip bit-exactly
        assert_eq!(parsed[0], rows[0]);
        assert_eq!(parsed[1].note, "skipped: has; comma");
        assert_eq!(parsed[1].iterations, None);
        assert_eq!(parsed[1].max_error, None);
    }

    #[test]
    fn column_order_is_fixed() {
        let text = rows_to_string(&[sample_row()]);
        let header = text.lines().next().unwrap();
        assert_eq!(
            header,
            "experiment,p,n_e,alpha,lambda,method,iterations,setup_seconds,\
             run_seconds,primary_muls,condensed_muls,max_error,note"
        );
        assert!(parse_csv("bogus,header\n1,2\n").is_err());
    }
}
