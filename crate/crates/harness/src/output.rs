//! CSV emission and parse-back of replication records.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::scenario::{CellSummary, KakutaniRow, ReplicationRecord};

pub const CSV_HEADER: [&str; 10] = [
    "scenario",
    "n",
    "rep",
    "seed",
    "s_hat",
    "sigma2_hat",
    "boundary",
    "cond_min",
    "cond_max",
    "ms_elapsed",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed record on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no records to write")]
    Empty,
}

/// 17 significant digits: enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_records<W: Write>(records: &[ReplicationRecord], out: W) -> Result<(), OutputError> {
    if records.is_empty() {
        return Err(OutputError::Empty);
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.scenario.clone(),
            r.n.to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            fmt_f64(r.s_hat),
            fmt_f64(r.sigma2_hat),
            r.boundary.to_string(),
            fmt_f64(r.cond_min),
            fmt_f64(r.cond_max),
            fmt_f64(r.ms_elapsed),
        ])?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: "<stream>".into(),
        source,
    })?;
    Ok(())
}

pub fn emit_csv(records: &[ReplicationRecord], path: &Path) -> Result<(), OutputError> {
    let file = std::fs::File::create(path).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_records(records, std::io::BufWriter::new(file))
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<ReplicationRecord>, OutputError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(OutputError::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |field: &str| OutputError::Parse {
            line,
            message: format!("cannot parse field '{field}'"),
        };
        let f = |k: usize| -> Result<f64, OutputError> { row[k].parse::<f64>().map_err(|_| bad(CSV_HEADER[k])) };
        out.push(ReplicationRecord {
            scenario: row[0].to_string(),
            n: row[1].parse().map_err(|_| bad("n"))?,
            rep: row[2].parse().map_err(|_| bad("rep"))?,
            seed: row[3].parse().map_err(|_| bad("seed"))?,
            s_hat: f(4)?,
            sigma2_hat: f(5)?,
            boundary: row[6].parse().map_err(|_| bad("boundary"))?,
            cond_min: f(7)?,
            cond_max: f(8)?,
            ms_elapsed: f(9)?,
        });
    }
    Ok(out)
}

pub fn parse_csv(path: &Path) -> Result<Vec<ReplicationRecord>, OutputError> {
    let file = std::fs::File::open(path).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_records(file)
}

pub fn write_summary<W: Write>(cells: &[CellSummary], out: W) -> Result<(), OutputError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record([
        "scenario", "n", "count", "failures", "boundary_hits", "median", "mean", "iqr", "bias", "sigma2_mean",
        "sigma2_variance",
    ])?;
    for c in cells {
        w.write_record([
            c.scenario.clone(),
            c.n.to_string(),
            c.count.to_string(),
            c.failures.to_string(),
            c.boundary_hits.to_string(),
            fmt_f64(c.median),
            fmt_f64(c.mean),
            fmt_f64(c.iqr),
            fmt_f64(c.bias),
            fmt_f64(c.sigma2_mean),
            fmt_f64(c.sigma2_variance),
        ])?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: "<stream>".into(),
        source,
    })?;
    Ok(())
}

pub fn write_kakutani<W: Write>(rows: &[KakutaniRow], out: W) -> Result<(), OutputError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["d", "regime", "analytic", "empirical", "tail_slope", "partial_sum", "extrapolated_tail", "rule"])?;
    for r in rows {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        w.write_record([
            r.dim.to_string(),
            r.regime.to_string(),
            r.analytic.to_string(),
            r.empirical.to_string(),
            opt(r.tail_slope),
            fmt_f64(r.partial_sum),
            opt(r.extrapolated_tail),
            r.rule.clone(),
        ])?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: "<stream>".into(),
        source,
    })?;
    Ok(())
}
