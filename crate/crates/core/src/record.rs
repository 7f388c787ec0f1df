//! Result records and their CSV / JSON-lines encodings.
//!
//! Both encodings share one flat field list, in this order:
//!
//! | field | meaning |
//! |---|---|
//! | `name` | experiment name from the config |
//! | `quantity` | what was measured, e.g. `moment(2,2)` or `count` |
//! | `kind` | `rademacher`, `steinhaus`, `fekete`, `liouville`, a system name, or empty |
//! | `n`, `j`, `k` | parameters (empty when not applicable) |
//! | `constrained` | whether the sum constraint applied (counts only) |
//! | `trials`, `grid` | sample count and grid size |
//! | `value_re`, `value_im` | the measured value, split into parts |
//! | `stderr` | standard error, for statistical records |
//! | `expected` | the value it was compared against |
//! | `total`, `diagonal`, `offdiagonal` | exact integer counts, as decimal strings |
//! | `method` | how the value was computed |
//! | `status` | see [`Status`] |
//! | `seed` | master seed |
//! | `detail` | free-form note |
//! | `timestamp` | seconds since the Unix epoch |
//!
//! `timestamp` is the only field that differs between two runs of the same
//! config.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Exact integer count or identity that held.
    Exact,
    StatisticalPass,
    /// Passed a check that cannot fail rigorously at finite size.
    StatisticalSoft,
    ReportOnly,
    /// Job exceeded a budget and was not run.
    Refused,
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Exact => "exact",
            Status::StatisticalPass => "statistical-pass",
            Status::StatisticalSoft => "statistical-soft",
            Status::ReportOnly => "report-only",
            Status::Refused => "refused",
            Status::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub name: String,
    pub quantity: String,
    pub kind: String,
    pub n: Option<u64>,
    pub j: Option<u32>,
    pub k: Option<u32>,
    pub constrained: Option<bool>,
    pub trials: Option<u64>,
    pub grid: Option<u64>,
    pub value_re: Option<f64>,
    pub value_im: Option<f64>,
    pub stderr: Option<f64>,
    pub expected: Option<f64>,
    pub total: Option<String>,
    pub diagonal: Option<String>,
    pub offdiagonal: Option<String>,
    pub method: String,
    pub status: Status,
    pub seed: Option<u64>,
    pub detail: String,
    pub timestamp: u64,
}

impl ResultRecord {
    pub fn new(name: &str, quantity: &str, status: Status) -> Self {
        Self {
            name: name.into(),
            quantity: quantity.into(),
            kind: String::new(),
            n: None,
            j: None,
            k: None,
            constrained: None,
            trials: None,
            grid: None,
            value_re: None,
            value_im: None,
            stderr: None,
            expected: None,
            total: None,
            diagonal: None,
            offdiagonal: None,
            method: String::new(),
            status,
            seed: None,
            detail: String::new(),
            timestamp: now(),
        }
    }

    pub fn is_hard_failure(&self) -> bool {
        self.status == Status::Fail
    }
}

fn now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Field names in output order.
pub const CSV_COLUMNS: [&str; 21] = [
    "name",
    "quantity",
    "kind",
    "n",
    "j",
    "k",
    "constrained",
    "trials",
    "grid",
    "value_re",
    "value_im",
    "stderr",
    "expected",
    "total",
    "diagonal",
    "offdiagonal",
    "method",
    "status",
    "seed",
    "detail",
    "timestamp",
];

pub fn write_csv<W: Write>(records: &[ResultRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(err)?;
    for r in records {
        w.serialize(r).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize()
        .map(|r| r.map_err(|e| Error::Malformed(e.to_string())))
        .collect()
}

pub fn write_jsonl<W: Write>(records: &[ResultRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Io(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// One record from one JSON line.
pub fn parse_record(line: &str) -> Result<ResultRecord> {
    serde_json::from_str(line).map_err(|e| Error::Malformed(e.to_string()))
}

/// Reads JSON lines, skipping blank lines.
pub fn parse_jsonl<R: BufRead>(input: R) -> Result<Vec<ResultRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_record(&line).map_err(|e| Error::Malformed(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultRecord {
        let mut r = ResultRecord::new("m", "moment(2,2)", Status::StatisticalPass);
        r.kind = "steinhaus".into();
        r.n = Some(16);
        r.j = Some(2);
        r.k = Some(2);
        r.value_re = Some(1.9375);
        r.value_im = Some(-0.0);
        r.stderr = Some(0.01);
        r.total = Some(u128::MAX.to_string());
        r.seed = Some(3);
        r.detail = "a, \"quoted\" note".into();
        r
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", CSV_COLUMNS.join(",")));
    }

    #[test]
    fn one_record_one_row() {
        let mut buf = Vec::new();
        write_csv(&[sample()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().contains("statistical-pass"));
        assert_eq!(read_csv(text.as_bytes()).unwrap(), vec![sample()]);
    }

    #[test]
    fn jsonl_round_trip() {
        let recs = vec![sample(), ResultRecord::new("x", "count", Status::Exact)];
        let mut buf = Vec::new();
        write_jsonl(&recs, &mut buf).unwrap();
        assert_eq!(parse_jsonl(buf.as_slice()).unwrap(), recs);
        let first: serde_json::Value = serde_json::from_slice(buf.split(|&b| b == b'\n').next().unwrap()).unwrap();
        let keys: Vec<&str> = first.as_object().unwrap().keys().map(String::as_str).collect();
        let mut expected = CSV_COLUMNS.to_vec();
        expected.sort();
        let mut keys = keys;
        keys.sort();
        assert_eq!(keys, expected);
    }

    #[test]
    fn malformed_lines_are_reported() {
        assert!(parse_jsonl("{\"name\":1}\n".as_bytes()).is_err());
        assert!(parse_record("not json").is_err());
    }
}
