//! CSV forms of result records and rate tables. Reals carry 17 significant
//! digits so they read back bit for bit; missing values are `NA`.

use super::report::RateRow;
use super::run::ResultRecord;
use crate::error::{Error, Result};
use std::io::{Read, Write};

pub const RECORD_HEADER: [&str; 11] = [
    "scenario",
    "estimator",
    "n",
    "d",
    "epsilon",
    "q",
    "sigma",
    "rep",
    "seed",
    "sq_error",
    "runtime_ms",
];

pub const RATE_HEADER: [&str; 11] = [
    "scenario",
    "estimator",
    "d",
    "epsilon",
    "q",
    "sigma",
    "n",
    "reps",
    "failures",
    "quantile",
    "slope",
];

/// Written in place of a field a rate table pooled over.
pub const POOLED: &str = "all";

/// `x` with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), fmt_real)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

pub fn write_records<W: Write>(w: W, records: &[ResultRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RECORD_HEADER).map_err(csv_err)?;
    for r in records {
        out.write_record([
            r.scenario.clone(),
            r.estimator.clone(),
            r.n.to_string(),
            r.d.to_string(),
            fmt_real(r.epsilon),
            fmt_real(r.q),
            fmt_real(r.sigma),
            r.rep.to_string(),
            r.seed.to_string(),
            fmt_opt(r.sq_error),
            fmt_opt(r.runtime_ms),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| {
        Error::Parse(format!(
            "line {line}: bad {} value {raw:?}",
            RECORD_HEADER[i]
        ))
    })
}

fn opt_field(rec: &csv::StringRecord, i: usize, line: u64) -> Result<Option<f64>> {
    if rec.get(i) == Some("NA") {
        Ok(None)
    } else {
        field(rec, i, line).map(Some)
    }
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<ResultRecord>> {
    let mut input = csv::Reader::from_reader(r);
    let header = input.headers().map_err(csv_err)?.clone();
    if header.iter().ne(RECORD_HEADER) {
        return Err(Error::Parse(format!(
            "expected header {}, got {}",
            RECORD_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for rec in input.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push(ResultRecord {
            scenario: field(&rec, 0, line)?,
            estimator: field(&rec, 1, line)?,
            n: field(&rec, 2, line)?,
            d: field(&rec, 3, line)?,
            epsilon: field(&rec, 4, line)?,
            q: field(&rec, 5, line)?,
            sigma: field(&rec, 6, line)?,
            rep: field(&rec, 7, line)?,
            seed: field(&rec, 8, line)?,
            sq_error: opt_field(&rec, 9, line)?,
            runtime_ms: opt_field(&rec, 10, line)?,
        });
    }
    Ok(out)
}

pub fn write_rate_table<W: Write>(w: W, rows: &[RateRow]) -> Result<()> {
    let pooled = |s: Option<String>| s.unwrap_or_else(|| POOLED.to_string());
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RATE_HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            pooled(r.scenario.clone()),
            r.estimator.clone(),
            pooled(r.d.map(|d| d.to_string())),
            pooled(r.epsilon.map(fmt_real)),
            pooled(r.q.map(fmt_real)),
            pooled(r.sigma.map(fmt_real)),
            r.n.to_string(),
            r.reps.to_string(),
            r.failures.to_string(),
            fmt_opt(r.quantile),
            fmt_opt(r.slope),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<ResultRecord> {
        vec![
            ResultRecord {
                scenario: "mcar".into(),
                estimator: "observed_mean".into(),
                n: 100,
                d: 1,
                epsilon: 0.3,
                q: 0.5,
                sigma: 1.0,
                rep: 0,
                seed: u64::MAX,
                sq_error: Some(0.1 + 0.2),
                runtime_ms: None,
            },
            ResultRecord {
                scenario: "mcar".into(),
                estimator: "observed_mean".into(),
                n: 100,
                d: 1,
                epsilon: 0.3,
                q: 0.5,
                sigma: 1.0,
                rep: 1,
                seed: 7,
                sq_error: None,
                runtime_ms: Some(1.5),
            },
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let mut buf = Vec::new();
        write_records(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text
            .starts_with("scenario,estimator,n,d,epsilon,q,sigma,rep,seed,sq_error,runtime_ms\n"));
        assert!(text.contains(",3.0000000000000004e-1,NA\n"), "{text}");
        assert!(text.contains(",NA,1.5000000000000000e0\n"));
        assert_eq!(read_records(buf.as_slice()).unwrap(), sample());
    }

    #[test]
    fn wrong_header_is_a_parse_error() {
        let err = read_records("a,b\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        let bad = "scenario,estimator,n,d,epsilon,q,sigma,rep,seed,sq_error,runtime_ms\nx,y,ten,1,0,1,1,0,0,NA,NA\n";
        assert!(read_records(bad.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("bad n"));
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_real(1.0 / 3.0), "3.3333333333333331e-1");
        let x = 0.1f64 + 0.7;
        assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
    }
}
