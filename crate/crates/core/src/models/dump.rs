//! Plain-text dataset dumps: a `# d=<d> model=<name> seed=<u64>` header and
//! one TAB-separated row per observation, with `NA` for ⋆. Regression dumps
//! carry `d` covariates followed by the response.

use crate::error::{Error, Result};
use crate::types::{ExtendedValue, ExtendedVector};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub d: usize,
    pub model: String,
    pub seed: u64,
    pub rows: Vec<Vec<ExtendedValue>>,
}

impl Dataset {
    pub fn from_vectors(model: &str, seed: u64, rows: &[ExtendedVector]) -> Result<Self> {
        let d = rows.first().map_or(1, |r| r.dim());
        Ok(Self {
            d,
            model: model.to_string(),
            seed,
            rows: rows.iter().map(|r| r.coords().to_vec()).collect(),
        })
    }

    pub fn from_regression(
        model: &str,
        seed: u64,
        x: &[Vec<f64>],
        z: &[ExtendedValue],
    ) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: z.len(),
            });
        }
        let d = x.first().map_or(1, |r| r.len());
        let rows = x
            .iter()
            .zip(z)
            .map(|(row, &y)| {
                let mut out: Vec<ExtendedValue> =
                    row.iter().map(|&v| ExtendedValue::Observed(v)).collect();
                out.push(y);
                out
            })
            .collect();
        Ok(Self {
            d,
            model: model.to_string(),
            seed,
            rows,
        })
    }

    /// True when rows hold `d` covariates plus a response.
    pub fn is_regression(&self) -> bool {
        self.rows.first().is_some_and(|r| r.len() == self.d + 1)
    }

    pub fn vectors(&self) -> Result<Vec<ExtendedVector>> {
        self.rows
            .iter()
            .map(|r| {
                if r.len() != self.d {
                    return Err(Error::Dimension {
                        expected: self.d,
                        got: r.len(),
                    });
                }
                ExtendedVector::new(r.clone())
            })
            .collect()
    }

    /// `(X, Z)` for a regression dump; covariates must be observed.
    pub fn regression(&self) -> Result<(Vec<Vec<f64>>, Vec<ExtendedValue>)> {
        let mut x = Vec::with_capacity(self.rows.len());
        let mut z = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            if r.len() != self.d + 1 {
                return Err(Error::Dimension {
                    expected: self.d + 1,
                    got: r.len(),
                });
            }
            let row: Option<Vec<f64>> = r[..self.d].iter().map(|v| v.value()).collect();
            x.push(row.ok_or_else(|| Error::Parse("missing covariate in regression dump".into()))?);
            z.push(r[self.d]);
        }
        Ok((x, z))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# d={} model={} seed={}", self.d, self.model, self.seed)?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push('\t');
                }
                match v {
                    ExtendedValue::Observed(x) => line.push_str(&x.to_string()),
                    ExtendedValue::Missing => line.push_str("NA"),
                }
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dataset file".into()))??;
        let (d, model, seed) = parse_header(&header)?;
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split('\t')
                .map(|tok| match tok.trim() {
                    "NA" => Ok(ExtendedValue::Missing),
                    s => s
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("line {}: bad value {s:?}", k + 2)))
                        .and_then(|x| {
                            ExtendedValue::observed(x)
                                .map_err(|_| Error::Parse(format!("line {}: non-finite", k + 2)))
                        }),
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != d && row.len() != d + 1 {
                return Err(Error::Parse(format!(
                    "line {}: {} fields for d = {d}",
                    k + 2,
                    row.len()
                )));
            }
            if let Some(first) = rows.first() {
                let first: &Vec<ExtendedValue> = first;
                if first.len() != row.len() {
                    return Err(Error::Parse(format!("line {}: ragged row", k + 2)));
                }
            }
            rows.push(row);
        }
        Ok(Self {
            d,
            model,
            seed,
            rows,
        })
    }
}

fn parse_header(h: &str) -> Result<(usize, String, u64)> {
    let body = h
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("missing '#' header".into()))?;
    let (mut d, mut model, mut seed) = (None, None, None);
    for field in body.split_whitespace() {
        match field.split_once('=') {
            Some(("d", v)) => d = v.parse::<usize>().ok(),
            Some(("model", v)) => model = Some(v.to_string()),
            Some(("seed", v)) => seed = v.parse::<u64>().ok(),
            _ => return Err(Error::Parse(format!("unexpected header field {field:?}"))),
        }
    }
    match (d, model, seed) {
        (Some(d), Some(m), Some(s)) if d >= 1 => Ok((d, m, s)),
        _ => Err(Error::Parse(format!("malformed header {h:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let rows = vec![
            ExtendedVector::new(vec![ExtendedValue::Observed(0.1), ExtendedValue::Missing])
                .unwrap(),
            ExtendedVector::from_reals(&[-1.0e-300, 1.0 / 3.0]).unwrap(),
        ];
        let ds = Dataset::from_vectors("mcar", 42, &rows).unwrap();
        let mut buf = Vec::new();
        ds.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# d=2 model=mcar seed=42\n0.1\tNA\n"));
        let back = Dataset::read(&buf[..]).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.vectors().unwrap(), rows);
    }

    #[test]
    fn regression_round_trip() {
        let x = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let z = vec![ExtendedValue::Missing, ExtendedValue::Observed(5.5)];
        let ds = Dataset::from_regression("reg", 1, &x, &z).unwrap();
        let mut buf = Vec::new();
        ds.write(&mut buf).unwrap();
        let back = Dataset::read(&buf[..]).unwrap();
        assert!(back.is_regression());
        assert_eq!(back.regression().unwrap(), (x, z));
    }

    #[test]
    fn malformed_inputs() {
        assert!(Dataset::read(&b""[..]).is_err());
        assert!(Dataset::read(&b"d=1 model=x seed=1\n"[..]).is_err());
        assert!(Dataset::read(&b"# d=1 model=x seed=1\nabc\n"[..]).is_err());
        assert!(Dataset::read(&b"# d=1 model=x seed=1\nNaN\n"[..]).is_err());
        assert!(Dataset::read(&b"# d=2 model=x seed=1\n1\t2\n1\t2\t3\n"[..]).is_err());
    }
}
