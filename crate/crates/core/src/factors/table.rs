use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use super::buckets::SnrPair;
use super::design::SKIN_TYPE_DUMMIES;
use super::{DesignMatrix, FactorError};

/// A per-chunk metrics table read back from CSV, addressed by column name.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTable {
    headers: Vec<String>,
    index: HashMap<String, usize>,
    rows: Vec<Vec<String>>,
}

fn parse_cell(column: &str, cell: &str) -> Result<Option<f64>, FactorError> {
    match cell.trim() {
        "" => Ok(None),
        "true" => Ok(Some(1.0)),
        "false" => Ok(Some(0.0)),
        s => s.parse::<f64>().map(Some).map_err(|_| FactorError::BadCell {
            column: column.to_string(),
            value: s.to_string(),
        }),
    }
}

impl MetricsTable {
    pub fn read(path: impl AsRef<Path>) -> Result<Self, FactorError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| FactorError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, FactorError> {
        let mut r = csv::Reader::from_reader(reader);
        let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let index = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.clone(), i))
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            headers,
            index,
            rows,
        })
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn col_index(&self, name: &str) -> Result<usize, FactorError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| FactorError::UnknownColumn(name.to_string()))
    }

    /// Numeric view of a column; empty cells are `None`, booleans map to 0/1.
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>, FactorError> {
        let j = self.col_index(name)?;
        self.rows.iter().map(|row| parse_cell(name, &row[j])).collect()
    }

    /// Rows whose `column` equals `value` exactly.
    pub fn filter_eq(&self, column: &str, value: &str) -> Result<Self, FactorError> {
        let j = self.col_index(column)?;
        Ok(Self {
            headers: self.headers.clone(),
            index: self.index.clone(),
            rows: self.rows.iter().filter(|r| r[j] == value).cloned().collect(),
        })
    }

    /// Expands `skin_type` into its dummy columns; other names pass through.
    fn expand_factors(&self, factors: &[String]) -> Result<Vec<String>, FactorError> {
        let mut out = Vec::new();
        for f in factors {
            if f != "skin_type" {
                out.push(f.clone());
                continue;
            }
            for d in SKIN_TYPE_DUMMIES {
                let present = self.column(d)?.iter().any(|v| v.is_some_and(|v| v != 0.0));
                if present {
                    out.push(d.to_string());
                } else {
                    log::warn!("dropping {d}: no observations at that level");
                }
            }
        }
        Ok(out)
    }

    /// Design (with intercept) and response over rows where every requested
    /// value is present.
    pub fn regression_inputs(
        &self,
        target: &str,
        factors: &[String],
    ) -> Result<(DesignMatrix, Vec<f64>), FactorError> {
        let names = self.expand_factors(factors)?;
        let y = self.column(target)?;
        let cols = names
            .iter()
            .map(|n| self.column(n))
            .collect::<Result<Vec<_>, _>>()?;
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| y[i].is_some() && cols.iter().all(|c| c[i].is_some()))
            .collect();
        if keep.len() < self.len() {
            log::info!("{} rows skipped for missing values", self.len() - keep.len());
        }
        let pick = |c: &[Option<f64>]| keep.iter().map(|&i| c[i].expect("kept")).collect();
        let regressors = names
            .into_iter()
            .zip(&cols)
            .map(|(n, c)| (n, pick(c)))
            .collect();
        let design = if factors.is_empty() {
            DesignMatrix::intercept_only(keep.len())?
        } else {
            DesignMatrix::with_intercept(regressors)?
        };
        Ok((design, pick(&y)))
    }

    /// (factor value, SNRs) for every row with a factor value and a pulse SNR.
    pub fn bucket_observations(&self, factor: &str) -> Result<Vec<(f64, SnrPair)>, FactorError> {
        let f = self.column(factor)?;
        let pulse = self.column("pulse_snr")?;
        let resp = self.column("resp_snr")?;
        Ok((0..self.len())
            .filter_map(|i| {
                Some((
                    f[i]?,
                    SnrPair {
                        pulse: pulse[i]?,
                        resp: resp[i],
                    },
                ))
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "\
chunk,method,pulse_snr,resp_snr,movement,gender_male,skin_type_2,skin_type_3,skin_type_4,skin_type_5,skin_type_6
a,POS,3.5,,0.1,true,1,0,0,0,0
b,POS,2.0,1.0,0.4,false,0,1,0,0,0
c,G,1.0,0.5,0.2,true,0,0,0,0,0
d,POS,0.5,,0.9,false,0,0,0,0,0
e,POS,1.5,2.0,0.6,true,1,0,0,0,0
";

    fn table() -> MetricsTable {
        MetricsTable::from_reader(CSV.as_bytes()).unwrap()
    }

    #[test]
    fn columns_parse_bools_and_blanks() {
        let t = table();
        assert_eq!(t.column("gender_male").unwrap()[0], Some(1.0));
        assert_eq!(t.column("resp_snr").unwrap()[0], None);
        assert!(matches!(t.column("nope"), Err(FactorError::UnknownColumn(_))));
    }

    #[test]
    fn method_filter_and_skin_expansion() {
        let t = table().filter_eq("method", "POS").unwrap();
        assert_eq!(t.len(), 4);
        let (d, y) = t
            .regression_inputs("pulse_snr", &["skin_type".to_string()])
            .unwrap();
        assert_eq!(d.names(), &["intercept", "skin_type_2", "skin_type_3"]);
        assert_eq!(y, vec![3.5, 2.0, 0.5, 1.5]);
    }

    #[test]
    fn missing_target_rows_dropped() {
        let t = table();
        let (d, y) = t.regression_inputs("resp_snr", &["movement".to_string()]).unwrap();
        assert_eq!(d.n_obs(), 3);
        assert_eq!(y, vec![1.0, 0.5, 2.0]);
    }

    #[test]
    fn duplicate_factor_names_both() {
        let t = table();
        let err = t
            .regression_inputs("pulse_snr", &["movement".into(), "movement".into()])
            .unwrap_err();
        let msg = err.to_string();
        assert_eq!(msg.matches("movement").count(), 2, "{msg}");
    }

    #[test]
    fn bucket_rows() {
        let obs = table().bucket_observations("movement").unwrap();
        assert_eq!(obs.len(), 5);
        assert_eq!(obs[1].1.resp, Some(1.0));
    }
}
