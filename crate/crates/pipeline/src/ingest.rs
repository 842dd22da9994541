//! Loading recorded multichannel data from CSV.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use csgi_core::TimeSeries;

use crate::error::{PipelineError, Result};

/// What to do with rows holding a sentinel value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentinelPolicy {
    /// Remove the whole row.
    #[default]
    Drop,
    /// Replace the value with the nearest bound of the column's valid values.
    Clip,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IngestOptions {
    /// Timestamp column; without one, samples are taken as unit-spaced.
    pub datetime_column: Option<String>,
    /// chrono format string. Without one, RFC 3339 and `%Y-%m-%d %H:%M:%S`
    /// are tried.
    pub datetime_format: Option<String>,
    pub sentinel_values: Vec<f64>,
    pub sentinel_policy: SentinelPolicy,
    /// Largest allowed |step − median step| in seconds. Defaults to one
    /// median step, which tolerates isolated dropped rows.
    pub gap_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// One series per numeric column, in file order.
    pub series: Vec<TimeSeries>,
    /// Sampling interval in seconds (1 without a timestamp column).
    pub dt: f64,
    pub rows_dropped: usize,
    pub values_clipped: usize,
}

impl Dataset {
    pub fn get(&self, name: &str) -> Option<&TimeSeries> {
        self.series.iter().find(|s| s.label() == name)
    }

    pub fn require(&self, name: &str) -> Result<&TimeSeries> {
        self.get(name)
            .ok_or_else(|| PipelineError::Data(format!("no numeric column named {name:?}")))
    }

    /// Header of series labels, one row per sample.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(self.series.iter().map(TimeSeries::label))?;
        let n = self.series.first().map_or(0, TimeSeries::len);
        for i in 0..n {
            wtr.write_record(self.series.iter().map(|s| s.values()[i].to_string()))?;
        }
        wtr.flush().map_err(|e| PipelineError::Data(e.to_string()))?;
        Ok(())
    }
}

fn parse_timestamp(s: &str, format: Option<&str>) -> Option<f64> {
    let s = s.trim();
    let naive = match format {
        Some(f) => NaiveDateTime::parse_from_str(s, f).ok()?,
        None => match DateTime::parse_from_rfc3339(s) {
            Ok(d) => d.naive_utc(),
            Err(_) => NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").ok()?,
        },
    };
    let t = naive.and_utc();
    Some(t.timestamp() as f64 + f64::from(t.timestamp_subsec_nanos()) * 1e-9)
}

/// Lower median, so the result is always one of the observed steps.
fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

pub fn ingest_csv(path: &Path, opts: &IngestOptions) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    ingest_reader(file, opts)
}

/// Row numbers in errors are file line numbers (the header is line 1).
pub fn ingest_reader<R: Read>(r: R, opts: &IngestOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let time_col = match &opts.datetime_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| PipelineError::Data(format!("datetime column {name:?} not found")))?,
        ),
        None => None,
    };
    let value_cols: Vec<usize> = (0..header.len()).filter(|&c| Some(c) != time_col).collect();
    // A column is numeric if its first value parses; later failures in a
    // numeric column are errors.
    let mut numeric: Option<Vec<usize>> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| PipelineError::Parse { row, message: e.to_string() })?;
        let cols = numeric.get_or_insert_with(|| {
            value_cols.iter().copied().filter(|&c| rec.get(c).is_some_and(|s| s.parse::<f64>().is_ok())).collect()
        });
        if columns.is_empty() {
            columns = vec![Vec::new(); cols.len()];
        }
        for (k, &c) in cols.iter().enumerate() {
            let cell = rec.get(c).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| PipelineError::Parse {
                row,
                message: format!("column {:?}: cannot parse {cell:?} as a number", header[c]),
            })?;
            if !v.is_finite() {
                return Err(PipelineError::Parse { row, message: format!("column {:?}: non-finite value", header[c]) });
            }
            columns[k].push(v);
        }
        if let Some(tc) = time_col {
            let cell = rec.get(tc).unwrap_or("");
            let t = parse_timestamp(cell, opts.datetime_format.as_deref()).ok_or_else(|| PipelineError::Parse {
                row,
                message: format!("cannot parse timestamp {cell:?}"),
            })?;
            times.push(t);
        }
        rows.push(row);
    }
    let cols = numeric.unwrap_or_default();
    if cols.is_empty() || rows.is_empty() {
        return Err(PipelineError::Data("no numeric data rows".into()));
    }

    let is_sentinel = |v: f64| opts.sentinel_values.contains(&v);
    let mut rows_dropped = 0;
    let mut values_clipped = 0;
    match opts.sentinel_policy {
        SentinelPolicy::Drop => {
            let keep: Vec<bool> = (0..rows.len()).map(|i| !columns.iter().any(|c| is_sentinel(c[i]))).collect();
            rows_dropped = keep.iter().filter(|k| !**k).count();
            let filter = |v: &[f64]| v.iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| *x).collect::<Vec<_>>();
            for c in columns.iter_mut() {
                *c = filter(c);
            }
            if !times.is_empty() {
                times = filter(&times);
            }
            let kept: Vec<usize> = rows.iter().zip(&keep).filter(|(_, k)| **k).map(|(r, _)| *r).collect();
            rows = kept;
        }
        SentinelPolicy::Clip => {
            for (k, c) in columns.iter_mut().enumerate() {
                let valid = c.iter().copied().filter(|v| !is_sentinel(*v));
                let (lo, hi) = valid.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                if lo > hi {
                    return Err(PipelineError::Data(format!(
                        "column {:?} holds only sentinel values",
                        header[cols[k]]
                    )));
                }
                for v in c.iter_mut().filter(|v| is_sentinel(**v)) {
                    *v = v.clamp(lo, hi);
                    values_clipped += 1;
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(PipelineError::Data("every row held a sentinel value".into()));
    }

    let dt = if times.is_empty() {
        1.0
    } else {
        check_sampling(&times, &rows, opts.gap_tolerance)?
    };
    let series = cols
        .iter()
        .zip(columns)
        .map(|(&c, v)| TimeSeries::new(v, dt, header[c].clone()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Dataset { series, dt, rows_dropped, values_clipped })
}

/// Median step, after checking every step is positive and within tolerance.
fn check_sampling(times: &[f64], rows: &[usize], tolerance: Option<f64>) -> Result<f64> {
    if times.len() < 2 {
        return Err(PipelineError::Data("need at least two timestamps to infer the sampling interval".into()));
    }
    let steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let dt = median(&mut steps.clone());
    let tol = tolerance.unwrap_or(dt);
    for (i, &s) in steps.iter().enumerate() {
        if s <= 0.0 || (s - dt).abs() > tol {
            return Err(PipelineError::NonUniformSampling { row: rows[i + 1], gap: s, tolerance: tol });
        }
    }
    if dt <= 0.0 {
        return Err(PipelineError::NonUniformSampling { row: rows[1], gap: dt, tolerance: tol });
    }
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> IngestOptions {
        IngestOptions {
            datetime_column: Some("Date Time".into()),
            datetime_format: Some("%d.%m.%Y %H:%M:%S".into()),
            sentinel_values: vec![-9999.0],
            ..Default::default()
        }
    }

    const TOY: &str = "\
Date Time,T (degC),wv (m/s)
01.01.2009 00:10:00,-8.02,1.03
01.01.2009 00:20:00,-8.41,0.72
01.01.2009 00:30:00,-8.51,0.19
01.01.2009 00:40:00,-8.31,0.34
";

    #[test]
    fn ten_minute_stamps() {
        let d = ingest_reader(TOY.as_bytes(), &opts()).unwrap();
        assert_eq!(d.dt, 600.0);
        assert_eq!(d.series.len(), 2);
        assert_eq!(d.get("T (degC)").unwrap().values(), &[-8.02, -8.41, -8.51, -8.31]);
        assert_eq!(d.get("wv (m/s)").unwrap().dt(), 600.0);
    }

    #[test]
    fn sentinel_row_dropped() {
        let text = TOY.replace("0.72", "-9999.00");
        let d = ingest_reader(text.as_bytes(), &opts()).unwrap();
        assert_eq!(d.series[0].len(), 3);
        assert_eq!(d.rows_dropped, 1);
        assert_eq!(d.dt, 600.0);
    }

    #[test]
    fn sentinel_clipped_to_column_range() {
        let text = TOY.replace("0.72", "-9999");
        let o = IngestOptions { sentinel_policy: SentinelPolicy::Clip, ..opts() };
        let d = ingest_reader(text.as_bytes(), &o).unwrap();
        assert_eq!(d.get("wv (m/s)").unwrap().values(), &[1.03, 0.19, 0.19, 0.34]);
        assert_eq!(d.values_clipped, 1);
    }

    #[test]
    fn shuffled_timestamps_rejected() {
        let mut lines: Vec<&str> = TOY.lines().collect();
        lines.swap(2, 4);
        let text = lines.join("\n");
        let err = ingest_reader(text.as_bytes(), &opts()).unwrap_err();
        assert!(matches!(err, PipelineError::NonUniformSampling { .. }), "{err:?}");
    }

    #[test]
    fn large_gap_rejected() {
        let text = TOY.replace("00:40:00", "01:40:00");
        let err = ingest_reader(text.as_bytes(), &opts()).unwrap_err();
        assert!(matches!(err, PipelineError::NonUniformSampling { row: 5, .. }), "{err:?}");
    }

    #[test]
    fn parse_errors_carry_row() {
        let text = TOY.replace("-8.51", "abc");
        match ingest_reader(text.as_bytes(), &opts()) {
            Err(PipelineError::Parse { row, .. }) => assert_eq!(row, 4),
            other => panic!("{other:?}"),
        }
        let text = TOY.replace("01.01.2009 00:30:00", "yesterday");
        match ingest_reader(text.as_bytes(), &opts()) {
            Err(PipelineError::Parse { row, .. }) => assert_eq!(row, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn default_timestamp_formats_and_no_time_column() {
        let text = "t,a\n2020-01-01T00:00:00Z,1\n2020-01-01T00:00:02Z,2\n2020-01-01T00:00:04Z,3\n";
        let o = IngestOptions { datetime_column: Some("t".into()), ..Default::default() };
        assert_eq!(ingest_reader(text.as_bytes(), &o).unwrap().dt, 2.0);
        let d = ingest_reader("a,b\n1,2\n3,4\n".as_bytes(), &IngestOptions::default()).unwrap();
        assert_eq!((d.dt, d.series.len()), (1.0, 2));
    }

    #[test]
    fn round_trip_full_precision() {
        let d = ingest_reader(TOY.as_bytes(), &opts()).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = ingest_reader(buf.as_slice(), &IngestOptions::default()).unwrap();
        for (a, b) in d.series.iter().zip(&back.series) {
            assert_eq!(a.values(), b.values());
            assert_eq!(a.label(), b.label());
        }
    }
}
