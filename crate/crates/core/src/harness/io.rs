//! Trajectory CSV files: header `time,<name1>,<name2>,...`, one row per
//! sample, uniform time spacing, LF line endings.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::embedding::TimeSeries;
use crate::error::{Error, Result};
use crate::systems::Trajectory;

/// Relative tolerance on time-step uniformity.
pub const SPACING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSeries {
    pub name: String,
    pub series: TimeSeries,
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<NamedSeries>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Io(e).context(path.display().to_string()))?;
    parse_csv(file)
}

fn parse_field(s: &str, row: usize, col: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("row {row}, column {col}: cannot parse {s:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("row {row}, column {col}: non-finite value {s:?}")));
    }
    Ok(v)
}

pub fn parse_csv<R: Read>(reader: R) -> Result<Vec<NamedSeries>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Err(Error::EmptyFile);
    }
    if headers[0].trim() != "time" {
        return Err(Error::Parse(format!(
            "first column must be 'time', found {:?}",
            &headers[0]
        )));
    }
    if headers.len() < 2 {
        return Err(Error::Parse("no data columns".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let mut times = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let row = i + 2;
        if record.len() != headers.len() {
            return Err(Error::Parse(format!(
                "row {row}: expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        times.push(parse_field(&record[0], row, 1)?);
        for (c, col) in columns.iter_mut().enumerate() {
            col.push(parse_field(&record[c + 1], row, c + 2)?);
        }
    }
    if times.is_empty() {
        return Err(Error::EmptyFile);
    }
    if times.len() < 2 {
        return Err(Error::SeriesTooShort { required: 1, actual: 1 });
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::NonUniformSampling {
            row: 3,
            spacing: dt,
            expected: dt,
        });
    }
    for (i, w) in times.windows(2).enumerate() {
        let spacing = w[1] - w[0];
        if (spacing - dt).abs() > SPACING_TOLERANCE * dt {
            return Err(Error::NonUniformSampling {
                row: i + 3,
                spacing,
                expected: dt,
            });
        }
    }
    names
        .into_iter()
        .zip(columns)
        .map(|(name, values)| {
            Ok(NamedSeries {
                name,
                series: TimeSeries::new(values, dt)?,
            })
        })
        .collect()
}

pub fn write_csv(path: impl AsRef<Path>, series: &[NamedSeries]) -> Result<()> {
    let mut file = File::create(path)?;
    write_csv_to(&mut file, series)
}

pub fn write_csv_to<W: Write>(writer: W, series: &[NamedSeries]) -> Result<()> {
    let first = series.first().ok_or(Error::EmptyInput)?;
    let (n, dt) = (first.series.len(), first.series.dt());
    if series.iter().any(|s| s.series.len() != n) {
        return Err(Error::AlignmentMismatch("series lengths differ".into()));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let header: Vec<&str> = std::iter::once("time")
        .chain(series.iter().map(|s| s.name.as_str()))
        .collect();
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..n {
        let mut record = Vec::with_capacity(series.len() + 1);
        record.push(format!("{}", i as f64 * dt));
        record.extend(series.iter().map(|s| format!("{}", s.series.values()[i])));
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_series(traj: &Trajectory) -> Vec<NamedSeries> {
    Trajectory::NAMES
        .iter()
        .zip(&traj.components)
        .map(|(name, s)| NamedSeries {
            name: name.to_string(),
            series: s.clone(),
        })
        .collect()
}
