//! CSV formats: datasets (`id,time,event[,x1..xp]`), long-format predicted
//! curves (`id,time,cif`) and long result tables
//! (`scenario_key,replicate,metric,value`).

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{CompetingRisksRecord, Dataset, PredictionSet};
use crate::error::{Error, Result};
use crate::step::StepFunction;

/// 17 significant digits; parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(path: &str, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line: line as usize,
        msg: msg.into(),
    }
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

fn parse_f64(path: &str, line: u64, field: &str, name: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("{name}: cannot parse '{field}' as a number")))
}

/// Parses a dataset. `label` names the source in error messages.
pub fn read_dataset_from<R: Read>(reader: R, label: &str, causes: u32) -> Result<Dataset> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < 3 || names[..3] != ["id", "time", "event"] {
        return Err(parse_err(label, 1, "header must start with id,time,event"));
    }
    for (k, name) in names[3..].iter().enumerate() {
        if *name != format!("x{}", k + 1) {
            return Err(parse_err(label, 1, format!("expected column x{}, found '{name}'", k + 1)));
        }
    }
    let p = names.len() - 3;
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != names.len() {
            return Err(parse_err(label, line, format!("expected {} fields, found {}", names.len(), row.len())));
        }
        let id = row[0].to_string();
        if id.is_empty() {
            return Err(parse_err(label, line, "empty id"));
        }
        let time = parse_f64(label, line, &row[1], "time")?;
        let event = row[2]
            .parse::<u32>()
            .map_err(|_| parse_err(label, line, format!("event: '{}' is not a nonnegative integer", &row[2])))?;
        let mut rec = CompetingRisksRecord::new(id, time, event);
        if p > 0 {
            let x = (0..p)
                .map(|k| parse_f64(label, line, &row[3 + k], names[3 + k]))
                .collect::<Result<Vec<_>>>()?;
            rec = rec.with_covariates(x);
        }
        records.push(rec);
    }
    Dataset::new(records, causes)
}

pub fn read_dataset(path: &Path, causes: u32) -> Result<Dataset> {
    let f = std::fs::File::open(path)?;
    read_dataset_from(f, &path.display().to_string(), causes)
}

/// Writes records in the given order.
pub fn write_records<W: Write>(writer: W, records: &[CompetingRisksRecord]) -> Result<()> {
    let p = records.first().and_then(|r| r.covariates.as_ref()).map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string(), "time".into(), "event".into()];
    header.extend((1..=p).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.id.clone(), format_f64(r.time), r.event.to_string()];
        if let Some(x) = &r.covariates {
            row.extend(x.iter().map(|&v| format_f64(v)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses long-format curves; rows of one id must be contiguous with strictly
/// increasing times.
pub fn read_predictions_from<R: Read>(reader: R, label: &str, cause: u32) -> Result<PredictionSet> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "time", "cif"] {
        return Err(parse_err(label, 1, "header must be id,time,cif"));
    }
    let mut set = PredictionSet::new(cause);
    let mut finished: HashSet<String> = HashSet::new();
    let mut current: Option<(String, u64, Vec<f64>, Vec<f64>)> = None;

    let flush = |cur: (String, u64, Vec<f64>, Vec<f64>), set: &mut PredictionSet| -> Result<()> {
        let (id, line, grid, values) = cur;
        let curve = StepFunction::cif(grid, values)
            .map_err(|e| parse_err(label, line, format!("curve for {id}: {e}")))?;
        set.insert(id, curve)
    };

    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 3 {
            return Err(parse_err(label, line, format!("expected 3 fields, found {}", row.len())));
        }
        let id = &row[0];
        let t = parse_f64(label, line, &row[1], "time")?;
        let v = parse_f64(label, line, &row[2], "cif")?;
        let same = matches!(&current, Some((cid, ..)) if cid == id);
        if !same {
            if let Some(cur) = current.take() {
                finished.insert(cur.0.clone());
                flush(cur, &mut set)?;
            }
            if finished.contains(id) {
                return Err(parse_err(label, line, format!("rows for {id} are not contiguous")));
            }
            current = Some((id.to_string(), line, Vec::new(), Vec::new()));
        }
        let (_, _, grid, values) = current.as_mut().unwrap();
        if let Some(&last) = grid.last() {
            if !(t > last) {
                return Err(parse_err(label, line, format!("times for {id} are not strictly increasing")));
            }
        }
        grid.push(t);
        values.push(v);
    }
    if let Some(cur) = current.take() {
        flush(cur, &mut set)?;
    }
    Ok(set)
}

pub fn read_predictions(path: &Path, cause: u32) -> Result<PredictionSet> {
    let f = std::fs::File::open(path)?;
    read_predictions_from(f, &path.display().to_string(), cause)
}

/// Writes curves for `ids` in the given order.
pub fn write_predictions<W: Write>(writer: W, ids: &[String], curves: &[StepFunction]) -> Result<()> {
    if ids.len() != curves.len() {
        return Err(Error::LengthMismatch(format!("{} ids vs {} curves", ids.len(), curves.len())));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "time", "cif"])?;
    for (id, c) in ids.iter().zip(curves) {
        for (t, v) in c.grid().iter().zip(c.values()) {
            w.write_record([id.as_str(), &format_f64(*t), &format_f64(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One cell of a long result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRow {
    pub scenario_key: String,
    pub replicate: usize,
    pub metric: String,
    pub value: f64,
}

impl LongRow {
    pub fn new(scenario_key: impl Into<String>, replicate: usize, metric: impl Into<String>, value: f64) -> Self {
        Self {
            scenario_key: scenario_key.into(),
            replicate,
            metric: metric.into(),
            value,
        }
    }
}

pub fn write_long<W: Write>(writer: W, rows: &[LongRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["scenario_key", "replicate", "metric", "value"])?;
    for r in rows {
        w.write_record([
            r.scenario_key.as_str(),
            &r.replicate.to_string(),
            r.metric.as_str(),
            &format_f64(r.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_long_from<R: Read>(reader: R) -> Result<Vec<LongRow>> {
    let mut rdr = csv_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
