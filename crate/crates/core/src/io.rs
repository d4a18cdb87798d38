//! CSV and JSON file formats: situation logs, observation logs and estimate
//! exports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimateRecord;
use crate::model::{Dms, TransportPlan};

/// Header of a situation log for `m` sources and `n` destinations.
pub fn dms_header(m: usize, n: usize) -> Vec<String> {
    let mut h = vec!["step".to_string()];
    h.extend((1..=m).map(|i| format!("a{i}")));
    h.extend((1..=n).map(|j| format!("b{j}")));
    h
}

fn column_count(headers: &csv::StringRecord, prefix: char) -> usize {
    (1..).take_while(|k| headers.iter().any(|h| h == format!("{prefix}{k}"))).count()
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Parse(format!("missing column {name}")))
}

fn number(rec: &csv::StringRecord, idx: usize, line: usize) -> Result<f64> {
    let raw = rec.get(idx).unwrap_or("").trim();
    raw.parse()
        .map_err(|_| Error::Parse(format!("line {line}: {raw:?} is not a number")))
}

fn step(rec: &csv::StringRecord, idx: usize, line: usize) -> Result<usize> {
    let raw = rec.get(idx).unwrap_or("").trim();
    raw.parse()
        .map_err(|_| Error::Parse(format!("line {line}: step {raw:?} is not a positive integer")))
}

struct Layout {
    step: usize,
    a: Vec<usize>,
    b: Vec<usize>,
}

fn layout(headers: &csv::StringRecord) -> Result<Layout> {
    let (m, n) = (column_count(headers, 'a'), column_count(headers, 'b'));
    if m < 2 || n < 2 {
        return Err(Error::Parse(format!("need columns a1..am and b1..bn with m, n >= 2; found {m} and {n}")));
    }
    Ok(Layout {
        step: column(headers, "step")?,
        a: (1..=m).map(|i| column(headers, &format!("a{i}"))).collect::<Result<_>>()?,
        b: (1..=n).map(|j| column(headers, &format!("b{j}"))).collect::<Result<_>>()?,
    })
}

fn read_dms(rec: &csv::StringRecord, l: &Layout, line: usize) -> Result<Dms> {
    let a = l.a.iter().map(|&i| number(rec, i, line)).collect::<Result<_>>()?;
    let b = l.b.iter().map(|&i| number(rec, i, line)).collect::<Result<_>>()?;
    Dms::new(a, b)
}

/// Parses a `step,a1..am,b1..bn` log.
pub fn read_dms_log(text: &str) -> Result<Vec<(usize, Dms)>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let l = layout(&headers)?;
    rdr.records()
        .enumerate()
        .map(|(k, rec)| {
            let rec = rec?;
            Ok((step(&rec, l.step, k + 2)?, read_dms(&rec, &l, k + 2)?))
        })
        .collect()
}

pub fn write_dms_log(rows: &[(usize, Dms)]) -> Result<String> {
    let Some((_, first)) = rows.first() else {
        return Ok(String::new());
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(dms_header(first.m(), first.n()))?;
    for (step, d) in rows {
        if (d.m(), d.n()) != (first.m(), first.n()) {
            return Err(Error::Shape("situations in one log must share dimensions".into()));
        }
        let mut rec = vec![step.to_string()];
        rec.extend(d.supply().iter().chain(d.demand()).map(f64::to_string));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row of an observation log.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedDecision {
    pub step: usize,
    pub dms: Dms,
    /// Interior cells `x_ij, i, j >= 2`, row-major.
    pub free_vars: Vec<f64>,
    /// Present when the log carries the full plan.
    pub plan: Option<TransportPlan>,
}

/// Parses an observation log: situation columns followed either by the free
/// cells `x22, x23, ...` (`x{i}{j}` or `x_{i}_{j}`, `i, j >= 2`) or by the
/// whole plan `x_1_1 .. x_m_n`.
pub fn read_observation_log(text: &str) -> Result<Vec<LoggedDecision>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let l = layout(&headers)?;
    let (m, n) = (l.a.len(), l.b.len());
    let find = |i: usize, j: usize| {
        headers
            .iter()
            .position(|h| h == format!("x_{i}_{j}") || (i < 10 && j < 10 && h == format!("x{i}{j}")))
    };
    let full: Option<Vec<usize>> = (1..=m).flat_map(|i| (1..=n).map(move |j| (i, j))).map(|(i, j)| find(i, j)).collect();
    let free: Vec<usize> = match &full {
        Some(_) => Vec::new(),
        None => (2..=m)
            .flat_map(|i| (2..=n).map(move |j| (i, j)))
            .map(|(i, j)| find(i, j).ok_or_else(|| Error::Parse(format!("missing column x_{i}_{j}"))))
            .collect::<Result<_>>()?,
    };
    rdr.records()
        .enumerate()
        .map(|(k, rec)| {
            let rec = rec?;
            let line = k + 2;
            let dms = read_dms(&rec, &l, line)?;
            let (free_vars, plan) = match &full {
                Some(cols) => {
                    let cells = cols.iter().map(|&c| number(&rec, c, line)).collect::<Result<Vec<_>>>()?;
                    let plan = TransportPlan::new(cells.chunks(n).map(<[f64]>::to_vec).collect());
                    (plan.free_vars(), Some(plan))
                }
                None => (free.iter().map(|&c| number(&rec, c, line)).collect::<Result<_>>()?, None),
            };
            Ok(LoggedDecision { step: step(&rec, l.step, line)?, dms, free_vars, plan })
        })
        .collect()
}

/// One entry of an estimate export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateExport {
    pub step: usize,
    /// Unit estimate; `null` when the sums cancel.
    pub e: Option<Vec<f64>>,
    pub sums: Vec<f64>,
}

pub fn estimate_export(history: &[EstimateRecord]) -> Vec<EstimateExport> {
    history
        .iter()
        .map(|r| EstimateExport {
            step: r.step,
            e: r.estimate.as_ref().map(|u| u.components().to_vec()),
            sums: r.sums.clone(),
        })
        .collect()
}

pub fn estimate_export_json(history: &[EstimateRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(&estimate_export(history))?)
}
