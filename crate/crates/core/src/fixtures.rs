//! Bundled reference data of the 2x3 study: the cost table, the 25 observed
//! situations plus the polygon control situation, the recorded decisions,
//! the estimation trace and the region-type catalogue.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lp::ConstraintPair;
use crate::model::{Dms, TransportInstance, TransportPlan};

pub const INSTANCE_JSON: &str = include_str!("../fixtures/modelling_instance.json");
pub const SITUATIONS_CSV: &str = include_str!("../fixtures/situations.csv");
pub const DECISIONS_CSV: &str = include_str!("../fixtures/decisions.csv");
pub const CATALOGUE_CSV: &str = include_str!("../fixtures/catalogue.csv");
pub const TRACE_CSV: &str = include_str!("../fixtures/estimator_trace.csv");

/// The objective direction used to simulate the planner, as printed (three
/// decimals).
pub const PRINTED_OBJECTIVE: [f64; 2] = [-0.225, 0.974];

/// Row label: an observation step or the polygon control row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Step(usize),
    Polygon,
}

fn parse_label(s: &str) -> Result<Label> {
    if s.eq_ignore_ascii_case("polygon") {
        Ok(Label::Polygon)
    } else {
        s.parse().map(Label::Step).map_err(|_| Error::Parse(format!("bad step label {s:?}")))
    }
}

pub fn modelling_instance() -> TransportInstance {
    serde_json::from_str(INSTANCE_JSON).expect("bundled cost table is valid")
}

#[derive(Debug, Deserialize)]
struct SituationRow {
    step: String,
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    b3: f64,
}

/// All 26 rows: steps 1..=25 then the polygon row.
pub fn situations() -> Vec<(Label, Dms)> {
    let mut rdr = csv::Reader::from_reader(SITUATIONS_CSV.as_bytes());
    rdr.deserialize::<SituationRow>()
        .map(|r| {
            let r = r.expect("bundled situation table parses");
            let dms = Dms::new(vec![r.a1, r.a2], vec![r.b1, r.b2, r.b3]).expect("balanced");
            (parse_label(&r.step).expect("label"), dms)
        })
        .collect()
}

/// The 25 observed situations in step order.
pub fn observation_sample() -> Vec<Dms> {
    situations()
        .into_iter()
        .filter_map(|(l, d)| matches!(l, Label::Step(_)).then_some(d))
        .collect()
}

/// The control situation listed after the observations.
pub fn polygon_fixture() -> Dms {
    situations()
        .into_iter()
        .find_map(|(l, d)| (l == Label::Polygon).then_some(d))
        .expect("polygon row present")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordedDecision {
    pub label: Label,
    pub plan: TransportPlan,
    /// Normalized plan cost; not given for the polygon row.
    pub of_norm: Option<f64>,
    pub pair: ConstraintPair,
}

impl RecordedDecision {
    pub fn free_vars(&self) -> Vec<f64> {
        self.plan.free_vars()
    }
}

pub fn recorded_decisions() -> Vec<RecordedDecision> {
    let mut rdr = csv::Reader::from_reader(DECISIONS_CSV.as_bytes());
    rdr.records()
        .map(|rec| {
            let rec = rec.expect("bundled decision table parses");
            let num = |i: usize| rec[i].parse::<f64>().expect("number");
            let plan = TransportPlan::new(vec![
                vec![num(1), num(2), num(3)],
                vec![num(4), num(5), num(6)],
            ]);
            RecordedDecision {
                label: parse_label(&rec[0]).expect("label"),
                plan,
                of_norm: rec[7].parse().ok(),
                pair: ConstraintPair::new(num(8) as usize, num(9) as usize),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub label: Label,
    pub pair: ConstraintPair,
    pub unlv1: [f64; 2],
    pub unlv2: [f64; 2],
    pub observation: [f64; 2],
    pub weight: Option<f64>,
    pub sums: Option<[f64; 2]>,
    pub estimate: [f64; 2],
}

pub fn recorded_trace() -> Vec<TraceRow> {
    let mut rdr = csv::Reader::from_reader(TRACE_CSV.as_bytes());
    rdr.records()
        .map(|rec| {
            let rec = rec.expect("bundled trace parses");
            let num = |i: usize| rec[i].parse::<f64>().expect("number");
            let opt = |i: usize| rec[i].parse::<f64>().ok();
            TraceRow {
                label: parse_label(&rec[0]).expect("label"),
                pair: rec[1].parse().expect("pair"),
                unlv1: [num(2), num(3)],
                unlv2: [num(4), num(5)],
                observation: [num(6), num(7)],
                weight: opt(8),
                sums: opt(9).zip(opt(10)).map(|(a, b)| [a, b]),
                estimate: [num(11), num(12)],
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogueRecord {
    pub type_id: usize,
    pub active: Vec<usize>,
    pub ranks: Vec<u8>,
    pub general_rank: u32,
    pub average_rank: f64,
    pub average_weight: f64,
    pub group: usize,
}

/// The printed region-type catalogue, values as published.
pub fn recorded_catalogue() -> Vec<CatalogueRecord> {
    let mut rdr = csv::Reader::from_reader(CATALOGUE_CSV.as_bytes());
    let list = |s: &str| s.split(';').map(|v| v.trim().parse::<usize>().expect("int")).collect::<Vec<_>>();
    rdr.records()
        .map(|rec| {
            let rec = rec.expect("bundled catalogue parses");
            CatalogueRecord {
                type_id: rec[0].parse().expect("type"),
                active: list(&rec[2]),
                ranks: list(&rec[3]).into_iter().map(|r| r as u8).collect(),
                general_rank: rec[4].parse().expect("general rank"),
                average_rank: rec[5].parse().expect("average rank"),
                average_weight: rec[6].parse().expect("average weight"),
                group: rec[7].parse().expect("group"),
            }
        })
        .collect()
}
