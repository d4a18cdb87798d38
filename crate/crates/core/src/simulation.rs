//! End-to-end experiments: a simulated planner with a known objective makes
//! decisions on a stream of situations, and the estimator learns from them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{first_stop_step, make_observation, predict_plan, same_vertex, EstimateState, StopParams};
use crate::fixtures;
use crate::lp::ConstraintPair;
use crate::model::{plan_cost, validate_instance, Dms, PlanCost, TransportPlan};
use crate::reduction::{reduce_costs, Unlv};
use crate::spectrum::{nearest_polygon_vector, polygon_dms, SpectrumPair};

/// Redraws allowed before [`gen_dms`] gives up.
pub const MAX_DRAWS: usize = 10_000;

/// The planner's hidden objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    /// Full cost matrix; also enables plan cost accounting.
    Costs(Vec<Vec<f64>>),
    /// Unit direction in free-variable space (normalized on use).
    Direction(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Generated,
    /// The bundled 25 situations (2x3 only).
    Fixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub truth: Truth,
    pub steps: usize,
    /// Inclusive integer range for generated supplies and demands.
    #[serde(default = "default_range")]
    pub range: (u32, u32),
    #[serde(default)]
    pub seed: u64,
    /// Sliding window length; `None` sums everything.
    #[serde(default)]
    pub window: Option<usize>,
    pub source: Source,
    /// Append the polygon situation as a control row.
    #[serde(default)]
    pub polygon_control: bool,
    #[serde(default)]
    pub stop: StopParams,
}

fn default_range() -> (u32, u32) {
    (1, 100)
}

impl ExperimentConfig {
    /// The published 2x3 study: bundled cost table, 25 situations and the
    /// polygon control row.
    pub fn fixture() -> Self {
        ExperimentConfig {
            m: 2,
            n: 3,
            truth: Truth::Costs(fixtures::modelling_instance().costs().to_vec()),
            steps: 25,
            range: default_range(),
            seed: 0,
            window: None,
            source: Source::Fixture,
            polygon_control: true,
            stop: StopParams::default(),
        }
    }

    pub fn generated(m: usize, n: usize, truth: Truth, steps: usize, seed: u64) -> Self {
        ExperimentConfig {
            m,
            n,
            truth,
            steps,
            range: default_range(),
            seed,
            window: None,
            source: Source::Generated,
            polygon_control: false,
            stop: StopParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.n < 2 {
            return Err(Error::Shape(format!("need at least 2x2, got {}x{}", self.m, self.n)));
        }
        let (lo, hi) = self.range;
        if lo < 1 || lo > hi {
            return Err(Error::Domain(format!("range [{lo}, {hi}] must satisfy 1 <= lo <= hi")));
        }
        if self.steps == 0 {
            return Err(Error::Domain("experiment needs at least one step".into()));
        }
        if self.window == Some(0) {
            return Err(Error::Domain("window length must be at least 1".into()));
        }
        if self.source == Source::Fixture {
            if (self.m, self.n) != (2, 3) {
                return Err(Error::UnsupportedDimension { m: self.m, n: self.n, what: "fixture situations are 2x3" });
            }
            if self.steps > 25 {
                return Err(Error::Domain(format!("fixture has 25 situations, {} requested", self.steps)));
            }
        }
        self.truth_unlv().map(|_| ())
    }

    /// The hidden objective as a unit vector in free-variable space.
    pub fn truth_unlv(&self) -> Result<Unlv> {
        let d = (self.m - 1) * (self.n - 1);
        match &self.truth {
            Truth::Costs(c) => {
                if c.len() != self.m || c.iter().any(|r| r.len() != self.n) {
                    return Err(Error::Shape(format!("cost matrix must be {}x{}", self.m, self.n)));
                }
                if c.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("costs must be finite".into()));
                }
                reduce_costs(c).unlv().map_err(|_| Error::DegenerateObjective)
            }
            Truth::Direction(v) => {
                if v.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: v.len() });
                }
                Unlv::new(v).map_err(|_| Error::DegenerateObjective)
            }
        }
    }
}

/// Draws one balanced situation with integer entries.
///
/// `a_1` and every `b_j` are uniform on `range`; the remaining supplies absorb
/// the balance: `a_2` for two sources, otherwise the residual is split evenly
/// over `a_2..a_m` with the rounding remainder on `a_2`. Draws with an entry
/// below 1 are discarded.
pub fn gen_dms<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize, range: (u32, u32)) -> Result<Dms> {
    let (lo, hi) = range;
    if m < 2 || n < 2 {
        return Err(Error::Shape(format!("need at least 2x2, got {m}x{n}")));
    }
    if lo < 1 || lo > hi {
        return Err(Error::Domain(format!("range [{lo}, {hi}] must satisfy 1 <= lo <= hi")));
    }
    for _ in 0..MAX_DRAWS {
        let a1 = i64::from(rng.random_range(lo..=hi));
        let b: Vec<i64> = (0..n).map(|_| i64::from(rng.random_range(lo..=hi))).collect();
        let residual = b.iter().sum::<i64>() - a1;
        let k = (m - 1) as i64;
        let share = residual.div_euclid(k);
        let mut a = vec![a1];
        a.extend((1..m).map(|_| share));
        a[1] += residual - share * k;
        if a.iter().all(|&v| v >= 1) {
            let f = |v: Vec<i64>| v.into_iter().map(|x| x as f64).collect();
            return Dms::new(f(a), f(b));
        }
    }
    Err(Error::Generation(MAX_DRAWS))
}

/// The `index`-th situation of a seeded stream, drawn independently of the
/// others so a stream can be resumed without replaying it.
pub fn nth_situation(seed: u64, index: u64, m: usize, n: usize, range: (u32, u32)) -> Result<Dms> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    gen_dms(&mut rng, m, n, range)
}

/// The planner's choice: the same solver driven by the true direction.
pub fn simulated_dm(truth: &Unlv, dms: &Dms) -> Result<TransportPlan> {
    Ok(predict_plan(truth, dms)?.plan)
}

/// One row of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based; the control row follows the last step.
    pub step: usize,
    pub control: bool,
    pub dms: Dms,
    pub decision: TransportPlan,
    pub free_vars: Vec<f64>,
    pub active_pair: Option<ConstraintPair>,
    pub active_rows: Vec<usize>,
    pub obs_unlv: Unlv,
    pub weight: f64,
    /// Not set on the control row, which is not ingested.
    pub sums: Option<Vec<f64>>,
    pub estimate: Option<Unlv>,
    /// Available when the truth is a cost matrix.
    pub plan_cost: Option<PlanCost>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub truth: Unlv,
    pub records: Vec<StepRecord>,
    pub final_estimate: Option<Unlv>,
    /// Match rate of the final estimate over every situation of the run.
    pub effectiveness: f64,
    pub stopping_step: Option<usize>,
    /// Polygon observation vector closest to the final estimate (2x3).
    pub nearest_polygon: Option<SpectrumPair>,
}

impl ExperimentResult {
    pub fn steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter(|r| !r.control)
    }

    pub fn dms_set(&self) -> Vec<Dms> {
        self.records.iter().map(|r| r.dms.clone()).collect()
    }

    /// Estimates after each ingested step, in order.
    pub fn estimates(&self) -> Vec<Option<Unlv>> {
        self.steps().map(|r| r.estimate.clone()).collect()
    }

    /// Compact view for `result.json`.
    pub fn summary(&self) -> Summary {
        Summary {
            m: self.config.m,
            n: self.config.n,
            steps: self.config.steps,
            source: self.config.source,
            seed: self.config.seed,
            window: self.config.window,
            truth: self.truth.clone(),
            final_estimate: self.final_estimate.clone(),
            distance_to_truth: self.final_estimate.as_ref().map(|e| e.distance(&self.truth)),
            effectiveness: self.effectiveness,
            stopping_step: self.stopping_step,
            nearest_polygon: self.nearest_polygon.as_ref().map(|p| p.pair),
        }
    }

    /// Per-step records as CSV.
    pub fn to_csv(&self) -> Result<String> {
        let (m, n) = (self.config.m, self.config.n);
        let d = (m - 1) * (n - 1);
        let mut header = vec!["step".to_string()];
        header.extend((1..=m).map(|i| format!("a{i}")));
        header.extend((1..=n).map(|j| format!("b{j}")));
        for i in 1..=m {
            header.extend((1..=n).map(|j| format!("x_{i}_{j}")));
        }
        header.extend(["active_rows", "weight"].map(String::from));
        header.extend((1..=d).map(|k| format!("obs_{k}")));
        header.extend((1..=d).map(|k| format!("sum_{k}")));
        header.extend((1..=d).map(|k| format!("est_{k}")));
        header.extend(["cost_raw", "cost_norm"].map(String::from));

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let mut row = vec![if r.control { "polygon".to_string() } else { r.step.to_string() }];
            row.extend(r.dms.supply().iter().chain(r.dms.demand()).map(f64::to_string));
            row.extend(r.decision.x.iter().flatten().map(f64::to_string));
            row.push(r.active_rows.iter().map(usize::to_string).collect::<Vec<_>>().join("-"));
            row.push(r.weight.to_string());
            row.extend(r.obs_unlv.components().iter().map(f64::to_string));
            for k in 0..d {
                row.push(opt(r.sums.as_ref().map(|s| s[k])));
            }
            for k in 0..d {
                row.push(opt(r.estimate.as_ref().map(|e| e[k])));
            }
            row.push(opt(r.plan_cost.map(|c| c.raw)));
            row.push(opt(r.plan_cost.map(|c| c.normalized)));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub m: usize,
    pub n: usize,
    pub steps: usize,
    pub source: Source,
    pub seed: u64,
    pub window: Option<usize>,
    pub truth: Unlv,
    pub final_estimate: Option<Unlv>,
    pub distance_to_truth: Option<f64>,
    pub effectiveness: f64,
    pub stopping_step: Option<usize>,
    pub nearest_polygon: Option<ConstraintPair>,
}

fn situations(config: &ExperimentConfig) -> Result<Vec<Dms>> {
    match config.source {
        Source::Fixture => Ok(fixtures::observation_sample().into_iter().take(config.steps).collect()),
        Source::Generated => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            (0..config.steps).map(|_| gen_dms(&mut rng, config.m, config.n, config.range)).collect()
        }
    }
}

fn control_situation(config: &ExperimentConfig) -> Result<Dms> {
    match config.source {
        Source::Fixture => Ok(fixtures::polygon_fixture()),
        Source::Generated => polygon_dms(config.m, config.n, f64::from(config.range.1) / 4.0),
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let truth = config.truth_unlv()?;
    let costs = match &config.truth {
        Truth::Costs(c) => Some(c.clone()),
        Truth::Direction(_) => None,
    };
    let record = |step: usize, dms: &Dms, state: Option<&mut EstimateState>| -> Result<StepRecord> {
        let prediction = predict_plan(&truth, dms)?;
        let obs = make_observation(step, dms, &prediction.solution.vertex.point)?;
        let plan_cost = match &costs {
            Some(c) => {
                let inst = validate_instance(c.clone(), dms.supply().to_vec(), dms.demand().to_vec())?;
                Some(plan_cost(&inst, &prediction.plan)?)
            }
            None => None,
        };
        let (sums, estimate, control) = match state {
            Some(s) => {
                let rec = s.ingest(&obs)?;
                (Some(rec.sums.clone()), rec.estimate.clone(), false)
            }
            None => (None, None, true),
        };
        Ok(StepRecord {
            step,
            control,
            dms: dms.clone(),
            free_vars: prediction.plan.free_vars(),
            decision: prediction.plan,
            active_pair: obs.active_pair,
            active_rows: obs.active_rows,
            obs_unlv: obs.obs_unlv,
            weight: obs.weight,
            sums,
            estimate,
            plan_cost,
        })
    };

    let d = (config.m - 1) * (config.n - 1);
    let mut state = EstimateState::new(d, config.window)?;
    let mut records = Vec::with_capacity(config.steps + 1);
    for (k, dms) in situations(config)?.iter().enumerate() {
        records.push(record(k + 1, dms, Some(&mut state))?);
    }
    if config.polygon_control {
        let dms = control_situation(config)?;
        records.push(record(config.steps + 1, &dms, None)?);
    }

    let final_estimate = state.history().last().and_then(|r| r.estimate.clone());
    let dms_set: Vec<Dms> = records.iter().map(|r| r.dms.clone()).collect();
    let effectiveness = match &final_estimate {
        Some(e) => match_rate(e, &truth, &dms_set)?,
        None => 0.0,
    };
    let nearest_polygon = match (&final_estimate, (config.m, config.n)) {
        (Some(e), (2, 3)) => Some(nearest_polygon_vector(e, 2, 3)?),
        _ => None,
    };
    Ok(ExperimentResult {
        config: config.clone(),
        stopping_step: first_stop_step(state.history(), &config.stop),
        truth,
        records,
        final_estimate,
        effectiveness,
        nearest_polygon,
    })
}

/// Fraction of situations on which `estimate` and `truth` pick the same vertex.
pub fn match_rate(estimate: &Unlv, truth: &Unlv, dms_set: &[Dms]) -> Result<f64> {
    if dms_set.is_empty() {
        return Ok(1.0);
    }
    let mut hits = 0;
    for dms in dms_set {
        let model = predict_plan(estimate, dms)?;
        let dm = predict_plan(truth, dms)?;
        if same_vertex(&model.solution.vertex, &dm.solution.vertex) {
            hits += 1;
        }
    }
    Ok(hits as f64 / dms_set.len() as f64)
}

/// Match rate of the run's final estimate over `dms_set`; 0 when the run
/// produced no estimate.
pub fn effectiveness(result: &ExperimentResult, truth: &Unlv, dms_set: &[Dms]) -> Result<f64> {
    match &result.final_estimate {
        Some(e) => match_rate(e, truth, dms_set),
        None => Ok(0.0),
    }
}
