//! Subcommand implementations. Each returns the text to print on stdout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use revtp_core::estimator::{first_stop_step, make_observation, EstimateState, StopParams};
use revtp_core::io::{estimate_export, read_observation_log};
use revtp_core::lp::solve_max;
use revtp_core::model::{plan_cost, validate_instance};
use revtp_core::reduction::{build_constraints, reconstruct_plan, reduce_objective};
use revtp_core::simulation::{run_experiment, ExperimentConfig};
use revtp_core::spectrum::{classify_tr, informativeness_report, polygon_dms, report_csv};
use revtp_core::{ConstraintPair, Dms, Error, PlanCost, TransportInstance, TransportPlan, Unlv};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// Validation failures exit with 2, everything else with 1.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(_) => 2,
            CliError::Io { .. } => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.name(),
            CliError::Io { .. } => "IoError",
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output types serialize")
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ")
}

#[derive(Deserialize)]
struct RawInstance {
    costs: Vec<Vec<f64>>,
    supply: Vec<f64>,
    demand: Vec<f64>,
}

/// Reads an instance file, reporting invalid data with the library's error.
pub fn load_instance(path: &Path) -> Result<TransportInstance> {
    let raw: RawInstance = serde_json::from_str(&read(path)?).map_err(Error::from)?;
    Ok(validate_instance(raw.costs, raw.supply, raw.demand)?)
}

pub fn parse_dms(text: &str) -> Result<Dms> {
    #[derive(Deserialize)]
    struct Raw {
        supply: Vec<f64>,
        demand: Vec<f64>,
    }
    let raw: Raw = serde_json::from_str(text).map_err(Error::from)?;
    Ok(Dms::new(raw.supply, raw.demand)?)
}

#[derive(Debug, Serialize)]
pub struct SolveOutput {
    pub plan: TransportPlan,
    pub cost: PlanCost,
    pub free_vars: Vec<f64>,
    pub active_pair: Option<ConstraintPair>,
    pub active_set: Vec<usize>,
}

pub fn solve(instance: &Path, json: bool) -> Result<String> {
    let inst = load_instance(instance)?;
    let dms = inst.dms();
    let obj = reduce_objective(&inst);
    let sol = solve_max(&build_constraints(&dms), &obj.coefficients())?;
    let plan = reconstruct_plan(&dms, &sol.vertex.point)?;
    let out = SolveOutput {
        cost: plan_cost(&inst, &plan)?,
        free_vars: sol.vertex.point,
        active_pair: sol.active_pair,
        active_set: sol.vertex.active_set,
        plan,
    };
    if json {
        return Ok(to_json(&out));
    }
    let mut s = String::new();
    for row in &out.plan.x {
        writeln!(s, "{}", row.iter().map(|v| format!("{v:>8}")).collect::<String>()).unwrap();
    }
    writeln!(s, "cost {} (normalized {:.3})", out.cost.raw, out.cost.normalized).unwrap();
    if let Some(p) = out.active_pair {
        writeln!(s, "active pair {p}").unwrap();
    }
    Ok(s)
}

#[derive(Debug, Serialize)]
pub struct ReduceOutput {
    pub ctilde: Vec<Vec<f64>>,
    pub unlv: Unlv,
    pub constant: f64,
}

pub fn reduce(instance: &Path, json: bool) -> Result<String> {
    let inst = load_instance(instance)?;
    let obj = reduce_objective(&inst);
    let out = ReduceOutput { unlv: obj.unlv()?, constant: obj.constant(&inst.dms())?, ctilde: obj.ctilde };
    if json {
        return Ok(to_json(&out));
    }
    Ok(format!(
        "ctilde {}\nunlv {}\nconstant {}\n",
        fmt_vec(&out.ctilde.concat()),
        fmt_vec(out.unlv.components()),
        out.constant
    ))
}

pub fn classify(dms: &Dms, json: bool) -> Result<String> {
    let c = classify_tr(dms)?;
    if json {
        return Ok(to_json(&c));
    }
    let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let mut s = format!("active {}\n", list(&c.active_constraints));
    if let Some(t) = c.type_id {
        writeln!(s, "type {t} (group {})", c.group.unwrap_or_default()).unwrap();
    }
    if !c.vertex_ranks.is_empty() {
        let ranks: Vec<usize> = c.vertex_ranks.iter().map(|&r| usize::from(r)).collect();
        writeln!(s, "ranks {}", list(&ranks)).unwrap();
    }
    if let (Some(g), Some(r), Some(w)) = (c.general_rank, c.average_rank, c.average_weight) {
        writeln!(s, "general rank {g}, average rank {r:.3}, average weight {w:.3}").unwrap();
    }
    Ok(s)
}

pub fn polygon(m: usize, n: usize, rho: f64, json: bool) -> Result<String> {
    let d = polygon_dms(m, n, rho)?;
    if json {
        return Ok(to_json(&d));
    }
    Ok(format!("supply {}\ndemand {}\n", fmt_vec(d.supply()), fmt_vec(d.demand())))
}

pub fn estimate(log: &Path, window: Option<usize>, out: Option<&Path>, json: bool) -> Result<String> {
    let rows = read_observation_log(&read(log)?)?;
    let dim = rows.first().map_or(2, |r| r.free_vars.len());
    let mut state = EstimateState::new(dim, window)?;
    for r in &rows {
        state.ingest(&make_observation(r.step, &r.dms, &r.free_vars)?)?;
    }
    let export = estimate_export(state.history());
    let text = to_json(&export);
    if let Some(p) = out {
        write(p, &text)?;
    }
    if json {
        return Ok(text);
    }
    let mut s = String::new();
    for e in &export {
        let est = e.e.as_deref().map_or("undefined".to_string(), fmt_vec);
        writeln!(s, "{:>4}  {est}", e.step).unwrap();
    }
    if let Some(k) = first_stop_step(state.history(), &StopParams::default()) {
        writeln!(s, "stable from step {k}").unwrap();
    }
    Ok(s)
}

pub struct SimulateArgs<'a> {
    pub fixture: bool,
    pub config: Option<&'a Path>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub window: Option<usize>,
    pub out_dir: Option<&'a Path>,
}

pub fn simulate(args: &SimulateArgs, json: bool) -> Result<String> {
    let mut config = match args.config {
        Some(p) => serde_json::from_str::<ExperimentConfig>(&read(p)?).map_err(Error::from)?,
        None if args.fixture => ExperimentConfig::fixture(),
        None => return Err(Error::Domain("pass --fixture or --config".into()).into()),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(k) = args.steps {
        config.steps = k;
    }
    if args.window.is_some() {
        config.window = args.window;
    }
    let result = run_experiment(&config)?;
    let summary = result.summary();
    if let Some(dir) = args.out_dir {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        write(&dir.join("result.csv"), &result.to_csv()?)?;
        write(&dir.join("result.json"), &to_json(&summary))?;
    }
    if json {
        return Ok(to_json(&summary));
    }
    let mut s = String::new();
    for r in result.steps() {
        let est = r.estimate.as_ref().map_or("undefined".to_string(), |e| fmt_vec(e.components()));
        let pair = r.active_pair.map_or_else(|| format!("{:?}", r.active_rows), |p| p.to_string());
        writeln!(s, "{:>4}  {:<6} w={:.3}  {est}", r.step, pair, r.weight).unwrap();
    }
    if let Some(e) = &summary.final_estimate {
        writeln!(s, "final {}", fmt_vec(e.components())).unwrap();
    }
    writeln!(s, "effectiveness {:.3}", summary.effectiveness).unwrap();
    match summary.stopping_step {
        Some(k) => writeln!(s, "stable from step {k}").unwrap(),
        None => writeln!(s, "not yet stable").unwrap(),
    }
    Ok(s)
}

pub fn report(out: Option<&Path>) -> Result<String> {
    let csv = report_csv(&informativeness_report(2, 3)?)?;
    if let Some(p) = out {
        write(p, &csv)?;
    }
    Ok(csv)
}
