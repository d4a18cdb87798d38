//! Balanced transportation problems: instances, situations, plans and costs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute balance tolerance for real-valued inputs, scaled by the total.
pub const BALANCE_TOL: f64 = 1e-9;

fn is_integral(v: &[f64]) -> bool {
    v.iter().all(|x| x.fract() == 0.0)
}

fn check_vectors(supply: &[f64], demand: &[f64]) -> Result<()> {
    if supply.len() < 2 || demand.len() < 2 {
        return Err(Error::Shape(format!(
            "need at least 2 sources and 2 destinations, got {}x{}",
            supply.len(),
            demand.len()
        )));
    }
    for (i, &a) in supply.iter().enumerate() {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Domain(format!("supply a{} = {a} must be positive", i + 1)));
        }
    }
    for (j, &b) in demand.iter().enumerate() {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::Domain(format!("demand b{} = {b} must be positive", j + 1)));
        }
    }
    let ts: f64 = supply.iter().sum();
    let td: f64 = demand.iter().sum();
    let balanced = if is_integral(supply) && is_integral(demand) {
        ts == td
    } else {
        (ts - td).abs() <= BALANCE_TOL * ts.abs().max(td.abs()).max(1.0)
    };
    if !balanced {
        return Err(Error::Balance { supply: ts, demand: td });
    }
    Ok(())
}

/// A decision-making situation: stocks at the sources and requests at the
/// destinations. No costs are attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDms")]
pub struct Dms {
    supply: Vec<f64>,
    demand: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDms {
    supply: Vec<f64>,
    demand: Vec<f64>,
}

impl TryFrom<RawDms> for Dms {
    type Error = Error;
    fn try_from(raw: RawDms) -> Result<Self> {
        Dms::new(raw.supply, raw.demand)
    }
}

impl Dms {
    pub fn new(supply: Vec<f64>, demand: Vec<f64>) -> Result<Self> {
        check_vectors(&supply, &demand)?;
        Ok(Dms { supply, demand })
    }

    pub fn supply(&self) -> &[f64] {
        &self.supply
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn m(&self) -> usize {
        self.supply.len()
    }

    pub fn n(&self) -> usize {
        self.demand.len()
    }

    pub fn total(&self) -> f64 {
        self.supply.iter().sum()
    }

    /// Number of free variables of the reduced problem, `(m-1)(n-1)`.
    pub fn free_dim(&self) -> usize {
        (self.m() - 1) * (self.n() - 1)
    }
}

/// Cost matrix together with the situation it is priced for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct TransportInstance {
    costs: Vec<Vec<f64>>,
    supply: Vec<f64>,
    demand: Vec<f64>,
}

#[derive(Deserialize)]
struct RawInstance {
    costs: Vec<Vec<f64>>,
    supply: Vec<f64>,
    demand: Vec<f64>,
}

impl TryFrom<RawInstance> for TransportInstance {
    type Error = Error;
    fn try_from(raw: RawInstance) -> Result<Self> {
        validate_instance(raw.costs, raw.supply, raw.demand)
    }
}

impl TransportInstance {
    pub fn costs(&self) -> &[Vec<f64>] {
        &self.costs
    }

    pub fn supply(&self) -> &[f64] {
        &self.supply
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn m(&self) -> usize {
        self.supply.len()
    }

    pub fn n(&self) -> usize {
        self.demand.len()
    }

    pub fn dms(&self) -> Dms {
        Dms { supply: self.supply.clone(), demand: self.demand.clone() }
    }

    /// Same costs, different situation.
    pub fn with_dms(&self, dms: &Dms) -> Result<Self> {
        validate_instance(self.costs.clone(), dms.supply.clone(), dms.demand.clone())
    }

    /// Frobenius norm of the cost matrix.
    pub fn cost_norm(&self) -> f64 {
        frobenius(&self.costs)
    }
}

pub(crate) fn frobenius(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().map(|c| c * c).sum::<f64>().sqrt()
}

/// Checks shapes, positivity, finiteness and balance.
pub fn validate_instance(
    costs: Vec<Vec<f64>>,
    supply: Vec<f64>,
    demand: Vec<f64>,
) -> Result<TransportInstance> {
    if costs.len() != supply.len() {
        return Err(Error::Shape(format!(
            "cost matrix has {} rows but supply has {} entries",
            costs.len(),
            supply.len()
        )));
    }
    for (i, row) in costs.iter().enumerate() {
        if row.len() != demand.len() {
            return Err(Error::Shape(format!(
                "cost row {} has {} entries but demand has {}",
                i + 1,
                row.len(),
                demand.len()
            )));
        }
        if let Some(j) = row.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("cost c{}{} is not finite", i + 1, j + 1)));
        }
    }
    check_vectors(&supply, &demand)?;
    Ok(TransportInstance { costs, supply, demand })
}

/// Shipped quantities `x_ij`, one row per source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransportPlan {
    pub x: Vec<Vec<f64>>,
}

impl TransportPlan {
    pub fn new(x: Vec<Vec<f64>>) -> Self {
        TransportPlan { x }
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        TransportPlan { x: vec![vec![0.0; n]; m] }
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }

    pub fn n(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// Interior cells `x_ij`, `i, j >= 2`, in row-major order.
    pub fn free_vars(&self) -> Vec<f64> {
        self.x.iter().skip(1).flat_map(|row| row.iter().skip(1).copied()).collect()
    }

    fn check_shape(&self, m: usize, n: usize) -> Result<()> {
        if self.x.len() != m || self.x.iter().any(|r| r.len() != n) {
            return Err(Error::Shape(format!("plan is not {m}x{n}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanCost {
    /// Total expense `sum c_ij x_ij`.
    pub raw: f64,
    /// `raw` divided by the Frobenius norm of the cost matrix.
    pub normalized: f64,
}

pub fn plan_cost(instance: &TransportInstance, plan: &TransportPlan) -> Result<PlanCost> {
    plan.check_shape(instance.m(), instance.n())?;
    let norm = instance.cost_norm();
    if norm == 0.0 {
        return Err(Error::DegenerateCosts);
    }
    let raw = instance
        .costs
        .iter()
        .zip(&plan.x)
        .flat_map(|(c, x)| c.iter().zip(x).map(|(c, x)| c * x))
        .sum::<f64>();
    Ok(PlanCost { raw, normalized: raw / norm })
}

/// One violated plan constraint. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Row sum minus supply.
    SupplyRow { row: usize, residual: f64 },
    /// Column sum minus demand.
    DemandColumn { column: usize, residual: f64 },
    Negative { row: usize, column: usize, value: f64 },
    Shape { expected: (usize, usize), got: (usize, usize) },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_feasible(plan: &TransportPlan, dms: &Dms, tol: f64) -> FeasibilityReport {
    let (m, n) = (dms.m(), dms.n());
    let mut violations = Vec::new();
    if plan.check_shape(m, n).is_err() {
        violations.push(Violation::Shape { expected: (m, n), got: (plan.m(), plan.n()) });
        return FeasibilityReport { violations };
    }
    for (i, row) in plan.x.iter().enumerate() {
        let residual = row.iter().sum::<f64>() - dms.supply[i];
        if residual.abs() > tol {
            violations.push(Violation::SupplyRow { row: i + 1, residual });
        }
    }
    for j in 0..n {
        let residual = plan.x.iter().map(|r| r[j]).sum::<f64>() - dms.demand[j];
        if residual.abs() > tol {
            violations.push(Violation::DemandColumn { column: j + 1, residual });
        }
    }
    for (i, row) in plan.x.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v < -tol {
                violations.push(Violation::Negative { row: i + 1, column: j + 1, value: v });
            }
        }
    }
    FeasibilityReport { violations }
}
