//! Elimination of the first row and first column of a transportation plan.
//!
//! The `m + n - 1` cells `x_i1`, `x_1j` are expressed through the interior
//! cells `x_ij` (`i, j >= 2`), which turns the balanced transportation problem
//! into a maximization LP in inequality form over `d = (m-1)(n-1)` free
//! variables. Constraint rows are numbered from 1 in a fixed order:
//!
//! 1. aggregate row, `-sum x_ij <= a_1 - sum_{j>=2} b_j` (keeps `x_11 >= 0`)
//! 2. one row per source `i = 2..m`, `sum_j x_ij <= a_i` (keeps `x_i1 >= 0`)
//! 3. one row per destination `j = 2..n`, `sum_i x_ij <= b_j` (keeps `x_1j >= 0`)
//! 4. nonnegativity rows `-x_ij <= 0`
//!
//! For a 2x3 problem this yields the six rows `(-1,-1) (1,1) (1,0) (0,1)
//! (-1,0) (0,-1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dms, TransportInstance, TransportPlan};

/// Tolerance for reconstructed basic variables.
pub const RECONSTRUCT_TOL: f64 = 1e-9;

/// Unit-length normal vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Unlv(Vec<f64>);

impl Unlv {
    pub fn new(v: &[f64]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Unlv(v.iter().map(|x| x / norm).collect()))
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn distance(&self, other: &Unlv) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }

    /// Angle to `other` in radians, in `[0, pi]`.
    pub fn angle(&self, other: &Unlv) -> f64 {
        self.dot(&other.0).clamp(-1.0, 1.0).acos()
    }
}

impl std::ops::Index<usize> for Unlv {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Normalizes `v` to unit Euclidean length.
pub fn unlv(v: &[f64]) -> Result<Unlv> {
    Unlv::new(v)
}

/// Reduced objective coefficients over the interior cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedObjective {
    m: usize,
    n: usize,
    /// `(m-1) x (n-1)` contrasts, row `i` is source `i + 2`.
    pub ctilde: Vec<Vec<f64>>,
    /// Costs of the eliminated cells, kept to evaluate the constant term.
    first_row: Vec<f64>,
    first_col: Vec<f64>,
}

impl ReducedObjective {
    /// Coefficients in free-variable order (row-major over `i, j >= 2`).
    pub fn coefficients(&self) -> Vec<f64> {
        self.ctilde.iter().flatten().copied().collect()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    /// The situation-dependent additive constant of the full reduced objective,
    /// `-(c_11 (a_1 - sum_{j>=2} b_j) + sum_{j>=2} c_1j b_j + sum_{i>=2} c_i1 a_i)`.
    pub fn constant(&self, dms: &Dms) -> Result<f64> {
        check_dims(self.m, self.n, dms)?;
        let (a, b) = (dms.supply(), dms.demand());
        let c11 = self.first_row[0];
        let mut total = c11 * (a[0] - b[1..].iter().sum::<f64>());
        total += self.first_row[1..].iter().zip(&b[1..]).map(|(c, b)| c * b).sum::<f64>();
        total += self.first_col[1..].iter().zip(&a[1..]).map(|(c, a)| c * a).sum::<f64>();
        Ok(-total)
    }

    pub fn unlv(&self) -> Result<Unlv> {
        Unlv::new(&self.coefficients())
    }
}

fn check_dims(m: usize, n: usize, dms: &Dms) -> Result<()> {
    if dms.m() != m || dms.n() != n {
        return Err(Error::Shape(format!(
            "situation is {}x{}, expected {m}x{n}",
            dms.m(),
            dms.n()
        )));
    }
    Ok(())
}

/// `c~_ij = -(c_11 - c_i1 - c_1j + c_ij)` for every interior cell.
pub fn reduce_objective(instance: &TransportInstance) -> ReducedObjective {
    reduce_costs(instance.costs())
}

pub(crate) fn reduce_costs(c: &[Vec<f64>]) -> ReducedObjective {
    let (m, n) = (c.len(), c[0].len());
    let ctilde = (1..m)
        .map(|i| (1..n).map(|j| -(c[0][0] - c[i][0] - c[0][j] + c[i][j])).collect())
        .collect();
    ReducedObjective {
        m,
        n,
        ctilde,
        first_row: c[0].clone(),
        first_col: c.iter().map(|r| r[0]).collect(),
    }
}

/// Where a constraint row of the reduced LP comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowKind {
    Aggregate,
    Supply { source: usize },
    Demand { destination: usize },
    NonNegative { source: usize, destination: usize },
}

/// `lhs * x <= rhs` over the free variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedLpp {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub lhs: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl ReducedLpp {
    pub fn rows(&self) -> usize {
        self.lhs.len()
    }

    /// 1-based row index to its origin.
    pub fn row_kind(&self, row: usize) -> RowKind {
        row_kind(self.m, self.n, row)
    }

    /// `rhs_r - lhs_r . x`, nonnegative when the row is satisfied.
    pub fn slack(&self, row: usize, x: &[f64]) -> f64 {
        let r = row - 1;
        self.rhs[r] - self.lhs[r].iter().zip(x).map(|(a, x)| a * x).sum::<f64>()
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        (1..=self.rows()).all(|r| self.slack(r, x) >= -tol)
    }

    /// 1-based indices of rows with `|slack| <= tol`.
    pub fn tight_rows(&self, x: &[f64], tol: f64) -> Vec<usize> {
        (1..=self.rows()).filter(|&r| self.slack(r, x).abs() <= tol).collect()
    }
}

pub(crate) fn free_index(n: usize, i: usize, j: usize) -> usize {
    (i - 1) * (n - 1) + (j - 1)
}

pub(crate) fn row_kind(m: usize, n: usize, row: usize) -> RowKind {
    let r = row - 1;
    if r == 0 {
        RowKind::Aggregate
    } else if r < m {
        RowKind::Supply { source: r + 1 }
    } else if r < m + n - 1 {
        RowKind::Demand { destination: r - m + 2 }
    } else {
        let k = r - (m + n - 1);
        RowKind::NonNegative { source: k / (n - 1) + 2, destination: k % (n - 1) + 2 }
    }
}

/// Constraint matrix of the reduced LP; depends only on `(m, n)`.
pub fn constraint_matrix(m: usize, n: usize) -> Vec<Vec<f64>> {
    let d = (m - 1) * (n - 1);
    let mut lhs = Vec::with_capacity(m + n - 1 + d);
    lhs.push(vec![-1.0; d]);
    for i in 1..m {
        let mut row = vec![0.0; d];
        for j in 1..n {
            row[free_index(n, i, j)] = 1.0;
        }
        lhs.push(row);
    }
    for j in 1..n {
        let mut row = vec![0.0; d];
        for i in 1..m {
            row[free_index(n, i, j)] = 1.0;
        }
        lhs.push(row);
    }
    for k in 0..d {
        let mut row = vec![0.0; d];
        row[k] = -1.0;
        lhs.push(row);
    }
    lhs
}

pub fn build_constraints(dms: &Dms) -> ReducedLpp {
    let (m, n) = (dms.m(), dms.n());
    let d = dms.free_dim();
    let (a, b) = (dms.supply(), dms.demand());
    let mut rhs = Vec::with_capacity(m + n - 1 + d);
    rhs.push(a[0] - b[1..].iter().sum::<f64>());
    rhs.extend_from_slice(&a[1..]);
    rhs.extend_from_slice(&b[1..]);
    rhs.extend(std::iter::repeat_n(0.0, d));
    ReducedLpp { m, n, d, lhs: constraint_matrix(m, n), rhs }
}

/// Rebuilds the full plan from the interior cells.
pub fn reconstruct_plan(dms: &Dms, free_vars: &[f64]) -> Result<TransportPlan> {
    let (m, n) = (dms.m(), dms.n());
    if free_vars.len() != dms.free_dim() {
        return Err(Error::DimensionMismatch { expected: dms.free_dim(), got: free_vars.len() });
    }
    let (a, b) = (dms.supply(), dms.demand());
    let mut x = vec![vec![0.0; n]; m];
    for i in 1..m {
        for j in 1..n {
            x[i][j] = free_vars[free_index(n, i, j)];
        }
    }
    let interior: f64 = free_vars.iter().sum();
    x[0][0] = a[0] - b[1..].iter().sum::<f64>() + interior;
    for i in 1..m {
        x[i][0] = a[i] - x[i][1..].iter().sum::<f64>();
    }
    for j in 1..n {
        x[0][j] = b[j] - (1..m).map(|i| x[i][j]).sum::<f64>();
    }
    let scale = dms.total().max(1.0);
    for (i, row) in x.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if *v < -RECONSTRUCT_TOL * scale {
                return Err(Error::InfeasibleFreeVars {
                    cell: format!("x{}{}", i + 1, j + 1),
                    value: *v,
                });
            }
            if *v == 0.0 {
                *v = 0.0; // drop negative zero
            }
        }
    }
    Ok(TransportPlan::new(x))
}

/// Full reduced objective `constant(dms) + sum c~_ij x_ij`; this is the
/// negated transport cost of the reconstructed plan.
pub fn reduced_value(objective: &ReducedObjective, dms: &Dms, free_vars: &[f64]) -> Result<f64> {
    let c = objective.coefficients();
    if free_vars.len() != c.len() {
        return Err(Error::DimensionMismatch { expected: c.len(), got: free_vars.len() });
    }
    let linear: f64 = c.iter().zip(free_vars).map(|(c, x)| c * x).sum();
    Ok(objective.constant(dms)? + linear)
}

/// A cost matrix in the gauge with zero first row and first column whose
/// reduced objective is `ctilde`. Any matrix differing from it by row and
/// column potentials prices every balanced plan identically up to a constant.
pub fn representative_costs(ctilde: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = ctilde.first().map_or(0, Vec::len) + 1;
    let mut c = vec![vec![0.0; n]];
    for row in ctilde {
        let mut r = vec![0.0];
        r.extend(row.iter().map(|v| if *v == 0.0 { 0.0 } else { -v }));
        c.push(r);
    }
    c
}

/// Reshapes a free-variable vector into `(m-1) x (n-1)`.
pub fn to_grid(n: usize, flat: &[f64]) -> Vec<Vec<f64>> {
    flat.chunks(n - 1).map(<[f64]>::to_vec).collect()
}
