//! Dense two-phase tableau simplex for `max c.x, A x <= b, x >= 0` with
//! Bland's rule, plus the reduced-LP wrapper used when there are not exactly
//! two free variables.

use super::linalg::{independent_rows, solve};
use super::{active_pair_at, check_objective, dot, Solution, Vertex, TIGHT_TOL};
use crate::error::{Error, Result};
use crate::reduction::ReducedLpp;

const EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 50_000;

struct Tableau {
    /// Constraint rows, last entry is the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, obj: &[f64]) -> Vec<f64> {
        (0..self.cols)
            .map(|j| {
                obj[j] - self.rows.iter().zip(&self.basis).map(|(row, &b)| obj[b] * row[j]).sum::<f64>()
            })
            .collect()
    }

    /// Maximizes `obj` over columns for which `allowed` holds.
    fn optimize(&mut self, obj: &[f64], allowed: impl Fn(usize) -> bool) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            let rc = self.reduced_costs(obj);
            let Some(enter) = (0..self.cols).find(|&j| allowed(j) && rc[j] > EPS) else {
                return Ok(());
            };
            let rhs = self.cols;
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[enter] > EPS {
                    let ratio = row[rhs] / row[enter];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - EPS || (ratio <= lr + EPS && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Unbounded);
            };
            self.pivot(r, enter);
        }
        // Bland's rule cannot cycle; hitting this means numerical trouble.
        Err(Error::Unbounded)
    }
}

/// Maximizes `c . x` subject to `a x <= b` and `x >= 0`. Right-hand sides may
/// be negative. Returns an optimal basic solution.
pub fn maximize(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.len(), c.len());
    let negative: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let n_art = negative.len();
    let cols = n + m + n_art;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![0.0; cols + 1];
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sign * a[i][j];
        }
        row[n + i] = sign;
        row[cols] = sign * b[i];
        if let Some(k) = negative.iter().position(|&r| r == i) {
            row[n + m + k] = 1.0;
            basis.push(n + m + k);
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, basis, cols };

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        for v in phase1.iter_mut().skip(n + m) {
            *v = -1.0;
        }
        t.optimize(&phase1, |_| true)?;
        let infeasibility: f64 = t
            .rows
            .iter()
            .zip(&t.basis)
            .filter(|(_, &b)| b >= n + m)
            .map(|(row, _)| row[cols])
            .sum();
        let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if infeasibility > 1e-9 * scale {
            return Err(Error::EmptyRegion);
        }
        // drive zero-level artificials out of the basis where possible
        for r in 0..m {
            if t.basis[r] >= n + m {
                if let Some(c) = (0..n + m).find(|&j| t.rows[r][j].abs() > EPS) {
                    t.pivot(r, c);
                }
            }
        }
    }

    let mut phase2 = vec![0.0; cols];
    phase2[..n].copy_from_slice(c);
    t.optimize(&phase2, |j| j < n + m)?;

    let mut x = vec![0.0; n];
    for (row, &bv) in t.rows.iter().zip(&t.basis) {
        if bv < n {
            x[bv] = row[cols];
        }
    }
    Ok(x)
}

/// Moves `x` onto the vertex defined by its tight rows, when that is
/// well-defined, to remove round-off left by the tableau.
fn snap_to_vertex(lpp: &ReducedLpp, x: &[f64]) -> Vec<f64> {
    let scale = 1.0 + lpp.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tight: Vec<usize> = (1..=lpp.rows()).filter(|&r| lpp.slack(r, x).abs() <= 1e-7 * scale).collect();
    let zero_based: Vec<usize> = tight.iter().map(|r| r - 1).collect();
    let picked = independent_rows(&lpp.lhs, &zero_based, lpp.d);
    if picked.len() == lpp.d {
        let a: Vec<Vec<f64>> = picked.iter().map(|&r| lpp.lhs[r].clone()).collect();
        let b: Vec<f64> = picked.iter().map(|&r| lpp.rhs[r]).collect();
        if let Some(v) = solve(&a, &b) {
            if lpp.is_feasible(&v, TIGHT_TOL) && super::dist(&v, x) <= 1e-6 * scale {
                return v.into_iter().map(|c| if c == 0.0 { 0.0 } else { c }).collect();
            }
        }
    }
    x.to_vec()
}

/// Simplex solve of the reduced LP with the same contract as
/// [`super::solve_max`]: the optimum with the lexicographically smallest
/// coordinates among ties.
pub fn solve_simplex(lpp: &ReducedLpp, objective: &[f64]) -> Result<Solution> {
    check_objective(lpp, objective)?;
    let mut a = lpp.lhs.clone();
    let mut b = lpp.rhs.clone();
    let x = maximize(&a, &b, objective)?;
    let best = dot(objective, &x);

    // lexicographic refinement over the optimal face; the margins only absorb
    // round-off, a wider band lets the point slide along near-optimal edges
    let margin = |v: f64| 1e-12 * (1.0 + v.abs());
    a.push(objective.iter().map(|c| -c).collect());
    b.push(-best + margin(best));
    let mut point = x;
    for k in 0..lpp.d {
        let mut c = vec![0.0; lpp.d];
        c[k] = -1.0;
        let y = maximize(&a, &b, &c)?;
        let mut row = vec![0.0; lpp.d];
        row[k] = 1.0;
        a.push(row);
        b.push(y[k] + margin(y[k]));
        point = y;
    }
    let point = snap_to_vertex(lpp, &point);
    let active_set = lpp.tight_rows(&point, TIGHT_TOL);
    let vertex = Vertex { point, active_set };
    let active_pair = if lpp.d == 2 { Some(active_pair_at(&vertex, lpp, TIGHT_TOL)?) } else { None };
    let value = dot(objective, &vertex.point);
    Ok(Solution { vertex, active_pair, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve_max, ConstraintPair};
    use crate::model::Dms;
    use crate::reduction::build_constraints;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6)
        let a = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]];
        let x = maximize(&a, &[4.0, 12.0, 18.0], &[3.0, 5.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // x + y >= 2, x <= 3, y <= 3, max -x - y -> value -2
        let a = vec![vec![-1.0, -1.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let x = maximize(&a, &[-2.0, 3.0, 3.0], &[-1.0, -1.0]).unwrap();
        assert!((x[0] + x[1] - 2.0).abs() < 1e-12);
        let err = maximize(&[vec![-1.0], vec![1.0]], &[-3.0, 2.0], &[1.0]).unwrap_err();
        assert_eq!(err, Error::EmptyRegion);
        let err = maximize(&[vec![-1.0]], &[0.0], &[1.0]).unwrap_err();
        assert_eq!(err, Error::Unbounded);
    }

    #[test]
    fn agrees_with_enumeration_on_fixture() {
        let l = build_constraints(&Dms::new(vec![10.0, 25.0], vec![5.0, 15.0, 15.0]).unwrap());
        let s = solve_simplex(&l, &[-0.225, 0.974]).unwrap();
        assert_eq!(s.vertex.point, vec![5.0, 15.0]);
        assert_eq!(s.active_pair, Some(ConstraintPair::new(1, 4)));
        assert_eq!(s, solve_max(&l, &[-0.225, 0.974]).unwrap());
    }

    #[test]
    fn ties_match_enumeration() {
        let l = build_constraints(&Dms::new(vec![10.0, 25.0], vec![5.0, 15.0, 15.0]).unwrap());
        let s = solve_simplex(&l, &[0.0, 1.0]).unwrap();
        assert_eq!(s.vertex.point, vec![5.0, 15.0]);
    }

    #[test]
    fn one_free_variable() {
        // 2x2: a = (3, 4), b = (5, 2); x22 in [max(0, b2 - a1), min(a2, b2)] = [0, 2]
        let l = build_constraints(&Dms::new(vec![3.0, 4.0], vec![5.0, 2.0]).unwrap());
        assert_eq!(l.d, 1);
        assert_eq!(solve_max(&l, &[1.0]).unwrap().vertex.point, vec![2.0]);
        assert_eq!(solve_max(&l, &[-1.0]).unwrap().vertex.point, vec![0.0]);
        assert_eq!(solve_max(&l, &[1.0]).unwrap().active_pair, None);
    }
}
