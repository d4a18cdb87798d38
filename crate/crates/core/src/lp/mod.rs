//! Solving the reduced maximization LP and reading off the geometry at the
//! optimum: vertices, tight constraints and the adjacent constraint pair.

mod linalg;
pub mod simplex;
mod vertex;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduction::ReducedLpp;

pub(crate) use linalg::independent_rows;
pub use linalg::solve as solve_linear;
pub use simplex::{maximize, solve_simplex};
pub use vertex::{enumerate_vertices, region, Edge, Region};

/// Absolute residual under which a constraint counts as tight.
pub const TIGHT_TOL: f64 = 1e-9;

/// Two constraint rows (1-based), stored in increasing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintPair(usize, usize);

impl ConstraintPair {
    pub fn new(p: usize, q: usize) -> Self {
        if p <= q {
            ConstraintPair(p, q)
        } else {
            ConstraintPair(q, p)
        }
    }

    pub fn first(&self) -> usize {
        self.0
    }

    pub fn second(&self) -> usize {
        self.1
    }

    pub fn contains(&self, r: usize) -> bool {
        self.0 == r || self.1 == r
    }
}

impl fmt::Display for ConstraintPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

impl FromStr for ConstraintPair {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (p, q) = s
            .split_once('-')
            .ok_or_else(|| Error::Parse(format!("bad constraint pair {s:?}")))?;
        let parse = |t: &str| {
            t.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad constraint pair {s:?}")))
        };
        Ok(ConstraintPair::new(parse(p)?, parse(q)?))
    }
}

impl Serialize for ConstraintPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0, self.1].serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConstraintPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [p, q] = <[usize; 2]>::deserialize(d)?;
        Ok(ConstraintPair::new(p, q))
    }
}

/// An extreme point of the feasible region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub point: Vec<f64>,
    /// 1-based rows tight at `point`.
    pub active_set: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub vertex: Vertex,
    /// Adjacent constraint pair at the optimum; only defined for two free
    /// variables.
    pub active_pair: Option<ConstraintPair>,
    pub value: f64,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_objective(lpp: &ReducedLpp, objective: &[f64]) -> Result<()> {
    if objective.len() != lpp.d {
        return Err(Error::DimensionMismatch { expected: lpp.d, got: objective.len() });
    }
    if objective.iter().all(|c| *c == 0.0) || objective.iter().any(|c| !c.is_finite()) {
        return Err(Error::DegenerateObjective);
    }
    Ok(())
}

/// Lexicographic order on points, used to break objective ties.
pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Maximizes `objective . x` over the region. Two free variables are solved
/// by vertex enumeration; anything else goes through the simplex method.
/// Ties are broken towards the lexicographically smallest point.
pub fn solve_max(lpp: &ReducedLpp, objective: &[f64]) -> Result<Solution> {
    check_objective(lpp, objective)?;
    if lpp.d != 2 {
        return solve_simplex(lpp, objective);
    }
    let vertices = enumerate_vertices(lpp)?;
    let best = vertices.iter().map(|v| dot(objective, &v.point)).fold(f64::NEG_INFINITY, f64::max);
    let tol = TIGHT_TOL * (1.0 + best.abs());
    let vertex = vertices
        .into_iter()
        .filter(|v| dot(objective, &v.point) >= best - tol)
        .min_by(|a, b| lex_cmp(&a.point, &b.point))
        .ok_or(Error::EmptyRegion)?;
    let active_pair = Some(active_pair_at(&vertex, lpp, TIGHT_TOL)?);
    let value = dot(objective, &vertex.point);
    Ok(Solution { vertex, active_pair, value })
}

/// The two constraints whose edges meet at `vertex`.
///
/// With exactly two tight rows they are the answer. With more, only rows
/// whose line meets the region in a segment of positive length through the
/// vertex qualify.
pub fn active_pair_at(vertex: &Vertex, lpp: &ReducedLpp, tol: f64) -> Result<ConstraintPair> {
    if lpp.d != 2 {
        return Err(Error::UnsupportedDimension {
            m: lpp.m,
            n: lpp.n,
            what: "active pairs need two free variables",
        });
    }
    let tight = lpp.tight_rows(&vertex.point, tol);
    if tight.len() < 2 {
        return Err(Error::DegenerateVertex);
    }
    let candidates: Vec<usize> = if tight.len() == 2 {
        tight
    } else {
        let reg = region(lpp)?;
        tight
            .into_iter()
            .filter(|&r| {
                reg.edges.iter().any(|e| {
                    e.constraint == r
                        && e.length > tol
                        && (dist(&e.from, &vertex.point) <= tol || dist(&e.to, &vertex.point) <= tol)
                })
            })
            .collect()
    };
    match candidates.as_slice() {
        [p, q] if !parallel(&lpp.lhs[p - 1], &lpp.lhs[q - 1]) => Ok(ConstraintPair::new(*p, *q)),
        [_, _] => Err(Error::ParallelPair(candidates[0], candidates[1])),
        _ => Err(Error::DegenerateRegion),
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub(crate) fn parallel(a: &[f64], b: &[f64]) -> bool {
    a[0] * b[1] - a[1] * b[0] == 0.0
}
