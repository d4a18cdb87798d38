use serde::{Deserialize, Serialize};

use super::linalg::solve;
use super::{dist, lex_cmp, Vertex, TIGHT_TOL};
use crate::error::{Error, Result};
use crate::reduction::ReducedLpp;

/// Visits every `k`-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All vertices of the region, found by intersecting every `d`-subset of
/// constraint hyperplanes and keeping the feasible, distinct points.
///
/// With two free variables the vertices come back counterclockwise around
/// the region; otherwise in lexicographic order. The work grows
/// combinatorially with the number of rows, which is fine for desk-sized
/// problems and is what makes this a useful cross-check for the simplex path.
pub fn enumerate_vertices(lpp: &ReducedLpp) -> Result<Vec<Vertex>> {
    let d = lpp.d;
    let mut points: Vec<Vec<f64>> = Vec::new();
    for_each_combination(lpp.rows(), d, |rows| {
        let a: Vec<Vec<f64>> = rows.iter().map(|&r| lpp.lhs[r].clone()).collect();
        let b: Vec<f64> = rows.iter().map(|&r| lpp.rhs[r]).collect();
        let Some(x) = solve(&a, &b) else { return };
        if lpp.is_feasible(&x, TIGHT_TOL) && !points.iter().any(|p| dist(p, &x) <= TIGHT_TOL) {
            points.push(x);
        }
    });
    if points.is_empty() {
        return Err(Error::EmptyRegion);
    }
    for p in points.iter_mut().flatten() {
        if *p == 0.0 {
            *p = 0.0;
        }
    }
    if d == 2 {
        let cx = points.iter().map(|p| p[0]).sum::<f64>() / points.len() as f64;
        let cy = points.iter().map(|p| p[1]).sum::<f64>() / points.len() as f64;
        points.sort_by(|p, q| {
            let ap = (p[1] - cy).atan2(p[0] - cx);
            let aq = (q[1] - cy).atan2(q[0] - cx);
            ap.total_cmp(&aq)
        });
    } else {
        points.sort_by(|p, q| lex_cmp(p, q));
    }
    Ok(points
        .into_iter()
        .map(|point| {
            let active_set = lpp.tight_rows(&point, TIGHT_TOL);
            Vertex { point, active_set }
        })
        .collect())
}

/// The intersection of one constraint line with the region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub constraint: usize,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub length: f64,
}

/// Planar feasible region: vertices counterclockwise plus every constraint
/// line that touches it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

impl Region {
    /// Constraints contributing an edge of positive length, ascending.
    pub fn active_constraints(&self) -> Vec<usize> {
        self.edges.iter().filter(|e| e.length > TIGHT_TOL).map(|e| e.constraint).collect()
    }

    /// Segment or point rather than a polygon.
    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }
}

pub fn region(lpp: &ReducedLpp) -> Result<Region> {
    if lpp.d != 2 {
        return Err(Error::UnsupportedDimension {
            m: lpp.m,
            n: lpp.n,
            what: "planar geometry needs two free variables",
        });
    }
    let vertices = enumerate_vertices(lpp)?;
    let mut edges = Vec::new();
    for r in 1..=lpp.rows() {
        let on: Vec<&Vertex> = vertices.iter().filter(|v| v.active_set.contains(&r)).collect();
        let Some(first) = on.first() else { continue };
        let to = on
            .iter()
            .max_by(|a, b| dist(&first.point, &a.point).total_cmp(&dist(&first.point, &b.point)))
            .expect("non-empty");
        edges.push(Edge {
            constraint: r,
            from: first.point.clone(),
            to: to.point.clone(),
            length: dist(&first.point, &to.point),
        });
    }
    Ok(Region { vertices, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dms;
    use crate::reduction::build_constraints;

    fn lpp(a: &[f64], b: &[f64]) -> ReducedLpp {
        build_constraints(&Dms::new(a.to_vec(), b.to_vec()).unwrap())
    }

    #[test]
    fn combinations_are_complete() {
        let mut n = 0;
        for_each_combination(6, 2, |_| n += 1);
        assert_eq!(n, 15);
        let mut seen = Vec::new();
        for_each_combination(3, 3, |c| seen.push(c.to_vec()));
        assert_eq!(seen, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn polygon_fixture_vertices() {
        let vs = enumerate_vertices(&lpp(&[5.0, 3.0], &[4.0, 2.0, 2.0])).unwrap();
        let pts: Vec<Vec<f64>> = vs.iter().map(|v| v.point.clone()).collect();
        // counterclockwise starting from the lowest angle around the centroid
        let expected = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
        assert_eq!(pts.len(), 5);
        let start = pts.iter().position(|p| p == &vec![0.0, 0.0]).unwrap();
        for (k, e) in expected.iter().enumerate() {
            assert_eq!(pts[(start + k) % 5], e.to_vec());
        }
    }

    #[test]
    fn first_fixture_contains_chosen_vertex() {
        let vs = enumerate_vertices(&lpp(&[10.0, 25.0], &[5.0, 15.0, 15.0])).unwrap();
        let v = vs.iter().find(|v| v.point == vec![5.0, 15.0]).unwrap();
        assert_eq!(v.active_set, vec![1, 4]);
    }

    #[test]
    fn contradictory_rows_are_empty() {
        let mut l = lpp(&[10.0, 25.0], &[5.0, 15.0, 15.0]);
        l.rhs = vec![-1.0, -1.0, 1.0, 1.0, 0.0, 0.0];
        assert_eq!(enumerate_vertices(&l).unwrap_err(), Error::EmptyRegion);
    }

    #[test]
    fn region_edges() {
        let reg = region(&lpp(&[5.0, 3.0], &[4.0, 2.0, 2.0])).unwrap();
        assert_eq!(reg.active_constraints(), vec![2, 3, 4, 5, 6]);
        assert!(!reg.is_degenerate());
        let reg = region(&lpp(&[10.0, 25.0], &[5.0, 15.0, 15.0])).unwrap();
        assert_eq!(reg.active_constraints(), vec![1, 2, 3, 4]);
    }
}
