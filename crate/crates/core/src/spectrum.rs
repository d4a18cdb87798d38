//! The fixed constraint spectrum of a reduced transportation LP.
//!
//! The constraint matrix depends only on the problem size, so the set of
//! constraint normals (the spectrum) is the same for every situation. An
//! observed vertex picks two adjacent constraints; the normalized sum of
//! their normals is the observation vector, and the angle between them sets
//! how much the observation says about the objective: the wider the angle,
//! the larger the cone of objectives that select the vertex, and the smaller
//! the weight `1 - sin(angle / 2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{active_pair_at, maximize, region, ConstraintPair, TIGHT_TOL};
use crate::model::Dms;
use crate::reduction::{build_constraints, constraint_matrix, ReducedLpp, Unlv};

/// Unit normals of every reduced-LP row, in row order.
pub fn constraint_unlvs(m: usize, n: usize) -> Vec<Unlv> {
    constraint_matrix(m, n)
        .iter()
        .map(|row| Unlv::new(row).expect("constraint rows are nonzero"))
        .collect()
}

/// Pairs of distinct rows with parallel or anti-parallel normals.
pub fn parallel_pairs(m: usize, n: usize) -> Vec<ConstraintPair> {
    let e = constraint_unlvs(m, n);
    let mut out = Vec::new();
    for p in 0..e.len() {
        for q in p + 1..e.len() {
            if e[p].dot(e[q].components()).abs() >= 1.0 - 1e-12 {
                out.push(ConstraintPair::new(p + 1, q + 1));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPair {
    pub pair: ConstraintPair,
    /// Angle between the two normals, radians.
    pub angle: f64,
    /// Observation direction, `normalize(e_p + e_q)`.
    pub sum_unlv: Unlv,
    /// `|e_p + e_q| = 2 cos(angle / 2)`.
    pub sum_length: f64,
    /// 1 for 135 degrees, 2 for 90, 3 for 45; `None` for other angles.
    pub rank: Option<u8>,
    pub weight: f64,
}

fn rank_for_angle(angle: f64) -> Option<u8> {
    let r = 4.0 - angle.to_degrees() / 45.0;
    let rounded = r.round();
    ((r - rounded).abs() < 1e-9 && (1.0..=3.0).contains(&rounded)).then_some(rounded as u8)
}

/// Observation weight for a vertex of rank `r` (2x3 spectrum).
pub fn rank_weight(rank: u8) -> f64 {
    let angle = (4.0 - f64::from(rank)) * 45f64.to_radians();
    1.0 - (angle / 2.0).sin()
}

pub fn pair_info(pair: ConstraintPair, m: usize, n: usize) -> Result<SpectrumPair> {
    let e = constraint_unlvs(m, n);
    let (p, q) = (pair.first(), pair.second());
    if p == 0 || q > e.len() || p == q {
        return Err(Error::Shape(format!("pair {pair} is not two distinct rows of 1..={}", e.len())));
    }
    let (ep, eq) = (&e[p - 1], &e[q - 1]);
    let cos = ep.dot(eq.components());
    if cos.abs() >= 1.0 - 1e-12 {
        return Err(Error::ParallelPair(p, q));
    }
    let angle = cos.clamp(-1.0, 1.0).acos();
    let sum: Vec<f64> = ep.components().iter().zip(eq.components()).map(|(a, b)| a + b).collect();
    let sum_length = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(SpectrumPair {
        pair,
        angle,
        sum_unlv: Unlv::new(&sum)?,
        sum_length,
        rank: rank_for_angle(angle),
        weight: 1.0 - (angle / 2.0).sin(),
    })
}

/// Observation vector and weight for any number of active rows.
///
/// The direction is the normalized sum of the row normals; with sum length
/// `L` over `k` rows the weight is `1 - sqrt(1 - (L/k)^2)`, which equals
/// `1 - sin(angle/2)` for two rows. Beyond two free variables this is an
/// experimental extension.
pub fn observation_vector(rows: &[usize], m: usize, n: usize) -> Result<(Unlv, f64)> {
    if let [p, q] = rows {
        let info = pair_info(ConstraintPair::new(*p, *q), m, n)?;
        return Ok((info.sum_unlv, info.weight));
    }
    let e = constraint_unlvs(m, n);
    let d = (m - 1) * (n - 1);
    let mut sum = vec![0.0; d];
    for &r in rows {
        let er = e.get(r.wrapping_sub(1)).ok_or_else(|| Error::Shape(format!("no row {r}")))?;
        for (s, v) in sum.iter_mut().zip(er.components()) {
            *s += v;
        }
    }
    let len = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
    let k = rows.len() as f64;
    let ratio = (len / k).min(1.0);
    Ok((Unlv::new(&sum)?, 1.0 - (1.0 - ratio * ratio).sqrt()))
}

/// One vertex of a classified region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVertex {
    pub point: Vec<f64>,
    pub pair: ConstraintPair,
    pub rank: Option<u8>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrClassification {
    /// Rows contributing a facet (an edge of positive length in the plane).
    pub active_constraints: Vec<usize>,
    /// Empty beyond two free variables.
    pub vertices: Vec<RegionVertex>,
    /// Ascending.
    pub vertex_ranks: Vec<u8>,
    pub general_rank: Option<u32>,
    pub average_rank: Option<f64>,
    pub average_weight: Option<f64>,
    /// Catalogue row (1..=18) for 2x3 problems.
    pub type_id: Option<usize>,
    pub group: Option<usize>,
}

/// Classifies the feasible region of a situation by its active constraints
/// and the informativeness of its vertices.
pub fn classify_tr(dms: &Dms) -> Result<TrClassification> {
    let lpp = build_constraints(dms);
    if lpp.d != 2 {
        return Ok(TrClassification {
            active_constraints: facet_rows(&lpp)?,
            vertices: Vec::new(),
            vertex_ranks: Vec::new(),
            general_rank: None,
            average_rank: None,
            average_weight: None,
            type_id: None,
            group: None,
        });
    }
    let reg = region(&lpp)?;
    if reg.is_degenerate() {
        return Err(Error::DegenerateRegion);
    }
    let mut vertices = Vec::with_capacity(reg.vertices.len());
    for v in &reg.vertices {
        let pair = active_pair_at(v, &lpp, TIGHT_TOL)?;
        let info = pair_info(pair, lpp.m, lpp.n)?;
        vertices.push(RegionVertex { point: v.point.clone(), pair, rank: info.rank, weight: info.weight });
    }
    let active_constraints = reg.active_constraints();
    let mut vertex_ranks: Vec<u8> = vertices.iter().filter_map(|v| v.rank).collect();
    vertex_ranks.sort_unstable();
    let ranked = vertex_ranks.len() == vertices.len();
    let k = vertices.len() as f64;
    let general_rank = ranked.then(|| vertex_ranks.iter().map(|&r| u32::from(r)).sum::<u32>());
    let entry = CATALOGUE
        .iter()
        .find(|c| (lpp.m, lpp.n) == (2, 3) && c.active == active_constraints.as_slice());
    Ok(TrClassification {
        average_rank: general_rank.map(|g| f64::from(g) / k),
        average_weight: Some(vertices.iter().map(|v| v.weight).sum::<f64>() / k),
        general_rank,
        vertex_ranks,
        vertices,
        active_constraints,
        type_id: entry.map(|c| c.type_id),
        group: entry.map(|c| c.group),
    })
}

/// Rows defining a facet of the region, found by maximizing the uniform
/// slack of all other rows while holding the candidate row tight.
pub fn facet_rows(lpp: &ReducedLpp) -> Result<Vec<usize>> {
    let d = lpp.d;
    let mut out = Vec::new();
    let mut any_feasible = false;
    for i in 0..lpp.rows() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for j in 0..lpp.rows() {
            let mut row = lpp.lhs[j].clone();
            if j == i {
                row.push(0.0);
                a.push(row.clone());
                b.push(lpp.rhs[j]);
                a.push(row.iter().map(|v| -v).collect());
                b.push(-lpp.rhs[j]);
            } else {
                row.push(1.0);
                a.push(row);
                b.push(lpp.rhs[j]);
            }
        }
        let mut cap = vec![0.0; d + 1];
        cap[d] = 1.0;
        a.push(cap.clone());
        b.push(1.0);
        match maximize(&a, &b, &cap) {
            Ok(x) => {
                any_feasible = true;
                if x[d] > TIGHT_TOL {
                    out.push(i + 1);
                }
            }
            Err(Error::EmptyRegion) => {}
            Err(e) => return Err(e),
        }
    }
    if !any_feasible {
        return Err(Error::EmptyRegion);
    }
    Ok(out)
}

/// One of the 18 region types of the 2x3 problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogueEntry {
    pub type_id: usize,
    pub active: &'static [usize],
    /// Types that are rotations or reflections of each other share a group.
    pub group: usize,
}

pub const CATALOGUE: [CatalogueEntry; 18] = [
    CatalogueEntry { type_id: 1, active: &[1, 2, 5, 6], group: 5 },
    CatalogueEntry { type_id: 2, active: &[1, 2, 4, 5, 6], group: 7 },
    CatalogueEntry { type_id: 3, active: &[1, 2, 4, 6], group: 4 },
    CatalogueEntry { type_id: 4, active: &[1, 2, 3, 5, 6], group: 7 },
    CatalogueEntry { type_id: 5, active: &[1, 2, 3, 4, 5, 6], group: 9 },
    CatalogueEntry { type_id: 6, active: &[1, 3, 4, 5, 6], group: 8 },
    CatalogueEntry { type_id: 7, active: &[1, 3, 4, 6], group: 3 },
    CatalogueEntry { type_id: 8, active: &[1, 2, 3, 4, 6], group: 6 },
    CatalogueEntry { type_id: 9, active: &[1, 2, 3, 5], group: 4 },
    CatalogueEntry { type_id: 10, active: &[1, 3, 4, 5], group: 3 },
    CatalogueEntry { type_id: 11, active: &[1, 2, 3, 4, 5], group: 6 },
    CatalogueEntry { type_id: 12, active: &[1, 3, 4], group: 1 },
    CatalogueEntry { type_id: 13, active: &[1, 2, 3, 4], group: 5 },
    CatalogueEntry { type_id: 14, active: &[2, 5, 6], group: 1 },
    CatalogueEntry { type_id: 15, active: &[2, 4, 5, 6], group: 3 },
    CatalogueEntry { type_id: 16, active: &[2, 3, 4, 5, 6], group: 8 },
    CatalogueEntry { type_id: 17, active: &[2, 3, 5, 6], group: 3 },
    CatalogueEntry { type_id: 18, active: &[3, 4, 5, 6], group: 2 },
];

/// A catalogue row with its informativeness indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub type_id: usize,
    pub quantity: usize,
    pub active: Vec<usize>,
    pub vertex_ranks: Vec<u8>,
    pub general_rank: u32,
    pub average_rank: f64,
    pub average_weight: f64,
    pub group: usize,
}

/// Vertex pairs of a convex polygon bounded by `active`: consecutive rows in
/// the angular order of their normals.
pub fn cyclic_pairs(active: &[usize], m: usize, n: usize) -> Vec<ConstraintPair> {
    let e = constraint_unlvs(m, n);
    let mut rows = active.to_vec();
    rows.sort_by(|&p, &q| {
        let ap = e[p - 1][1].atan2(e[p - 1][0]);
        let aq = e[q - 1][1].atan2(e[q - 1][0]);
        ap.total_cmp(&aq)
    });
    (0..rows.len()).map(|k| ConstraintPair::new(rows[k], rows[(k + 1) % rows.len()])).collect()
}

/// Informativeness of every 2x3 region type.
pub fn informativeness_report(m: usize, n: usize) -> Result<Vec<ReportRow>> {
    if (m, n) != (2, 3) {
        return Err(Error::UnsupportedDimension { m, n, what: "the region catalogue covers 2x3 only" });
    }
    CATALOGUE
        .iter()
        .map(|c| {
            let mut ranks = Vec::new();
            let mut weight = 0.0;
            for pair in cyclic_pairs(c.active, m, n) {
                let info = pair_info(pair, m, n)?;
                ranks.push(info.rank.expect("2x3 pairs are ranked"));
                weight += info.weight;
            }
            ranks.sort_unstable();
            let k = ranks.len();
            let general_rank = ranks.iter().map(|&r| u32::from(r)).sum::<u32>();
            Ok(ReportRow {
                type_id: c.type_id,
                quantity: c.active.len(),
                active: c.active.to_vec(),
                general_rank,
                average_rank: f64::from(general_rank) / k as f64,
                average_weight: weight / k as f64,
                vertex_ranks: ranks,
                group: c.group,
            })
        })
        .collect()
}

/// CSV with the catalogue columns; list-valued cells are `;`-separated.
pub fn report_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "type",
        "quantity",
        "active",
        "ranks",
        "general_rank",
        "average_rank",
        "average_weight",
        "group",
    ])?;
    let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(";");
    for r in rows {
        w.write_record([
            r.type_id.to_string(),
            r.quantity.to_string(),
            join(&mut r.active.iter().map(ToString::to_string)),
            join(&mut r.vertex_ranks.iter().map(ToString::to_string)),
            r.general_rank.to_string(),
            format!("{:.3}", r.average_rank),
            format!("{:.3}", r.average_weight),
            r.group.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Observation vectors of the region where every constraint contributes an
/// edge: the vertex pairs of the full polygon.
pub fn polygon_spectrum(m: usize, n: usize) -> Result<Vec<SpectrumPair>> {
    if (m, n) != (2, 3) {
        return Err(Error::UnsupportedDimension { m, n, what: "polygon spectrum covers 2x3 only" });
    }
    let all: Vec<usize> = (1..=6).collect();
    cyclic_pairs(&all, m, n).into_iter().map(|p| pair_info(p, m, n)).collect()
}

/// The polygon observation vector closest to `direction`.
pub fn nearest_polygon_vector(direction: &Unlv, m: usize, n: usize) -> Result<SpectrumPair> {
    polygon_spectrum(m, n)?
        .into_iter()
        .min_by(|a, b| direction.distance(&a.sum_unlv).total_cmp(&direction.distance(&b.sum_unlv)))
        .ok_or(Error::EmptyRegion)
}

/// Situation whose region is the hexagon tangent to the circle of radius
/// `rho` centred at `(rho, rho)`: every constraint contributes an edge.
pub fn polygon_dms(m: usize, n: usize, rho: f64) -> Result<Dms> {
    if (m, n) != (2, 3) {
        return Err(Error::UnsupportedDimension { m, n, what: "polygon construction covers 2x3 only" });
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Domain(format!("radius {rho} must be positive")));
    }
    let s = 2f64.sqrt();
    let (b2, b3) = (2.0 * rho, 2.0 * rho);
    let a1 = (2.0 + s) * rho;
    let a2 = (2.0 + s) * rho;
    let b1 = a1 + a2 - b2 - b3;
    Dms::new(vec![a1, a2], vec![b1, b2, b3])
}
