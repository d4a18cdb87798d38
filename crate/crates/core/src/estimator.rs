//! Single-point step-by-step estimation of the planner's objective direction.
//!
//! Every observed decision contributes its weighted observation vector
//! `beta_j * e_j` to a running sum; the estimate after step `k` is that sum
//! scaled to unit length. The normalization is the only discounting: as the
//! sum grows, each new observation moves the estimate less. An optional
//! window of `K` steps restricts the sum to the most recent observations.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{
    active_pair_at, dist, enumerate_vertices, independent_rows, solve_max, ConstraintPair, Solution,
    Vertex, TIGHT_TOL,
};
use crate::model::{check_feasible, Dms, TransportPlan};
use crate::reduction::{build_constraints, reconstruct_plan, Unlv};
use crate::spectrum::observation_vector;

/// Relative distance within which a chosen point is matched to a vertex.
pub const VERTEX_MATCH_TOL: f64 = 1e-6;

/// One observed decision, reduced to its observation vector and weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub step: usize,
    pub dms: Dms,
    /// The vertex the decision corresponds to, in free-variable coordinates.
    pub chosen_free_vars: Vec<f64>,
    /// Adjacent constraint pair at the vertex (two free variables only).
    pub active_pair: Option<ConstraintPair>,
    /// Rows combined into the observation vector.
    pub active_rows: Vec<usize>,
    pub obs_unlv: Unlv,
    pub weight: f64,
}

/// Turns a chosen vertex into an observation.
///
/// The point must be a vertex of the situation's feasible region; interior
/// points and points in the middle of an edge say nothing about the objective
/// beyond what a vertex says and are rejected with [`Error::NotAVertex`].
pub fn make_observation(step: usize, dms: &Dms, chosen_free_vars: &[f64]) -> Result<Observation> {
    let lpp = build_constraints(dms);
    if chosen_free_vars.len() != lpp.d {
        return Err(Error::DimensionMismatch { expected: lpp.d, got: chosen_free_vars.len() });
    }
    // rejects points outside the region
    reconstruct_plan(dms, chosen_free_vars)?;
    let scale = 1.0 + lpp.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);

    let (point, active_pair, active_rows) = if lpp.d == 2 {
        let vertex = enumerate_vertices(&lpp)?
            .into_iter()
            .find(|v| dist(&v.point, chosen_free_vars) <= VERTEX_MATCH_TOL * scale)
            .ok_or(Error::NotAVertex)?;
        let pair = active_pair_at(&vertex, &lpp, TIGHT_TOL)?;
        (vertex.point, Some(pair), vec![pair.first(), pair.second()])
    } else {
        let tight = lpp.tight_rows(chosen_free_vars, VERTEX_MATCH_TOL * scale);
        let zero_based: Vec<usize> = tight.iter().map(|r| r - 1).collect();
        if independent_rows(&lpp.lhs, &zero_based, lpp.d).len() < lpp.d {
            return Err(Error::NotAVertex);
        }
        (chosen_free_vars.to_vec(), None, tight)
    };
    let (obs_unlv, weight) = observation_vector(&active_rows, lpp.m, lpp.n)?;
    Ok(Observation {
        step,
        dms: dms.clone(),
        chosen_free_vars: point,
        active_pair,
        active_rows,
        obs_unlv,
        weight,
    })
}

/// Same as [`make_observation`] for a full plan.
pub fn observation_from_plan(step: usize, dms: &Dms, plan: &TransportPlan) -> Result<Observation> {
    let scale = dms.total().max(1.0);
    let report = check_feasible(plan, dms, 1e-9 * scale);
    if !report.is_feasible() {
        return Err(Error::Domain(format!("plan violates the situation: {:?}", report.violations)));
    }
    make_observation(step, dms, &plan.free_vars())
}

/// Estimate after one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub step: usize,
    /// Weighted observation sums over the active window.
    pub sums: Vec<f64>,
    /// `None` when the sums cancel.
    pub estimate: Option<Unlv>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateState {
    dim: usize,
    window: Option<usize>,
    sums: Vec<f64>,
    count: usize,
    history: Vec<EstimateRecord>,
    /// Weighted vectors currently inside the window (finite windows only).
    buffer: VecDeque<Vec<f64>>,
}

impl EstimateState {
    /// `window = None` sums over every observation.
    pub fn new(dim: usize, window: Option<usize>) -> Result<Self> {
        if window == Some(0) {
            return Err(Error::Domain("window length must be at least 1".into()));
        }
        Ok(EstimateState {
            dim,
            window,
            sums: vec![0.0; dim],
            count: 0,
            history: Vec::new(),
            buffer: VecDeque::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> Option<usize> {
        self.window
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn history(&self) -> &[EstimateRecord] {
        &self.history
    }

    /// Adds one observation's weighted vector.
    pub fn ingest(&mut self, obs: &Observation) -> Result<&EstimateRecord> {
        self.ingest_vector(&obs.obs_unlv, obs.weight)
    }

    pub fn ingest_vector(&mut self, direction: &Unlv, weight: f64) -> Result<&EstimateRecord> {
        if direction.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: direction.dim() });
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::Domain(format!("observation weight {weight} must be positive")));
        }
        let weighted: Vec<f64> = direction.components().iter().map(|e| weight * e).collect();
        match self.window {
            None => {
                for (s, v) in self.sums.iter_mut().zip(&weighted) {
                    *s += v;
                }
            }
            Some(k) => {
                if self.buffer.len() == k {
                    self.buffer.pop_front();
                }
                self.buffer.push_back(weighted);
                // re-summed in arrival order so that a window longer than the
                // run reproduces the unwindowed sums exactly
                self.sums = vec![0.0; self.dim];
                for w in &self.buffer {
                    for (s, v) in self.sums.iter_mut().zip(w) {
                        *s += v;
                    }
                }
            }
        }
        self.count += 1;
        let estimate = normalized(&self.sums);
        self.history.push(EstimateRecord { step: self.count, sums: self.sums.clone(), estimate });
        Ok(self.history.last().expect("just pushed"))
    }

    /// Current unit-length estimate.
    pub fn estimate(&self) -> Result<Unlv> {
        match self.history.last() {
            None => Err(Error::NoObservations),
            Some(rec) => rec.estimate.clone().ok_or(Error::ZeroSum),
        }
    }
}

fn normalized(sums: &[f64]) -> Option<Unlv> {
    let norm = sums.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 1e-12 {
        return None;
    }
    Unlv::new(sums).ok()
}

/// Distances from each step's estimate to each reference direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub step: usize,
    /// One entry per reference, `None` where the estimate was undefined.
    pub distances: Vec<Option<f64>>,
}

pub fn convergence(state: &EstimateState, references: &[Unlv]) -> Vec<ConvergencePoint> {
    state
        .history
        .iter()
        .map(|rec| ConvergencePoint {
            step: rec.step,
            distances: references
                .iter()
                .map(|r| rec.estimate.as_ref().map(|e| e.distance(r)))
                .collect(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopParams {
    /// Number of most recent angular changes inspected.
    pub window: usize,
    /// Threshold on their mean, radians.
    pub eps_mean: f64,
    /// Threshold on their standard deviation, radians.
    pub eps_std: f64,
}

impl Default for StopParams {
    fn default() -> Self {
        StopParams { window: 5, eps_mean: 0.02, eps_std: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopDecision {
    pub stop: bool,
    pub step: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

/// Stopping rule on the latest estimates: stop once the mean and standard
/// deviation of the last `window` angular changes both fall below their
/// thresholds. Never stops before more than `window` steps were seen.
pub fn should_stop(state: &EstimateState, params: &StopParams) -> StopDecision {
    stop_at(&state.history, state.history.len(), params)
}

/// First step at which [`should_stop`] would have fired on this history.
pub fn first_stop_step(history: &[EstimateRecord], params: &StopParams) -> Option<usize> {
    (1..=history.len()).find(|&k| stop_at(history, k, params).stop)
}

fn stop_at(history: &[EstimateRecord], k: usize, params: &StopParams) -> StopDecision {
    let w = params.window;
    let undecided = StopDecision { stop: false, step: k, mean: None, std: None };
    if w == 0 || k <= w {
        return undecided;
    }
    let mut deltas = Vec::with_capacity(w);
    for i in k - w..k {
        match (&history[i].estimate, &history[i - 1].estimate) {
            (Some(cur), Some(prev)) => deltas.push(cur.angle(prev)),
            _ => return undecided,
        }
    }
    let mean = deltas.iter().sum::<f64>() / w as f64;
    let std = (deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / w as f64).sqrt();
    StopDecision {
        stop: mean < params.eps_mean && std < params.eps_std,
        step: k,
        mean: Some(mean),
        std: Some(std),
    }
}

/// Plan proposed by an objective direction for a situation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub plan: TransportPlan,
    pub solution: Solution,
}

pub fn predict_plan(estimate: &Unlv, dms: &Dms) -> Result<Prediction> {
    let lpp = build_constraints(dms);
    let solution = solve_max(&lpp, estimate.components())?;
    let plan = reconstruct_plan(dms, &solution.vertex.point)?;
    Ok(Prediction { plan, solution })
}

/// The vertex a prediction picked, for comparing decisions.
pub fn same_vertex(a: &Vertex, b: &Vertex) -> bool {
    let scale = 1.0 + a.point.iter().chain(&b.point).map(|v| v.abs()).fold(0.0, f64::max);
    dist(&a.point, &b.point) <= TIGHT_TOL * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dms(a: &[f64], b: &[f64]) -> Dms {
        Dms::new(a.to_vec(), b.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn row1() -> Dms {
        dms(&[10.0, 25.0], &[5.0, 15.0, 15.0])
    }

    #[test]
    fn observation_from_first_decision() {
        let o = make_observation(1, &row1(), &[5.0, 15.0]).unwrap();
        assert_eq!(o.active_pair, Some(ConstraintPair::new(1, 4)));
        assert!(close(o.obs_unlv[0], -0.924, 5e-4) && close(o.obs_unlv[1], 0.383, 5e-4));
        assert!(close(o.weight, 0.076, 5e-4));

        let o = make_observation(6, &dms(&[65.0, 70.0], &[56.0, 43.0, 36.0]), &[0.0, 36.0]).unwrap();
        assert_eq!(o.active_pair, Some(ConstraintPair::new(4, 5)));
        assert!(close(o.obs_unlv[0], -0.707, 5e-4) && close(o.obs_unlv[1], 0.707, 5e-4));
        assert!(close(o.weight, 0.293, 5e-4));
    }

    #[test]
    fn non_vertices_are_rejected() {
        assert_eq!(make_observation(1, &row1(), &[6.0, 14.5]).unwrap_err(), Error::NotAVertex);
        // midpoint of edge 4
        assert_eq!(make_observation(1, &row1(), &[7.5, 15.0]).unwrap_err(), Error::NotAVertex);
        assert!(matches!(
            make_observation(1, &row1(), &[0.0, 0.0]),
            Err(Error::InfeasibleFreeVars { .. })
        ));
    }

    #[test]
    fn plans_are_accepted_too() {
        let plan = TransportPlan::new(vec![vec![0.0, 10.0, 0.0], vec![5.0, 5.0, 15.0]]);
        let o = observation_from_plan(1, &row1(), &plan).unwrap();
        assert_eq!(o.chosen_free_vars, vec![5.0, 15.0]);
        let bad = TransportPlan::new(vec![vec![1.0, 10.0, 0.0], vec![5.0, 5.0, 15.0]]);
        assert!(observation_from_plan(1, &row1(), &bad).is_err());
    }

    #[test]
    fn first_five_steps_accumulate() {
        let mut st = EstimateState::new(2, None).unwrap();
        let o = make_observation(1, &row1(), &[5.0, 15.0]).unwrap();
        for _ in 0..5 {
            st.ingest(&o).unwrap();
        }
        assert!(close(st.sums()[0], -0.352, 1e-3) && close(st.sums()[1], 0.146, 1e-3));
        let e = st.estimate().unwrap();
        assert!(close(e[0], -0.924, 5e-4) && close(e[1], 0.383, 5e-4));

        let o6 = make_observation(6, &dms(&[65.0, 70.0], &[56.0, 43.0, 36.0]), &[0.0, 36.0]).unwrap();
        st.ingest(&o6).unwrap();
        assert!(close(st.sums()[0], -0.559, 1e-3) && close(st.sums()[1], 0.353, 1e-3));
        let e = st.estimate().unwrap();
        assert!(close(e[0], -0.846, 1e-3) && close(e[1], 0.534, 1e-3));
    }

    #[test]
    fn window_of_one_tracks_last_observation() {
        let mut st = EstimateState::new(2, Some(1)).unwrap();
        let a = Unlv::new(&[-1.0, 1.0]).unwrap();
        let b = Unlv::new(&[0.3, 0.9]).unwrap();
        st.ingest_vector(&a, 0.5).unwrap();
        st.ingest_vector(&b, 0.1).unwrap();
        assert_eq!(st.estimate().unwrap(), b);
        assert!(EstimateState::new(2, Some(0)).is_err());
    }

    #[test]
    fn empty_and_cancelling_states() {
        let mut st = EstimateState::new(2, None).unwrap();
        assert_eq!(st.estimate().unwrap_err(), Error::NoObservations);
        st.ingest_vector(&Unlv::new(&[1.0, 0.0]).unwrap(), 0.5).unwrap();
        st.ingest_vector(&Unlv::new(&[-1.0, 0.0]).unwrap(), 0.5).unwrap();
        assert_eq!(st.estimate().unwrap_err(), Error::ZeroSum);
        let err = st.ingest_vector(&Unlv::new(&[1.0, 0.0, 0.0]).unwrap(), 0.5).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, got: 3 });
    }

    #[test]
    fn convergence_distances() {
        let mut st = EstimateState::new(2, None).unwrap();
        let e = Unlv::new(&[-0.6, 0.8]).unwrap();
        st.ingest_vector(&e, 0.3).unwrap();
        let c = convergence(&st, &[e.clone(), Unlv::new(&[0.0, 1.0]).unwrap()]);
        assert_eq!(c[0].distances[0], Some(0.0));
        let d = c[0].distances[1].unwrap();
        assert!(close(d, (0.36f64 + 0.04).sqrt(), 1e-12));
    }

    #[test]
    fn stopping_rule() {
        let params = StopParams::default();
        let mut st = EstimateState::new(2, None).unwrap();
        let e = Unlv::new(&[0.0, 1.0]).unwrap();
        for k in 1..=5 {
            st.ingest_vector(&e, 0.2).unwrap();
            assert!(!should_stop(&st, &params).stop, "stopped at k = {k}");
        }
        st.ingest_vector(&e, 0.2).unwrap();
        let d = should_stop(&st, &params);
        assert!(d.stop);
        assert_eq!(d.mean, Some(0.0));
        assert_eq!(first_stop_step(st.history(), &params), Some(6));
    }

    #[test]
    fn predictions() {
        let e = Unlv::new(&[0.0, 1.0]).unwrap();
        let p = predict_plan(&e, &row1()).unwrap();
        assert_eq!(p.solution.vertex.point, vec![5.0, 15.0]);
        assert_eq!(p.plan.x, vec![vec![0.0, 10.0, 0.0], vec![5.0, 5.0, 15.0]]);

        let first = Unlv::new(&[-0.9238795325112867, 0.3826834323650898]).unwrap();
        let p = predict_plan(&first, &dms(&[65.0, 70.0], &[56.0, 43.0, 36.0])).unwrap();
        assert_eq!(p.solution.vertex.point, vec![0.0, 36.0]);
    }

    #[test]
    fn larger_problems_use_tight_rows() {
        let d = dms(&[3.0, 3.0, 3.0], &[3.0, 3.0, 3.0]);
        let e = Unlv::new(&[1.0, -1.0, -1.0, 1.0]).unwrap();
        let p = predict_plan(&e, &d).unwrap();
        let o = make_observation(1, &d, &p.solution.vertex.point).unwrap();
        assert_eq!(o.active_pair, None);
        assert!(o.active_rows.len() >= 4);
        assert!(o.weight > 0.0 && o.weight < 1.0);
    }
}
