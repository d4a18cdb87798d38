//! Interactive sessions: one decision-taker, one estimate, at most one open
//! situation at a time. Every state change is an [`Event`]; replaying a
//! session's events rebuilds it exactly.

use serde::{Deserialize, Serialize};

use revtp_core::estimator::{
    convergence, make_observation, observation_from_plan, predict_plan, should_stop, ConvergencePoint,
    EstimateRecord, EstimateState, Observation, StopDecision, StopParams,
};
use revtp_core::io::{estimate_export, EstimateExport};
use revtp_core::lp::{enumerate_vertices, region, Edge};
use revtp_core::reduction::{build_constraints, reconstruct_plan, ReducedLpp};
use revtp_core::spectrum::{classify_tr, observation_vector, TrClassification};
use revtp_core::{ConstraintPair, Dms, Error, TransportPlan, Unlv};

/// Above this many candidate row subsets vertex lists are not enumerated.
const MAX_VERTEX_SUBSETS: u128 = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The human decides every situation.
    #[default]
    Learn,
    /// The model proposes, the human approves or corrects.
    Assist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionKind {
    Chosen,
    Approved,
    Corrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created {
        id: String,
        m: usize,
        n: usize,
        mode: Mode,
        window: Option<usize>,
        seed: u64,
    },
    Situation {
        step: usize,
        dms: Dms,
        generated: bool,
    },
    Decision {
        step: usize,
        free_vars: Vec<f64>,
        kind: DecisionKind,
    },
}

/// Session-level failures on top of the library errors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("no situation is pending")]
    NoPendingSituation,
    #[error("situation {0} is still waiting for a decision")]
    SituationPending(usize),
    #[error("session is in {0:?} mode")]
    WrongMode(Mode),
    #[error("event log is inconsistent: {0}")]
    Log(String),
}

impl SessionError {
    pub fn name(&self) -> &'static str {
        match self {
            SessionError::Core(e) => e.name(),
            SessionError::NoPendingSituation => "NoPendingSituation",
            SessionError::SituationPending(_) => "SituationPending",
            SessionError::WrongMode(_) => "WrongMode",
            SessionError::Log(_) => "LogError",
        }
    }
}

type Result<T> = std::result::Result<T, SessionError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexView {
    pub point: Vec<f64>,
    pub active_set: Vec<usize>,
    pub pair: Option<ConstraintPair>,
    pub rank: Option<u8>,
    pub weight: Option<f64>,
    pub plan: TransportPlan,
}

/// Everything a client needs to draw a situation and let someone pick a
/// vertex; computed once when the situation opens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub lpp: ReducedLpp,
    pub vertices: Vec<VertexView>,
    /// Empty beyond two free variables.
    pub edges: Vec<Edge>,
    pub classification: Option<TrClassification>,
    /// Set when the region is too large to list its vertices.
    pub vertices_omitted: bool,
}

fn choose(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

pub fn geometry(dms: &Dms) -> std::result::Result<Geometry, Error> {
    let lpp = build_constraints(dms);
    let with_plan = |point: Vec<f64>, active_set: Vec<usize>, pair, rank, weight| -> std::result::Result<VertexView, Error> {
        let plan = reconstruct_plan(dms, &point)?;
        Ok(VertexView { point, active_set, pair, rank, weight, plan })
    };
    if lpp.d == 2 {
        let classification = classify_tr(dms)?;
        let reg = region(&lpp)?;
        let vertices = reg
            .vertices
            .iter()
            .zip(&classification.vertices)
            .map(|(v, rv)| with_plan(v.point.clone(), v.active_set.clone(), Some(rv.pair), rv.rank, Some(rv.weight)))
            .collect::<std::result::Result<_, _>>()?;
        return Ok(Geometry { lpp, vertices, edges: reg.edges, classification: Some(classification), vertices_omitted: false });
    }
    if choose(lpp.rows() as u128, lpp.d as u128) > MAX_VERTEX_SUBSETS {
        return Ok(Geometry { lpp, vertices: Vec::new(), edges: Vec::new(), classification: None, vertices_omitted: true });
    }
    let classification = classify_tr(dms)?;
    let vertices = enumerate_vertices(&lpp)?
        .into_iter()
        .map(|v| {
            let weight = observation_vector(&v.active_set, lpp.m, lpp.n).ok().map(|(_, w)| w);
            with_plan(v.point, v.active_set, None, None, weight)
        })
        .collect::<std::result::Result<_, _>>()?;
    Ok(Geometry { lpp, vertices, edges: Vec::new(), classification: Some(classification), vertices_omitted: false })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Situation {
    pub step: usize,
    pub dms: Dms,
    pub generated: bool,
    pub geometry: Geometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub kind: DecisionKind,
    pub observation: Observation,
    pub plan: TransportPlan,
    pub estimate: EstimateRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub step: usize,
    pub estimate: Unlv,
    pub free_vars: Vec<f64>,
    pub plan: TransportPlan,
    pub active_pair: Option<ConstraintPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSeries {
    pub history: Vec<EstimateExport>,
    /// Angle between consecutive estimates, radians; first entry is `None`.
    pub angular_changes: Vec<Option<f64>>,
    /// Distance of each estimate to the final one.
    pub convergence: Vec<ConvergencePoint>,
    pub stop: StopDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub m: usize,
    pub n: usize,
    pub mode: Mode,
    pub seed: u64,
    pub stop: StopParams,
    state: EstimateState,
    pending: Option<Situation>,
    decisions: Vec<DecisionRecord>,
    /// Situations opened so far, including the pending one.
    opened: usize,
    generated: u64,
}

impl Session {
    pub fn new(id: String, m: usize, n: usize, mode: Mode, window: Option<usize>, seed: u64) -> Result<(Self, Event)> {
        if m < 2 || n < 2 {
            return Err(Error::Shape(format!("need at least 2x2, got {m}x{n}")).into());
        }
        let d = (m - 1) * (n - 1);
        let session = Session {
            id: id.clone(),
            m,
            n,
            mode,
            seed,
            stop: StopParams::default(),
            state: EstimateState::new(d, window)?,
            pending: None,
            decisions: Vec::new(),
            opened: 0,
            generated: 0,
        };
        Ok((session, Event::Created { id, m, n, mode, window, seed }))
    }

    /// Rebuilds a session from its event log.
    pub fn replay(events: &[Event]) -> Result<Self> {
        let Some(Event::Created { id, m, n, mode, window, seed }) = events.first() else {
            return Err(SessionError::Log("log must start with a created event".into()));
        };
        let (mut s, _) = Session::new(id.clone(), *m, *n, *mode, *window, *seed)?;
        for ev in &events[1..] {
            s.apply(ev)?;
        }
        Ok(s)
    }

    fn apply(&mut self, ev: &Event) -> Result<()> {
        match ev {
            Event::Created { .. } => Err(SessionError::Log("duplicate created event".into())),
            Event::Situation { step, dms, generated } => {
                let ev2 = self.open(dms.clone(), *generated)?;
                match ev2 {
                    Event::Situation { step: s, .. } if s == *step => Ok(()),
                    _ => Err(SessionError::Log(format!("situation step {step} out of order"))),
                }
            }
            Event::Decision { step, free_vars, kind } => {
                if self.pending.as_ref().map(|p| p.step) != Some(*step) {
                    return Err(SessionError::Log(format!("decision for step {step} without its situation")));
                }
                self.decide(free_vars, *kind).map(|_| ())
            }
        }
    }

    pub fn window(&self) -> Option<usize> {
        self.state.window()
    }

    pub fn state(&self) -> &EstimateState {
        &self.state
    }

    pub fn pending(&self) -> Option<&Situation> {
        self.pending.as_ref()
    }

    pub fn decisions(&self) -> &[DecisionRecord] {
        &self.decisions
    }

    pub fn estimate(&self) -> Option<Unlv> {
        self.state.estimate().ok()
    }

    /// Opens a situation supplied by the client.
    pub fn open(&mut self, dms: Dms, generated: bool) -> Result<Event> {
        if let Some(p) = &self.pending {
            return Err(SessionError::SituationPending(p.step));
        }
        if (dms.m(), dms.n()) != (self.m, self.n) {
            return Err(Error::Shape(format!(
                "session is {}x{}, situation is {}x{}",
                self.m,
                self.n,
                dms.m(),
                dms.n()
            ))
            .into());
        }
        let geometry = geometry(&dms)?;
        self.opened += 1;
        if generated {
            self.generated += 1;
        }
        let step = self.opened;
        self.pending = Some(Situation { step, dms: dms.clone(), generated, geometry });
        Ok(Event::Situation { step, dms, generated })
    }

    /// Opens the next situation of the session's seeded stream.
    pub fn generate(&mut self, range: (u32, u32)) -> Result<Event> {
        if let Some(p) = &self.pending {
            return Err(SessionError::SituationPending(p.step));
        }
        let dms = revtp_core::simulation::nth_situation(self.seed, self.generated, self.m, self.n, range)?;
        self.open(dms, true)
    }

    /// Records the decision for the pending situation and updates the
    /// estimate.
    pub fn decide(&mut self, free_vars: &[f64], kind: DecisionKind) -> Result<(Event, DecisionRecord)> {
        let pending = self.pending.as_ref().ok_or(SessionError::NoPendingSituation)?;
        let observation = make_observation(pending.step, &pending.dms, free_vars)?;
        self.commit(observation, kind)
    }

    /// Same as [`Session::decide`] with a full plan.
    pub fn decide_plan(&mut self, plan: &TransportPlan, kind: DecisionKind) -> Result<(Event, DecisionRecord)> {
        let pending = self.pending.as_ref().ok_or(SessionError::NoPendingSituation)?;
        let observation = observation_from_plan(pending.step, &pending.dms, plan)?;
        self.commit(observation, kind)
    }

    fn commit(&mut self, observation: Observation, kind: DecisionKind) -> Result<(Event, DecisionRecord)> {
        let plan = reconstruct_plan(&observation.dms, &observation.chosen_free_vars)?;
        let estimate = self.state.ingest(&observation)?.clone();
        let event = Event::Decision { step: observation.step, free_vars: observation.chosen_free_vars.clone(), kind };
        let record = DecisionRecord { kind, observation, plan, estimate };
        self.decisions.push(record.clone());
        self.pending = None;
        Ok((event, record))
    }

    pub fn proposal(&self) -> Result<Proposal> {
        let pending = self.pending.as_ref().ok_or(SessionError::NoPendingSituation)?;
        let estimate = self.state.estimate()?;
        let p = predict_plan(&estimate, &pending.dms)?;
        Ok(Proposal {
            step: pending.step,
            free_vars: p.solution.vertex.point,
            plan: p.plan,
            active_pair: p.solution.active_pair,
            estimate,
        })
    }

    pub fn approve(&mut self) -> Result<(Event, DecisionRecord)> {
        self.require(Mode::Assist)?;
        let proposal = self.proposal()?;
        self.decide(&proposal.free_vars, DecisionKind::Approved)
    }

    pub fn correct(&mut self, free_vars: &[f64]) -> Result<(Event, DecisionRecord)> {
        self.require(Mode::Assist)?;
        self.decide(free_vars, DecisionKind::Corrected)
    }

    fn require(&self, mode: Mode) -> Result<()> {
        if self.mode == mode {
            Ok(())
        } else {
            Err(SessionError::WrongMode(self.mode))
        }
    }

    pub fn series(&self) -> EstimateSeries {
        let history = self.state.history();
        let angular_changes = history
            .iter()
            .enumerate()
            .map(|(k, rec)| match (k.checked_sub(1).and_then(|j| history[j].estimate.as_ref()), &rec.estimate) {
                (Some(prev), Some(cur)) => Some(cur.angle(prev)),
                _ => None,
            })
            .collect();
        let reference: Vec<Unlv> = self.estimate().into_iter().collect();
        EstimateSeries {
            history: estimate_export(history),
            angular_changes,
            convergence: convergence(&self.state, &reference),
            stop: should_stop(&self.state, &self.stop),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dms(a: &[f64], b: &[f64]) -> Dms {
        Dms::new(a.to_vec(), b.to_vec()).unwrap()
    }

    fn session(mode: Mode) -> (Session, Vec<Event>) {
        let (s, ev) = Session::new("s".into(), 2, 3, mode, None, 9).unwrap();
        (s, vec![ev])
    }

    #[test]
    fn first_decision_estimate() {
        let (mut s, _) = session(Mode::Learn);
        s.open(dms(&[10.0, 25.0], &[5.0, 15.0, 15.0]), false).unwrap();
        let (_, rec) = s.decide(&[5.0, 15.0], DecisionKind::Chosen).unwrap();
        let e = rec.estimate.estimate.unwrap();
        assert!((e[0] + 0.924).abs() < 1e-3 && (e[1] - 0.383).abs() < 1e-3);
        assert!(s.pending().is_none());
    }

    #[test]
    fn one_open_situation_at_a_time() {
        let (mut s, _) = session(Mode::Learn);
        assert_eq!(s.decide(&[0.0, 0.0], DecisionKind::Chosen).unwrap_err(), SessionError::NoPendingSituation);
        s.generate((1, 100)).unwrap();
        assert_eq!(s.generate((1, 100)).unwrap_err(), SessionError::SituationPending(1));
    }

    #[test]
    fn interior_choice_is_rejected_and_state_kept() {
        let (mut s, _) = session(Mode::Learn);
        s.open(dms(&[10.0, 25.0], &[5.0, 15.0, 15.0]), false).unwrap();
        let err = s.decide(&[8.0, 14.0], DecisionKind::Chosen).unwrap_err();
        assert_eq!(err.name(), "NotAVertex");
        assert!(s.pending().is_some());
        assert_eq!(s.state().count(), 0);
    }

    #[test]
    fn replay_rebuilds_the_session() {
        let (mut s, mut log) = session(Mode::Assist);
        for _ in 0..6 {
            log.push(s.generate((1, 60)).unwrap());
            let g = &s.pending().unwrap().geometry;
            let v = g.vertices[g.vertices.len() / 2].point.clone();
            log.push(if s.state().count() == 0 {
                s.decide(&v, DecisionKind::Chosen).unwrap().0
            } else if s.state().count() % 2 == 0 {
                s.approve().unwrap().0
            } else {
                s.correct(&v).unwrap().0
            });
        }
        log.push(s.generate((1, 60)).unwrap());
        let text: Vec<String> = log.iter().map(|e| serde_json::to_string(e).unwrap()).collect();
        let parsed: Vec<Event> = text.iter().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(Session::replay(&parsed).unwrap(), s);
    }

    #[test]
    fn approve_needs_assist_mode() {
        let (mut s, _) = session(Mode::Learn);
        s.open(dms(&[10.0, 25.0], &[5.0, 15.0, 15.0]), false).unwrap();
        assert_eq!(s.approve().unwrap_err(), SessionError::WrongMode(Mode::Learn));
    }

    #[test]
    fn three_by_three_geometry_lists_vertices() {
        let g = geometry(&dms(&[3.0, 2.0, 4.0], &[4.0, 3.0, 2.0])).unwrap();
        assert!(!g.vertices.is_empty() && g.edges.is_empty());
        assert!(g.vertices.iter().all(|v| v.plan.x.len() == 3));
    }
}
