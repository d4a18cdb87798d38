use revtp_core::estimator::{convergence, first_stop_step, EstimateState, StopParams};
use revtp_core::fixtures::{self, Label, PRINTED_OBJECTIVE};
use revtp_core::simulation::{effectiveness, run_experiment, ExperimentConfig, Truth};
use revtp_core::spectrum::{classify_tr, nearest_polygon_vector, pair_info, polygon_dms};
use revtp_core::{ConstraintPair, Unlv};

fn listed_trace_state() -> EstimateState {
    let mut s = EstimateState::new(2, None).unwrap();
    for row in fixtures::recorded_trace().iter().filter(|r| matches!(r.label, Label::Step(_))) {
        let info = pair_info(row.pair, 2, 3).unwrap();
        s.ingest_vector(&info.sum_unlv, info.weight).unwrap();
    }
    s
}

#[test]
fn listed_trace_distances() {
    let s = listed_trace_state();
    let truth = Unlv::new(&PRINTED_OBJECTIVE).unwrap();
    let polygon = pair_info(ConstraintPair::new(4, 5), 2, 3).unwrap().sum_unlv;
    let series = convergence(&s, &[truth, polygon]);
    assert!((series[0].distances[0].unwrap() - 0.9158).abs() < 1e-3);
    let last = &series[24].distances;
    assert!((last[1].unwrap() - 0.0354).abs() < 1e-3);
    let fin = s.estimate().unwrap();
    assert!((fin[0] + 0.731501).abs() < 1e-5 && (fin[1] - 0.681840).abs() < 1e-5);
    assert_eq!(nearest_polygon_vector(&fin, 2, 3).unwrap().pair, ConstraintPair::new(4, 5));
}

#[test]
fn listed_trace_stops_at_nineteen() {
    let s = listed_trace_state();
    assert_eq!(first_stop_step(s.history(), &StopParams::default()), Some(19));
    let strict = StopParams { eps_mean: 1e-6, ..StopParams::default() };
    assert_eq!(first_stop_step(s.history(), &strict), None);
}

#[test]
fn solver_trace_differs_from_listing_only_from_row_16() {
    let res = run_experiment(&ExperimentConfig::fixture()).unwrap();
    let listed = fixtures::recorded_trace();
    for (rec, row) in res.steps().zip(&listed) {
        let sums = rec.sums.as_ref().unwrap();
        let close = (sums[0] - row.sums.unwrap()[0]).abs() < 1e-3 && (sums[1] - row.sums.unwrap()[1]).abs() < 1e-3;
        assert_eq!(close, rec.step < 16, "step {}", rec.step);
    }
    assert_eq!(res.records[15].active_pair, Some(ConstraintPair::new(4, 5)));
    let fin = res.final_estimate.unwrap();
    assert!((fin[0] + 0.7244).abs() < 1e-3 && (fin[1] - 0.6894).abs() < 1e-3);
}

#[test]
fn fixture_decisions_are_reproduced() {
    let res = run_experiment(&ExperimentConfig::fixture()).unwrap();
    for (rec, listed) in res.records.iter().zip(fixtures::recorded_decisions()) {
        assert_eq!(rec.decision, listed.plan, "step {}", rec.step);
        if let Some(norm) = listed.of_norm {
            assert!((rec.plan_cost.unwrap().normalized - norm).abs() < 1e-3);
        }
    }
    let control = res.records.last().unwrap();
    assert!(control.control);
    assert_eq!(control.free_vars, vec![0.0, 2.0]);
}

#[test]
fn same_decisions_from_printed_direction() {
    let mut cfg = ExperimentConfig::fixture();
    let by_costs = run_experiment(&cfg).unwrap();
    cfg.truth = Truth::Direction(PRINTED_OBJECTIVE.to_vec());
    let by_direction = run_experiment(&cfg).unwrap();
    for (a, b) in by_costs.records.iter().zip(&by_direction.records) {
        assert_eq!(a.decision, b.decision);
    }
}

#[test]
fn effectiveness_of_truth_and_of_a_bad_estimate() {
    let res = run_experiment(&ExperimentConfig::fixture()).unwrap();
    let truth = res.truth.clone();
    let set = res.dms_set();
    assert_eq!(effectiveness(&res, &truth, &set).unwrap(), 1.0);
    // pretend the run ended pointing the opposite way
    let mut flipped = res.clone();
    flipped.final_estimate = Some(Unlv::new(&[0.225, -0.974]).unwrap());
    assert!(effectiveness(&flipped, &truth, &set).unwrap() < 1.0);
}

#[test]
fn polygon_constructions() {
    let hexagon = classify_tr(&polygon_dms(2, 3, 1.0).unwrap()).unwrap();
    assert_eq!(hexagon.active_constraints, vec![1, 2, 3, 4, 5, 6]);
    assert_eq!(hexagon.general_rank, Some(16));
    let pentagon = classify_tr(&fixtures::polygon_fixture()).unwrap();
    assert_eq!(pentagon.active_constraints, vec![2, 3, 4, 5, 6]);
    assert_eq!(pentagon.type_id, Some(16));
}

#[test]
fn first_situation_region() {
    let cls = classify_tr(&fixtures::observation_sample()[0]).unwrap();
    assert_eq!(cls.active_constraints, vec![1, 2, 3, 4]);
    assert_eq!(cls.vertex_ranks, vec![1, 1, 3, 3]);
    assert!((cls.average_weight.unwrap() - 0.347).abs() < 1e-3);
}
