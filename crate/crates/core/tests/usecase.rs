use geese_core::catalog::{default_catalog, Modality};
use geese_core::exec::ExecMode;
use geese_core::planner::usecase::{
    combined_request, discrepancy_report, plan_combined, BetaScheme, Case,
};
use geese_core::planner::{build_model, oracle_enumerate, CapacityEnd, ConstraintId, OracleStatus};

#[test]
fn combined_plan_uses_no_aerial_units() {
    let cat = default_catalog();
    let out = plan_combined(&cat).unwrap();
    let p = out.plan().expect("combined case is feasible");
    assert_eq!(p.units_of(Modality::Aerial), 0);
    assert_eq!(p.units_of(Modality::Underwater), 0);
    assert!(p.capacity_total >= 1500);
    let model = build_model(&combined_request(), &cat).unwrap();
    let o = oracle_enumerate(&model).unwrap();
    assert_eq!(o.plan().unwrap().selection(), p.selection());
}

#[test]
fn published_combined_selection_is_optimal_somewhere_in_the_sweep() {
    let cat = default_catalog();
    let r = discrepancy_report(Case::Combined, &cat, ExecMode::default()).unwrap();
    assert_eq!(r.oracle.status, OracleStatus::CostEqual);
    assert!(r.oracle.identical_assignment);
    assert!(!r.matches_by_default());
    // tau = 500 ms and a fourth ground unit make it optimal under either beta scheme
    assert_eq!(r.matching_points.len(), 2);
    for p in &r.matching_points {
        assert_eq!(p.response_bound_ms, 500.0);
        assert_eq!(p.capacity_end, CapacityEnd::Low);
        assert_eq!(p.ground_fleet_bound, 4);
    }
    assert!(r.matching_points.iter().any(|p| p.beta == BetaScheme::Category));
}

#[test]
fn published_single_location_selections_fall_short_of_the_workload() {
    let cat = default_catalog();
    for case in [Case::LocationA, Case::LocationB] {
        let r = discrepancy_report(case, &cat, ExecMode::default()).unwrap();
        assert!(r.published_violations.contains(&ConstraintId::Workload), "{case:?}");
        assert!(r.published_capacity < 1500);
        assert!(r.matching_points.is_empty(), "{case:?}");
        assert_eq!(r.oracle.status, OracleStatus::CostEqual);
        assert!(r.plan_selection.is_some());
    }
}
