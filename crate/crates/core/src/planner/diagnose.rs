//! Names the constraints that make a model infeasible and by how much.

use super::model::AllocationModel;
use super::oracle::{decode, expand, groups_where, space_of};
use super::{Certificate, ConstraintId, Infeasibility, Violation};

/// Joint response/workload scans larger than this fall back to relaxations.
const JOINT_SCAN_LIMIT: u128 = 2_000_000;

fn violation(constraint: ConstraintId, shortfall: f64) -> Violation {
    Violation { constraint, shortfall }
}

/// Diagnoses a model the solver found infeasible.
///
/// Shortfalls are in the constraint's own unit: users for workload, ms for
/// response, seconds for the round trip, extra units for the fleet bound and
/// 1 for modality.
pub fn diagnose(model: &AllocationModel) -> Infeasibility {
    let mut violated = Vec::new();
    let vars = &model.variables;
    let w = u64::from(model.workload_users);

    if !vars.iter().any(|v| v.modality_allowed) {
        violated.push(violation(ConstraintId::Modality, 1.0));
    } else {
        let reachable: Vec<_> = vars.iter().filter(|v| v.modality_allowed && v.fits).collect();
        let any_roundtrip = reachable
            .iter()
            .any(|v| v.endurance_s.is_some_and(|e| v.tour_s <= e));
        if !reachable.is_empty() && !any_roundtrip {
            let gap = reachable
                .iter()
                .map(|v| v.tour_s - v.endurance_s.unwrap_or(0.0))
                .fold(f64::INFINITY, f64::min);
            violated.push(violation(ConstraintId::Roundtrip, gap));
        }
    }

    // capacity reachable within the fleet bounds
    let mut max_cap = 0u64;
    let mut best_unit = 0u64;
    for (u, (_, bound)) in model.fleet.iter().enumerate() {
        let cap = vars
            .iter()
            .filter(|v| v.uav_index == u && v.upper_bound > 0)
            .map(|v| u64::from(v.capacity))
            .max()
            .unwrap_or(0);
        max_cap += u64::from(*bound) * cap;
        best_unit = best_unit.max(cap);
    }
    if max_cap < w {
        let short = w - max_cap;
        violated.push(violation(ConstraintId::Workload, short as f64));
        if best_unit > 0 {
            violated.push(violation(ConstraintId::Fleet, short.div_ceil(best_unit) as f64));
        }
    } else if let Some(gap) = response_gap(model) {
        violated.push(violation(ConstraintId::Response, gap));
    }

    if violated.is_empty() {
        // every single constraint is satisfiable; only their combination is not
        violated.push(violation(ConstraintId::Response, 0.0));
    }
    violated.sort_by_key(|v| v.constraint);
    Infeasibility {
        certificate: Certificate::Infeasible,
        workload_users: model.workload_users,
        response_bound_ms: model.response_bound_ms,
        violated,
    }
}

/// How far the best capacity-feasible selection misses the response bound.
fn response_gap(model: &AllocationModel) -> Option<f64> {
    let tau = model.response_bound_ms;
    let groups = groups_where(model, |v| v.upper_bound > 0);
    let size = space_of(model, &groups);
    if size <= JOINT_SCAN_LIMIT {
        let groups = expand(model, groups);
        let mut counts = vec![0u32; model.variables.len()];
        let mut best = f64::INFINITY;
        for idx in 0..size as usize {
            decode(&groups, idx, &mut counts);
            let e = model.evaluate(&counts);
            if e.capacity < u64::from(model.workload_users) {
                continue;
            }
            if let Some(m) = e.mean_response_ms {
                best = best.min(m);
            }
        }
        return best.is_finite().then(|| (best - tau).max(0.0));
    }
    // relaxation: even the fastest single pair is too slow
    let fastest = (0..model.variables.len())
        .filter(|&i| model.variables[i].upper_bound > 0)
        .filter_map(|i| {
            let total = u64::from(model.variables[i].capacity);
            model.unit_response_ms(i, total)
        })
        .fold(f64::INFINITY, f64::min);
    fastest.is_finite().then(|| (fastest - tau).max(0.0))
}
