//! The crowd-protest scenario: a crowd of about 1500 users gathers at
//! location A, then moves to location B.
//!
//! Besides the requests themselves this module carries the published
//! selections for each case and a calibration sweep that looks for settings
//! under which those selections come out optimal. Anything that still does
//! not match is reported with an oracle check of the plan we do produce.

use serde::{Deserialize, Serialize};

use super::model::{build_model, AllocationModel, CapacityEnd, CostOverrides, DeploymentRequest, Leg};
use super::oracle::{cross_check, OracleCheck};
use super::{solve, ConstraintId, PlanError, SolveOutcome};
use crate::catalog::{Catalog, Modality};
use crate::exec::ExecMode;

pub const WORKLOAD_USERS: u32 = 1500;
pub const RESPONSE_BOUND_MS: f64 = 2000.0;

const DWELL_A_S: f64 = 3600.0;
const DWELL_B_S: f64 = 7200.0;
const SOURCE_TO_A_M: f64 = 300.0;
const A_TO_B_M: f64 = 1200.0;
const B_TO_SOURCE_M: f64 = 1000.0;

const GROUND_UAV: &str = "romeo-v2";

fn leg_a() -> Leg {
    Leg {
        location_id: "A".into(),
        allowed_modalities: Modality::ALL.into_iter().collect(),
        dwell_s: DWELL_A_S,
        distance_from_prev_m: SOURCE_TO_A_M,
    }
}

fn leg_b(distance_from_prev_m: f64) -> Leg {
    Leg {
        location_id: "B".into(),
        allowed_modalities: [Modality::Aerial, Modality::Ground].into_iter().collect(),
        dwell_s: DWELL_B_S,
        distance_from_prev_m,
    }
}

fn request(legs: Vec<Leg>, return_distance_m: Option<f64>) -> DeploymentRequest {
    DeploymentRequest {
        workload_users: WORKLOAD_USERS,
        response_bound_ms: RESPONSE_BOUND_MS,
        legs,
        return_distance_m,
        response_metric: Default::default(),
        response_form: Default::default(),
        capacity_end: Default::default(),
        cost_overrides: None,
    }
}

/// Location A alone: out and back.
pub fn location_a_request() -> DeploymentRequest {
    request(vec![leg_a()], None)
}

/// Location B alone, reached directly from the source.
pub fn location_b_request() -> DeploymentRequest {
    request(vec![leg_b(B_TO_SOURCE_M)], None)
}

/// One fleet serving A, then re-allocated to B, then home.
pub fn combined_request() -> DeploymentRequest {
    request(vec![leg_a(), leg_b(A_TO_B_M)], Some(B_TO_SOURCE_M))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    LocationA,
    LocationB,
    Combined,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::LocationA, Case::LocationB, Case::Combined];

    pub fn request(self) -> DeploymentRequest {
        match self {
            Case::LocationA => location_a_request(),
            Case::LocationB => location_b_request(),
            Case::Combined => combined_request(),
        }
    }

    /// The published (uav, cloudlet, count) selection.
    pub fn published_selection(self) -> Vec<(String, String, u32)> {
        let rows: &[(&str, &str, u32)] = match self {
            Case::LocationA => &[("powerray", "cat2-type2", 1), (GROUND_UAV, "cat3-type3", 2)],
            Case::LocationB => &[(GROUND_UAV, "cat3-type2", 2), (GROUND_UAV, "cat4-type2", 1)],
            Case::Combined => &[(GROUND_UAV, "cat3-type2", 2), (GROUND_UAV, "cat4-type1", 2)],
        };
        rows.iter()
            .map(|(u, c, n)| (u.to_string(), c.to_string(), *n))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaScheme {
    /// beta = weight category (1..4).
    Category,
    /// beta = 1 for every cloudlet.
    Unit,
}

/// One point of the calibration sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub response_bound_ms: f64,
    pub capacity_end: CapacityEnd,
    pub ground_fleet_bound: u32,
    pub beta: BetaScheme,
}

impl SweepPoint {
    pub fn grid() -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for tau in [2000.0, 1000.0, 500.0] {
            for capacity_end in [CapacityEnd::Low, CapacityEnd::High] {
                for ground_fleet_bound in [3, 4] {
                    for beta in [BetaScheme::Category, BetaScheme::Unit] {
                        out.push(SweepPoint {
                            response_bound_ms: tau,
                            capacity_end,
                            ground_fleet_bound,
                            beta,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, request: &DeploymentRequest, catalog: &Catalog) -> (DeploymentRequest, Catalog) {
        let mut req = request.clone();
        req.response_bound_ms = self.response_bound_ms;
        req.capacity_end = self.capacity_end;
        if self.beta == BetaScheme::Unit {
            req.cost_overrides = Some(CostOverrides {
                alpha: Default::default(),
                beta: catalog.cloudlets.iter().map(|c| (c.id.clone(), 1.0)).collect(),
            });
        }
        let mut cat = catalog.clone();
        cat.fleet_bound.insert(GROUND_UAV.to_string(), self.ground_fleet_bound);
        (req, cat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub point: SweepPoint,
    pub selection: Option<Vec<(String, String, u32)>>,
    pub cost: Option<f64>,
    pub matches_published: bool,
    /// Set when the published selection is feasible here; it may still cost
    /// more than the optimum.
    pub published_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub case: Case,
    pub published: Vec<(String, String, u32)>,
    /// Constraints the published selection breaks under the default calibration.
    pub published_violations: Vec<ConstraintId>,
    pub published_capacity: u64,
    pub plan_selection: Option<Vec<(String, String, u32)>>,
    pub plan_cost: Option<f64>,
    pub oracle: OracleCheck,
    /// Sweep points under which the published selection is the optimum.
    pub matching_points: Vec<SweepPoint>,
    pub sweep: Vec<SweepResult>,
}

impl DiscrepancyReport {
    pub fn matches_by_default(&self) -> bool {
        self.plan_selection.as_ref() == Some(&self.published)
    }
}

/// Count vector of `selection` in `model`'s variable order.
pub fn selection_counts(model: &AllocationModel, selection: &[(String, String, u32)]) -> Option<Vec<u32>> {
    let mut counts = vec![0u32; model.variables.len()];
    for (u, c, n) in selection {
        let i = model.variables.iter().position(|v| &v.uav == u && &v.cloudlet == c)?;
        counts[i] += n;
    }
    Some(counts)
}

/// Constraints `counts` breaks in `model`.
pub fn violations(model: &AllocationModel, counts: &[u32]) -> Vec<ConstraintId> {
    let e = model.evaluate(counts);
    let mut out = Vec::new();
    if e.capacity < u64::from(model.workload_users) {
        out.push(ConstraintId::Workload);
    }
    if e.mean_response_ms.is_some_and(|m| m > model.response_bound_ms + 1e-9) {
        out.push(ConstraintId::Response);
    }
    let mut per_uav = vec![0u32; model.fleet.len()];
    for (v, &x) in model.variables.iter().zip(counts) {
        if x == 0 {
            continue;
        }
        per_uav[v.uav_index] += x;
        if !v.modality_allowed {
            out.push(ConstraintId::Modality);
        }
        if !(v.fits && v.endurance_s.is_some_and(|e| v.tour_s <= e)) {
            out.push(ConstraintId::Roundtrip);
        }
    }
    if per_uav.iter().zip(&model.fleet).any(|(u, (_, b))| u > b) {
        out.push(ConstraintId::Fleet);
    }
    out.sort();
    out.dedup();
    out
}

/// Plans `case`, sweeps the calibration grid and compares with the
/// published selection.
pub fn discrepancy_report(case: Case, catalog: &Catalog, mode: ExecMode) -> Result<DiscrepancyReport, PlanError> {
    let published = case.published_selection();
    let request = case.request();
    let model = build_model(&request, catalog)?;
    let outcome = solve(&model);
    let oracle = cross_check(&model, &outcome, mode);
    let counts = selection_counts(&model, &published).ok_or_else(|| {
        PlanError::InvalidRequest(vec!["published selection names ids missing from the catalog".into()])
    })?;
    let published_eval = model.evaluate(&counts);

    let mut sweep = Vec::new();
    for point in SweepPoint::grid() {
        let (req, cat) = point.apply(&request, catalog);
        let m = build_model(&req, &cat)?;
        let out = solve(&m);
        let selection = out.plan().map(|p| p.selection());
        let pe = selection_counts(&m, &published).map(|c| m.evaluate(&c));
        sweep.push(SweepResult {
            point,
            matches_published: selection.as_ref() == Some(&published),
            cost: out.plan().map(|p| p.total_cost),
            selection,
            published_cost: pe.filter(|e| e.feasible).map(|e| e.cost),
        });
    }
    let matching_points = sweep.iter().filter(|r| r.matches_published).map(|r| r.point).collect();

    Ok(DiscrepancyReport {
        case,
        published,
        published_violations: violations(&model, &counts),
        published_capacity: published_eval.capacity,
        plan_selection: outcome.plan().map(|p| p.selection()),
        plan_cost: outcome.plan().map(|p| p.total_cost),
        oracle,
        matching_points,
        sweep,
    })
}

/// Plans the combined case under the default calibration.
pub fn plan_combined(catalog: &Catalog) -> Result<SolveOutcome, PlanError> {
    super::plan(&combined_request(), catalog)
}
