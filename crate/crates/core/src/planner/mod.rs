//! Exact cloudlet/UAV allocation.
//!
//! [`build_model`] turns a [`DeploymentRequest`] into an [`AllocationModel`];
//! [`solve`] finds its optimum by branch and bound and [`oracle_enumerate`]
//! finds it again by exhaustive scan. Both break cost ties the same way, so
//! on any in-bounds instance they return the same plan.

mod diagnose;
pub mod instances;
mod model;
mod oracle;
mod search;
pub mod usecase;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, Modality};

pub use diagnose::diagnose;
pub use model::{
    build_model, AllocationModel, CapacityEnd, CostOverrides, DeploymentRequest, Evaluation,
    Exclusion, Leg, ResponseForm, ResponseMetric, Variable, WebProfile,
};
pub use oracle::{
    cross_check, oracle_enumerate, oracle_enumerate_with, search_space_size, OracleCheck, OracleStatus,
    ORACLE_LIMIT,
};
pub use search::{solve, solve_with_stats, SearchStats};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid request: {}", .0.join("; "))]
    InvalidRequest(Vec<String>),
    #[error("no catalog UAV is allowed on every leg (tour modalities: {allowed:?})")]
    NoPairing { allowed: Vec<Modality> },
    #[error("oracle search space of {candidates} candidate vectors exceeds the limit of {limit}")]
    SearchSpaceTooLarge { candidates: u128, limit: u128 },
    #[error(transparent)]
    Catalog(#[from] crate::catalog::CatalogError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Certificate {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintId {
    Workload,
    Response,
    Roundtrip,
    Modality,
    Fleet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: ConstraintId,
    pub shortfall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Infeasibility {
    pub certificate: Certificate,
    pub workload_users: u32,
    pub response_bound_ms: f64,
    pub violated: Vec<Violation>,
}

impl Infeasibility {
    pub fn violates(&self, id: ConstraintId) -> bool {
        self.violated.iter().any(|v| v.constraint == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub uav: String,
    pub cloudlet: String,
    pub modality: Modality,
    pub count: u32,
    pub legs: Vec<String>,
    pub payload_gm: f64,
    pub unit_cost: f64,
    pub unit_capacity: u32,
    pub unit_response_ms: f64,
    /// Tour time the unit must sustain.
    pub round_trip_s: f64,
    pub usable_endurance_s: f64,
}

/// Residual of each constraint (>= 0 when satisfied).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub workload_users: i64,
    pub response_ms: Option<f64>,
    pub roundtrip_s: Option<f64>,
    pub fleet_units: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub certificate: Certificate,
    pub workload_users: u32,
    pub response_bound_ms: f64,
    pub assignments: Vec<Assignment>,
    pub total_cost: f64,
    pub capacity_total: u64,
    pub total_units: u32,
    pub mean_response_ms: Option<f64>,
    pub slack: Slack,
}

impl Plan {
    pub fn units_of(&self, modality: Modality) -> u32 {
        self.assignments
            .iter()
            .filter(|a| a.modality == modality)
            .map(|a| a.count)
            .sum()
    }

    /// (uav, cloudlet, count) triples in plan order.
    pub fn selection(&self) -> Vec<(String, String, u32)> {
        self.assignments
            .iter()
            .map(|a| (a.uav.clone(), a.cloudlet.clone(), a.count))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SolveOutcome {
    Optimal(Plan),
    Infeasible(Infeasibility),
}

impl SolveOutcome {
    pub fn plan(&self) -> Option<&Plan> {
        match self {
            SolveOutcome::Optimal(p) => Some(p),
            SolveOutcome::Infeasible(_) => None,
        }
    }

    pub fn infeasibility(&self) -> Option<&Infeasibility> {
        match self {
            SolveOutcome::Optimal(_) => None,
            SolveOutcome::Infeasible(i) => Some(i),
        }
    }

    pub fn certificate(&self) -> Certificate {
        match self {
            SolveOutcome::Optimal(p) => p.certificate,
            SolveOutcome::Infeasible(i) => i.certificate,
        }
    }

    /// Canonical document: pretty JSON with fixed key order and a trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }
}

/// A feasible count vector with its tie-break keys.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Candidate {
    pub counts: Vec<u32>,
    pub cost: f64,
    pub weight_gm: f64,
}

pub(crate) fn cost_tolerance(a: f64, b: f64) -> f64 {
    1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Total preference order: lower cost, then lower total payload weight,
/// then more units of earlier catalog pairs. `Less` means `a` is preferred.
pub(crate) fn prefer(a: &Candidate, b: &Candidate) -> Ordering {
    if (a.cost - b.cost).abs() > cost_tolerance(a.cost, b.cost) {
        return a.cost.total_cmp(&b.cost);
    }
    if (a.weight_gm - b.weight_gm).abs() > 1e-9 {
        return a.weight_gm.total_cmp(&b.weight_gm);
    }
    b.counts.cmp(&a.counts)
}

pub(crate) fn keep_better(best: &mut Option<Candidate>, cand: Candidate) {
    match best {
        Some(b) if prefer(&cand, b) != Ordering::Less => {}
        _ => *best = Some(cand),
    }
}

pub(crate) fn build_plan(model: &AllocationModel, counts: &[u32]) -> Plan {
    let eval = model.evaluate(counts);
    let mut assignments = Vec::new();
    let mut roundtrip_slack: Option<f64> = None;
    let mut used = vec![0u32; model.fleet.len()];
    for (i, (v, &x)) in model.variables.iter().zip(counts).enumerate() {
        if x == 0 {
            continue;
        }
        used[v.uav_index] += x;
        let endurance = v.endurance_s.unwrap_or(f64::NAN);
        let s = endurance - v.tour_s;
        roundtrip_slack = Some(roundtrip_slack.map_or(s, |r| r.min(s)));
        assignments.push(Assignment {
            uav: v.uav.clone(),
            cloudlet: v.cloudlet.clone(),
            modality: v.modality,
            count: x,
            legs: model.legs.clone(),
            payload_gm: v.payload_gm,
            unit_cost: v.unit_cost(),
            unit_capacity: v.capacity,
            unit_response_ms: model.unit_response_ms(i, eval.capacity).unwrap_or(f64::NAN),
            round_trip_s: v.tour_s,
            usable_endurance_s: endurance,
        });
    }
    let fleet_slack = used
        .iter()
        .zip(&model.fleet)
        .map(|(u, (_, b))| i64::from(*b) - i64::from(*u))
        .min()
        .unwrap_or(0);
    Plan {
        certificate: Certificate::Optimal,
        workload_users: model.workload_users,
        response_bound_ms: model.response_bound_ms,
        assignments,
        total_cost: eval.cost,
        capacity_total: eval.capacity,
        total_units: eval.units,
        mean_response_ms: eval.mean_response_ms,
        slack: Slack {
            workload_users: eval.capacity as i64 - i64::from(model.workload_users),
            response_ms: eval.mean_response_ms.map(|m| model.response_bound_ms - m),
            roundtrip_s: roundtrip_slack,
            fleet_units: fleet_slack,
        },
    }
}

/// Builds and solves in one step; a request no catalog UAV can serve on
/// every leg comes back as a modality infeasibility.
pub fn plan(request: &DeploymentRequest, catalog: &Catalog) -> Result<SolveOutcome, PlanError> {
    match build_model(request, catalog) {
        Ok(model) => Ok(solve(&model)),
        Err(PlanError::NoPairing { .. }) => Ok(SolveOutcome::Infeasible(Infeasibility {
            certificate: Certificate::Infeasible,
            workload_users: request.workload_users,
            response_bound_ms: request.response_bound_ms,
            violated: vec![Violation {
                constraint: ConstraintId::Modality,
                shortfall: 1.0,
            }],
        })),
        Err(e) => Err(e),
    }
}

/// Plans a tour visiting every leg in order with one fleet. A single leg is
/// the degenerate case and plans exactly like [`plan`].
pub fn plan_multi_leg(request: &DeploymentRequest, catalog: &Catalog) -> Result<SolveOutcome, PlanError> {
    plan(request, catalog)
}
