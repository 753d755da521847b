//! Integer program for cloudlet delivery.
//!
//! One decision variable per (UAV model, cloudlet type) pair: the number of
//! units of that UAV carrying that cloudlet on the full tour. Every selected
//! unit visits every leg in order and returns home.
//!
//! ```text
//! minimize   sum (alpha_u + beta_c) * x[u,c]
//! subject to sum capacity_c * x[u,c]        >= W          (each leg)
//!            mean response over selected units <= tau
//!            tour_time(u) <= usable endurance(u, c)  for x[u,c] > 0
//!            modality(u) allowed on every leg     for x[u,c] > 0
//!            sum_c x[u,c] <= fleet_bound(u)
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::catalog::{effective_payload, Catalog, CloudletSpec, Modality};
use crate::perf_models::{response_time_at_load, LoadCurve, MAX_USERS, MIN_USERS};

use super::PlanError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub location_id: String,
    pub allowed_modalities: BTreeSet<Modality>,
    #[serde(default)]
    pub dwell_s: f64,
    #[serde(default)]
    pub distance_from_prev_m: f64,
}

/// Which per-unit response figure the request is bounded on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseMetric {
    /// Per-image latency: batch time for 10 images divided by 10.
    #[default]
    Image,
    /// Per-request latency from the device load curves.
    Web,
}

/// How the response constraint is read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseForm {
    /// Each unit is evaluated at the user share it receives when the
    /// workload is split proportionally to capacity.
    #[default]
    SharedLoad,
    /// Each unit contributes a load-independent constant.
    Literal,
}

/// Which end of the measured capacity range counts as a cloudlet's capacity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapacityEnd {
    #[default]
    Low,
    High,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostOverrides {
    #[serde(default)]
    pub alpha: BTreeMap<String, f64>,
    #[serde(default)]
    pub beta: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentRequest {
    pub workload_users: u32,
    pub response_bound_ms: f64,
    pub legs: Vec<Leg>,
    /// Distance from the last leg back to the source. Defaults to retracing
    /// every leg.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_distance_m: Option<f64>,
    #[serde(default)]
    pub response_metric: ResponseMetric,
    #[serde(default)]
    pub response_form: ResponseForm,
    #[serde(default)]
    pub capacity_end: CapacityEnd,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_overrides: Option<CostOverrides>,
}

impl DeploymentRequest {
    pub fn validate(&self) -> Result<(), PlanError> {
        let mut errs = Vec::new();
        if self.legs.is_empty() {
            errs.push("at least one leg is required".to_string());
        }
        if !(self.response_bound_ms > 0.0) || !self.response_bound_ms.is_finite() {
            errs.push("response_bound_ms must be a positive number".to_string());
        }
        for leg in &self.legs {
            if leg.allowed_modalities.is_empty() {
                errs.push(format!("leg `{}`: allowed_modalities is empty", leg.location_id));
            }
            if !(leg.dwell_s >= 0.0) || !(leg.distance_from_prev_m >= 0.0) {
                errs.push(format!(
                    "leg `{}`: dwell_s and distance_from_prev_m must be >= 0",
                    leg.location_id
                ));
            }
        }
        if let Some(d) = self.return_distance_m {
            if !(d >= 0.0) {
                errs.push("return_distance_m must be >= 0".to_string());
            }
        }
        if let Some(o) = &self.cost_overrides {
            if o.alpha.values().chain(o.beta.values()).any(|v| !(*v >= 0.0)) {
                errs.push("cost overrides must be >= 0".to_string());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(PlanError::InvalidRequest(errs))
        }
    }

    pub fn total_distance_m(&self) -> f64 {
        let outbound: f64 = self.legs.iter().map(|l| l.distance_from_prev_m).sum();
        outbound + self.return_distance_m.unwrap_or(outbound)
    }

    pub fn total_dwell_s(&self) -> f64 {
        self.legs.iter().map(|l| l.dwell_s).sum()
    }

    /// Modalities allowed on every leg.
    pub fn tour_modalities(&self) -> BTreeSet<Modality> {
        let mut it = self.legs.iter();
        let Some(first) = it.next() else {
            return BTreeSet::new();
        };
        it.fold(first.allowed_modalities.clone(), |acc, l| {
            acc.intersection(&l.allowed_modalities).copied().collect()
        })
    }

    /// Seconds needed to travel the tour at `speed` and dwell at every leg.
    pub fn tour_time_s(&self, speed_m_per_s: f64) -> f64 {
        self.total_distance_m() / speed_m_per_s + self.total_dwell_s()
    }
}

/// Why a pair can never be selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    Modality,
    Payload,
    Roundtrip,
    NoLoadCurve,
}

/// Load-dependent response data for the web metric.
#[derive(Debug, Clone, PartialEq)]
pub struct WebProfile {
    pub compute_devices: u32,
    pub curves: Vec<LoadCurve>,
}

impl WebProfile {
    fn at_users_per_device(&self, users: u32) -> f64 {
        let users = users.clamp(MIN_USERS, MAX_USERS);
        self.curves
            .iter()
            .map(|c| response_time_at_load(c, users).expect("clamped into domain"))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn at_share(&self, share_users: u64) -> f64 {
        let per_device = share_users.div_ceil(u64::from(self.compute_devices.max(1)));
        self.at_users_per_device(per_device.min(u64::from(MAX_USERS)) as u32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub uav: String,
    pub uav_index: usize,
    pub cloudlet: String,
    pub cloudlet_index: usize,
    pub modality: Modality,
    pub alpha: f64,
    pub beta: f64,
    pub capacity: u32,
    pub payload_gm: f64,
    pub fits: bool,
    pub modality_allowed: bool,
    pub tour_s: f64,
    /// Seconds until the battery floor at this payload; `None` when the
    /// payload lies outside the endurance curve.
    pub endurance_s: Option<f64>,
    pub per_image_ms: f64,
    pub web: Option<WebProfile>,
    pub upper_bound: u32,
    pub exclusion: Option<Exclusion>,
}

impl Variable {
    pub fn unit_cost(&self) -> f64 {
        self.alpha + self.beta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationModel {
    pub workload_users: u32,
    pub response_bound_ms: f64,
    pub metric: ResponseMetric,
    pub form: ResponseForm,
    pub legs: Vec<String>,
    pub variables: Vec<Variable>,
    /// (uav id, fleet bound) in catalog order.
    pub fleet: Vec<(String, u32)>,
}

/// Constraint totals for one candidate count vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub cost: f64,
    pub capacity: u64,
    pub units: u32,
    pub weight_gm: f64,
    pub mean_response_ms: Option<f64>,
    pub feasible: bool,
}

impl AllocationModel {
    /// Response of one unit of variable `i` when the whole selection has
    /// `total_capacity`; `None` if the metric needs load data the pair lacks.
    pub fn unit_response_ms(&self, i: usize, total_capacity: u64) -> Option<f64> {
        let v = &self.variables[i];
        match (self.metric, self.form) {
            (ResponseMetric::Image, _) => Some(v.per_image_ms),
            (ResponseMetric::Web, ResponseForm::Literal) => {
                v.web.as_ref().map(|w| w.at_users_per_device(MAX_USERS))
            }
            (ResponseMetric::Web, ResponseForm::SharedLoad) => v.web.as_ref().map(|w| {
                let share = if total_capacity == 0 {
                    1
                } else {
                    (u64::from(self.workload_users) * u64::from(v.capacity))
                        .div_ceil(total_capacity)
                        .max(1)
                };
                w.at_share(share)
            }),
        }
    }

    /// Per-unit response when it does not depend on the rest of the selection.
    pub fn constant_response_ms(&self, i: usize) -> Option<f64> {
        match (self.metric, self.form) {
            (ResponseMetric::Web, ResponseForm::SharedLoad) => None,
            _ => self.unit_response_ms(i, 0),
        }
    }

    pub fn fleet_bound_of(&self, uav_index: usize) -> u32 {
        self.fleet[uav_index].1
    }

    /// Evaluates every constraint for `counts` (indexed like `variables`).
    pub fn evaluate(&self, counts: &[u32]) -> Evaluation {
        debug_assert_eq!(counts.len(), self.variables.len());
        let mut cost = 0.0;
        let mut capacity = 0u64;
        let mut units = 0u32;
        let mut weight = 0.0;
        let mut per_uav = vec![0u32; self.fleet.len()];
        let mut pairs_ok = true;
        for (v, &x) in self.variables.iter().zip(counts) {
            if x == 0 {
                continue;
            }
            cost += v.unit_cost() * f64::from(x);
            capacity += u64::from(v.capacity) * u64::from(x);
            units += x;
            weight += v.payload_gm * f64::from(x);
            per_uav[v.uav_index] += x;
            let roundtrip_ok = v.endurance_s.is_some_and(|e| v.tour_s <= e);
            if !(v.fits && v.modality_allowed && roundtrip_ok) {
                pairs_ok = false;
            }
        }
        let fleet_ok = per_uav
            .iter()
            .zip(&self.fleet)
            .all(|(used, (_, bound))| used <= bound);

        let mut mean = None;
        let mut response_ok = true;
        if units > 0 {
            let mut sum = 0.0;
            for (i, &x) in counts.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                match self.unit_response_ms(i, capacity) {
                    Some(r) => sum += r * f64::from(x),
                    None => response_ok = false,
                }
            }
            let m = sum / f64::from(units);
            mean = Some(m);
            response_ok &= m <= self.response_bound_ms + 1e-9;
        }
        let workload_ok = capacity >= u64::from(self.workload_users);
        Evaluation {
            cost,
            capacity,
            units,
            weight_gm: weight,
            mean_response_ms: mean,
            feasible: pairs_ok && fleet_ok && response_ok && workload_ok,
        }
    }
}

fn compute_profile(catalog: &Catalog, cloudlet: &CloudletSpec) -> Option<WebProfile> {
    let mut compute = 0;
    let mut curves = Vec::new();
    for dc in &cloudlet.devices {
        let Ok(dev) = catalog.device(&dc.device) else {
            continue;
        };
        if dev.accessory {
            continue;
        }
        compute += dc.count;
        if let Ok(c) = catalog.calibration.load_curve(&dev.id) {
            if !curves.contains(c) {
                curves.push(c.clone());
            }
        }
    }
    (compute > 0 && !curves.is_empty()).then_some(WebProfile {
        compute_devices: compute,
        curves,
    })
}

/// Builds the integer program for `request` against `catalog`.
///
/// Fails with [`PlanError::NoPairing`] when no catalog UAV is allowed on
/// every leg.
pub fn build_model(request: &DeploymentRequest, catalog: &Catalog) -> Result<AllocationModel, PlanError> {
    request.validate()?;
    let allowed = request.tour_modalities();
    if !catalog.uavs.iter().any(|u| allowed.contains(&u.modality)) {
        return Err(PlanError::NoPairing {
            allowed: allowed.into_iter().collect(),
        });
    }
    let overrides = request.cost_overrides.clone().unwrap_or_default();

    let mut variables = Vec::with_capacity(catalog.uavs.len() * catalog.cloudlets.len());
    for (ui, uav) in catalog.uavs.iter().enumerate() {
        let alpha = overrides.alpha.get(&uav.id).copied().unwrap_or(uav.cost_alpha);
        let tour_s = request.tour_time_s(uav.speed_m_per_s);
        let bound = catalog.fleet_bound_of(&uav.id);
        for (ci, c) in catalog.cloudlets.iter().enumerate() {
            let beta = overrides.beta.get(&c.id).copied().unwrap_or(c.cost_beta);
            let fits = effective_payload(c, uav).is_ok();
            let payload_gm = c.planning_weight_gm();
            let endurance_s = catalog.calibration.usable_endurance_s(uav, payload_gm).ok();
            let modality_allowed = allowed.contains(&uav.modality);
            let web = compute_profile(catalog, c);
            let exclusion = if !modality_allowed {
                Some(Exclusion::Modality)
            } else if !fits {
                Some(Exclusion::Payload)
            } else if !endurance_s.is_some_and(|e| tour_s <= e) {
                Some(Exclusion::Roundtrip)
            } else if request.response_metric == ResponseMetric::Web && web.is_none() {
                Some(Exclusion::NoLoadCurve)
            } else {
                None
            };
            let capacity = match request.capacity_end {
                CapacityEnd::Low => c.capacity_users.low,
                CapacityEnd::High => c.capacity_users.high,
            };
            variables.push(Variable {
                uav: uav.id.clone(),
                uav_index: ui,
                cloudlet: c.id.clone(),
                cloudlet_index: ci,
                modality: uav.modality,
                alpha,
                beta,
                capacity,
                payload_gm,
                fits,
                modality_allowed,
                tour_s,
                endurance_s,
                per_image_ms: c.per_image_latency_ms(),
                web,
                upper_bound: if exclusion.is_none() { bound } else { 0 },
                exclusion,
            });
        }
    }

    Ok(AllocationModel {
        workload_users: request.workload_users,
        response_bound_ms: request.response_bound_ms,
        metric: request.response_metric,
        form: request.response_form,
        legs: request.legs.iter().map(|l| l.location_id.clone()).collect(),
        variables,
        fleet: catalog
            .uavs
            .iter()
            .map(|u| (u.id.clone(), catalog.fleet_bound_of(&u.id)))
            .collect(),
    })
}
