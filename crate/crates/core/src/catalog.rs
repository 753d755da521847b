//! Device, cloudlet and UAV data model.
//!
//! A [`Catalog`] is loaded once from a JSON document, validated, and then
//! shared read-only by the planner and the simulators. The shipped default
//! catalog transcribes the measured cloudlet rows, device specifications and
//! endurance anchors of the GEESE testbed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perf_models::Calibration;

/// Only schema version understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Units per UAV model when the document does not say otherwise.
pub const DEFAULT_FLEET_BOUND: u32 = 3;

const DEFAULT_CATALOG_JSON: &str = include_str!("../data/default_catalog.json");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("parse error at line {line}, column {column} (field `{field}`): {message}")]
    Parse {
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("catalog validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("cloudlet `{cloudlet}` ({weight_gm} gm) cannot be carried by `{uav}` (max {max_gm} gm)")]
    InfeasiblePairing {
        cloudlet: String,
        uav: String,
        weight_gm: f64,
        max_gm: f64,
    },
    #[error("unknown {kind} id `{id}`")]
    UnknownId { kind: &'static str, id: String },
}

/// Transport modality of a UAV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Aerial,
    Ground,
    Underwater,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Aerial, Modality::Ground, Modality::Underwater];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Aerial => "aerial",
            Modality::Ground => "ground",
            Modality::Underwater => "underwater",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub id: String,
    pub name: String,
    pub cpu_desc: String,
    pub gpu_desc: String,
    pub ram_gb: f64,
    pub unit_weight_gm: f64,
    /// Non-computing component (battery pack). Excluded from per-device load lookups.
    #[serde(default)]
    pub accessory: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceCount {
    pub device: String,
    pub count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRange {
    pub low: u32,
    pub high: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudletSpec {
    pub id: String,
    /// Weight class 1..=4 (100/200/300/400 gm).
    pub category: u8,
    pub type_index: u8,
    #[serde(default)]
    pub description: String,
    pub devices: Vec<DeviceCount>,
    /// Printed component sum.
    pub payload_weight_gm: f64,
    /// Seconds to process 10 images of 224x224.
    pub batch_latency_s: f64,
    pub capacity_users: UserRange,
    pub cost_beta: f64,
}

impl CloudletSpec {
    pub fn class_weight_gm(&self) -> f64 {
        f64::from(self.category) * 100.0
    }

    /// Weight used for fit checks and endurance lookups: the class weight,
    /// or the printed weight if a malformed row exceeds its class.
    pub fn planning_weight_gm(&self) -> f64 {
        self.class_weight_gm().max(self.payload_weight_gm)
    }

    pub fn per_image_latency_ms(&self) -> f64 {
        self.batch_latency_s * 1000.0 / 10.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavSpec {
    pub id: String,
    pub modality: Modality,
    pub model_name: String,
    pub max_payload_gm: f64,
    /// (payload gm, operational seconds per 10% battery interval).
    pub endurance_points: Vec<(f64, f64)>,
    pub speed_m_per_s: f64,
    pub cost_alpha: f64,
    #[serde(default)]
    pub container_tare_gm: f64,
    #[serde(default)]
    pub ballast_gm: f64,
    /// Endurance multiplier when an underwater container travels without ballast.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unballasted_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub schema_version: u32,
    #[serde(default)]
    pub devices: Vec<DeviceSpec>,
    #[serde(default)]
    pub cloudlets: Vec<CloudletSpec>,
    #[serde(default)]
    pub uavs: Vec<UavSpec>,
    #[serde(default)]
    pub fleet_bound: BTreeMap<String, u32>,
    #[serde(default)]
    pub calibration: Calibration,
}

impl Catalog {
    pub fn device(&self, id: &str) -> Result<&DeviceSpec, CatalogError> {
        self.devices
            .iter()
            .find(|d| d.id == id)
            .ok_or_else(|| unknown("device", id))
    }

    pub fn cloudlet(&self, id: &str) -> Result<&CloudletSpec, CatalogError> {
        self.cloudlets
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| unknown("cloudlet", id))
    }

    pub fn uav(&self, id: &str) -> Result<&UavSpec, CatalogError> {
        self.uavs
            .iter()
            .find(|u| u.id == id)
            .ok_or_else(|| unknown("uav", id))
    }

    pub fn fleet_bound_of(&self, uav_id: &str) -> u32 {
        self.fleet_bound
            .get(uav_id)
            .copied()
            .unwrap_or(DEFAULT_FLEET_BOUND)
    }

    /// Pretty JSON in the catalog schema.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    /// Checks every invariant and returns all failures at once.
    pub fn validate(&self) -> Result<(), CatalogError> {
        let mut errs = Vec::new();

        if self.schema_version != SCHEMA_VERSION {
            errs.push(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.uavs.is_empty() {
            errs.push("no UAVs defined".to_string());
        }
        if self.cloudlets.is_empty() {
            errs.push("no cloudlets defined".to_string());
        }

        let mut seen = BTreeSet::new();
        for d in &self.devices {
            if !seen.insert(d.id.as_str()) {
                errs.push(format!("duplicate device id `{}`", d.id));
            }
            if !(d.unit_weight_gm > 0.0) {
                errs.push(format!("device `{}`: unit_weight_gm must be > 0", d.id));
            }
        }

        let mut seen = BTreeSet::new();
        for c in &self.cloudlets {
            let ctx = format!("cloudlet `{}`", c.id);
            if !seen.insert(c.id.as_str()) {
                errs.push(format!("duplicate cloudlet id `{}`", c.id));
            }
            if !(1..=4).contains(&c.category) {
                errs.push(format!("{ctx}: category {} outside 1..=4", c.category));
            } else if c.payload_weight_gm > c.class_weight_gm() {
                errs.push(format!(
                    "{ctx}: payload_weight_gm {} exceeds class bound {}",
                    c.payload_weight_gm,
                    c.class_weight_gm()
                ));
            }
            let mut device_sum = 0.0;
            for dc in &c.devices {
                match self.device(&dc.device) {
                    Ok(d) => device_sum += d.unit_weight_gm * f64::from(dc.count),
                    Err(_) => errs.push(format!("{ctx}: unresolved device `{}`", dc.device)),
                }
            }
            if device_sum > c.payload_weight_gm + 1e-9 {
                errs.push(format!(
                    "{ctx}: device weights sum to {device_sum} gm, above payload_weight_gm {}",
                    c.payload_weight_gm
                ));
            }
            if c.capacity_users.low == 0 || c.capacity_users.low > c.capacity_users.high {
                errs.push(format!(
                    "{ctx}: capacity_users [{}, {}] must satisfy 0 < low <= high",
                    c.capacity_users.low, c.capacity_users.high
                ));
            }
            if !(c.batch_latency_s > 0.0) {
                errs.push(format!("{ctx}: batch_latency_s must be > 0"));
            }
            if !(c.cost_beta >= 0.0) {
                errs.push(format!("{ctx}: cost_beta must be >= 0"));
            }
            if !self.uavs.is_empty()
                && !self
                    .uavs
                    .iter()
                    .any(|u| c.planning_weight_gm() <= u.max_payload_gm)
            {
                errs.push(format!("{ctx}: fits no UAV"));
            }
        }

        let mut seen = BTreeSet::new();
        for u in &self.uavs {
            let ctx = format!("uav `{}`", u.id);
            if !seen.insert(u.id.as_str()) {
                errs.push(format!("duplicate uav id `{}`", u.id));
            }
            if !(u.max_payload_gm > 0.0) {
                errs.push(format!("{ctx}: max_payload_gm must be > 0"));
            }
            if !(u.speed_m_per_s > 0.0) {
                errs.push(format!("{ctx}: speed_m_per_s must be > 0"));
            }
            if !(u.cost_alpha >= 0.0) {
                errs.push(format!("{ctx}: cost_alpha must be >= 0"));
            }
            if u.endurance_points.is_empty() {
                errs.push(format!("{ctx}: endurance_points is empty"));
            }
            for w in u.endurance_points.windows(2) {
                if !(w[1].0 > w[0].0) {
                    errs.push(format!("{ctx}: endurance payloads not strictly increasing"));
                }
                if w[1].1 > w[0].1 {
                    errs.push(format!("{ctx}: endurance increases with payload"));
                }
            }
            if u.endurance_points.iter().any(|p| !(p.1 > 0.0)) {
                errs.push(format!("{ctx}: operational seconds must be > 0"));
            }
            if u.modality != Modality::Underwater && u.ballast_gm != 0.0 {
                errs.push(format!("{ctx}: ballast_gm only applies to underwater UAVs"));
            }
            if u.ballast_gm < 0.0 || u.container_tare_gm < 0.0 {
                errs.push(format!("{ctx}: ballast and tare must be >= 0"));
            }
            if let Some(f) = u.unballasted_factor {
                if !(f > 0.0 && f <= 1.0) {
                    errs.push(format!("{ctx}: unballasted_factor must be in (0, 1]"));
                }
            }
        }

        for (id, bound) in &self.fleet_bound {
            if self.uav(id).is_err() {
                errs.push(format!("fleet_bound references unknown uav `{id}`"));
            }
            if *bound == 0 {
                errs.push(format!("fleet_bound for `{id}` must be positive"));
            }
        }

        for lc in &self.calibration.load_curves {
            if self.device(&lc.device).is_err() {
                errs.push(format!("load curve references unknown device `{}`", lc.device));
            }
        }
        errs.extend(self.calibration.problems());

        if errs.is_empty() {
            Ok(())
        } else {
            Err(CatalogError::Validation(errs))
        }
    }
}

fn unknown(kind: &'static str, id: &str) -> CatalogError {
    CatalogError::UnknownId {
        kind,
        id: id.to_string(),
    }
}

/// Parses and validates a catalog document.
///
/// A blank document is treated as an empty catalog and fails validation.
/// UAVs without an explicit `fleet_bound` entry get [`DEFAULT_FLEET_BOUND`].
pub fn load_catalog(source: &str) -> Result<Catalog, CatalogError> {
    let mut catalog = if source.trim().is_empty() {
        Catalog {
            schema_version: SCHEMA_VERSION,
            devices: Vec::new(),
            cloudlets: Vec::new(),
            uavs: Vec::new(),
            fleet_bound: BTreeMap::new(),
            calibration: Calibration::default(),
        }
    } else {
        parse_json(source)?
    };
    for u in &catalog.uavs {
        catalog
            .fleet_bound
            .entry(u.id.clone())
            .or_insert(DEFAULT_FLEET_BOUND);
    }
    catalog.validate()?;
    Ok(catalog)
}

/// Deserializes `T` from JSON, reporting the failing field path and position.
pub fn parse_json<T: serde::de::DeserializeOwned>(source: &str) -> Result<T, CatalogError> {
    let mut de = serde_json::Deserializer::from_str(source);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        CatalogError::Parse {
            field,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| CatalogError::Parse {
        field: ".".to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(value)
}

/// The catalog built from the testbed measurements.
pub fn default_catalog() -> Catalog {
    load_catalog(DEFAULT_CATALOG_JSON).expect("embedded default catalog is valid")
}

/// Payload the UAV's endurance curve must be evaluated at.
///
/// Aerial and ground curves were measured with the container on board, and
/// the underwater curve was measured after the 830 gm ballast neutralized the
/// container's buoyancy, so in every case the effective payload is the
/// cloudlet's planning (class) weight.
pub fn effective_payload(cloudlet: &CloudletSpec, uav: &UavSpec) -> Result<f64, CatalogError> {
    let weight = cloudlet.planning_weight_gm();
    if weight > uav.max_payload_gm {
        return Err(CatalogError::InfeasiblePairing {
            cloudlet: cloudlet.id.clone(),
            uav: uav.id.clone(),
            weight_gm: weight,
            max_gm: uav.max_payload_gm,
        });
    }
    Ok(weight)
}

/// Planning capacity: the low end of the measured concurrent-user range.
pub fn cloudlet_capacity(cloudlet: &CloudletSpec) -> u32 {
    cloudlet.capacity_users.low
}
