//! Seeded random planning instances for cross-checking the solver.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{CapacityEnd, DeploymentRequest, Leg, ResponseForm, ResponseMetric};
use crate::catalog::{default_catalog, Catalog, Modality, UserRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceLimits {
    pub max_uavs: usize,
    pub max_cloudlets: usize,
    pub fleet_bound: u32,
}

impl Default for InstanceLimits {
    fn default() -> Self {
        Self {
            max_uavs: 4,
            max_cloudlets: 5,
            fleet_bound: 3,
        }
    }
}

/// A random catalog built from the default device set plus a random request.
///
/// Values are drawn from ranges wide enough to produce feasible, infeasible,
/// tied and excluded pairs in roughly even measure.
pub fn random_instance(seed: u64, limits: InstanceLimits) -> (Catalog, DeploymentRequest) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = default_catalog();

    let n_uavs = rng.random_range(1..=limits.max_uavs);
    let n_cloudlets = rng.random_range(1..=limits.max_cloudlets);

    let mut uavs = Vec::with_capacity(n_uavs);
    for i in 0..n_uavs {
        let mut u = base.uavs.choose(&mut rng).expect("default UAVs").clone();
        u.id = format!("u{i}");
        u.modality = *Modality::ALL.choose(&mut rng).expect("modalities");
        u.ballast_gm = 0.0;
        u.unballasted_factor = None;
        // every catalog keeps one full-payload UAV so each cloudlet fits somewhere
        u.max_payload_gm = if i == 0 || rng.random_bool(0.7) { 400.0 } else { 250.0 };
        u.cost_alpha = f64::from(rng.random_range(0..=10u32));
        u.speed_m_per_s = f64::from(rng.random_range(1..=10u32));
        let light = f64::from(rng.random_range(60..=3000u32));
        let heavy = (light * rng.random_range(0.4..=1.0)).round().max(1.0);
        u.endurance_points = vec![(100.0, light), (400.0, heavy)];
        uavs.push(u);
    }

    let mut cloudlets = Vec::with_capacity(n_cloudlets);
    for i in 0..n_cloudlets {
        let mut c = base.cloudlets.choose(&mut rng).expect("default cloudlets").clone();
        c.id = format!("c{i}");
        let low = rng.random_range(20..=900u32);
        c.capacity_users = UserRange {
            low,
            high: low + rng.random_range(0..=40u32),
        };
        c.batch_latency_s = f64::from(rng.random_range(1..=600u32)) / 10.0;
        c.cost_beta = f64::from(rng.random_range(0..=5u32));
        cloudlets.push(c);
    }

    let fleet_bound = uavs.iter().map(|u| (u.id.clone(), limits.fleet_bound)).collect();
    let catalog = Catalog {
        schema_version: base.schema_version,
        devices: base.devices.clone(),
        cloudlets,
        uavs,
        fleet_bound,
        calibration: base.calibration.clone(),
    };

    let n_legs = rng.random_range(1..=3);
    let legs = (0..n_legs)
        .map(|i| {
            let mut allowed: BTreeSet<Modality> =
                Modality::ALL.into_iter().filter(|_| rng.random_bool(0.75)).collect();
            if allowed.is_empty() {
                allowed.insert(*Modality::ALL.choose(&mut rng).expect("modalities"));
            }
            Leg {
                location_id: format!("L{i}"),
                allowed_modalities: allowed,
                dwell_s: f64::from(rng.random_range(0..=1200u32)),
                distance_from_prev_m: f64::from(rng.random_range(0..=1500u32)),
            }
        })
        .collect();

    let request = DeploymentRequest {
        workload_users: if rng.random_bool(0.1) { 0 } else { rng.random_range(1..=2500) },
        response_bound_ms: f64::from(rng.random_range(100..=8000u32)),
        legs,
        return_distance_m: rng
            .random_bool(0.5)
            .then(|| f64::from(rng.random_range(0..=2000u32))),
        response_metric: if rng.random_bool(0.3) {
            ResponseMetric::Web
        } else {
            ResponseMetric::Image
        },
        response_form: if rng.random_bool(0.2) {
            ResponseForm::Literal
        } else {
            ResponseForm::SharedLoad
        },
        capacity_end: if rng.random_bool(0.5) {
            CapacityEnd::Low
        } else {
            CapacityEnd::High
        },
        cost_overrides: None,
    };
    (catalog, request)
}
