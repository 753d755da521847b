//! Plan verification written against the raw catalog, sharing no code with
//! the planner's own constraint evaluation.

#![allow(dead_code)]

use geese_core::catalog::Catalog;
use geese_core::planner::{CapacityEnd, DeploymentRequest, Plan, ResponseForm, ResponseMetric};

fn lerp(points: &[(f64, f64)], x: f64) -> f64 {
    let seg = points
        .windows(2)
        .find(|w| x <= w[1].0)
        .unwrap_or(&points[points.len() - 2..]);
    let (x0, y0) = seg[0];
    let (x1, y1) = seg[1];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn web_ms(catalog: &Catalog, cloudlet: &str, users_per_device: u64) -> Option<f64> {
    let c = catalog.cloudlets.iter().find(|c| c.id == cloudlet)?;
    let mut worst: Option<f64> = None;
    for dc in &c.devices {
        let curve = catalog.calibration.load_curves.iter().find(|l| l.device == dc.device);
        if let Some(curve) = curve {
            let pts: Vec<(f64, f64)> = curve.anchor_points.iter().map(|&(u, r)| (f64::from(u), r)).collect();
            let r = lerp(&pts, users_per_device.clamp(1, 100) as f64);
            worst = Some(worst.map_or(r, |w: f64| w.max(r)));
        }
    }
    worst
}

fn compute_devices(catalog: &Catalog, cloudlet: &str) -> u64 {
    let c = catalog.cloudlets.iter().find(|c| c.id == cloudlet).unwrap();
    c.devices
        .iter()
        .filter(|dc| !catalog.devices.iter().any(|d| d.id == dc.device && d.accessory))
        .map(|dc| u64::from(dc.count))
        .sum()
}

/// Checks every constraint of `plan` and returns the recomputed cost.
pub fn verify_plan(plan: &Plan, req: &DeploymentRequest, catalog: &Catalog) -> Result<f64, String> {
    let outbound: f64 = req.legs.iter().map(|l| l.distance_from_prev_m).sum();
    let distance = outbound + req.return_distance_m.unwrap_or(outbound);
    let dwell: f64 = req.legs.iter().map(|l| l.dwell_s).sum();
    let floor = catalog.calibration.battery_floor;

    let mut cost = 0.0;
    let mut capacity = 0u64;
    let mut units = 0u64;
    let mut per_uav = std::collections::BTreeMap::<&str, u32>::new();
    for a in &plan.assignments {
        let u = catalog.uavs.iter().find(|u| u.id == a.uav).ok_or("unknown uav")?;
        let c = catalog.cloudlets.iter().find(|c| c.id == a.cloudlet).ok_or("unknown cloudlet")?;
        if a.count == 0 {
            return Err("zero-count assignment".into());
        }
        if !req.legs.iter().all(|l| l.allowed_modalities.contains(&u.modality)) {
            return Err(format!("{} not allowed on every leg", u.id));
        }
        let weight = (f64::from(c.category) * 100.0).max(c.payload_weight_gm);
        if weight > u.max_payload_gm {
            return Err(format!("{} does not fit {}", c.id, u.id));
        }
        let usable = (1.0 - floor) * 10.0 * lerp(&u.endurance_points, weight);
        let tour = distance / u.speed_m_per_s + dwell;
        if tour > usable + 1e-9 {
            return Err(format!("{} tour {tour} s exceeds {usable} s", u.id));
        }
        let cap = match req.capacity_end {
            CapacityEnd::Low => c.capacity_users.low,
            CapacityEnd::High => c.capacity_users.high,
        };
        *per_uav.entry(u.id.as_str()).or_default() += a.count;
        cost += (u.cost_alpha + c.cost_beta) * f64::from(a.count);
        capacity += u64::from(cap) * u64::from(a.count);
        units += u64::from(a.count);
    }
    for (u, n) in &per_uav {
        if *n > catalog.fleet_bound[*u] {
            return Err(format!("fleet bound of {u} exceeded"));
        }
    }
    if capacity < u64::from(req.workload_users) {
        return Err(format!("capacity {capacity} below workload"));
    }
    if units > 0 {
        let mut sum = 0.0;
        for a in &plan.assignments {
            let c = catalog.cloudlets.iter().find(|c| c.id == a.cloudlet).unwrap();
            let cap = u64::from(match req.capacity_end {
                CapacityEnd::Low => c.capacity_users.low,
                CapacityEnd::High => c.capacity_users.high,
            });
            let r = match (req.response_metric, req.response_form) {
                (ResponseMetric::Image, _) => c.batch_latency_s * 100.0,
                (ResponseMetric::Web, ResponseForm::Literal) => web_ms(catalog, &c.id, 100).ok_or("no load curve")?,
                (ResponseMetric::Web, ResponseForm::SharedLoad) => {
                    let share = (u64::from(req.workload_users) * cap).div_ceil(capacity).max(1);
                    let per_dev = share.div_ceil(compute_devices(catalog, &c.id));
                    web_ms(catalog, &c.id, per_dev).ok_or("no load curve")?
                }
            };
            sum += r * f64::from(a.count);
        }
        let mean = sum / units as f64;
        if mean > req.response_bound_ms + 1e-9 {
            return Err(format!("mean response {mean} above bound"));
        }
    }
    if (cost - plan.total_cost).abs() > 1e-9 * cost.max(1.0) {
        return Err(format!("reported cost {} differs from {cost}", plan.total_cost));
    }
    Ok(cost)
}
