//! Delivery missions: every planned unit flies (drives, dives) the tour
//! while its battery drains by one 10% interval per operational time at its
//! payload. A unit that would go below the battery floor aborts right at the
//! crossing.

use serde::{Deserialize, Serialize};

use super::{SimError, SimReport};
use crate::catalog::{Catalog, UavSpec};
use crate::perf_models::{operational_time, Calibration, EnduranceCurve, INTERVAL_FRACTION};
use crate::planner::{Certificate, DeploymentRequest, Plan};

const EPS: f64 = 1e-12;

/// One stretch of a mission at constant drain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub label: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionTrace {
    pub uav: String,
    pub cloudlet: Option<String>,
    pub unit: u32,
    pub payload_gm: f64,
    /// Seconds per 10% battery interval.
    pub interval_s: f64,
    pub completed: bool,
    pub aborted_at_s: Option<f64>,
    pub aborted_during: Option<String>,
    pub final_battery: f64,
    /// (t_s, remaining fraction) at every segment boundary.
    pub timeline: Vec<(f64, f64)>,
}

/// Travel and dwell segments of `request` at `speed_m_per_s`, ending home.
pub fn route_for(request: &DeploymentRequest, speed_m_per_s: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    for leg in &request.legs {
        out.push(Segment {
            label: format!("travel to {}", leg.location_id),
            duration_s: leg.distance_from_prev_m / speed_m_per_s,
        });
        out.push(Segment {
            label: format!("dwell at {}", leg.location_id),
            duration_s: leg.dwell_s,
        });
    }
    let outbound: f64 = request.legs.iter().map(|l| l.distance_from_prev_m).sum();
    out.push(Segment {
        label: "return".into(),
        duration_s: request.return_distance_m.unwrap_or(outbound) / speed_m_per_s,
    });
    out
}

/// Runs one unit along `route`. Payloads lighter than the endurance curve's
/// first anchor count as that anchor. An unballasted underwater unit keeps
/// only `unballasted_factor` of its endurance.
pub fn simulate_unit_mission(
    uav: &UavSpec,
    payload_gm: f64,
    ballasted: bool,
    route: &[Segment],
    calibration: &Calibration,
) -> Result<MissionTrace, SimError> {
    let (lo, _) = EnduranceCurve::for_uav(uav)?.domain();
    let mut interval_s = operational_time(uav, payload_gm.max(lo))?;
    if !ballasted {
        interval_s *= uav.unballasted_factor.unwrap_or(1.0);
    }
    let rate = INTERVAL_FRACTION / interval_s;
    let floor = calibration.battery_floor;

    let mut t = 0.0;
    let mut level = 1.0;
    let mut timeline = vec![(0.0, 1.0)];
    let mut aborted = None;
    for seg in route {
        let drain = seg.duration_s * rate;
        if level - drain < floor - EPS {
            let dt = (level - floor) / rate;
            t += dt;
            level = floor;
            timeline.push((t, level));
            aborted = Some((t, seg.label.clone()));
            break;
        }
        t += seg.duration_s;
        level -= drain;
        timeline.push((t, level));
    }
    Ok(MissionTrace {
        uav: uav.id.clone(),
        cloudlet: None,
        unit: 0,
        payload_gm,
        interval_s,
        completed: aborted.is_none(),
        aborted_at_s: aborted.as_ref().map(|a| a.0),
        aborted_during: aborted.map(|a| a.1),
        final_battery: level,
        timeline,
    })
}

/// Simulates every unit of an optimal `plan` on `request`'s tour.
pub fn simulate_delivery(plan: &Plan, request: &DeploymentRequest, catalog: &Catalog) -> Result<SimReport, SimError> {
    if plan.certificate != Certificate::Optimal {
        return Err(SimError::InvalidConfig("only optimal plans can be simulated".into()));
    }
    let mut missions = Vec::new();
    let mut warnings = Vec::new();
    for a in &plan.assignments {
        let uav = catalog
            .uav(&a.uav)
            .map_err(|_| SimError::Consistency(format!("unknown UAV `{}`", a.uav)))?;
        catalog
            .cloudlet(&a.cloudlet)
            .map_err(|_| SimError::Consistency(format!("unknown cloudlet `{}`", a.cloudlet)))?;
        let route = route_for(request, uav.speed_m_per_s);
        for unit in 0..a.count {
            let mut m = simulate_unit_mission(uav, a.payload_gm, true, &route, &catalog.calibration)?;
            m.cloudlet = Some(a.cloudlet.clone());
            m.unit = unit;
            if let Some(t) = m.aborted_at_s {
                warnings.push(format!(
                    "{} unit {} carrying {} aborted at {:.1} s ({}): plan and endurance model disagree",
                    a.uav,
                    unit,
                    a.cloudlet,
                    t,
                    m.aborted_during.as_deref().unwrap_or("")
                ));
            }
            missions.push(m);
        }
    }
    let completed = missions.iter().filter(|m| m.completed).count();
    let battery_timeline = missions
        .iter()
        .min_by(|a, b| a.final_battery.total_cmp(&b.final_battery))
        .map(|m| m.timeline.clone())
        .unwrap_or_default();
    Ok(SimReport {
        success_rate: if missions.is_empty() {
            1.0
        } else {
            completed as f64 / missions.len() as f64
        },
        response_times: None,
        battery_timeline,
        traces: Vec::new(),
        missions,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::default_catalog;

    fn seg(d: f64) -> Vec<Segment> {
        vec![Segment {
            label: "hover".into(),
            duration_s: d,
        }]
    }

    #[test]
    fn one_interval_at_full_payload() {
        let cat = default_catalog();
        let eye = cat.uav("powereye").unwrap();
        let m = simulate_unit_mission(eye, 400.0, true, &seg(109.0), &cat.calibration).unwrap();
        assert!(m.completed);
        assert!((m.final_battery - 0.9).abs() < 1e-12);
    }

    #[test]
    fn idle_mission_keeps_battery() {
        let cat = default_catalog();
        let ray = cat.uav("powerray").unwrap();
        let m = simulate_unit_mission(ray, 200.0, true, &seg(0.0), &cat.calibration).unwrap();
        assert_eq!(m.final_battery, 1.0);
    }

    #[test]
    fn unballasted_loses_seventy_percent() {
        let cat = default_catalog();
        let ray = cat.uav("powerray").unwrap();
        let empty = simulate_unit_mission(ray, 0.0, false, &seg(0.0), &cat.calibration).unwrap();
        let base = simulate_unit_mission(ray, 100.0, true, &seg(0.0), &cat.calibration).unwrap();
        assert!((empty.interval_s / base.interval_s - 0.3).abs() < 1e-12);
    }

    #[test]
    fn aborts_at_floor() {
        let cat = default_catalog();
        let eye = cat.uav("powereye").unwrap();
        // five intervals reach the floor; a sixth is not allowed
        let ok = simulate_unit_mission(eye, 400.0, true, &seg(5.0 * 109.0), &cat.calibration).unwrap();
        assert!(ok.completed);
        let m = simulate_unit_mission(eye, 400.0, true, &seg(600.0), &cat.calibration).unwrap();
        assert!(!m.completed);
        assert!((m.aborted_at_s.unwrap() - 545.0).abs() < 1e-9);
        assert_eq!(m.final_battery, 0.5);
    }
}
