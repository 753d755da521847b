use proptest::prelude::*;

use geese_core::catalog::default_catalog;
use geese_core::perf_models::{
    battery_duration, classify_app, link_model, operational_time, response_time_at_load, AppProfile, Regime, Role,
};

#[test]
fn endurance_anchors_are_exact() {
    let cat = default_catalog();
    for (uav, light, heavy) in [("powereye", 146.0, 109.0), ("phantom3", 91.0, 64.0), ("powerray", 1064.0, 473.0)] {
        let u = cat.uav(uav).unwrap();
        assert_eq!(operational_time(u, 100.0).unwrap(), light);
        assert_eq!(operational_time(u, 400.0).unwrap(), heavy);
    }
}

#[test]
fn outside_the_curve_is_an_error() {
    let cat = default_catalog();
    let u = cat.uav("powereye").unwrap();
    assert!(operational_time(u, 99.0).is_err());
    assert!(operational_time(u, 401.0).is_err());
}

#[test]
fn links_degrade_with_depth() {
    for role in [Role::Master, Role::Workers] {
        let chain: Vec<_> = [Regime::Surface, Regime::Depth1, Regime::Depth2]
            .into_iter()
            .map(|r| link_model(r, role))
            .collect();
        for w in chain.windows(2) {
            assert!(w[1].per_job_success_p <= w[0].per_job_success_p);
            assert!(w[1].latency_multiplier >= w[0].latency_multiplier);
        }
    }
    for r in [Regime::Depth1, Regime::Depth2] {
        assert!(link_model(r, Role::Master).per_job_success_p <= link_model(r, Role::Workers).per_job_success_p);
    }
}

#[test]
fn quadrant_mapping_is_injective() {
    let q: std::collections::HashSet<_> = AppProfile::presets().iter().map(classify_app).collect();
    assert_eq!(q.len(), 4);
}

proptest! {
    #[test]
    fn endurance_never_rises_with_payload(a in 100.0f64..=400.0, b in 100.0f64..=400.0) {
        let cat = default_catalog();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for u in &cat.uavs {
            prop_assert!(operational_time(u, hi).unwrap() <= operational_time(u, lo).unwrap());
        }
    }

    #[test]
    fn response_never_falls_with_load(a in 1u32..=100, b in 1u32..=100) {
        let cat = default_catalog();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for c in &cat.calibration.load_curves {
            prop_assert!(response_time_at_load(c, lo).unwrap() <= response_time_at_load(c, hi).unwrap());
            prop_assert!(
                battery_duration(c, lo, cat.calibration.battery_idle_cap_h).unwrap()
                    >= battery_duration(c, hi, cat.calibration.battery_idle_cap_h).unwrap()
            );
        }
    }
}
