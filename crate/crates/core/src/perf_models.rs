//! Calibrated performance models.
//!
//! Everything here is a pure function of immutable calibration data:
//! endurance vs payload, response time vs concurrent users, battery lifetime
//! vs load, link quality vs submersion depth, and the application
//! classification grid.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::UavSpec;

/// Fraction of battery drained per measured interval.
pub const INTERVAL_FRACTION: f64 = 0.1;

/// Benchmarked concurrent-user domain of the load curves.
pub const MIN_USERS: u32 = 1;
pub const MAX_USERS: u32 = 100;

pub const PRIME_TASK_LEN: usize = 20;
pub const PRIME_TASK_MIN: u32 = 100_000;
pub const PRIME_TASK_MAX: u32 = 105_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{quantity} {value} outside model domain [{lo}, {hi}]")]
    Domain {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("no load curve calibrated for device `{0}`")]
    NoLoadCurve(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
}

/// Linear interpolation through sorted anchors. Outside the anchor span the
/// first/last segment is extended; callers enforce their own domain.
fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    match points {
        [] => f64::NAN,
        [(_, y)] => *y,
        _ => {
            let i = points
                .windows(2)
                .position(|w| x <= w[1].0)
                .unwrap_or(points.len() - 2);
            let (x0, y0) = points[i];
            let (x1, y1) = points[i + 1];
            if x == x0 {
                return y0;
            }
            if x == x1 {
                return y1;
            }
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    }
}

/// Operational seconds per 10% battery interval as a function of payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnduranceCurve {
    pub owner: String,
    pub points: Vec<(f64, f64)>,
}

impl EnduranceCurve {
    pub fn new(owner: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::InvalidCurve("no endurance points".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(ModelError::InvalidCurve(
                "payloads must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            owner: owner.into(),
            points,
        })
    }

    pub fn for_uav(uav: &UavSpec) -> Result<Self, ModelError> {
        Self::new(uav.id.clone(), uav.endurance_points.clone())
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    pub fn seconds_per_interval(&self, payload_gm: f64) -> Result<f64, ModelError> {
        let (lo, hi) = self.domain();
        if !(payload_gm >= lo && payload_gm <= hi) {
            return Err(ModelError::Domain {
                quantity: "payload_gm",
                value: payload_gm,
                lo,
                hi,
            });
        }
        Ok(interpolate(&self.points, payload_gm))
    }
}

/// Seconds of operation per 10% battery interval at `payload_gm`.
pub fn operational_time(uav: &UavSpec, payload_gm: f64) -> Result<f64, ModelError> {
    EnduranceCurve::for_uav(uav)?.seconds_per_interval(payload_gm)
}

/// Response time vs concurrent users for one device, plus its battery
/// lifetime under the 100-user benchmark load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadCurve {
    pub device: String,
    /// (concurrent users, response ms)
    pub anchor_points: Vec<(u32, f64)>,
    pub battery_hours_at_100_users: f64,
}

impl LoadCurve {
    fn problems(&self) -> Vec<String> {
        let ctx = format!("load curve `{}`", self.device);
        let mut errs = Vec::new();
        if self.anchor_points.len() < 2 {
            errs.push(format!("{ctx}: needs at least two anchors"));
        }
        for w in self.anchor_points.windows(2) {
            if w[1].0 <= w[0].0 {
                errs.push(format!("{ctx}: users not strictly increasing"));
            }
            if w[1].1 < w[0].1 {
                errs.push(format!("{ctx}: response decreases with load"));
            }
        }
        if self
            .anchor_points
            .iter()
            .any(|(u, r)| !(MIN_USERS..=MAX_USERS).contains(u) || !(*r > 0.0))
        {
            errs.push(format!("{ctx}: anchors must lie in [1, 100] users with positive response"));
        }
        if !(self.battery_hours_at_100_users > 0.0) {
            errs.push(format!("{ctx}: battery_hours_at_100_users must be > 0"));
        }
        errs
    }

    fn points(&self) -> Vec<(f64, f64)> {
        self.anchor_points
            .iter()
            .map(|(u, r)| (f64::from(*u), *r))
            .collect()
    }
}

fn check_users(users: u32) -> Result<(), ModelError> {
    if !(MIN_USERS..=MAX_USERS).contains(&users) {
        return Err(ModelError::Domain {
            quantity: "users",
            value: f64::from(users),
            lo: f64::from(MIN_USERS),
            hi: f64::from(MAX_USERS),
        });
    }
    Ok(())
}

/// Affine interpolation through the load anchors, exact at every anchor.
pub fn response_time_at_load(curve: &LoadCurve, users: u32) -> Result<f64, ModelError> {
    check_users(users)?;
    Ok(interpolate(&curve.points(), f64::from(users)))
}

/// Energy-proportional battery lifetime in hours, capped at `idle_cap_h`.
pub fn battery_duration(curve: &LoadCurve, users: u32, idle_cap_h: f64) -> Result<f64, ModelError> {
    check_users(users)?;
    let hours = curve.battery_hours_at_100_users * 100.0 / f64::from(users);
    Ok(hours.min(idle_cap_h))
}

/// Submersion regime of a collaborating device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Surface,
    EncasedDry,
    /// 5-8 cm below the surface.
    Depth1,
    /// 10-12 cm below the surface.
    Depth2,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::Surface,
        Regime::EncasedDry,
        Regime::Depth1,
        Regime::Depth2,
    ];

    pub fn is_submerged(self) -> bool {
        matches!(self, Regime::Depth1 | Regime::Depth2)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Surface => "surface",
            Regime::EncasedDry => "encased_dry",
            Regime::Depth1 => "depth1",
            Regime::Depth2 => "depth2",
        })
    }
}

/// Which side of the master/worker topology is underwater.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Master,
    Workers,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Master => "master",
            Role::Workers => "workers",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub per_job_success_p: f64,
    pub latency_multiplier: f64,
}

/// Aggregate per-job completion probability and latency inflation of a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub regime: Regime,
    pub role_underwater: Role,
    pub per_job_success_p: f64,
    pub latency_multiplier: f64,
}

impl LinkModel {
    pub fn is_lossless(&self) -> bool {
        self.per_job_success_p >= 1.0
    }
}

/// Calibrated submerged link parameters. Surface and dry-encased links are
/// always lossless with no latency inflation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkTable {
    pub workers_depth1: LinkParams,
    pub workers_depth2: LinkParams,
    pub master_depth1: LinkParams,
    pub master_depth2: LinkParams,
}

impl Default for LinkTable {
    fn default() -> Self {
        // Depth-1 and workers@depth-2 multipliers are placeholders; only
        // master@depth-2 (3x) has a measured value.
        Self {
            workers_depth1: LinkParams {
                per_job_success_p: 1.0,
                latency_multiplier: 1.5,
            },
            workers_depth2: LinkParams {
                per_job_success_p: 0.70,
                latency_multiplier: 2.5,
            },
            master_depth1: LinkParams {
                per_job_success_p: 0.90,
                latency_multiplier: 1.5,
            },
            master_depth2: LinkParams {
                per_job_success_p: 0.62,
                latency_multiplier: 3.0,
            },
        }
    }
}

impl LinkTable {
    pub fn model(&self, regime: Regime, role: Role) -> LinkModel {
        let params = match (regime, role) {
            (Regime::Surface | Regime::EncasedDry, _) => LinkParams {
                per_job_success_p: 1.0,
                latency_multiplier: 1.0,
            },
            (Regime::Depth1, Role::Workers) => self.workers_depth1,
            (Regime::Depth2, Role::Workers) => self.workers_depth2,
            (Regime::Depth1, Role::Master) => self.master_depth1,
            (Regime::Depth2, Role::Master) => self.master_depth2,
        };
        LinkModel {
            regime,
            role_underwater: role,
            per_job_success_p: params.per_job_success_p,
            latency_multiplier: params.latency_multiplier,
        }
    }

    fn problems(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for role in [Role::Master, Role::Workers] {
            let chain: Vec<LinkModel> = [Regime::EncasedDry, Regime::Depth1, Regime::Depth2]
                .into_iter()
                .map(|r| self.model(r, role))
                .collect();
            for m in &chain {
                if !(0.0..=1.0).contains(&m.per_job_success_p) || !(m.latency_multiplier >= 1.0) {
                    errs.push(format!(
                        "link {}@{}: success must be in [0,1] and latency multiplier >= 1",
                        role, m.regime
                    ));
                }
            }
            for w in chain.windows(2) {
                if w[1].per_job_success_p > w[0].per_job_success_p
                    || w[1].latency_multiplier < w[0].latency_multiplier
                {
                    errs.push(format!("link {role}: quality must degrade with depth"));
                }
            }
        }
        for r in [Regime::Depth1, Regime::Depth2] {
            if self.model(r, Role::Master).per_job_success_p
                > self.model(r, Role::Workers).per_job_success_p
            {
                errs.push(format!("link {r}: submerged master must not beat submerged workers"));
            }
        }
        errs
    }
}

/// Calibrated link model using the default table.
pub fn link_model(regime: Regime, role: Role) -> LinkModel {
    LinkTable::default().model(regime, role)
}

fn default_idle_cap() -> f64 {
    48.0
}

fn default_floor() -> f64 {
    0.5
}

/// Calibration block of the catalog document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    #[serde(default)]
    pub load_curves: Vec<LoadCurve>,
    #[serde(default = "default_idle_cap")]
    pub battery_idle_cap_h: f64,
    /// Lowest battery fraction a UAV may reach before it must be home.
    #[serde(default = "default_floor")]
    pub battery_floor: f64,
    #[serde(default)]
    pub links: LinkTable,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            load_curves: Vec::new(),
            battery_idle_cap_h: default_idle_cap(),
            battery_floor: default_floor(),
            links: LinkTable::default(),
        }
    }
}

impl Calibration {
    pub fn load_curve(&self, device: &str) -> Result<&LoadCurve, ModelError> {
        self.load_curves
            .iter()
            .find(|c| c.device == device)
            .ok_or_else(|| ModelError::NoLoadCurve(device.to_string()))
    }

    /// Number of 10% intervals a UAV may spend before hitting the floor.
    pub fn usable_intervals(&self) -> f64 {
        (1.0 - self.battery_floor) / INTERVAL_FRACTION
    }

    /// Seconds a UAV can operate at `payload_gm` before reaching the floor.
    pub fn usable_endurance_s(&self, uav: &UavSpec, payload_gm: f64) -> Result<f64, ModelError> {
        Ok(self.usable_intervals() * operational_time(uav, payload_gm)?)
    }

    pub(crate) fn problems(&self) -> Vec<String> {
        let mut errs: Vec<String> = self.load_curves.iter().flat_map(LoadCurve::problems).collect();
        if !(self.battery_idle_cap_h > 0.0) {
            errs.push("battery_idle_cap_h must be > 0".into());
        }
        if !(0.0..1.0).contains(&self.battery_floor) {
            errs.push("battery_floor must be in [0, 1)".into());
        }
        errs.extend(self.links.problems());
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fragmentation {
    Tight,
    Loose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityNeed {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    I,
    II,
    III,
    IV,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppProfile {
    pub name: String,
    pub fragmentation_tolerance: Fragmentation,
    pub quality_need: QualityNeed,
}

impl AppProfile {
    fn preset(name: &str, f: Fragmentation, q: QualityNeed) -> Self {
        Self {
            name: name.to_string(),
            fragmentation_tolerance: f,
            quality_need: q,
        }
    }

    /// YOLO, PocketSphinx, Aeneas and the prime-detection benchmark task.
    pub fn presets() -> Vec<AppProfile> {
        use Fragmentation::*;
        use QualityNeed::*;
        vec![
            Self::preset("YOLO", Tight, High),
            Self::preset("PocketSphinx", Loose, High),
            Self::preset("Aeneas", Loose, Low),
            Self::preset("prime-detection", Tight, Low),
        ]
    }
}

/// Quadrant on the fragmentation (x: tight left, loose right) by service
/// quality (y: high top, low bottom) grid.
pub fn classify_app(profile: &AppProfile) -> Quadrant {
    match (profile.fragmentation_tolerance, profile.quality_need) {
        (Fragmentation::Loose, QualityNeed::High) => Quadrant::I,
        (Fragmentation::Tight, QualityNeed::High) => Quadrant::II,
        (Fragmentation::Tight, QualityNeed::Low) => Quadrant::III,
        (Fragmentation::Loose, QualityNeed::Low) => Quadrant::IV,
    }
}

/// `count` benchmark requests, each a list of 20 integers in [100000, 105000].
pub fn generate_prime_task(count: usize, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..PRIME_TASK_LEN)
                .map(|_| rng.random_range(PRIME_TASK_MIN..=PRIME_TASK_MAX))
                .collect()
        })
        .collect()
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    if n.is_multiple_of(3) {
        return n == 3;
    }
    let n = u64::from(n);
    let mut d = 5u64;
    while d * d <= n {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

/// The cloudlet service's work for one request.
pub fn detect_primes(request: &[u32]) -> Vec<u32> {
    request.iter().copied().filter(|n| is_prime(*n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::default_catalog;
    use approx::assert_relative_eq;

    fn s5() -> LoadCurve {
        default_catalog()
            .calibration
            .load_curve("galaxy-s5")
            .unwrap()
            .clone()
    }

    #[test]
    fn endurance_anchors() {
        let cat = default_catalog();
        let eye = cat.uav("powereye").unwrap();
        let ray = cat.uav("powerray").unwrap();
        assert_eq!(operational_time(eye, 100.0).unwrap(), 146.0);
        assert_eq!(operational_time(eye, 400.0).unwrap(), 109.0);
        assert_eq!(operational_time(ray, 100.0).unwrap(), 1064.0);
        assert_eq!(operational_time(ray, 400.0).unwrap(), 473.0);
        // hand interpolation: 146 + (109 - 146) * 150 / 300
        assert_relative_eq!(operational_time(eye, 250.0).unwrap(), 127.5, epsilon = 1e-12);
    }

    #[test]
    fn endurance_refuses_extrapolation() {
        let cat = default_catalog();
        let eye = cat.uav("powereye").unwrap();
        assert!(matches!(operational_time(eye, 99.0), Err(ModelError::Domain { .. })));
        assert!(matches!(operational_time(eye, 401.0), Err(ModelError::Domain { .. })));
        assert!(operational_time(eye, f64::NAN).is_err());
    }

    #[test]
    fn load_anchors_and_midpoint() {
        let c = s5();
        assert_eq!(response_time_at_load(&c, 20).unwrap(), 371.0);
        assert_eq!(response_time_at_load(&c, 90).unwrap(), 1149.0);
        // (371 + 1149) / 2
        assert_relative_eq!(response_time_at_load(&c, 55).unwrap(), 760.0, epsilon = 1e-9);
        assert!(response_time_at_load(&c, 0).is_err());
        assert!(response_time_at_load(&c, 101).is_err());
    }

    #[test]
    fn rp4_ratio() {
        let cat = default_catalog();
        let rp4 = cat.calibration.load_curve("rpi4b").unwrap();
        let ratio = response_time_at_load(rp4, 90).unwrap() / response_time_at_load(rp4, 20).unwrap();
        assert!((ratio - 2.5).abs() <= 0.05);
        // Faster than S5 at the same load.
        assert!(response_time_at_load(rp4, 55).unwrap() < response_time_at_load(&s5(), 55).unwrap());
    }

    #[test]
    fn battery_scaling() {
        let cat = default_catalog();
        let cap = cat.calibration.battery_idle_cap_h;
        let rp4 = cat.calibration.load_curve("rpi4b").unwrap();
        assert_eq!(battery_duration(&s5(), 100, cap).unwrap(), 11.0);
        assert_eq!(battery_duration(rp4, 100, cap).unwrap(), 4.0);
        assert_eq!(battery_duration(&s5(), 50, cap).unwrap(), 22.0);
        assert_eq!(battery_duration(&s5(), 1, cap).unwrap(), 48.0);
        assert!(battery_duration(&s5(), 0, cap).is_err());
    }

    #[test]
    fn link_calibration() {
        assert_eq!(link_model(Regime::EncasedDry, Role::Master).per_job_success_p, 1.0);
        assert_eq!(link_model(Regime::Surface, Role::Workers).latency_multiplier, 1.0);
        let m2 = link_model(Regime::Depth2, Role::Master);
        assert_eq!(m2.per_job_success_p, 0.62);
        assert_eq!(m2.latency_multiplier, 3.0);
        assert_eq!(link_model(Regime::Depth2, Role::Workers).per_job_success_p, 0.70);
        assert_eq!(link_model(Regime::Depth1, Role::Master).per_job_success_p, 0.90);
        assert_eq!(link_model(Regime::Depth1, Role::Workers).per_job_success_p, 1.0);
        assert!(LinkTable::default().problems().is_empty());
    }

    #[test]
    fn link_degradation_is_monotone() {
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
    fn bad_link_table_is_reported() {
        let mut t = LinkTable::default();
        t.master_depth2.per_job_success_p = 0.95;
        assert!(!t.problems().is_empty());
    }

    #[test]
    fn quadrants() {
        let presets = AppProfile::presets();
        let q = |n: &str| classify_app(presets.iter().find(|p| p.name == n).unwrap());
        assert_eq!(q("YOLO"), Quadrant::II);
        assert_eq!(q("prime-detection"), Quadrant::III);
        let cache = AppProfile::preset("cache", Fragmentation::Loose, QualityNeed::Low);
        assert_eq!(classify_app(&cache), Quadrant::IV);
        let mut seen = std::collections::HashSet::new();
        for f in [Fragmentation::Tight, Fragmentation::Loose] {
            for qn in [QualityNeed::High, QualityNeed::Low] {
                assert!(seen.insert(classify_app(&AppProfile::preset("x", f, qn))));
            }
        }
        assert_eq!(seen.len(), 4);
    }

    fn naive_prime(n: u32) -> bool {
        n >= 2 && (2..n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn prime_tasks() {
        assert!(generate_prime_task(0, 7).is_empty());
        let one = generate_prime_task(1, 7);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].len(), 20);
        assert!(one[0].iter().all(|n| (100_000..=105_000).contains(n)));
        assert_eq!(generate_prime_task(5, 9), generate_prime_task(5, 9));
        assert_ne!(generate_prime_task(5, 9), generate_prime_task(5, 10));
        assert!(naive_prime(100_003) && is_prime(100_003));
        assert!(!naive_prime(100_000) && !is_prime(100_000));
        for n in PRIME_TASK_MIN..=PRIME_TASK_MIN + 400 {
            assert_eq!(is_prime(n), naive_prime(n), "{n}");
        }
        for n in 0..200 {
            assert_eq!(is_prime(n), naive_prime(n), "{n}");
        }
    }
}
