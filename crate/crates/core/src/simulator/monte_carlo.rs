//! Repeated independent collaborative runs.

use serde::{Deserialize, Serialize};

use super::{simulate_collaborative, CollabConfig, ResponseSummary, SimError, SimReport};
use crate::exec::{map_range, ExecMode};

/// z for a two-sided 95% normal interval.
const Z95: f64 = 1.96;

/// Seed of repetition `rep`, well spread even for adjacent base seeds.
pub fn rep_seed(seed: u64, rep: u32) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(u64::from(rep).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub repetitions: u32,
    /// Mean over repetitions; traces are dropped.
    pub report: SimReport,
    pub success_rate_half_width: f64,
    pub rep_success_rates: Vec<f64>,
    /// Mean of the per-repetition mean latencies, over repetitions that
    /// completed at least one job.
    pub mean_latency_ms: Option<f64>,
}

pub fn run_monte_carlo(config: &CollabConfig, repetitions: u32, mode: ExecMode) -> Result<MonteCarloReport, SimError> {
    if repetitions == 0 {
        return Err(SimError::InvalidConfig("repetitions must be >= 1".into()));
    }
    config.validate()?;
    let runs = map_range(repetitions as usize, mode, |r| {
        let mut c = config.clone();
        c.seed = rep_seed(config.seed, r as u32);
        simulate_collaborative(&c)
    });
    let runs: Vec<SimReport> = runs.into_iter().collect::<Result<_, _>>()?;

    let rates: Vec<f64> = runs.iter().map(|r| r.success_rate).collect();
    let n = f64::from(repetitions);
    let mean = rates.iter().sum::<f64>() / n;
    let half_width = if repetitions > 1 {
        let var = rates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Z95 * (var / n).sqrt()
    } else {
        0.0
    };

    let latencies: Vec<f64> = runs
        .iter()
        .flat_map(|r| r.traces.iter())
        .filter_map(|t| t.completed_at_ms.map(|c| c - t.dispatched_at_ms))
        .collect();
    let rep_means: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.response_times.map(|s| s.mean_ms))
        .collect();
    let mean_latency_ms = (!rep_means.is_empty()).then(|| rep_means.iter().sum::<f64>() / rep_means.len() as f64);

    Ok(MonteCarloReport {
        repetitions,
        report: SimReport {
            success_rate: mean,
            response_times: ResponseSummary::of(&latencies),
            battery_timeline: Vec::new(),
            traces: Vec::new(),
            missions: Vec::new(),
            warnings: Vec::new(),
        },
        success_rate_half_width: half_width,
        rep_success_rates: rates,
        mean_latency_ms,
    })
}
