//! Seeded simulations: collaborative master/worker processing over lossy
//! links, and delivery missions with battery accounting.

mod collab;
mod delivery;
mod monte_carlo;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use collab::{simulate_collaborative, CollabConfig};
pub use delivery::{route_for, simulate_delivery, simulate_unit_mission, MissionTrace, Segment};
pub use monte_carlo::{rep_seed, run_monte_carlo, MonteCarloReport};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// The plan does not agree with the catalog it is simulated against.
    #[error("plan/catalog consistency: {0}")]
    Consistency(String),
    #[error(transparent)]
    Model(#[from] crate::perf_models::ModelError),
    #[error("csv export failed: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobOutcome {
    Completed,
    Lost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobTrace {
    pub job_id: u32,
    pub assigned_worker: u32,
    pub dispatched_at_ms: f64,
    pub outcome: JobOutcome,
    pub completed_at_ms: Option<f64>,
    pub attempts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseSummary {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
}

impl ResponseSummary {
    /// Nearest-rank percentiles; `None` for an empty sample.
    pub fn of(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let rank = |q: f64| s[((q * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1];
        Some(Self {
            mean_ms: s.iter().sum::<f64>() / s.len() as f64,
            p50_ms: rank(0.50),
            p95_ms: rank(0.95),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub success_rate: f64,
    pub response_times: Option<ResponseSummary>,
    /// (t_s, remaining battery fraction).
    pub battery_timeline: Vec<(f64, f64)>,
    pub traces: Vec<JobTrace>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missions: Vec<MissionTrace>,
    /// Plan/model disagreements found while simulating.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    job_id: u32,
    assigned_worker: u32,
    dispatched_at_ms: f64,
    outcome: &'a str,
    completed_at_ms: Option<f64>,
    attempts: u32,
}

impl SimReport {
    /// One row per job trace.
    pub fn to_csv(&self) -> Result<String, SimError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.traces.is_empty() {
            w.write_record([
                "job_id",
                "assigned_worker",
                "dispatched_at_ms",
                "outcome",
                "completed_at_ms",
                "attempts",
            ])?;
        }
        for t in &self.traces {
            w.serialize(CsvRow {
                job_id: t.job_id,
                assigned_worker: t.assigned_worker,
                dispatched_at_ms: t.dispatched_at_ms,
                outcome: match t.outcome {
                    JobOutcome::Completed => "completed",
                    JobOutcome::Lost => "lost",
                },
                completed_at_ms: t.completed_at_ms,
                attempts: t.attempts,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| SimError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
