//! Master/worker job farm.
//!
//! The master hands jobs to workers round-robin. A worker takes one job at a
//! time: the master sends the next one when the previous result comes back
//! or, for a lost job, when its time runs out. Each job crosses the link
//! twice (dispatch and collection); each crossing succeeds independently
//! with probability sqrt(p), so a job completes with the link's calibrated
//! aggregate probability p = p_master * p_worker.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{JobOutcome, JobTrace, ResponseSummary, SimError, SimReport};
use crate::perf_models::{LinkModel, LinkTable, Regime, Role};

fn default_jobs() -> u32 {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollabConfig {
    pub n_workers: u32,
    #[serde(default = "default_jobs")]
    pub n_jobs: u32,
    /// Base latency per job on each worker; a single value applies to all.
    pub per_job_work_ms: Vec<f64>,
    pub master_link: LinkModel,
    /// One link per worker; a single value applies to all.
    pub worker_links: Vec<LinkModel>,
    pub seed: u64,
    /// Re-sends of a lost job. Not calibrated: the reference rates assume 0.
    #[serde(default)]
    pub retry_budget: u32,
}

impl CollabConfig {
    /// `n_workers` identical workers with the side named by `role` at
    /// `regime` and the other side dry.
    pub fn for_regime(
        links: &LinkTable,
        regime: Regime,
        role: Role,
        n_workers: u32,
        n_jobs: u32,
        work_ms: f64,
        seed: u64,
    ) -> Self {
        let dry = links.model(Regime::EncasedDry, role);
        let wet = links.model(regime, role);
        let (master, worker) = match role {
            Role::Master => (wet, dry),
            Role::Workers => (dry, wet),
        };
        Self {
            n_workers,
            n_jobs,
            per_job_work_ms: vec![work_ms],
            master_link: master,
            worker_links: vec![worker],
            seed,
            retry_budget: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = self.n_workers as usize;
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if n == 0 {
            return bad("n_workers must be >= 1".into());
        }
        for (name, len) in [
            ("per_job_work_ms", self.per_job_work_ms.len()),
            ("worker_links", self.worker_links.len()),
        ] {
            if len != 1 && len != n {
                return bad(format!("{name} must hold 1 or n_workers ({n}) entries, got {len}"));
            }
        }
        if self.per_job_work_ms.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return bad("per_job_work_ms must be finite and >= 0".into());
        }
        for l in self.worker_links.iter().chain([&self.master_link]) {
            if !(0.0..=1.0).contains(&l.per_job_success_p) || !(l.latency_multiplier > 0.0) {
                return bad("link success must be in [0,1] and latency multiplier > 0".into());
            }
        }
        Ok(())
    }

    fn work_ms(&self, w: usize) -> f64 {
        self.per_job_work_ms[if self.per_job_work_ms.len() == 1 { 0 } else { w }]
    }

    fn worker_link(&self, w: usize) -> &LinkModel {
        &self.worker_links[if self.worker_links.len() == 1 { 0 } else { w }]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    /// Worker is free for its next job.
    Ready { worker: u32 },
    Done { job: u32, worker: u32, ok: bool },
}

/// Runs one seeded simulation.
pub fn simulate_collaborative(config: &CollabConfig) -> Result<SimReport, SimError> {
    config.validate()?;
    let n = config.n_workers as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // per worker: queue of job ids in round-robin order
    let mut queues: Vec<std::collections::VecDeque<u32>> = vec![Default::default(); n];
    for j in 0..config.n_jobs {
        queues[j as usize % n].push_back(j);
    }
    let crossing_p: Vec<f64> = (0..n)
        .map(|w| (config.master_link.per_job_success_p * config.worker_link(w).per_job_success_p).sqrt())
        .collect();
    let latency_us: Vec<u64> = (0..n)
        .map(|w| {
            let m = config.master_link.latency_multiplier * config.worker_link(w).latency_multiplier;
            (config.work_ms(w) * m * 1000.0).round() as u64
        })
        .collect();

    let mut traces: Vec<JobTrace> = (0..config.n_jobs)
        .map(|j| JobTrace {
            job_id: j,
            assigned_worker: j % config.n_workers,
            dispatched_at_ms: 0.0,
            outcome: JobOutcome::Lost,
            completed_at_ms: None,
            attempts: 0,
        })
        .collect();

    let mut heap: BinaryHeap<Reverse<(u64, u64, Event)>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut push = |heap: &mut BinaryHeap<_>, t: u64, e: Event| {
        heap.push(Reverse((t, seq, e)));
        seq += 1;
    };
    for w in 0..config.n_workers {
        push(&mut heap, 0, Event::Ready { worker: w });
    }
    // job waiting for a resend, per worker
    let mut resend: Vec<Option<u32>> = vec![None; n];

    while let Some(Reverse((t, _, ev))) = heap.pop() {
        match ev {
            Event::Ready { worker } => {
                let w = worker as usize;
                let Some(job) = resend[w].take().or_else(|| queues[w].pop_front()) else {
                    continue;
                };
                let tr = &mut traces[job as usize];
                if tr.attempts == 0 {
                    tr.dispatched_at_ms = t as f64 / 1000.0;
                }
                tr.attempts += 1;
                let out = rng.random_bool(crossing_p[w]);
                let back = rng.random_bool(crossing_p[w]);
                push(&mut heap, t + latency_us[w], Event::Done { job, worker, ok: out && back });
            }
            Event::Done { job, worker, ok } => {
                let tr = &mut traces[job as usize];
                if ok {
                    tr.outcome = JobOutcome::Completed;
                    tr.completed_at_ms = Some(t as f64 / 1000.0);
                } else if tr.attempts <= config.retry_budget {
                    resend[worker as usize] = Some(job);
                }
                push(&mut heap, t, Event::Ready { worker });
            }
        }
    }

    let completed = traces.iter().filter(|t| t.outcome == JobOutcome::Completed).count();
    let latencies: Vec<f64> = traces
        .iter()
        .filter_map(|t| t.completed_at_ms.map(|c| c - t.dispatched_at_ms))
        .collect();
    Ok(SimReport {
        success_rate: if config.n_jobs == 0 {
            1.0
        } else {
            completed as f64 / f64::from(config.n_jobs)
        },
        response_times: ResponseSummary::of(&latencies),
        battery_timeline: Vec::new(),
        traces,
        missions: Vec::new(),
        warnings: Vec::new(),
    })
}
