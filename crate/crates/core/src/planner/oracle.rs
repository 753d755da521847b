//! Exhaustive reference solver.
//!
//! Enumerates every count vector that respects the fleet bounds over the
//! pairs whose per-pair constraints hold, evaluates each one in full and
//! keeps the preferred feasible vector. Pair eligibility is recomputed from
//! the raw pair fields rather than taken from the model's upper bounds.

use serde::{Deserialize, Serialize};

use super::model::{AllocationModel, Variable};
use super::{build_plan, cost_tolerance, diagnose, keep_better, Candidate, PlanError, SolveOutcome};
use crate::exec::{map_range, ExecMode};

/// Largest number of candidate vectors the oracle will scan.
pub const ORACLE_LIMIT: u128 = 10_000_000;

const CHUNKS: usize = 256;

fn pair_ok(v: &Variable) -> bool {
    v.modality_allowed && v.fits && v.endurance_s.is_some_and(|e| v.tour_s <= e)
}

/// Variable indices and every count vector over them with sum <= bound.
pub(crate) struct Group {
    pub vars: Vec<usize>,
    pub options: Vec<Vec<u32>>,
}

fn vectors_up_to(k: usize, budget: u32) -> Vec<Vec<u32>> {
    fn rec(k: usize, budget: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in 0..=budget {
            cur.push(x);
            rec(k, budget - x, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, budget, &mut Vec::with_capacity(k), &mut out);
    out
}

/// C(k + b, b): vectors of length k with sum <= b.
fn count_vectors(k: usize, b: u32) -> u128 {
    let mut r: u128 = 1;
    for i in 1..=u128::from(b) {
        r = r * (k as u128 + i) / i;
    }
    r
}

pub(crate) fn groups_where(model: &AllocationModel, keep: impl Fn(&Variable) -> bool) -> Vec<(usize, Vec<usize>)> {
    (0..model.fleet.len())
        .map(|u| {
            let vars = model
                .variables
                .iter()
                .enumerate()
                .filter(|(_, v)| v.uav_index == u && keep(v))
                .map(|(i, _)| i)
                .collect();
            (u, vars)
        })
        .collect()
}

pub(crate) fn space_of(model: &AllocationModel, groups: &[(usize, Vec<usize>)]) -> u128 {
    groups
        .iter()
        .map(|(u, vars)| count_vectors(vars.len(), model.fleet_bound_of(*u)))
        .fold(1u128, |a, b| a.saturating_mul(b))
}

pub(crate) fn expand(model: &AllocationModel, groups: Vec<(usize, Vec<usize>)>) -> Vec<Group> {
    groups
        .into_iter()
        .filter(|(_, vars)| !vars.is_empty())
        .map(|(u, vars)| Group {
            options: vectors_up_to(vars.len(), model.fleet_bound_of(u)),
            vars,
        })
        .collect()
}

/// Writes candidate number `idx` (mixed radix over the groups) into `counts`.
pub(crate) fn decode(groups: &[Group], mut idx: usize, counts: &mut [u32]) {
    for g in groups.iter().rev() {
        let n = g.options.len();
        let opt = &g.options[idx % n];
        idx /= n;
        for (&i, &x) in g.vars.iter().zip(opt) {
            counts[i] = x;
        }
    }
}

/// Number of candidate vectors the oracle would scan for `model`.
pub fn search_space_size(model: &AllocationModel) -> u128 {
    space_of(model, &groups_where(model, pair_ok))
}

pub fn oracle_enumerate(model: &AllocationModel) -> Result<SolveOutcome, PlanError> {
    oracle_enumerate_with(model, ExecMode::default())
}

pub fn oracle_enumerate_with(model: &AllocationModel, mode: ExecMode) -> Result<SolveOutcome, PlanError> {
    let raw = groups_where(model, pair_ok);
    let size = space_of(model, &raw);
    if size > ORACLE_LIMIT {
        return Err(PlanError::SearchSpaceTooLarge {
            candidates: size,
            limit: ORACLE_LIMIT,
        });
    }
    let groups = expand(model, raw);
    let size = size as usize;
    let chunks = size.min(CHUNKS);
    let n = model.variables.len();

    let partial = map_range(chunks, mode, |c| {
        let lo = size * c / chunks;
        let hi = size * (c + 1) / chunks;
        let mut counts = vec![0u32; n];
        let mut best = None;
        for idx in lo..hi {
            decode(&groups, idx, &mut counts);
            let e = model.evaluate(&counts);
            if e.feasible {
                keep_better(
                    &mut best,
                    Candidate {
                        counts: counts.clone(),
                        cost: e.cost,
                        weight_gm: e.weight_gm,
                    },
                );
            }
        }
        best
    });

    let mut best = None;
    for cand in partial.into_iter().flatten() {
        keep_better(&mut best, cand);
    }
    Ok(match best {
        Some(b) => SolveOutcome::Optimal(build_plan(model, &b.counts)),
        None => SolveOutcome::Infeasible(diagnose(model)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleStatus {
    /// Same certificate and, when optimal, the same cost.
    CostEqual,
    Mismatch,
    /// Search space over [`ORACLE_LIMIT`].
    Refused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub status: OracleStatus,
    pub candidates: u128,
    pub solver_cost: Option<f64>,
    pub oracle_cost: Option<f64>,
    pub identical_assignment: bool,
}

/// Re-solves `model` exhaustively and compares against `solved`.
pub fn cross_check(model: &AllocationModel, solved: &SolveOutcome, mode: ExecMode) -> OracleCheck {
    let candidates = search_space_size(model);
    let solver_cost = solved.plan().map(|p| p.total_cost);
    let oracle = match oracle_enumerate_with(model, mode) {
        Ok(o) => o,
        Err(_) => {
            return OracleCheck {
                status: OracleStatus::Refused,
                candidates,
                solver_cost,
                oracle_cost: None,
                identical_assignment: false,
            }
        }
    };
    let oracle_cost = oracle.plan().map(|p| p.total_cost);
    let agree = match (solver_cost, oracle_cost) {
        (Some(a), Some(b)) => (a - b).abs() <= cost_tolerance(a, b),
        (None, None) => true,
        _ => false,
    };
    let identical = match (solved.plan(), oracle.plan()) {
        (Some(a), Some(b)) => a.selection() == b.selection(),
        (None, None) => true,
        _ => false,
    };
    OracleCheck {
        status: if agree { OracleStatus::CostEqual } else { OracleStatus::Mismatch },
        candidates,
        solver_cost,
        oracle_cost,
        identical_assignment: identical,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_counts() {
        for k in 0..6 {
            for b in 0..5 {
                assert_eq!(vectors_up_to(k, b).len() as u128, count_vectors(k, b), "k={k} b={b}");
            }
        }
        assert_eq!(count_vectors(5, 3), 56);
        assert_eq!(count_vectors(10, 3), 286);
    }

    #[test]
    fn decode_visits_every_combination_once() {
        let groups = vec![
            Group {
                vars: vec![0, 1],
                options: vectors_up_to(2, 2),
            },
            Group {
                vars: vec![2],
                options: vectors_up_to(1, 1),
            },
        ];
        let total = 6 * 2;
        let mut seen = std::collections::BTreeSet::new();
        let mut counts = vec![0u32; 3];
        for idx in 0..total {
            decode(&groups, idx, &mut counts);
            seen.insert(counts.clone());
        }
        assert_eq!(seen.len(), total);
    }
}
