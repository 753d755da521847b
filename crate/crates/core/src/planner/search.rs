//! Depth-first branch and bound over bounded integer counts.

use super::model::AllocationModel;
use super::{build_plan, cost_tolerance, diagnose, keep_better, Candidate, SolveOutcome};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes: u64,
    pub leaves: u64,
}

struct Search<'a> {
    model: &'a AllocationModel,
    /// Variable indices with a positive upper bound, in catalog order.
    active: Vec<usize>,
    /// Cheapest cost per user over `active[p..]`.
    min_ratio_from: Vec<f64>,
    /// Largest capacity over `active[p..]` within p's UAV.
    max_cap_in_group_from: Vec<u64>,
    /// Capacity reachable by UAV groups after p's group.
    later_cap: Vec<u64>,
    /// Per-position (response - bound) when load independent.
    excess: Option<Vec<f64>>,
    min_excess_in_group_from: Vec<f64>,
    later_min_excess: Vec<f64>,
    counts: Vec<u32>,
    used: Vec<u32>,
    best: Option<Candidate>,
    stats: SearchStats,
}

impl<'a> Search<'a> {
    fn new(model: &'a AllocationModel) -> Self {
        let active: Vec<usize> = (0..model.variables.len())
            .filter(|&i| model.variables[i].upper_bound > 0)
            .collect();
        let n = active.len();
        let var = |p: usize| &model.variables[active[p]];

        let excess: Option<Vec<f64>> = active
            .iter()
            .map(|&i| model.constant_response_ms(i).map(|r| r - model.response_bound_ms))
            .collect();

        let mut min_ratio_from = vec![f64::INFINITY; n + 1];
        let mut max_cap_in_group_from = vec![0u64; n + 1];
        let mut min_excess_in_group_from = vec![0.0f64; n + 1];
        for p in (0..n).rev() {
            let v = var(p);
            min_ratio_from[p] = min_ratio_from[p + 1].min(v.unit_cost() / f64::from(v.capacity));
            let same = p + 1 < n && var(p + 1).uav_index == v.uav_index;
            let cap = u64::from(v.capacity);
            let ex = excess.as_ref().map_or(0.0, |e| e[p].min(0.0));
            max_cap_in_group_from[p] = if same { cap.max(max_cap_in_group_from[p + 1]) } else { cap };
            min_excess_in_group_from[p] = if same { ex.min(min_excess_in_group_from[p + 1]) } else { ex };
        }

        // group totals, accumulated from the back
        let mut later_cap = vec![0u64; n + 1];
        let mut later_min_excess = vec![0.0f64; n + 1];
        let mut acc_cap = 0u64;
        let mut acc_ex = 0.0;
        let mut p = n;
        while p > 0 {
            let group = var(p - 1).uav_index;
            let mut start = p - 1;
            while start > 0 && var(start - 1).uav_index == group {
                start -= 1;
            }
            for q in start..p {
                later_cap[q] = acc_cap;
                later_min_excess[q] = acc_ex;
            }
            let bound = model.fleet_bound_of(group);
            acc_cap += u64::from(bound) * max_cap_in_group_from[start];
            acc_ex += f64::from(bound) * min_excess_in_group_from[start];
            p = start;
        }

        Self {
            model,
            active,
            min_ratio_from,
            max_cap_in_group_from,
            later_cap,
            excess,
            min_excess_in_group_from,
            later_min_excess,
            counts: vec![0; model.variables.len()],
            used: vec![0; model.fleet.len()],
            best: None,
            stats: SearchStats::default(),
        }
    }

    fn run(&mut self) {
        self.dfs(0, 0, 0.0, 0.0);
    }

    fn dfs(&mut self, p: usize, cap: u64, cost: f64, excess: f64) {
        self.stats.nodes += 1;
        let model = self.model;
        if p == self.active.len() {
            self.stats.leaves += 1;
            let eval = model.evaluate(&self.counts);
            if eval.feasible {
                keep_better(
                    &mut self.best,
                    Candidate {
                        counts: self.counts.clone(),
                        cost: eval.cost,
                        weight_gm: eval.weight_gm,
                    },
                );
            }
            return;
        }

        let i = self.active[p];
        let v = &model.variables[i];
        let group = v.uav_index;
        let room = model.fleet_bound_of(group) - self.used[group];

        let needed = u64::from(model.workload_users).saturating_sub(cap);
        let reach = u64::from(room) * self.max_cap_in_group_from[p] + self.later_cap[p];
        if needed > reach {
            return;
        }
        if let Some(best) = &self.best {
            let lower = cost + needed as f64 * self.min_ratio_from[p];
            if lower > best.cost + cost_tolerance(lower, best.cost) {
                return;
            }
        }
        let step_excess = match &self.excess {
            Some(e) => {
                let floor = f64::from(room) * self.min_excess_in_group_from[p] + self.later_min_excess[p];
                if excess + floor > 1e-6 {
                    return;
                }
                e[p]
            }
            None => 0.0,
        };

        let top = v.upper_bound.min(room);
        let unit_cost = v.unit_cost();
        let unit_cap = u64::from(v.capacity);
        for x in (0..=top).rev() {
            self.counts[i] = x;
            self.used[group] += x;
            self.dfs(
                p + 1,
                cap + unit_cap * u64::from(x),
                cost + unit_cost * f64::from(x),
                excess + step_excess * f64::from(x),
            );
            self.used[group] -= x;
        }
        self.counts[i] = 0;
    }
}

/// Exact optimum by branch and bound, or a diagnosed infeasibility.
pub fn solve(model: &AllocationModel) -> SolveOutcome {
    solve_with_stats(model).0
}

pub fn solve_with_stats(model: &AllocationModel) -> (SolveOutcome, SearchStats) {
    let mut search = Search::new(model);
    search.run();
    let outcome = match &search.best {
        Some(best) => SolveOutcome::Optimal(build_plan(model, &best.counts)),
        None => SolveOutcome::Infeasible(diagnose(model)),
    };
    (outcome, search.stats)
}
