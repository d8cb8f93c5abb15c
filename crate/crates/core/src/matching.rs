//! Per-slot assignment of clusters to satellites.
//!
//! Each cluster is served by at most one satellite, and each satellite has a
//! bandwidth and a power budget. Minimizing total cost alone would be solved
//! by serving nobody, so every solver here works lexicographically: serve as
//! many clusters as possible, then minimize cost among those plans.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::clustering::Cluster;
use crate::error::{Error, Result};
use crate::geometry::{slant_range, EcefVector};
use crate::scalar::Scalar;

/// Largest enumeration bound (`satellites^clusters`) the exact solver
/// accepts.
pub const EXACT_SEARCH_LIMIT: f64 = 1e7;

/// Fractional values at or below this are treated as zero when projecting.
const LP_ZERO: f64 = 1e-9;

/// Cost and load matrices for one slot. Entries are stored satellite-major;
/// an infinite cost marks a pair that cannot be used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingInstance<T> {
    pub num_satellites: usize,
    pub num_clusters: usize,
    pub cost: Vec<T>,
    pub bw_load: Vec<T>,
    pub power_load: Vec<T>,
    pub bw_cap: Vec<T>,
    pub power_cap: Vec<T>,
}

impl<T: Scalar> MatchingInstance<T> {
    /// Instance with every pair unusable and uniform capacities.
    pub fn new(num_satellites: usize, num_clusters: usize, bw_cap: T, power_cap: T) -> Self {
        let len = num_satellites * num_clusters;
        Self {
            num_satellites,
            num_clusters,
            cost: vec![T::infinity(); len],
            bw_load: vec![T::infinity(); len],
            power_load: vec![T::infinity(); len],
            bw_cap: vec![bw_cap; num_satellites],
            power_cap: vec![power_cap; num_satellites],
        }
    }

    fn idx(&self, sat: usize, cluster: usize) -> usize {
        sat * self.num_clusters + cluster
    }

    pub fn set(&mut self, sat: usize, cluster: usize, cost: T, bw: T, power: T) {
        let i = self.idx(sat, cluster);
        self.cost[i] = cost;
        self.bw_load[i] = bw;
        self.power_load[i] = power;
    }

    pub fn cost(&self, sat: usize, cluster: usize) -> T {
        self.cost[self.idx(sat, cluster)]
    }

    pub fn bw(&self, sat: usize, cluster: usize) -> T {
        self.bw_load[self.idx(sat, cluster)]
    }

    pub fn power(&self, sat: usize, cluster: usize) -> T {
        self.power_load[self.idx(sat, cluster)]
    }

    /// Finite cost and loads that fit the satellite on their own.
    pub fn usable(&self, sat: usize, cluster: usize) -> bool {
        self.cost(sat, cluster).is_finite()
            && self.bw(sat, cluster) <= self.bw_cap[sat]
            && self.power(sat, cluster) <= self.power_cap[sat]
    }

    /// Usable satellites for `cluster`, cheapest first (ties by index).
    pub fn options(&self, cluster: usize) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.num_satellites).filter(|&n| self.usable(n, cluster)).collect();
        v.sort_by(|&a, &b| {
            self.cost(a, cluster)
                .partial_cmp(&self.cost(b, cluster))
                .expect("finite costs")
                .then(a.cmp(&b))
        });
        v
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.num_satellites * self.num_clusters;
        if self.cost.len() != len || self.bw_load.len() != len || self.power_load.len() != len {
            return Err(Error::Domain("matching matrices have the wrong size".into()));
        }
        if self.bw_cap.len() != self.num_satellites || self.power_cap.len() != self.num_satellites {
            return Err(Error::Domain("one capacity per satellite required".into()));
        }
        for i in 0..len {
            if self.cost[i].is_finite() && (self.bw_load[i] < T::zero() || self.power_load[i] < T::zero()) {
                return Err(Error::Domain("loads must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// Serving satellite per cluster for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingPlan<T> {
    pub assignment: Vec<Option<usize>>,
    pub served_count: usize,
    pub total_cost: T,
}

impl<T: Scalar> MatchingPlan<T> {
    /// Builds a plan, summing costs in cluster order.
    pub fn from_assignment(inst: &MatchingInstance<T>, assignment: Vec<Option<usize>>) -> Self {
        let mut total_cost = T::zero();
        let mut served_count = 0;
        for (m, s) in assignment.iter().enumerate() {
            if let Some(n) = *s {
                total_cost = total_cost + inst.cost(n, m);
                served_count += 1;
            }
        }
        Self {
            assignment,
            served_count,
            total_cost,
        }
    }

    pub fn unserved(num_clusters: usize) -> Self {
        Self {
            assignment: vec![None; num_clusters],
            served_count: 0,
            total_cost: T::zero(),
        }
    }

    /// Per-satellite (bandwidth, power) load.
    pub fn loads(&self, inst: &MatchingInstance<T>) -> Vec<(T, T)> {
        let mut loads = vec![(T::zero(), T::zero()); inst.num_satellites];
        for (m, s) in self.assignment.iter().enumerate() {
            if let Some(n) = *s {
                loads[n].0 = loads[n].0 + inst.bw(n, m);
                loads[n].1 = loads[n].1 + inst.power(n, m);
            }
        }
        loads
    }

    /// At most one satellite per cluster (by construction), only finite-cost
    /// pairs, and every satellite within both budgets.
    pub fn is_feasible(&self, inst: &MatchingInstance<T>) -> bool {
        if self.assignment.len() != inst.num_clusters {
            return false;
        }
        let finite = self
            .assignment
            .iter()
            .enumerate()
            .all(|(m, s)| s.is_none_or(|n| n < inst.num_satellites && inst.cost(n, m).is_finite()));
        finite
            && self
                .loads(inst)
                .iter()
                .enumerate()
                .all(|(n, &(b, p))| b <= inst.bw_cap[n] && p <= inst.power_cap[n])
    }

    /// Lexicographic order: more clusters served wins, then lower cost.
    pub fn better_than(&self, other: &Self) -> bool {
        self.served_count > other.served_count
            || (self.served_count == other.served_count && self.total_cost < other.total_cost)
    }
}

/// Search-space size the exact solver would face.
pub fn exact_search_size(num_satellites: usize, num_clusters: usize) -> f64 {
    (num_satellites as f64).powf(num_clusters as f64)
}

/// Lexicographically optimal plan by depth-first branch and bound.
///
/// Clusters with at least one usable satellite are branched on in order of
/// decreasing cheapest cost; each tries its satellites cheapest first and
/// then "unserved". A branch is cut when even serving every remaining
/// cluster at its cheapest cost cannot beat the incumbent.
pub fn solve_matching_exact<T: Scalar>(inst: &MatchingInstance<T>) -> Result<MatchingPlan<T>> {
    inst.validate()?;
    let size = exact_search_size(inst.num_satellites, inst.num_clusters);
    if size > EXACT_SEARCH_LIMIT {
        return Err(Error::InstanceTooLarge {
            satellites: inst.num_satellites,
            clusters: inst.num_clusters,
            limit: EXACT_SEARCH_LIMIT,
        });
    }

    let options: Vec<Vec<usize>> = (0..inst.num_clusters).map(|m| inst.options(m)).collect();
    let mut order: Vec<usize> = (0..inst.num_clusters).filter(|&m| !options[m].is_empty()).collect();
    let cheapest = |m: usize| inst.cost(options[m][0], m);
    order.sort_by(|&a, &b| {
        cheapest(b)
            .partial_cmp(&cheapest(a))
            .expect("finite costs")
            .then(a.cmp(&b))
    });
    let mut suffix = vec![T::zero(); order.len() + 1];
    for i in (0..order.len()).rev() {
        suffix[i] = suffix[i + 1] + cheapest(order[i]);
    }

    let mut search = Search {
        inst,
        options: &options,
        order: &order,
        suffix: &suffix,
        current: vec![None; inst.num_clusters],
        bw: vec![T::zero(); inst.num_satellites],
        power: vec![T::zero(); inst.num_satellites],
        best_assignment: vec![None; inst.num_clusters],
        best_served: 0,
        best_cost: T::zero(),
    };
    search.dfs(0, 0, T::zero());
    Ok(MatchingPlan::from_assignment(inst, search.best_assignment))
}

struct Search<'a, T> {
    inst: &'a MatchingInstance<T>,
    options: &'a [Vec<usize>],
    order: &'a [usize],
    suffix: &'a [T],
    current: Vec<Option<usize>>,
    bw: Vec<T>,
    power: Vec<T>,
    best_assignment: Vec<Option<usize>>,
    best_served: usize,
    best_cost: T,
}

impl<T: Scalar> Search<'_, T> {
    fn dfs(&mut self, depth: usize, served: usize, cost: T) {
        if depth == self.order.len() {
            if served > self.best_served || (served == self.best_served && cost < self.best_cost) {
                self.best_served = served;
                self.best_cost = cost;
                self.best_assignment.clone_from(&self.current);
            }
            return;
        }
        let reachable = served + (self.order.len() - depth);
        if reachable < self.best_served {
            return;
        }
        if reachable == self.best_served && cost + self.suffix[depth] >= self.best_cost {
            return;
        }
        let m = self.order[depth];
        for &n in &self.options[m] {
            let (b, p) = (self.inst.bw(n, m), self.inst.power(n, m));
            if self.bw[n] + b > self.inst.bw_cap[n] || self.power[n] + p > self.inst.power_cap[n] {
                continue;
            }
            self.bw[n] = self.bw[n] + b;
            self.power[n] = self.power[n] + p;
            self.current[m] = Some(n);
            self.dfs(depth + 1, served + 1, cost + self.inst.cost(n, m));
            self.current[m] = None;
            self.bw[n] = self.bw[n] - b;
            self.power[n] = self.power[n] - p;
        }
        self.dfs(depth + 1, served, cost);
    }
}

/// LP relaxation followed by projection and repair.
///
/// The relaxation lets `x[n][m] ∈ [0, 1]` and minimizes
/// `Σ x (cost/W − 1)` with `W` larger than any plan's total cost, which makes
/// serving more clusters dominate. Clusters are then fixed to their largest
/// fractional satellite in decreasing order of that value, skipping any that
/// would break a budget; skipped and unassigned clusters finally go to the
/// cheapest satellite that still has room. The output is always feasible.
pub fn solve_matching_relaxed<T: Scalar>(inst: &MatchingInstance<T>) -> Result<MatchingPlan<T>> {
    inst.validate()?;
    let fractional = match lp_relaxation(inst) {
        Ok(x) => x,
        Err(e) => {
            log::warn!("LP relaxation failed ({e}); falling back to greedy repair");
            vec![0.0; inst.num_satellites * inst.num_clusters]
        }
    };

    let mut ranked: Vec<(usize, usize, f64)> = Vec::new();
    let mut rest: Vec<usize> = Vec::new();
    for m in 0..inst.num_clusters {
        let mut best: Option<(usize, f64)> = None;
        for n in inst.options(m) {
            let v = fractional[inst.idx(n, m)];
            if v > LP_ZERO && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((n, v));
            }
        }
        match best {
            Some((n, v)) => ranked.push((m, n, v)),
            None => rest.push(m),
        }
    }
    ranked.sort_by(|a, b| b.2.partial_cmp(&a.2).expect("finite LP values").then(a.0.cmp(&b.0)));

    let mut assignment = vec![None; inst.num_clusters];
    let mut bw = vec![T::zero(); inst.num_satellites];
    let mut power = vec![T::zero(); inst.num_satellites];
    let fits = |n: usize, m: usize, bw: &[T], power: &[T]| {
        bw[n] + inst.bw(n, m) <= inst.bw_cap[n] && power[n] + inst.power(n, m) <= inst.power_cap[n]
    };

    let mut skipped = Vec::new();
    for &(m, n, _) in &ranked {
        if fits(n, m, &bw, &power) {
            assignment[m] = Some(n);
            bw[n] = bw[n] + inst.bw(n, m);
            power[n] = power[n] + inst.power(n, m);
        } else {
            skipped.push(m);
        }
    }
    skipped.extend(rest);
    for m in skipped {
        if let Some(n) = inst.options(m).into_iter().find(|&n| fits(n, m, &bw, &power)) {
            assignment[m] = Some(n);
            bw[n] = bw[n] + inst.bw(n, m);
            power[n] = power[n] + inst.power(n, m);
        }
    }
    Ok(MatchingPlan::from_assignment(inst, assignment))
}

/// Solves the continuous relaxation; returns `x` in instance layout.
fn lp_relaxation<T: Scalar>(inst: &MatchingInstance<T>) -> std::result::Result<Vec<f64>, microlp::Error> {
    let (n_sat, n_clu) = (inst.num_satellites, inst.num_clusters);
    let mut weight = 1.0;
    for m in 0..n_clu {
        let worst = inst
            .options(m)
            .iter()
            .map(|&n| inst.cost(n, m).to_f64().unwrap_or(0.0))
            .fold(0.0f64, f64::max);
        weight += worst;
    }

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mut vars = vec![None; n_sat * n_clu];
    for m in 0..n_clu {
        for n in inst.options(m) {
            let c = inst.cost(n, m).to_f64().unwrap_or(f64::MAX) / weight - 1.0;
            vars[inst.idx(n, m)] = Some(lp.add_var(c, (0.0, 1.0)));
        }
    }
    for m in 0..n_clu {
        let terms: Vec<_> = (0..n_sat)
            .filter_map(|n| vars[inst.idx(n, m)].map(|v| (v, 1.0)))
            .collect();
        if terms.len() > 1 {
            lp.add_constraint(terms.as_slice(), ComparisonOp::Le, 1.0);
        }
    }
    for n in 0..n_sat {
        let bw_cap = inst.bw_cap[n].to_f64().unwrap_or(f64::MAX);
        let p_cap = inst.power_cap[n].to_f64().unwrap_or(f64::MAX);
        let mut bw_terms = Vec::new();
        let mut p_terms = Vec::new();
        for m in 0..n_clu {
            if let Some(v) = vars[inst.idx(n, m)] {
                bw_terms.push((v, inst.bw(n, m).to_f64().unwrap_or(0.0) / bw_cap));
                p_terms.push((v, inst.power(n, m).to_f64().unwrap_or(0.0) / p_cap));
            }
        }
        if !bw_terms.is_empty() {
            lp.add_constraint(bw_terms.as_slice(), ComparisonOp::Le, 1.0);
            lp.add_constraint(p_terms.as_slice(), ComparisonOp::Le, 1.0);
        }
    }

    let solution = lp
        .solve()?
        .into_solution()
        .map_err(|_| microlp::Error::InternalError("LP interrupted".into()))?;
    Ok(vars.iter().map(|v| v.map_or(0.0, |v| solution.var_value(v))).collect())
}

/// Nearest-satellite baseline.
///
/// Every cluster goes to the usable satellite closest to its beam centre.
/// Then, per satellite, the assigned cluster with the highest `demand` is
/// dropped repeatedly until both budgets hold. Dropped clusters stay
/// unserved.
pub fn assign_nearest_meo<T: Scalar>(
    clusters: &[Cluster<T>],
    sat_positions: &[EcefVector<T>],
    inst: &MatchingInstance<T>,
    demand: &[T],
) -> MatchingPlan<T> {
    assert_eq!(clusters.len(), inst.num_clusters);
    assert_eq!(demand.len(), inst.num_clusters);
    let mut assignment: Vec<Option<usize>> = clusters
        .iter()
        .enumerate()
        .map(|(m, c)| {
            (0..inst.num_satellites)
                .filter(|&n| inst.cost(n, m).is_finite())
                .map(|n| (n, slant_range(&sat_positions[n], &c.beam_center)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite range").then(a.0.cmp(&b.0)))
                .map(|(n, _)| n)
        })
        .collect();

    for n in 0..inst.num_satellites {
        loop {
            let members: Vec<usize> = (0..inst.num_clusters).filter(|&m| assignment[m] == Some(n)).collect();
            let bw = members.iter().fold(T::zero(), |a, &m| a + inst.bw(n, m));
            let p = members.iter().fold(T::zero(), |a, &m| a + inst.power(n, m));
            if bw <= inst.bw_cap[n] && p <= inst.power_cap[n] {
                break;
            }
            let heaviest = members
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    demand[a]
                        .partial_cmp(&demand[b])
                        .expect("finite demand")
                        .then(b.cmp(&a))
                })
                .expect("overloaded satellite has clusters");
            assignment[heaviest] = None;
        }
    }
    MatchingPlan::from_assignment(inst, assignment)
}
