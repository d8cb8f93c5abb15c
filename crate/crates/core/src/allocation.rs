//! Per-cluster bandwidth/power minimization.
//!
//! For a cluster served by one satellite, the cost
//! `Σ_k (c_P P_k + c_B B_k)` subject to `B_k log2(1 + P_k h_k / (B_k σ²)) ≥ D_k`
//! has no constraint coupling different users, so it splits into one
//! two-variable problem per user. At the optimum the rate constraint is
//! tight; writing `r = P h / (B σ²)` for the per-Hz SNR gives
//! `B = D / log2(1 + r)`, `P = B σ² r / h` and a cost of
//! `D · (c_P σ² r / h + c_B) / log2(1 + r)`, which is unimodal in `r`. The
//! minimizing `r` does not depend on `D`, so the solution scales linearly
//! with demand.

use serde::{Deserialize, Serialize};

use crate::clustering::Cluster;
use crate::error::{Error, Result};
use crate::geometry::{in_fov, EcefVector};
use crate::optimize::golden_section_min;
use crate::rf_model::{channel_gain, AntennaConfig};
use crate::scalar::Scalar;
use crate::scenario::UserTerminal;

/// Initial SNR bracket for the line search.
const SNR_BRACKET: (f64, f64) = (1e-6, 1e6);
/// Bracket expansions (×10 per side) allowed when the minimizer lands on an end.
const MAX_EXPANSIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserLinkProblem<T> {
    pub demand_bps: T,
    pub channel_gain: T,
    pub noise_psd: T,
    /// W of consumption per radiated W.
    pub power_coeff: T,
    /// W of consumption per Hz.
    pub bw_coeff: T,
}

impl<T: Scalar> UserLinkProblem<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.channel_gain > T::zero() && self.channel_gain.is_finite()) {
            return Err(Error::Domain(format!(
                "channel gain {} must be positive",
                self.channel_gain
            )));
        }
        if !(self.noise_psd > T::zero() && self.noise_psd.is_finite()) {
            return Err(Error::Domain(format!("noise PSD {} must be positive", self.noise_psd)));
        }
        if !(self.power_coeff > T::zero() && self.bw_coeff > T::zero()) {
            return Err(Error::Domain("cost coefficients must be positive".into()));
        }
        if !(self.demand_bps >= T::zero() && self.demand_bps.is_finite()) {
            return Err(Error::Domain(format!(
                "demand {} must be non-negative",
                self.demand_bps
            )));
        }
        Ok(())
    }

    /// Objective value of an arbitrary (bandwidth, power) pair.
    pub fn cost(&self, bandwidth_hz: T, power_w: T) -> T {
        self.power_coeff * power_w + self.bw_coeff * bandwidth_hz
    }

    /// Power that makes the rate constraint tight at `bandwidth_hz`.
    pub fn tight_power(&self, bandwidth_hz: T) -> T {
        let exponent = self.demand_bps / bandwidth_hz * T::LN_2();
        bandwidth_hz * self.noise_psd * exponent.exp_m1() / self.channel_gain
    }

    /// Cost per bit/s of demand when operating at per-Hz SNR `snr`.
    fn unit_cost(&self, snr: T) -> T {
        let a = self.power_coeff * self.noise_psd / self.channel_gain;
        (a * snr + self.bw_coeff) * T::LN_2() / snr.ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSolution<T> {
    pub bandwidth_hz: T,
    pub power_w: T,
    pub cost_w: T,
}

impl<T: Scalar> LinkSolution<T> {
    fn zero() -> Self {
        Self {
            bandwidth_hz: T::zero(),
            power_w: T::zero(),
            cost_w: T::zero(),
        }
    }
}

/// Per-Hz SNR minimizing the unit cost, by golden-section search on `ln r`.
pub fn optimal_snr<T: Scalar>(p: &UserLinkProblem<T>) -> Result<T> {
    p.validate()?;
    let mut lo = T::lit(SNR_BRACKET.0).ln();
    let mut hi = T::lit(SNR_BRACKET.1).ln();
    let decade = T::lit(10.0).ln();
    let tol = T::tol(1e-9);
    let mut s = lo;
    for attempt in 0..=MAX_EXPANSIONS {
        let (x, _) = golden_section_min(|s: T| p.unit_cost(s.exp()), lo, hi, tol);
        s = x;
        let near_lo = x - lo <= tol * T::lit(4.0);
        let near_hi = hi - x <= tol * T::lit(4.0);
        if !(near_lo || near_hi) || attempt == MAX_EXPANSIONS {
            break;
        }
        if near_lo {
            lo = lo - decade;
        }
        if near_hi {
            hi = hi + decade;
        }
    }
    Ok(s.exp())
}

/// Minimum-cost (bandwidth, power) meeting the user's demand.
pub fn solve_user_link<T: Scalar>(p: &UserLinkProblem<T>) -> Result<LinkSolution<T>> {
    p.validate()?;
    if p.demand_bps == T::zero() {
        return Ok(LinkSolution::zero());
    }
    let r = optimal_snr(p)?;
    let bandwidth_hz = p.demand_bps * T::LN_2() / r.ln_1p();
    let power_w = bandwidth_hz * p.noise_psd * r / p.channel_gain;
    Ok(LinkSolution {
        bandwidth_hz,
        power_w,
        cost_w: p.cost(bandwidth_hz, power_w),
    })
}

/// Brute-force reference: best point of a log-spaced bandwidth grid over
/// `[D/20, 20 D]` with the power set to make the rate constraint tight.
pub fn grid_oracle<T: Scalar>(p: &UserLinkProblem<T>, grid_points: usize) -> Result<LinkSolution<T>> {
    p.validate()?;
    if grid_points < 100 {
        return Err(Error::Domain("grid oracle needs at least 100 points".into()));
    }
    if p.demand_bps == T::zero() {
        return Ok(LinkSolution::zero());
    }
    let lo = (p.demand_bps / T::lit(20.0)).ln();
    let hi = (p.demand_bps * T::lit(20.0)).ln();
    let last = T::from_count(grid_points - 1);
    let mut best: Option<LinkSolution<T>> = None;
    for i in 0..grid_points {
        let b = (lo + (hi - lo) * T::from_count(i) / last).exp();
        let pw = p.tight_power(b);
        let c = p.cost(b, pw);
        if best.is_none_or(|s| c < s.cost_w) {
            best = Some(LinkSolution {
                bandwidth_hz: b,
                power_w: pw,
                cost_w: c,
            });
        }
    }
    Ok(best.expect("non-empty grid"))
}

/// Everything about the serving link that does not depend on the cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkContext<T> {
    pub antenna: AntennaConfig<T>,
    /// User-terminal receive gain (linear).
    pub rx_gain: T,
    pub noise_psd: T,
    pub power_coeff: T,
    pub bw_coeff: T,
    pub min_elevation_deg: T,
}

/// Allocation of one cluster on one satellite in one slot. Infeasible
/// allocations carry an infinite cost and no per-user entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAllocation<T> {
    pub per_user_bw: Vec<T>,
    pub per_user_power: Vec<T>,
    pub cost: T,
    pub feasible: bool,
}

impl<T: Scalar> ClusterAllocation<T> {
    pub fn infeasible() -> Self {
        Self {
            per_user_bw: Vec::new(),
            per_user_power: Vec::new(),
            cost: T::infinity(),
            feasible: false,
        }
    }

    pub fn bw_load(&self) -> T {
        if !self.feasible {
            return T::infinity();
        }
        self.per_user_bw.iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn power_load(&self) -> T {
        if !self.feasible {
            return T::infinity();
        }
        self.per_user_power.iter().fold(T::zero(), |a, &b| a + b)
    }
}

/// Solves the cluster's allocation when served by the satellite at `sat`
/// during slot `slot`. A beam centre outside the satellite's field of view,
/// a member below the horizon, or a member in a pattern null makes the pair
/// infeasible.
pub fn solve_cluster<T: Scalar>(
    sat: &EcefVector<T>,
    cluster: &Cluster<T>,
    users: &[UserTerminal<T>],
    slot: usize,
    ctx: &LinkContext<T>,
) -> ClusterAllocation<T> {
    if !in_fov(sat, &cluster.beam_center, ctx.min_elevation_deg) {
        return ClusterAllocation::infeasible();
    }
    let mut out = ClusterAllocation {
        per_user_bw: Vec::with_capacity(cluster.members.len()),
        per_user_power: Vec::with_capacity(cluster.members.len()),
        cost: T::zero(),
        feasible: true,
    };
    for &k in &cluster.members {
        let user = &users[k];
        let demand = user.demand_bps[slot];
        let solution = if demand == T::zero() {
            Ok(LinkSolution::zero())
        } else {
            channel_gain(sat, &cluster.beam_center, &user.position, &ctx.antenna, ctx.rx_gain).and_then(|h| {
                solve_user_link(&UserLinkProblem {
                    demand_bps: demand,
                    channel_gain: h,
                    noise_psd: ctx.noise_psd,
                    power_coeff: ctx.power_coeff,
                    bw_coeff: ctx.bw_coeff,
                })
            })
        };
        match solution {
            Ok(s) => {
                out.per_user_bw.push(s.bandwidth_hz);
                out.per_user_power.push(s.power_w);
                out.cost = out.cost + s.cost_w;
            }
            Err(_) => return ClusterAllocation::infeasible(),
        }
    }
    out
}
