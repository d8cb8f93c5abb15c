//! Time-slotted simulation of the proposed scheme and the nearest-satellite
//! baseline, with metric collection and result files.
//!
//! Proposed: users are clustered once over the whole window, then every slot
//! solves the per-cluster allocation for each (satellite, cluster) pair and
//! matches clusters to satellites. Baseline: distance-based clusters, each
//! sent to its nearest satellite, overloads shed by dropping the
//! highest-demand cluster.

use std::fmt;
use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{solve_cluster, ClusterAllocation, LinkContext};
use crate::clustering::{
    adjacency_matrix, build_clusters, cluster_max_distance, cluster_users_baseline, cluster_users_proposed,
    required_bw, Cluster, RequiredBwParams, RequiredBwProfile,
};
use crate::error::{Error, Result};
use crate::geometry::{satellite_position, EcefVector};
use crate::matching::{
    assign_nearest_meo, exact_search_size, solve_matching_exact, solve_matching_relaxed, MatchingInstance,
    MatchingPlan, EXACT_SEARCH_LIMIT,
};
use crate::power_model::total_power;
use crate::scenario::{generate_users, ScenarioConfig, ScenarioFile, UserTerminal};

/// Fixed leading CSV columns; per-satellite `sat{n}_bw_hz,sat{n}_power_w`
/// pairs follow.
pub const CSV_FIXED_COLUMNS: [&str; 6] = [
    "t",
    "total_power_w",
    "satisfied_users",
    "satisfied_rate",
    "served_clusters",
    "handover_count",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Proposed,
    Greedy,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Proposed => "proposed",
            Algorithm::Greedy => "greedy",
        })
    }
}

/// Matching solver for the proposed scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    /// Exact while the enumeration bound allows it, relaxed otherwise.
    #[default]
    Auto,
    Exact,
    Relaxed,
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Self::Auto),
            "exact" => Ok(Self::Exact),
            "relaxed" => Ok(Self::Relaxed),
            other => Err(format!("unknown solver '{other}' (expected auto, exact or relaxed)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimOptions {
    pub solver: SolverChoice,
    /// Slots to simulate; the whole window when `None`.
    pub slots: Option<Range<usize>>,
    /// Keep per-slot matching instances and plans for dumping.
    pub keep_matching: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeslotMetrics {
    pub t: usize,
    pub total_power_w: f64,
    pub satisfied_users: usize,
    pub satisfied_rate: f64,
    pub served_clusters: usize,
    pub handover_count: usize,
    /// (bandwidth Hz, radiated power W) per satellite.
    pub per_meo_load: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub count: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub avg_size: f64,
    /// Clusters whose peak required bandwidth exceeds the per-beam cap.
    pub oversized: usize,
}

impl ClusterSummary {
    pub fn of(clusters: &[Cluster<f64>]) -> Self {
        let sizes: Vec<usize> = clusters.iter().map(|c| c.members.len()).collect();
        let count = sizes.len();
        Self {
            count,
            min_size: sizes.iter().copied().min().unwrap_or(0),
            max_size: sizes.iter().copied().max().unwrap_or(0),
            avg_size: if count == 0 {
                0.0
            } else {
                sizes.iter().sum::<usize>() as f64 / count as f64
            },
            oversized: clusters.iter().filter(|c| c.oversized).count(),
        }
    }
}

/// Matching problem and outcome of one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotMatching {
    pub t: usize,
    pub instance: MatchingInstance<f64>,
    pub plan: MatchingPlan<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub num_users: usize,
    pub num_satellites: usize,
    pub metrics: Vec<TimeslotMetrics>,
    pub clusters: Vec<Cluster<f64>>,
    pub cluster_summary: ClusterSummary,
    pub config: ScenarioFile,
    /// Present when [`SimOptions::keep_matching`] was set.
    pub matching: Option<Vec<SlotMatching>>,
}

impl RunResult {
    pub fn mean_satisfied_rate(&self) -> f64 {
        mean(self.metrics.iter().map(|m| m.satisfied_rate))
    }

    pub fn mean_total_power_w(&self) -> f64 {
        mean(self.metrics.iter().map(|m| m.total_power_w))
    }

    /// Time-averaged total power divided by the time-averaged number of
    /// satisfied users; infinite if nobody is ever satisfied.
    pub fn power_per_satisfied_user_w(&self) -> f64 {
        let users: usize = self.metrics.iter().map(|m| m.satisfied_users).sum();
        let power: f64 = self.metrics.iter().map(|m| m.total_power_w).sum();
        if users == 0 {
            if power == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            power / users as f64
        }
    }

    pub fn served_cluster_ratio(&self) -> f64 {
        if self.clusters.is_empty() {
            return 1.0;
        }
        mean(
            self.metrics
                .iter()
                .map(|m| m.served_clusters as f64 / self.clusters.len() as f64),
        )
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Number of clusters whose serving satellite differs between two plans,
/// counting gains and losses of service.
pub fn count_handovers<T>(prev: &MatchingPlan<T>, cur: &MatchingPlan<T>) -> usize {
    assert_eq!(
        prev.assignment.len(),
        cur.assignment.len(),
        "plans cover different clusters"
    );
    prev.assignment
        .iter()
        .zip(&cur.assignment)
        .filter(|(a, b)| a != b)
        .count()
}

pub fn run_proposed(config: &ScenarioConfig) -> Result<RunResult> {
    run_proposed_with(config, &SimOptions::default())
}

pub fn run_greedy(config: &ScenarioConfig) -> Result<RunResult> {
    run_greedy_with(config, &SimOptions::default())
}

pub fn run_proposed_with(config: &ScenarioConfig, opts: &SimOptions) -> Result<RunResult> {
    let setup = Setup::new(config, opts)?;
    log::info!("proposed: clustering {} users", setup.users.len());
    let positions: Vec<_> = setup.users.iter().map(|u| u.position).collect();
    let adjacency = adjacency_matrix(&positions, &config.satellites[0], config.beamwidth_rad());
    let lists = cluster_users_proposed(&adjacency, &setup.profiles, config.beam_bw_cap_hz);
    let clusters = build_clusters(
        lists,
        &setup.users,
        &setup.profiles,
        config.eta_bps,
        config.beam_bw_cap_hz,
    );
    log::info!("proposed: {} clusters", clusters.len());

    let solver = opts.solver;
    setup.simulate(Algorithm::Proposed, clusters, opts, |_, _, inst| match solver {
        SolverChoice::Exact => solve_matching_exact(inst),
        SolverChoice::Relaxed => solve_matching_relaxed(inst),
        SolverChoice::Auto => {
            if exact_search_size(inst.num_satellites, inst.num_clusters) <= EXACT_SEARCH_LIMIT {
                solve_matching_exact(inst)
            } else {
                solve_matching_relaxed(inst)
            }
        }
    })
}

pub fn run_greedy_with(config: &ScenarioConfig, opts: &SimOptions) -> Result<RunResult> {
    let setup = Setup::new(config, opts)?;
    let positions: Vec<_> = setup.users.iter().map(|u| u.position).collect();
    let d_clu = cluster_max_distance(config.beamwidth_deg, config.satellites[0].altitude_km);
    log::info!(
        "greedy: clustering {} users with diameter {d_clu:.2} km",
        setup.users.len()
    );
    let lists = cluster_users_baseline(&positions, d_clu);
    let clusters = build_clusters(
        lists,
        &setup.users,
        &setup.profiles,
        config.eta_bps,
        config.beam_bw_cap_hz,
    );
    log::info!("greedy: {} clusters", clusters.len());

    let peak_demand: Vec<f64> = clusters
        .iter()
        .map(|c| {
            (0..config.num_timeslots)
                .map(|t| c.members.iter().map(|&k| setup.users[k].demand_bps[t]).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .collect();
    setup.simulate(Algorithm::Greedy, clusters, opts, |cl, sats, inst| {
        Ok(assign_nearest_meo(cl, sats, inst, &peak_demand))
    })
}

type SlotSolution = (MatchingInstance<f64>, Vec<ClusterAllocation<f64>>, MatchingPlan<f64>);

struct Setup<'a> {
    config: &'a ScenarioConfig,
    users: Vec<UserTerminal<f64>>,
    profiles: Vec<RequiredBwProfile<f64>>,
    slots: Range<usize>,
    ctx: LinkContext<f64>,
}

impl<'a> Setup<'a> {
    fn new(config: &'a ScenarioConfig, opts: &SimOptions) -> Result<Self> {
        config.validate()?;
        let slots = opts.slots.clone().unwrap_or(0..config.num_timeslots);
        if slots.start >= slots.end || slots.end > config.num_timeslots {
            return Err(Error::config(
                "slots",
                format!(
                    "slot range {}..{} must be non-empty and within 0..{}",
                    slots.start, slots.end, config.num_timeslots
                ),
            ));
        }
        let users = generate_users(config);
        let params = RequiredBwParams {
            beam_power_cap_w: config.beam_power_cap_w,
            max_gain: config.antenna.max_gain,
            rx_gain: config.rx_gain(),
            noise_psd: config.noise_psd(),
            carrier_frequency_hz: config.antenna.carrier_frequency_hz,
            min_elevation_deg: config.min_elevation_deg,
            timeslot_duration_s: config.timeslot_duration_s,
            num_timeslots: config.num_timeslots,
        };
        let profiles = users
            .par_iter()
            .map(|u| required_bw(u, &config.satellites, &params))
            .collect::<Result<Vec<_>>>()?;
        let ctx = LinkContext {
            antenna: config.antenna,
            rx_gain: config.rx_gain(),
            noise_psd: config.noise_psd(),
            power_coeff: config.power.power_coeff(),
            bw_coeff: config.power.bw_coeff(),
            min_elevation_deg: config.min_elevation_deg,
        };
        Ok(Self {
            config,
            users,
            profiles,
            slots,
            ctx,
        })
    }

    fn simulate<F>(
        &self,
        algorithm: Algorithm,
        clusters: Vec<Cluster<f64>>,
        opts: &SimOptions,
        matcher: F,
    ) -> Result<RunResult>
    where
        F: Fn(&[Cluster<f64>], &[EcefVector<f64>], &MatchingInstance<f64>) -> Result<MatchingPlan<f64>> + Sync,
    {
        let config = self.config;
        let n_sat = config.satellites.len();
        let n_clu = clusters.len();

        let solved: Vec<SlotSolution> = self
            .slots
            .clone()
            .into_par_iter()
            .map(|t| {
                let time = config.slot_time(t);
                let sats: Vec<_> = config.satellites.iter().map(|o| satellite_position(o, time)).collect();
                let allocations: Vec<ClusterAllocation<f64>> = (0..n_sat * n_clu)
                    .into_par_iter()
                    .map(|i| solve_cluster(&sats[i / n_clu], &clusters[i % n_clu], &self.users, t, &self.ctx))
                    .collect();
                let mut inst = MatchingInstance::new(
                    n_sat,
                    n_clu,
                    config.power.bandwidth_total_hz,
                    config.power.rf_power_max_w,
                );
                for (i, a) in allocations.iter().enumerate() {
                    inst.set(i / n_clu, i % n_clu, a.cost, a.bw_load(), a.power_load());
                }
                let plan = matcher(&clusters, &sats, &inst)?;
                debug_assert!(plan.is_feasible(&inst));
                Ok((inst, allocations, plan))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut metrics = Vec::with_capacity(solved.len());
        let mut prev: Option<&MatchingPlan<f64>> = None;
        for (t, (inst, allocations, plan)) in self.slots.clone().zip(&solved) {
            metrics.push(self.slot_metrics(t, &clusters, inst, allocations, plan, prev));
            prev = Some(plan);
        }
        let matching = opts.keep_matching.then(|| {
            self.slots
                .clone()
                .zip(solved)
                .map(|(t, (instance, _, plan))| SlotMatching { t, instance, plan })
                .collect()
        });

        Ok(RunResult {
            algorithm,
            seed: config.rng_seed,
            num_users: self.users.len(),
            num_satellites: n_sat,
            metrics,
            cluster_summary: ClusterSummary::of(&clusters),
            clusters,
            config: config.to_file(),
            matching,
        })
    }

    fn slot_metrics(
        &self,
        t: usize,
        clusters: &[Cluster<f64>],
        inst: &MatchingInstance<f64>,
        allocations: &[ClusterAllocation<f64>],
        plan: &MatchingPlan<f64>,
        prev: Option<&MatchingPlan<f64>>,
    ) -> TimeslotMetrics {
        let n_clu = clusters.len();
        let mut bw = Vec::new();
        let mut power = Vec::new();
        let mut satisfied = vec![false; self.users.len()];
        for (k, u) in self.users.iter().enumerate() {
            satisfied[k] = u.demand_bps[t] == 0.0;
        }
        for (m, s) in plan.assignment.iter().enumerate() {
            if let Some(n) = *s {
                let a = &allocations[n * n_clu + m];
                bw.extend_from_slice(&a.per_user_bw);
                power.extend_from_slice(&a.per_user_power);
                for &k in &clusters[m].members {
                    satisfied[k] = true;
                }
            }
        }
        let satisfied_users = satisfied.iter().filter(|&&s| s).count();
        TimeslotMetrics {
            t,
            total_power_w: total_power(&bw, &power, &self.config.power),
            satisfied_users,
            satisfied_rate: if self.users.is_empty() {
                1.0
            } else {
                satisfied_users as f64 / self.users.len() as f64
            },
            served_clusters: plan.served_count,
            handover_count: prev.map_or(0, |p| count_handovers(p, plan)),
            per_meo_load: plan.loads(inst),
        }
    }
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    algorithm: Algorithm,
    seed: u64,
    num_users: usize,
    num_timeslots: usize,
    clusters: &'a ClusterSummary,
    mean_satisfied_rate: f64,
    mean_total_power_w: f64,
    power_per_satisfied_user_w: Option<f64>,
    served_cluster_ratio: f64,
    total_handovers: usize,
    config: &'a ScenarioFile,
}

/// Writes `metrics.csv`, `summary.json` and `clusters.json` into `out_dir`,
/// plus `matching.json` when the run kept its matching instances. In
/// `matching.json` a `null` cost or load marks an unusable pair.
pub fn write_results(result: &RunResult, out_dir: impl AsRef<Path>) -> Result<()> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let csv_path = dir.join("metrics.csv");
    fs::write(&csv_path, metrics_csv(&result.metrics, result.num_satellites)?).map_err(|e| Error::io(&csv_path, e))?;

    let pps = result.power_per_satisfied_user_w();
    let summary = SummaryDoc {
        algorithm: result.algorithm,
        seed: result.seed,
        num_users: result.num_users,
        num_timeslots: result.metrics.len(),
        clusters: &result.cluster_summary,
        mean_satisfied_rate: result.mean_satisfied_rate(),
        mean_total_power_w: result.mean_total_power_w(),
        power_per_satisfied_user_w: pps.is_finite().then_some(pps),
        served_cluster_ratio: result.served_cluster_ratio(),
        total_handovers: result.metrics.iter().map(|m| m.handover_count).sum(),
        config: &result.config,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    write_json(&dir.join("clusters.json"), &result.clusters)?;
    if let Some(matching) = &result.matching {
        write_json(&dir.join("matching.json"), matching)?;
    }
    Ok(())
}

fn write_json<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Solver(e.to_string()))?;
    text.push('\n');
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// CSV text for `metrics`, one row per slot.
pub fn metrics_csv(metrics: &[TimeslotMetrics], num_satellites: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = CSV_FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    for n in 0..num_satellites {
        header.push(format!("sat{n}_bw_hz"));
        header.push(format!("sat{n}_power_w"));
    }
    let csv_err = |e: csv::Error| Error::Solver(format!("csv encoding: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for m in metrics {
        let mut row = vec![
            m.t.to_string(),
            m.total_power_w.to_string(),
            m.satisfied_users.to_string(),
            m.satisfied_rate.to_string(),
            m.served_clusters.to_string(),
            m.handover_count.to_string(),
        ];
        for &(b, p) in &m.per_meo_load {
            row.push(b.to_string());
            row.push(p.to_string());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Solver(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Parses text produced by [`metrics_csv`].
pub fn parse_metrics_csv(text: &str) -> Result<Vec<TimeslotMetrics>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(|e| Error::config("metrics.csv", e.to_string()))?
        .clone();
    if header.len() < CSV_FIXED_COLUMNS.len()
        || header.iter().zip(CSV_FIXED_COLUMNS).any(|(a, b)| a != b)
        || !(header.len() - CSV_FIXED_COLUMNS.len()).is_multiple_of(2)
    {
        return Err(Error::config("metrics.csv", "unexpected header"));
    }
    let n_sat = (header.len() - CSV_FIXED_COLUMNS.len()) / 2;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::config("metrics.csv", e.to_string()))?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i)
                .ok_or_else(|| Error::config(format!("metrics.csv row {}", line + 1), "missing column"))
        };
        fn num<V: FromStr>(s: &str, line: usize, col: &str) -> Result<V> {
            s.parse().map_err(|_| {
                Error::config(
                    format!("metrics.csv row {} {col}", line + 1),
                    format!("bad value '{s}'"),
                )
            })
        }
        let mut per_meo_load = Vec::with_capacity(n_sat);
        for n in 0..n_sat {
            let base = CSV_FIXED_COLUMNS.len() + 2 * n;
            per_meo_load.push((
                num(field(base)?, line, &header[base])?,
                num(field(base + 1)?, line, &header[base + 1])?,
            ));
        }
        out.push(TimeslotMetrics {
            t: num(field(0)?, line, "t")?,
            total_power_w: num(field(1)?, line, "total_power_w")?,
            satisfied_users: num(field(2)?, line, "satisfied_users")?,
            satisfied_rate: num(field(3)?, line, "satisfied_rate")?,
            served_clusters: num(field(4)?, line, "served_clusters")?,
            handover_count: num(field(5)?, line, "handover_count")?,
            per_meo_load,
        });
    }
    Ok(out)
}
