//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use meo_rrm::allocation::{grid_oracle, solve_user_link, UserLinkProblem};
use meo_rrm::clustering::{
    adjacency_matrix, cluster_max_distance, cluster_users_proposed, required_bw, RequiredBwParams,
};
use meo_rrm::load_scenario;
use meo_rrm::matching::{solve_matching_exact, MatchingInstance, MatchingPlan};
use meo_rrm::power_model::{composed_power, total_power, PowerParams};
use meo_rrm::rf_model::{half_power_beamwidth, swept_beamwidth};
use meo_rrm::scenario::{generate_users, City, ScenarioConfig};
use meo_rrm::sim::{metrics_csv, run_greedy, run_proposed, write_results};

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            "beamwidth and cluster diameter table",
            Some(Duration::from_secs(1)),
            beamwidth_table,
        ),
        (
            "allocation vs grid oracle",
            Some(Duration::from_secs(10)),
            allocation_oracle,
        ),
        (
            "exact matching vs enumeration",
            Some(Duration::from_secs(60)),
            matching_enumeration,
        ),
        ("clustering invariants", None, clustering_invariants),
        ("power model identity", None, power_identity),
        ("allocation homogeneity", None, homogeneity),
        (
            "proposed vs greedy on desk scenario",
            Some(Duration::from_secs(300)),
            end_to_end,
        ),
        ("determinism", None, determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut o = check();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > *limit {
                o.pass = false;
                o.detail.push_str(&format!("; runtime {elapsed:.2?} exceeds {limit:?}"));
            }
        }
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {} ({elapsed:.2?})",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

const TABLE_APERTURES: [f64; 4] = [5.0, 10.0, 15.0, 20.0];
const TABLE_BEAMWIDTH_DEG: [f64; 4] = [5.88, 2.94, 1.96, 1.46];
const TABLE_DIAMETER_KM: [f64; 4] = [828.09, 413.77, 275.81, 205.44];

fn beamwidth_table() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for ((&a, &want_theta), &want_d) in TABLE_APERTURES.iter().zip(&TABLE_BEAMWIDTH_DEG).zip(&TABLE_DIAMETER_KM) {
        let theta = half_power_beamwidth(a).expect("valid aperture");
        let d = cluster_max_distance(want_theta, 8062.0);
        let theta_ok = (theta - want_theta).abs() <= 0.01;
        let d_ok = (d - want_d).abs() <= 0.5;
        ok &= theta_ok && d_ok;
        parts.push(format!(
            "a={a}: {theta:.4}° (want {want_theta}±0.01{}) {d:.2} km (want {want_d}±0.5{})",
            if theta_ok { "" } else { " MISS" },
            if d_ok { "" } else { " MISS" }
        ));
    }
    let swept: Vec<String> = TABLE_APERTURES
        .iter()
        .map(|&a| format!("{:.2}", swept_beamwidth(a, 0.01).expect("valid aperture")))
        .collect();
    println!("INFO beamwidth on a 0.01° sweep grid: {}", swept.join(", "));
    outcome(ok, parts.join("; "))
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_link(rng: &mut ChaCha8Rng) -> UserLinkProblem<f64> {
    let rho: f64 = rng.random_range(0.3..0.9);
    UserLinkProblem {
        demand_bps: log_uniform(rng, 1e6, 1e9),
        channel_gain: log_uniform(rng, 1e-13, 1e-11),
        noise_psd: 1.380_649e-23 * rng.random_range(150.0..400.0),
        power_coeff: (rho + 1.0) / rho,
        bw_coeff: rng.random_range(1000.0..10000.0) / log_uniform(rng, 5e8, 5e9),
    }
}

fn allocation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_gap: f64 = 0.0;
    let mut ok = true;
    for _ in 0..100 {
        let p = random_link(&mut rng);
        let s = solve_user_link(&p).expect("valid problem");
        let o = grid_oracle(&p, 10_000).expect("valid problem");
        ok &= s.cost_w <= o.cost_w + 1e-9;
        let gap = (o.cost_w - s.cost_w) / o.cost_w;
        ok &= gap.abs() <= 1e-3;
        worst_gap = worst_gap.max(gap.abs());
    }
    outcome(ok, format!("100 instances, worst relative gap {worst_gap:.3e}"))
}

/// Lexicographic optimum over all `(N+1)^M` assignments.
fn enumerate(inst: &MatchingInstance<f64>) -> MatchingPlan<f64> {
    let (n, m) = (inst.num_satellites, inst.num_clusters);
    let mut best = MatchingPlan::unserved(m);
    let mut digits = vec![n; m];
    loop {
        let assignment: Vec<Option<usize>> = digits.iter().map(|&d| (d < n).then_some(d)).collect();
        let plan = MatchingPlan::from_assignment(inst, assignment);
        let mut feasible = true;
        let mut bw = vec![0.0; n];
        let mut pw = vec![0.0; n];
        for (c, s) in plan.assignment.iter().enumerate() {
            if let Some(s) = *s {
                feasible &= inst.cost(s, c).is_finite();
                bw[s] += inst.bw(s, c);
                pw[s] += inst.power(s, c);
            }
        }
        feasible &= (0..n).all(|s| bw[s] <= inst.bw_cap[s] && pw[s] <= inst.power_cap[s]);
        if feasible
            && (plan.served_count > best.served_count
                || (plan.served_count == best.served_count && plan.total_cost < best.total_cost))
        {
            best = plan;
        }
        let mut i = 0;
        while i < m {
            if digits[i] == 0 {
                digits[i] = n;
                i += 1;
            } else {
                digits[i] -= 1;
                break;
            }
        }
        if i == m {
            return best;
        }
    }
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize) -> MatchingInstance<f64> {
    let mut inst = MatchingInstance::new(n, m, 0.0, 0.0);
    for s in 0..n {
        inst.bw_cap[s] = rng.random_range(2.0..6.0);
        inst.power_cap[s] = rng.random_range(2.0..6.0);
    }
    for s in 0..n {
        for c in 0..m {
            if rng.random_bool(0.8) {
                inst.set(
                    s,
                    c,
                    rng.random_range(1.0..100.0),
                    rng.random_range(0.2..2.5),
                    rng.random_range(0.2..2.5),
                );
            }
        }
    }
    inst
}

fn matching_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = 0;
    let mut partial = 0;
    for seed in 0..50 {
        let n = if seed < 40 { 3 } else { rng.random_range(1..=3) };
        let m = if seed < 40 { 8 } else { rng.random_range(1..=8) };
        let inst = random_instance(&mut rng, n, m);
        let exact = solve_matching_exact(&inst).expect("small instance");
        let brute = enumerate(&inst);
        if (exact.served_count, exact.total_cost) != (brute.served_count, brute.total_cost) {
            mismatches += 1;
        }
        if brute.served_count < m {
            partial += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("50 instances up to 3x8, {mismatches} mismatches, {partial} with capacity-limited service"),
    )
}

fn clustering_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ok = true;
    let mut total_users = 0;
    let mut total_clusters = 0;
    for seed in 0..20u64 {
        let cities: Vec<City> = (0..5)
            .map(|i| City {
                name: format!("c{i}"),
                lat_deg: rng.random_range(-50.0..50.0),
                lon_deg: rng.random_range(-180.0..180.0),
                users_min: 10,
                users_max: 40,
            })
            .collect();
        let mut config = ScenarioConfig::with_cities(cities);
        config.num_timeslots = 30;
        config.rng_seed = seed;
        config.user_spread_km = rng.random_range(20.0..200.0);
        let users = generate_users(&config);
        assert!(users.len() <= 200);
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
        let profiles: Vec<_> = users
            .iter()
            .map(|u| required_bw(u, &config.satellites, &params).expect("covered"))
            .collect();
        let positions: Vec<_> = users.iter().map(|u| u.position).collect();
        let adj = adjacency_matrix(&positions, &config.satellites[0], config.beamwidth_rad());
        ok &= adj.is_symmetric() && adj.has_unit_diagonal();
        let clusters = cluster_users_proposed(&adj, &profiles, config.beam_bw_cap_hz);
        let mut seen = vec![0usize; users.len()];
        for c in &clusters {
            for &k in c {
                seen[k] += 1;
            }
            ok &= adj.is_clique(c);
            let peak = (0..config.num_timeslots)
                .map(|t| c.iter().map(|&k| profiles[k].per_slot_hz[t]).sum::<f64>())
                .fold(0.0, f64::max);
            ok &= peak <= config.beam_bw_cap_hz;
        }
        ok &= seen.iter().all(|&s| s == 1);
        total_users += users.len();
        total_clusters += clusters.len();
    }
    outcome(
        ok,
        format!("20 scenarios, {total_users} users in {total_clusters} clusters"),
    )
}

fn power_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let params = PowerParams {
            hpa_efficiency: rng.random_range(0.2..0.95),
            dc_power_max_w: rng.random_range(1000.0..10000.0),
            bandwidth_total_hz: rng.random_range(1e9..5e9),
            rf_power_max_w: 800.0,
        };
        let n_sat = rng.random_range(1..=6);
        let k = rng.random_range(1..=60);
        let serving: Vec<Option<usize>> = (0..k)
            .map(|_| rng.random_bool(0.8).then(|| rng.random_range(0..n_sat)))
            .collect();
        let bw: Vec<f64> = (0..k)
            .map(|_| rng.random_range(0.0..params.bandwidth_total_hz / 60.0))
            .collect();
        let p: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..10.0)).collect();
        let served: Vec<usize> = (0..k).filter(|&i| serving[i].is_some()).collect();
        let sb: Vec<f64> = served.iter().map(|&i| bw[i]).collect();
        let sp: Vec<f64> = served.iter().map(|&i| p[i]).collect();
        let aggregate = total_power(&sb, &sp, &params);
        let composed = composed_power(&serving, &bw, &p, n_sat, &params).expect("within bandwidth");
        let rel = if aggregate == 0.0 {
            composed.abs()
        } else {
            ((aggregate - composed) / aggregate).abs()
        };
        worst = worst.max(rel);
    }
    outcome(
        worst <= 1e-9,
        format!("100 assignments, worst relative difference {worst:.3e}"),
    )
}

fn homogeneity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = random_link(&mut rng);
        let a = solve_user_link(&p).expect("valid");
        let b = solve_user_link(&UserLinkProblem {
            demand_bps: 2.0 * p.demand_bps,
            ..p
        })
        .expect("valid");
        worst = worst
            .max((b.bandwidth_hz / (2.0 * a.bandwidth_hz) - 1.0).abs())
            .max((b.power_w / (2.0 * a.power_w) - 1.0).abs());
    }
    outcome(
        worst <= 1e-6,
        format!("50 instances, worst relative deviation {worst:.3e}"),
    )
}

fn desk_scenario() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/desk_3sat_120users.json")
}

fn end_to_end() -> Outcome {
    let config = load_scenario(desk_scenario()).expect("desk scenario loads");
    let proposed = run_proposed(&config).expect("proposed run");
    let greedy = run_greedy(&config).expect("greedy run");
    let worse: Vec<usize> = proposed
        .metrics
        .iter()
        .zip(&greedy.metrics)
        .filter(|(p, g)| p.satisfied_rate < g.satisfied_rate)
        .map(|(p, _)| p.t)
        .collect();
    let (pp, pg) = (
        proposed.power_per_satisfied_user_w(),
        greedy.power_per_satisfied_user_w(),
    );
    outcome(
        worse.is_empty() && pp <= pg,
        format!(
            "{} users, {} slots; clusters {} vs {}; mean satisfied rate {:.4} vs {:.4}; slots where proposed is below greedy: {:?}; power per satisfied user {:.3} W vs {:.3} W",
            proposed.num_users,
            proposed.metrics.len(),
            proposed.cluster_summary.count,
            greedy.cluster_summary.count,
            proposed.mean_satisfied_rate(),
            greedy.mean_satisfied_rate(),
            worse,
            pp,
            pg
        ),
    )
}

fn determinism() -> Outcome {
    let config = load_scenario(desk_scenario()).expect("desk scenario loads");
    let dir = tempfile::tempdir().expect("temp dir");
    let mut ok = true;
    for (name, run) in [("proposed", run_proposed as fn(&_) -> _), ("greedy", run_greedy)] {
        let a = run(&config).expect("run");
        let b = run(&config).expect("run");
        let (da, db) = (
            dir.path().join(format!("{name}-a")),
            dir.path().join(format!("{name}-b")),
        );
        write_results(&a, &da).expect("write");
        write_results(&b, &db).expect("write");
        let fa = std::fs::read(da.join("metrics.csv")).expect("read");
        let fb = std::fs::read(db.join("metrics.csv")).expect("read");
        ok &= fa == fb && fa == metrics_csv(&a.metrics, a.num_satellites).expect("csv").into_bytes();
    }
    outcome(ok, "two runs per algorithm produce byte-identical metrics.csv")
}
