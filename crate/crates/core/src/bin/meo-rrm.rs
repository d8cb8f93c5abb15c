use std::ops::Range;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use meo_rrm::clustering::cluster_max_distance;
use meo_rrm::rf_model::half_power_beamwidth;
use meo_rrm::sim::{run_greedy_with, run_proposed_with, write_results, SimOptions, SolverChoice};
use meo_rrm::{load_scenario, Error};

/// Beam clustering, bandwidth/power allocation and satellite matching for
/// equatorial MEO constellations.
///
/// Exit codes: 0 success, 1 configuration error, 2 solver or instance-size
/// error, 3 I/O error.
#[derive(Parser)]
#[command(name = "meo-rrm", version)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write metrics.csv, summary.json and
    /// clusters.json for each algorithm.
    Run {
        /// Scenario JSON file.
        #[arg(short, long)]
        scenario: PathBuf,
        /// Algorithm(s) to run.
        #[arg(short, long, value_enum, default_value_t = AlgorithmArg::Both)]
        algorithm: AlgorithmArg,
        /// Output directory; results go to <out>/proposed and <out>/greedy.
        #[arg(short, long, default_value = "results")]
        out: PathBuf,
        /// Override the scenario's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Simulate only slots START:END (END exclusive).
        #[arg(long, value_parser = parse_slots)]
        slots: Option<Range<usize>>,
        /// Matching solver for the proposed algorithm: auto, exact or relaxed.
        #[arg(long, default_value = "auto")]
        solver: SolverChoice,
        /// Also write matching.json with every slot's instance and plan.
        #[arg(long)]
        dump_matching: bool,
    },
    /// Print the 3 dB beamwidth and cluster diameter for aperture ratios.
    Beamwidth {
        /// Aperture-radius-to-wavelength ratios.
        #[arg(required = true)]
        aperture_ratio: Vec<f64>,
        /// Orbit altitude (km) for the cluster diameter.
        #[arg(long, default_value_t = 8062.0)]
        altitude_km: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Proposed,
    Greedy,
    Both,
}

fn parse_slots(s: &str) -> Result<Range<usize>, String> {
    let (a, b) = s.split_once(':').ok_or("expected START:END")?;
    let start: usize = a.trim().parse().map_err(|_| format!("bad start '{a}'"))?;
    let end: usize = b.trim().parse().map_err(|_| format!("bad end '{b}'"))?;
    if start >= end {
        return Err("START must be below END".into());
    }
    Ok(start..end)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run {
            scenario,
            algorithm,
            out,
            seed,
            slots,
            solver,
            dump_matching,
        } => {
            let mut config = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                config.rng_seed = seed;
            }
            let opts = SimOptions {
                solver,
                slots,
                keep_matching: dump_matching,
            };
            if algorithm != AlgorithmArg::Greedy {
                let r = run_proposed_with(&config, &opts)?;
                write_results(&r, out.join("proposed"))?;
                report(&r);
            }
            if algorithm != AlgorithmArg::Proposed {
                let r = run_greedy_with(&config, &opts)?;
                write_results(&r, out.join("greedy"))?;
                report(&r);
            }
            Ok(())
        }
        Command::Beamwidth {
            aperture_ratio,
            altitude_km,
        } => {
            println!("aperture_ratio,beamwidth_deg,cluster_diameter_km");
            for a in aperture_ratio {
                let theta = half_power_beamwidth(a)?;
                println!("{a},{theta:.4},{:.2}", cluster_max_distance(theta, altitude_km));
            }
            Ok(())
        }
    }
}

fn report(r: &meo_rrm::RunResult) {
    println!(
        "{}: users={} clusters={} (size {}..{}, avg {:.2}) mean_satisfied_rate={:.4} mean_power_w={:.2} power_per_satisfied_user_w={:.3}",
        r.algorithm,
        r.num_users,
        r.cluster_summary.count,
        r.cluster_summary.min_size,
        r.cluster_summary.max_size,
        r.cluster_summary.avg_size,
        r.mean_satisfied_rate(),
        r.mean_total_power_w(),
        r.power_per_satisfied_user_w(),
    );
}
