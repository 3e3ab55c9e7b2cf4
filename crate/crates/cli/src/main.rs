//! `crn`: reproduce the seeding-scheme experiments as CSV files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crn_core::env::ftvaf::{FtvafParams, MortalityTable};
use crn_core::env::synthetic::SyntheticSpec;
use crn_core::experiments::{
    gnuplot_script, rows_to_csv, run_experiment, verify_fixtures, Experiment, ExperimentConfig,
};
use crn_core::seeding::SeedScheme;

/// Environment variable naming the default output directory.
const OUT_DIR_VAR: &str = "CRN_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "crn",
    about = "Common-random-number seeding experiments for rollout planning",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed policy set on the synthetic MDP: true value of the selected
    /// policy per simulation budget.
    SyntheticFixed(SyntheticFixedArgs),
    /// Depth-limited UCT with replanning on the synthetic MDP: executed
    /// episode return per simulation budget.
    SyntheticUct(SyntheticUctArgs),
    /// Selecting between the two counterexample policies.
    Counterexample(CounterexampleArgs),
    /// Annuity-fund management with single-step lookahead.
    Ftvaf(FtvafArgs),
    /// UCT against a random opponent, win percentage per budget.
    Ludo(LudoArgs),
    /// Run the pinned fixtures (seed vectors, enumeration oracle, rules
    /// engine) and exit nonzero on any failure.
    VerifyFixtures,
    /// Write a gnuplot script for a sweep CSV produced by an experiment.
    EmitPlots(EmitPlotsArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Schemes to run: independent, dependent, depth-dependent (repeatable,
    /// comma-separated). Defaults to all three.
    #[arg(long = "scheme", value_delimiter = ',')]
    schemes: Vec<String>,
    /// Simulation budgets to sweep, comma-separated.
    #[arg(long = "n-sims", value_delimiter = ',')]
    n_sims: Vec<usize>,
    /// Runs to average per (scheme, budget) point.
    #[arg(long)]
    runs: Option<usize>,
    /// Master salt; identical salts reproduce CSVs byte for byte.
    #[arg(long, default_value = "crn")]
    salt: String,
    /// Output CSV path. Defaults to `<experiment>.csv` under $CRN_OUT_DIR
    /// (or the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Depth parameter: agreement depth of the depth-dependent scheme and
    /// the planner's UCB depth limit.
    #[arg(long)]
    depth: Option<usize>,
    /// UCB1 exploration constant.
    #[arg(long)]
    ucb_c: Option<f64>,
}

#[derive(Args)]
struct SyntheticFixedArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    synthetic: SyntheticArgs,
    /// Number of candidate policies.
    #[arg(long, default_value_t = 100)]
    num_policies: usize,
    /// Seed for the candidate policy set.
    #[arg(long, default_value_t = 7)]
    policy_seed: u64,
}

#[derive(Args)]
struct SyntheticUctArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    synthetic: SyntheticArgs,
}

#[derive(Args)]
struct SyntheticArgs {
    #[arg(long, default_value_t = 7)]
    states: usize,
    #[arg(long, default_value_t = 4)]
    actions: usize,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    /// Seed of the generated MDP.
    #[arg(long, default_value_t = 0)]
    gen_seed: u64,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Final-step rewards r0,r1,r2,r3.
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [2.0, 4.0, 3.0, 2.0])]
    rewards: Vec<f64>,
}

#[derive(Args)]
struct FtvafArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 0.15)]
    mu: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    /// Fund membership backing the mortality thinning.
    #[arg(long, default_value_t = 1000)]
    population: usize,
    /// Insolvency penalty scale.
    #[arg(long, default_value_t = 5.0)]
    c1: f64,
    /// Leftover-wealth penalty scale.
    #[arg(long, default_value_t = 0.03)]
    c2: f64,
    /// Solvency threshold as a fraction of the corpus.
    #[arg(long, default_value_t = 0.05)]
    solvency: f64,
    /// Number of payout fractions on the action grid.
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// Constant payout fraction of the rollout policy.
    #[arg(long, default_value_t = 0.11)]
    rollout_fraction: f64,
    /// Mortality table file (`age rate` lines); defaults to the bundled one.
    #[arg(long)]
    mortality: Option<PathBuf>,
}

#[derive(Args)]
struct LudoArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Games per (scheme, budget) point.
    #[arg(long, default_value_t = 500)]
    games: usize,
    /// Total piece moves before a game is scored as a draw.
    #[arg(long, default_value_t = 300)]
    move_cap: u16,
}

#[derive(Args)]
struct EmitPlotsArgs {
    /// CSV file the script will plot.
    #[arg(long)]
    csv: PathBuf,
    /// Output script path; defaults to the CSV path with a .gp extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_schemes(names: &[String], depth: usize) -> Result<Vec<SeedScheme>, String> {
    if names.is_empty() {
        return Ok(vec![
            SeedScheme::Independent,
            SeedScheme::Dependent,
            SeedScheme::DepthDependent(depth),
        ]);
    }
    names
        .iter()
        .map(|name| match name.as_str() {
            "independent" => Ok(SeedScheme::Independent),
            "dependent" => Ok(SeedScheme::Dependent),
            "depth-dependent" => Ok(SeedScheme::DepthDependent(depth)),
            other => Err(format!(
                "unknown scheme {other:?} (want independent, dependent, depth-dependent)"
            )),
        })
        .collect()
}

fn apply_common(config: &mut ExperimentConfig, common: &CommonArgs, default_depth: usize) -> Result<(), String> {
    let depth = common.depth.unwrap_or(default_depth);
    config.agreement_depth = depth;
    config.depth_limit = depth.max(1);
    config.schemes = parse_schemes(&common.schemes, depth)?;
    if !common.n_sims.is_empty() {
        config.sim_counts = common.n_sims.clone();
    }
    if let Some(runs) = common.runs {
        config.num_runs = runs;
    }
    if let Some(c) = common.ucb_c {
        config.exploration_constant = c;
    }
    config.run_salt = common.salt.clone();
    Ok(())
}

fn output_path(common: &CommonArgs, experiment: Experiment) -> PathBuf {
    if let Some(path) = &common.out {
        return path.clone();
    }
    let dir = std::env::var_os(OUT_DIR_VAR).map_or_else(PathBuf::new, PathBuf::from);
    dir.join(format!("{}.csv", experiment.name()))
}

fn write_output(path: &Path, contents: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| format!("creating {}: {e}", parent.display()))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| format!("writing {}: {e}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(config: ExperimentConfig, out: PathBuf) -> Result<(), String> {
    let rows = run_experiment(&config).map_err(|e| e.to_string())?;
    write_output(&out, &rows_to_csv(&rows))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SyntheticFixed(args) => {
            let mut config = ExperimentConfig::preset(Experiment::SyntheticFixed);
            config.synthetic = SyntheticSpec {
                num_states: args.synthetic.states,
                num_actions: args.synthetic.actions,
                horizon: args.synthetic.horizon,
                generator_seed: args.synthetic.gen_seed,
            };
            config.num_policies = args.num_policies;
            config.policy_seed = args.policy_seed;
            apply_common(&mut config, &args.common, 2)
                .and_then(|()| run(config, output_path(&args.common, Experiment::SyntheticFixed)))
        }
        Command::SyntheticUct(args) => {
            let mut config = ExperimentConfig::preset(Experiment::SyntheticUct);
            config.synthetic = SyntheticSpec {
                num_states: args.synthetic.states,
                num_actions: args.synthetic.actions,
                horizon: args.synthetic.horizon,
                generator_seed: args.synthetic.gen_seed,
            };
            apply_common(&mut config, &args.common, 2)
                .and_then(|()| run(config, output_path(&args.common, Experiment::SyntheticUct)))
        }
        Command::Counterexample(args) => {
            let mut config = ExperimentConfig::preset(Experiment::Counterexample);
            config.rewards = [
                args.rewards[0],
                args.rewards[1],
                args.rewards[2],
                args.rewards[3],
            ];
            apply_common(&mut config, &args.common, 2)
                .and_then(|()| run(config, output_path(&args.common, Experiment::Counterexample)))
        }
        Command::Ftvaf(args) => {
            let mortality = match &args.mortality {
                Some(path) => std::fs::read_to_string(path)
                    .map_err(|e| format!("reading {}: {e}", path.display()))
                    .and_then(|text| {
                        MortalityTable::from_text(&text).map_err(|e| e.to_string())
                    }),
                None => Ok(MortalityTable::bundled()),
            };
            mortality.and_then(|mortality| {
                let mut config = ExperimentConfig::preset(Experiment::Ftvaf);
                config.ftvaf = FtvafParams {
                    drift: args.mu,
                    volatility: args.sigma,
                    horizon: args.horizon,
                    solvency_threshold: args.solvency,
                    penalty_scale: args.c1,
                    terminal_scale: args.c2,
                    population: args.population,
                    payout_grid: args.grid,
                    rollout_fraction: args.rollout_fraction,
                    mortality,
                    ..FtvafParams::default()
                };
                apply_common(&mut config, &args.common, 1)
                    .and_then(|()| run(config, output_path(&args.common, Experiment::Ftvaf)))
            })
        }
        Command::Ludo(args) => {
            let mut config = ExperimentConfig::preset(Experiment::Ludo);
            config.ludo_games = args.games;
            config.ludo_move_cap = args.move_cap;
            apply_common(&mut config, &args.common, 2)
                .and_then(|()| run(config, output_path(&args.common, Experiment::Ludo)))
        }
        Command::VerifyFixtures => {
            let report = verify_fixtures();
            for check in &report.checks {
                println!(
                    "{} {}: {}",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.detail
                );
            }
            if report.all_passed() {
                Ok(())
            } else {
                Err("fixture verification failed".to_string())
            }
        }
        Command::EmitPlots(args) => {
            let out = args
                .out
                .unwrap_or_else(|| args.csv.with_extension("gp"));
            write_output(&out, &gnuplot_script(&args.csv.display().to_string()))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
