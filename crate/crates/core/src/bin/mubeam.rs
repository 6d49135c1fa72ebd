use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mubeam::driver::{solve, Method, Problem, SolverOptions, Status};
use mubeam::harness::{
    feasibility_csv, fmt_g, parse_spec, records_csv, rows_csv, run_experiment, run_feasibility,
    seed_override, ConfigError, ExperimentSpec, FULL_SCALE_TRIALS,
};
use mubeam::model::{db_to_linear, linear_to_db, ChannelSet, SystemConfig};

#[derive(Parser)]
#[command(
    name = "mubeam",
    version,
    about = "Multiuser MIMO downlink beamforming and power allocation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel realization with one method.
    Solve(SolveArgs),
    /// Run a Monte Carlo experiment from a spec file and write the aggregate CSV.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write one line per trial and method.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        /// Use 1000 trials.
        #[arg(long)]
        full_scale: bool,
    },
    /// Feasibility-test pass rates for the spec's methods and sweep.
    Feasibility {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    /// Streams per user; defaults to N.
    #[arg(long)]
    l: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    gamma_db: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pmax_db: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "group")]
    method: String,
    #[arg(long, default_value = "pr")]
    problem: String,
    /// Use a channel with every entry equal to this value instead of a
    /// random draw.
    #[arg(long, allow_negative_numbers = true)]
    fixed_channel: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    noise_power: f64,
}

fn config_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn load_spec(path: &Path, trials: Option<usize>) -> Result<ExperimentSpec, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::plain(format!("cannot read {}: {e}", path.display())))?;
    let mut spec = parse_spec(&text)?;
    if let Some(seed) = seed_override()? {
        spec.base_seed = seed;
    }
    if let Some(t) = trials {
        if t == 0 {
            return Err(ConfigError::plain("--trials must be at least 1"));
        }
        spec.trials = t;
    }
    Ok(spec)
}

fn write(path: &Path, text: &str) -> Result<(), ExitCode> {
    std::fs::write(path, text).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        ExitCode::FAILURE
    })
}

fn run_solve(a: SolveArgs) -> ExitCode {
    let method: Method = match a.method.parse() {
        Ok(m) => m,
        Err(e) => return config_error(e),
    };
    let problem: Problem = match a.problem.parse() {
        Ok(p) => p,
        Err(e) => return config_error(e),
    };
    let seed = match seed_override() {
        Ok(s) => s.unwrap_or(a.seed),
        Err(e) => return config_error(e),
    };
    let cfg = SystemConfig {
        epsilon: a.epsilon,
        max_iters: a.max_iters,
        noise_power: a.noise_power,
        ..SystemConfig::symmetric(
            a.k,
            a.m,
            a.n,
            a.l.unwrap_or(a.n),
            db_to_linear(a.gamma_db),
            db_to_linear(a.pmax_db),
        )
    };
    if let Err(e) = cfg.validate() {
        return config_error(e);
    }
    let ch = match a.fixed_channel {
        Some(v) => ChannelSet::constant(&cfg, v),
        None => ChannelSet::generate(&cfg, seed),
    };
    let r = match solve(&cfg, &ch, method, problem, &SolverOptions::default()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let trace: Vec<String> = r.balanced_level_trace.iter().map(|&c| fmt_g(c)).collect();
    println!("method: {}", r.method);
    println!("problem: {}", r.problem);
    println!("status: {}", r.status);
    println!("C: {}", fmt_g(r.balanced_level()));
    println!("initial_C: {}", fmt_g(r.initial_level));
    println!("total_power: {}", fmt_g(r.total_power()));
    println!("total_power_db: {}", fmt_g(linear_to_db(r.total_power())));
    println!("sum_rate: {}", fmt_g(r.sum_rate(&ch, cfg.noise_power)));
    println!("iters_used: {}", r.iters_used);
    println!("feasibility_iters: {}", r.feasibility_iters);
    println!("oscillation_detected: {}", r.oscillation_detected);
    println!("trace: {}", trace.join(","));
    for (k, p) in r.powers.p.per_user.iter().enumerate() {
        let p: Vec<String> = p.iter().map(|&x| fmt_g(x)).collect();
        println!("p[{k}]: {}", p.join(","));
    }
    if r.status == Status::Converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Experiment {
            spec,
            out,
            records,
            trials,
            full_scale,
        } => {
            let trials = if full_scale {
                Some(FULL_SCALE_TRIALS)
            } else {
                trials
            };
            let spec = match load_spec(&spec, trials) {
                Ok(s) => s,
                Err(e) => return config_error(e),
            };
            let result = run_experiment(&spec);
            if let Err(code) = write(&out, &rows_csv(&result.rows)) {
                return code;
            }
            if let Some(path) = records {
                if let Err(code) = write(&path, &records_csv(&result.records)) {
                    return code;
                }
            }
            ExitCode::SUCCESS
        }
        Command::Feasibility { spec, out, trials } => {
            let spec = match load_spec(&spec, trials) {
                Ok(s) => s,
                Err(e) => return config_error(e),
            };
            let csv = feasibility_csv(&run_feasibility(&spec));
            match out {
                Some(path) => match write(&path, &csv) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(code) => code,
                },
                None => {
                    print!("{csv}");
                    ExitCode::SUCCESS
                }
            }
        }
    }
}
