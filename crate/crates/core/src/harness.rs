//! Monte Carlo experiments: spec files, seeded trials, aggregation and CSV.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::driver::{
    feasibility_test, solve, Feasibility, IterationResult, Method, OscillationPolicy, Problem,
    SolverOptions, Status, FEASIBILITY_BUDGET_DB,
};
use crate::error::Error;
use crate::model::{db_to_linear, linear_to_db, ChannelSet, SystemConfig};
use crate::power::StreamPrMode;

pub const CSV_HEADER: &str =
    "sweep_value,method,mean_C,mean_power_db,mean_sum_rate,feasibility_rate,convergence_rate,mean_iters";

pub const RECORDS_HEADER: &str =
    "sweep_value,trial,seed,method,status,C,total_power,sum_rate,iters,feasibility_iters,oscillation";

pub const FEASIBILITY_HEADER: &str = "sweep_value,method,feasibility_rate,mean_feasibility_iters";

pub const DESK_TRIALS: usize = 200;
pub const FULL_SCALE_TRIALS: usize = 1000;

/// Environment variable overriding the base seed.
pub const SEED_ENV: &str = "MIMO_SEED";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, field: &str, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            field: Some(field.to_string()),
            message: message.into(),
        }
    }

    fn field(field: &str, message: impl Into<String>) -> Self {
        Self {
            line: None,
            field: Some(field.to_string()),
            message: message.into(),
        }
    }

    pub fn plain(message: impl Into<String>) -> Self {
        Self {
            line: None,
            field: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "{field}: ")?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterPolicy {
    /// Average only over trials where every method converged.
    #[default]
    AllConverged,
    /// Average each method over the trials where it passed feasibility.
    PerMethod,
}

impl FromStr for FilterPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all-converged" | "AllConverged" => Ok(FilterPolicy::AllConverged),
            "per-method" | "PerMethod" => Ok(FilterPolicy::PerMethod),
            _ => Err(format!("unknown filter policy {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    PmaxDb,
    GammaDb,
}

impl SweepVar {
    pub fn key(self) -> &'static str {
        match self {
            SweepVar::PmaxDb => "pmax_db",
            SweepVar::GammaDb => "gamma_db",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub problem: Problem,
    pub methods: Vec<Method>,
    /// Base configuration; the swept variable is overwritten per point.
    pub cfg: SystemConfig,
    pub sweep_var: SweepVar,
    pub sweep: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub filter_policy: FilterPolicy,
    pub options: SolverOptions,
}

impl ExperimentSpec {
    /// Configuration at one sweep point.
    pub fn config_at(&self, value: f64) -> SystemConfig {
        let mut cfg = self.cfg.clone();
        match self.sweep_var {
            SweepVar::PmaxDb => cfg.p_max = db_to_linear(value),
            SweepVar::GammaDb => cfg.targets = vec![db_to_linear(value); cfg.users],
        }
        cfg
    }

    pub fn seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }
}

fn parse_list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse()
                .map_err(|_| ConfigError::at(line, key, format!("cannot parse {s:?}")))
        })
        .collect()
}

fn parse_one<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    let v = parse_list(line, key, value)?;
    match <[T; 1]>::try_from(v) {
        Ok([x]) => Ok(x),
        Err(_) => Err(ConfigError::at(line, key, "expected a single value")),
    }
}

fn per_user(name: &str, values: Vec<usize>, users: usize) -> Result<Vec<usize>, ConfigError> {
    match values.len() {
        1 => Ok(vec![values[0]; users]),
        n if n == users => Ok(values),
        n => Err(ConfigError::field(
            name,
            format!("{n} entries for {users} users"),
        )),
    }
}

/// Parses a `key = value` spec file.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let mut problem = None;
    let mut methods = None;
    let mut users = None;
    let mut m = None;
    let mut n: Option<Vec<usize>> = None;
    let mut l: Option<Vec<usize>> = None;
    let mut gamma_db = vec![0.0];
    let mut pmax_db = None;
    let mut sweep_var = None;
    let mut trials = DESK_TRIALS;
    let mut seed = 0u64;
    let mut filter_policy = FilterPolicy::default();
    let mut epsilon = 1e-3;
    let mut max_iters = 50usize;
    let mut noise_power = 1.0;
    let mut options = SolverOptions::default();
    let mut seen = std::collections::HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, content, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::at(line, key, "duplicate key"));
        }
        match key {
            "problem" => {
                problem = Some(
                    value
                        .parse::<Problem>()
                        .map_err(|e| ConfigError::at(line, key, e.to_string()))?,
                )
            }
            "methods" => {
                let list = value
                    .split(',')
                    .map(|s| s.trim().parse::<Method>())
                    .collect::<Result<Vec<_>, Error>>()
                    .map_err(|e| ConfigError::at(line, key, e.to_string()))?;
                methods = Some(list);
            }
            "K" => users = Some(parse_one::<usize>(line, key, value)?),
            "M" => m = Some(parse_one::<usize>(line, key, value)?),
            "N" => n = Some(parse_list(line, key, value)?),
            "L" => l = Some(parse_list(line, key, value)?),
            "Lequal" => {
                if value != "N" {
                    return Err(ConfigError::at(line, key, "only `N` is supported"));
                }
            }
            "gamma_db" => gamma_db = parse_list(line, key, value)?,
            "pmax_db" => pmax_db = Some(parse_list(line, key, value)?),
            "sweep" => {
                sweep_var = Some(match value {
                    "pmax_db" => SweepVar::PmaxDb,
                    "gamma_db" => SweepVar::GammaDb,
                    _ => return Err(ConfigError::at(line, key, "expected pmax_db or gamma_db")),
                })
            }
            "trials" => trials = parse_one(line, key, value)?,
            "seed" => seed = parse_one(line, key, value)?,
            "filter_policy" => {
                filter_policy = value
                    .parse()
                    .map_err(|e: String| ConfigError::at(line, key, e))?
            }
            "epsilon" => epsilon = parse_one(line, key, value)?,
            "max_iters" => max_iters = parse_one(line, key, value)?,
            "noise_power" => noise_power = parse_one(line, key, value)?,
            "oscillation_policy" => {
                options.oscillation_policy = match value {
                    "keep-last" => OscillationPolicy::KeepLastIterate,
                    "switch-to-group" => OscillationPolicy::SwitchToGroup,
                    _ => {
                        return Err(ConfigError::at(
                            line,
                            key,
                            "expected keep-last or switch-to-group",
                        ))
                    }
                }
            }
            "stream_pr_mode" => {
                options.stream_pr_mode = match value {
                    "single" => StreamPrMode::SingleUpdate,
                    "fixed-point" => StreamPrMode::FixedPoint,
                    _ => return Err(ConfigError::at(line, key, "expected single or fixed-point")),
                }
            }
            _ => return Err(ConfigError::at(line, key, "unknown key")),
        }
    }

    let problem = problem.ok_or_else(|| ConfigError::field("problem", "missing"))?;
    let methods = methods.ok_or_else(|| ConfigError::field("methods", "missing"))?;
    let users = users.ok_or_else(|| ConfigError::field("K", "missing"))?;
    let m = m.ok_or_else(|| ConfigError::field("M", "missing"))?;
    let n = per_user(
        "N",
        n.ok_or_else(|| ConfigError::field("N", "missing"))?,
        users,
    )?;
    let l = match l {
        Some(l) => per_user("L", l, users)?,
        None => n.clone(),
    };
    if trials == 0 {
        return Err(ConfigError::field("trials", "must be at least 1"));
    }
    // power minimization has no budget of its own; default to the
    // feasibility-stage budget
    let pmax_db = pmax_db.unwrap_or_else(|| match problem {
        Problem::Pr => vec![10.0],
        Problem::Pp => vec![FEASIBILITY_BUDGET_DB + linear_to_db(noise_power)],
    });
    let sweep_var = sweep_var.unwrap_or(if gamma_db.len() > 1 {
        SweepVar::GammaDb
    } else {
        SweepVar::PmaxDb
    });
    let (sweep, fixed, fixed_var) = match sweep_var {
        SweepVar::PmaxDb => (pmax_db, gamma_db, SweepVar::GammaDb),
        SweepVar::GammaDb => (gamma_db, pmax_db, SweepVar::PmaxDb),
    };
    let [fixed] = <[f64; 1]>::try_from(fixed).map_err(|_| {
        ConfigError::field(
            fixed_var.key(),
            "only the swept variable may take several values",
        )
    })?;
    if let Some(bad) = sweep.iter().chain([&fixed]).find(|v| !v.is_finite()) {
        return Err(ConfigError::plain(format!("non-finite value {bad}")));
    }
    let (gamma, pmax) = match sweep_var {
        SweepVar::PmaxDb => (fixed, sweep[0]),
        SweepVar::GammaDb => (sweep[0], fixed),
    };
    let cfg = SystemConfig {
        users,
        tx_antennas: m,
        rx_antennas: n,
        streams: l,
        targets: vec![db_to_linear(gamma); users],
        noise_power,
        p_max: db_to_linear(pmax),
        epsilon,
        max_iters,
    };
    cfg.validate()
        .map_err(|e| ConfigError::plain(e.to_string()))?;
    Ok(ExperimentSpec {
        problem,
        methods,
        cfg,
        sweep_var,
        sweep,
        trials,
        base_seed: seed,
        filter_policy,
        options,
    })
}

/// Seed from `MIMO_SEED`, if set.
pub fn seed_override() -> Result<Option<u64>, ConfigError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| ConfigError::field(SEED_ENV, format!("not an integer: {s:?}"))),
        Err(_) => Ok(None),
    }
}

/// Outcome of one method on one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub sweep_value: f64,
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    /// `None` when the solver returned an error other than a dimension
    /// failure.
    pub status: Option<Status>,
    pub c: f64,
    pub total_power: f64,
    pub sum_rate: f64,
    pub iters: usize,
    pub feasibility_iters: usize,
    pub oscillation: bool,
}

impl TrialRecord {
    /// Passed the feasibility stage and stayed within the budget.
    pub fn feasible(&self) -> bool {
        matches!(
            self.status,
            Some(Status::Converged | Status::MaxIters | Status::Stalled)
        )
    }

    pub fn converged(&self) -> bool {
        self.status == Some(Status::Converged)
    }

    fn status_name(&self) -> String {
        self.status
            .map_or_else(|| "error".to_string(), |s| s.to_string())
    }
}

fn record(
    spec: &ExperimentSpec,
    value: f64,
    trial: usize,
    method: Method,
    out: crate::Result<IterationResult>,
    ch: &ChannelSet,
    cfg: &SystemConfig,
) -> TrialRecord {
    let mut rec = TrialRecord {
        sweep_value: value,
        trial,
        seed: spec.seed(trial),
        method,
        status: None,
        c: f64::NAN,
        total_power: f64::NAN,
        sum_rate: f64::NAN,
        iters: 0,
        feasibility_iters: 0,
        oscillation: false,
    };
    match out {
        Ok(r) => {
            rec.status = Some(r.status);
            if r.status != Status::Infeasible {
                rec.c = match spec.problem {
                    Problem::Pr => r.balanced_level(),
                    Problem::Pp => r.balanced_level_trace.last().copied().unwrap_or(f64::NAN),
                };
                rec.total_power = r.total_power();
                rec.sum_rate = r.sum_rate(ch, cfg.noise_power);
            }
            rec.iters = r.iters_used;
            rec.feasibility_iters = r.feasibility_iters;
            rec.oscillation = r.oscillation_detected;
        }
        Err(e)
            if matches!(
                e.root(),
                Error::DimensionInfeasible { .. } | Error::InsufficientNullSpace { .. }
            ) =>
        {
            rec.status = Some(Status::Infeasible);
        }
        Err(_) => {}
    }
    rec
}

/// Aggregates of one method at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub sweep_value: f64,
    pub method: Method,
    pub mean_c: f64,
    /// `10 log10` of the mean linear total power.
    pub mean_power_db: f64,
    pub mean_sum_rate: f64,
    pub feasibility_rate: f64,
    /// Converged trials over feasible trials.
    pub convergence_rate: f64,
    pub mean_iters: f64,
    /// Trials entering the means.
    pub included: usize,
    /// Standard error of `mean_c`.
    pub se_c: f64,
    /// Standard error of the mean linear total power.
    pub se_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ExperimentRow>,
    pub records: Vec<TrialRecord>,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

fn aggregate(spec: &ExperimentSpec, value: f64, trials: &[Vec<TrialRecord>]) -> Vec<ExperimentRow> {
    let all_converged: Vec<bool> = trials
        .iter()
        .map(|t| t.iter().all(TrialRecord::converged))
        .collect();
    (0..spec.methods.len())
        .map(|mi| {
            let recs: Vec<&TrialRecord> = trials.iter().map(|t| &t[mi]).collect();
            let feasible = recs.iter().filter(|r| r.feasible()).count();
            let converged = recs.iter().filter(|r| r.converged()).count();
            let included: Vec<&TrialRecord> = recs
                .iter()
                .zip(&all_converged)
                .filter(|(r, all)| match spec.filter_policy {
                    FilterPolicy::AllConverged => **all,
                    FilterPolicy::PerMethod => r.feasible(),
                })
                .map(|(r, _)| *r)
                .collect();
            let pick =
                |f: fn(&TrialRecord) -> f64| included.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (mean_c, se_c) = mean_se(&pick(|r| r.c));
            let (mean_power, se_power) = mean_se(&pick(|r| r.total_power));
            let (mean_sum_rate, _) = mean_se(&pick(|r| r.sum_rate));
            let (mean_iters, _) = mean_se(&pick(|r| r.iters as f64));
            ExperimentRow {
                sweep_value: value,
                method: spec.methods[mi],
                mean_c,
                mean_power_db: linear_to_db(mean_power),
                mean_sum_rate,
                feasibility_rate: ratio(feasible, recs.len()),
                convergence_rate: ratio(converged, feasible),
                mean_iters,
                included: included.len(),
                se_c,
                se_power,
            }
        })
        .collect()
}

/// Runs every method on `trials` seeded channels at every sweep point.
pub fn run_experiment(spec: &ExperimentSpec) -> ExperimentOutput {
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &value in &spec.sweep {
        let cfg = spec.config_at(value);
        let trials: Vec<Vec<TrialRecord>> = (0..spec.trials)
            .into_par_iter()
            .map(|t| {
                let ch = ChannelSet::generate(&cfg, spec.seed(t));
                spec.methods
                    .iter()
                    .map(|&m| {
                        let out = solve(&cfg, &ch, m, spec.problem, &spec.options);
                        record(spec, value, t, m, out, &ch, &cfg)
                    })
                    .collect()
            })
            .collect();
        rows.extend(aggregate(spec, value, &trials));
        records.extend(trials.into_iter().flatten());
    }
    ExperimentOutput { rows, records }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityRow {
    pub sweep_value: f64,
    pub method: Method,
    pub feasibility_rate: f64,
    /// Mean balancing iterations over feasible trials.
    pub mean_iters: f64,
}

/// Feasibility-test pass rates per method and sweep point.
pub fn run_feasibility(spec: &ExperimentSpec) -> Vec<FeasibilityRow> {
    let mut rows = Vec::new();
    for &value in &spec.sweep {
        let cfg = spec.config_at(value);
        let outcomes: Vec<Vec<Option<usize>>> = (0..spec.trials)
            .into_par_iter()
            .map(|t| {
                let ch = ChannelSet::generate(&cfg, spec.seed(t));
                spec.methods
                    .iter()
                    .map(|&m| match feasibility_test(&cfg, &ch, m, &spec.options) {
                        Ok(Feasibility::Feasible { iterations }) => Some(iterations),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        for (mi, &method) in spec.methods.iter().enumerate() {
            let iters: Vec<f64> = outcomes
                .iter()
                .filter_map(|o| o[mi])
                .map(|i| i as f64)
                .collect();
            rows.push(FeasibilityRow {
                sweep_value: value,
                method,
                feasibility_rate: ratio(iters.len(), spec.trials),
                mean_iters: mean_se(&iters).0,
            });
        }
    }
    rows
}

/// `%.10g`-style formatting; NaN prints as `NaN`.
pub fn fmt_g(x: f64) -> String {
    const DIGITS: i32 = 10;
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= DIGITS {
        let mantissa = strip_zeros(mantissa);
        format!(
            "{mantissa}e{}{:02}",
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    } else {
        strip_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn rows_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_g(r.sweep_value),
            r.method,
            fmt_g(r.mean_c),
            fmt_g(r.mean_power_db),
            fmt_g(r.mean_sum_rate),
            fmt_g(r.feasibility_rate),
            fmt_g(r.convergence_rate),
            fmt_g(r.mean_iters)
        );
    }
    out
}

pub fn records_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_g(r.sweep_value),
            r.trial,
            r.seed,
            r.method,
            r.status_name(),
            fmt_g(r.c),
            fmt_g(r.total_power),
            fmt_g(r.sum_rate),
            r.iters,
            r.feasibility_iters,
            u8::from(r.oscillation)
        );
    }
    out
}

pub fn feasibility_csv(rows: &[FeasibilityRow]) -> String {
    let mut out = String::from(FEASIBILITY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_g(r.sweep_value),
            r.method,
            fmt_g(r.feasibility_rate),
            fmt_g(r.mean_iters)
        );
    }
    out
}
