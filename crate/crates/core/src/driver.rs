//! Alternating transmit/receive optimization through uplink–downlink
//! duality.
//!
//! One iteration runs six steps: downlink power, downlink receive filters,
//! downlink power, uplink power, uplink receive filters (the new transmit
//! filters) and uplink power.

use std::fmt;
use std::str::FromStr;

use crate::beamform::{bd_transmit, gsinr_receive_dl, gsinr_receive_ul, normalization_defect};
use crate::error::{Error, Result};
use crate::model::{
    build_coupling, dl_covariances, BeamformerSet, ChannelSet, Link, PowerAllocation, StreamModel,
    StreamPowers, SystemConfig,
};
use crate::power::{
    group_pp_allocate, group_pr_allocate, initial_budgets, stream_pp_allocate, stream_pr_allocate,
    BalancedSolution, StreamPrMode,
};

/// Budget used by the feasibility stage, relative to the noise power
/// (43 dB).
pub const FEASIBILITY_BUDGET_DB: f64 = 43.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    GroupGsinr,
    PerStreamGsinr,
    Khachan,
    BdGroup,
    BdPerStream,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::GroupGsinr,
        Method::PerStreamGsinr,
        Method::Khachan,
        Method::BdGroup,
        Method::BdPerStream,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::GroupGsinr => "group",
            Method::PerStreamGsinr => "per-stream",
            Method::Khachan => "khachan",
            Method::BdGroup => "bd-group",
            Method::BdPerStream => "bd-per-stream",
        }
    }

    pub fn is_bd(self) -> bool {
        matches!(self, Method::BdGroup | Method::BdPerStream)
    }

    fn per_stream(self) -> bool {
        matches!(self, Method::PerStreamGsinr | Method::BdPerStream)
    }

    /// SINR bookkeeping matching the method's receive filters.
    pub fn stream_model(self) -> StreamModel {
        match self {
            Method::Khachan => StreamModel::Independent,
            _ => StreamModel::Grouped,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// Balanced-level maximization under a sum-power budget (`Pr`) or power
/// minimization under SINR targets (`Pp`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    Pr,
    Pp,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Pr => "pr",
            Problem::Pp => "pp",
        })
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pr" => Ok(Problem::Pr),
            "pp" => Ok(Problem::Pp),
            _ => Err(Error::InvalidConfig(format!("unknown problem {s:?}"))),
        }
    }
}

/// What per-stream power minimization does once its total power starts
/// oscillating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OscillationPolicy {
    /// Keep iterating and report whatever the last iteration produced.
    #[default]
    KeepLastIterate,
    /// Use group allocation for the remaining iterations.
    SwitchToGroup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub stream_pr_mode: StreamPrMode,
    pub oscillation_policy: OscillationPolicy,
    pub oscillation_window: usize,
    pub oscillation_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            stream_pr_mode: StreamPrMode::SingleUpdate,
            oscillation_policy: OscillationPolicy::KeepLastIterate,
            oscillation_window: 6,
            oscillation_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    MaxIters,
    Infeasible,
    BudgetExceeded,
    /// Minimization hit an infeasible power step after the feasibility
    /// stage passed; the last feasible iterate is reported.
    Stalled,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::MaxIters => "max-iters",
            Status::Infeasible => "infeasible",
            Status::BudgetExceeded => "budget-exceeded",
            Status::Stalled => "stalled",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible { iterations: usize },
    Infeasible,
}

/// Worst normalization errors seen over all downlink receive-filter updates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormalizationDiagnostics {
    /// `max |tr(V_kᴴV_k) - L_k|`
    pub trace_error: f64,
    /// `max` off-diagonal magnitude of `V_kᴴR_n,kV_k` over its mean diagonal.
    pub offdiag_ratio: f64,
}

/// Levels after the four power steps of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLevels {
    pub dl_before: f64,
    pub dl_after: f64,
    pub ul_before: f64,
    pub ul_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationResult {
    pub method: Method,
    pub problem: Problem,
    pub status: Status,
    /// Level at the initial beamformers (first power step of the run).
    pub initial_level: f64,
    /// Pr: level at the end of each iteration. Pp: smallest downlink
    /// SINR-to-target ratio after each minimization iteration.
    pub balanced_level_trace: Vec<f64>,
    /// Levels after every power step of the balancing iterations, including
    /// the feasibility stage of a Pp run.
    pub step_levels: Vec<StepLevels>,
    /// Relative gap between the downlink level after step 3 and the uplink
    /// level after step 4, per balancing iteration.
    pub duality_gaps: Vec<f64>,
    /// Total downlink power after each minimization iteration.
    pub power_trace: Vec<f64>,
    /// Final downlink solution in the layout the method solves in (one
    /// virtual user per stream for Khachan).
    pub final_solution: Option<BalancedSolution>,
    /// Final powers and filters in the original user layout.
    pub powers: PowerAllocation,
    pub beamformers: BeamformerSet,
    pub iters_used: usize,
    pub feasibility_iters: usize,
    pub oscillation_detected: bool,
    pub normalization: NormalizationDiagnostics,
}

impl IterationResult {
    /// Reported balanced level; NaN without a final solution.
    pub fn balanced_level(&self) -> f64 {
        self.final_solution
            .as_ref()
            .map_or(f64::NAN, |s| s.balanced_level)
    }

    pub fn total_power(&self) -> f64 {
        self.powers.p.total()
    }

    pub fn sum_rate(&self, ch: &ChannelSet, noise_power: f64) -> f64 {
        crate::model::sum_rate(
            ch,
            &self.beamformers,
            &self.powers.p,
            noise_power,
            self.method.stream_model(),
        )
    }
}

/// `true` when the last `window` samples never fall more than `tol`
/// (relative) below the best value seen before the window, and the window
/// is not flat.
pub fn detect_oscillation(trace: &[f64], window: usize, tol: f64) -> bool {
    let n = trace.len();
    if window == 0 || n <= window {
        return false;
    }
    let start = n - window;
    let best = trace[..start].iter().copied().fold(f64::INFINITY, f64::min);
    let recent = &trace[start..];
    let floor = best - tol * best.abs();
    let lo = recent.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lo >= floor && hi - lo > tol * best.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Allocation {
    Group,
    PerStream,
}

/// Mutable state of one solve in the layout it is solved in.
struct Engine<'a> {
    cfg: SystemConfig,
    ch: &'a ChannelSet,
    alloc: Allocation,
    /// Transmit filters fixed by block diagonalization.
    fixed_tx: bool,
    stream_pr_mode: StreamPrMode,
    bf: BeamformerSet,
    budgets_dl: Vec<f64>,
    budgets_ul: Vec<f64>,
    dl: Option<BalancedSolution>,
    ul: Option<BalancedSolution>,
    norm: NormalizationDiagnostics,
    step_levels: Vec<StepLevels>,
    duality_gaps: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn set_budget(&mut self, p_max: f64) {
        self.cfg.p_max = p_max;
        self.budgets_dl = initial_budgets(&self.cfg);
        self.budgets_ul = self.budgets_dl.clone();
    }

    fn power(&mut self, link: Link, problem: Problem) -> Result<BalancedSolution> {
        let coupling = build_coupling(self.ch, &self.bf, &self.cfg)?;
        let sol = match (problem, self.alloc) {
            (Problem::Pr, Allocation::Group) => group_pr_allocate(&coupling, &self.cfg, link)?,
            (Problem::Pp, Allocation::Group) => group_pp_allocate(&coupling, &self.cfg, link)?,
            (Problem::Pp, Allocation::PerStream) => stream_pp_allocate(&coupling, &self.cfg, link)?,
            (Problem::Pr, Allocation::PerStream) => {
                let prev = match link {
                    Link::Downlink => &self.budgets_dl,
                    Link::Uplink => &self.budgets_ul,
                };
                let (t, sol) =
                    stream_pr_allocate(&coupling, &self.cfg, link, prev, self.stream_pr_mode)?;
                match link {
                    Link::Downlink => self.budgets_dl = t,
                    Link::Uplink => self.budgets_ul = t,
                }
                sol
            }
        };
        match link {
            Link::Downlink => self.dl = Some(sol.clone()),
            Link::Uplink => self.ul = Some(sol.clone()),
        }
        Ok(sol)
    }

    fn receive_dl(&mut self, p: &StreamPowers) -> Result<()> {
        let noise = self.cfg.noise_power;
        let mut rx = Vec::with_capacity(self.cfg.users);
        for k in 0..self.cfg.users {
            let fb = gsinr_receive_dl(k, self.ch, &self.bf, p, noise)?;
            let (_, r_n) = dl_covariances(k, self.ch, &self.bf, p, noise);
            let (trace_err, off) = normalization_defect(&fb.filter, &r_n);
            self.norm.trace_error = self.norm.trace_error.max(trace_err);
            self.norm.offdiag_ratio = self.norm.offdiag_ratio.max(off);
            rx.push(fb.filter);
        }
        self.bf.rx = rx;
        Ok(())
    }

    fn receive_ul(&mut self, q: &StreamPowers) -> Result<()> {
        let tx = (0..self.cfg.users)
            .map(|k| Ok(gsinr_receive_ul(k, self.ch, &self.bf, q, self.cfg.noise_power)?.filter))
            .collect::<Result<Vec<_>>>()?;
        self.bf.tx = tx;
        Ok(())
    }

    /// Steps 1–3. Returns the levels after steps 1 and 3.
    fn downlink_half(&mut self, problem: Problem) -> Result<(f64, f64)> {
        let s1 = self.power(Link::Downlink, problem)?;
        self.receive_dl(&s1.powers)?;
        let s3 = self.power(Link::Downlink, problem)?;
        Ok((s1.balanced_level, s3.balanced_level))
    }

    /// One balancing iteration; only steps 1–3 when the transmit side is
    /// fixed.
    fn pr_iteration(&mut self) -> Result<StepLevels> {
        let (c1, c3) = self.downlink_half(Problem::Pr)?;
        let mut levels = StepLevels {
            dl_before: c1,
            dl_after: c3,
            ul_before: f64::NAN,
            ul_after: f64::NAN,
        };
        if !self.fixed_tx {
            let s4 = self.power(Link::Uplink, Problem::Pr)?;
            self.duality_gaps.push((c3 - s4.balanced_level).abs() / c3);
            levels.ul_before = s4.balanced_level;
            self.receive_ul(&s4.powers)?;
            levels.ul_after = self.power(Link::Uplink, Problem::Pr)?.balanced_level;
        }
        self.step_levels.push(levels);
        Ok(levels)
    }

    /// Final value of an iteration: the level after step 6, or after step 3
    /// when the transmit side is fixed.
    fn end_level(&self, levels: &StepLevels) -> f64 {
        if self.fixed_tx {
            levels.dl_after
        } else {
            levels.ul_after
        }
    }

    /// Smallest downlink SINR-to-target ratio the users achieve with the
    /// current transmit filters and powers `p` once their receive filter
    /// banks adapt to them.
    fn dl_min_ratio(&self, p: &StreamPowers) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for k in 0..self.cfg.users {
            let fb = gsinr_receive_dl(k, self.ch, &self.bf, p, self.cfg.noise_power)?;
            let mean = fb.sinrs.iter().sum::<f64>() / fb.sinrs.len() as f64;
            worst = worst.min(mean / self.cfg.targets[k]);
        }
        Ok(worst)
    }
}

struct Layout {
    owners: Option<Vec<(usize, usize)>>,
    users: usize,
    cfg: SystemConfig,
}

impl Layout {
    fn powers(&self, p: &StreamPowers) -> StreamPowers {
        match &self.owners {
            Some(o) => p.collapse(o, &self.cfg),
            None => p.clone(),
        }
    }

    fn beamformers(&self, bf: &BeamformerSet) -> BeamformerSet {
        match &self.owners {
            Some(o) => bf.collapse(o, self.users),
            None => bf.clone(),
        }
    }
}

fn start<'a>(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    exploded_ch: &'a mut Option<ChannelSet>,
    ch_ref: &'a ChannelSet,
    method: Method,
    opts: &SolverOptions,
) -> Result<(Engine<'a>, Layout)> {
    cfg.validate()?;
    ch.check_shapes(cfg)?;
    let init = BeamformerSet::identity_slices(cfg);
    let layout = Layout {
        owners: None,
        users: cfg.users,
        cfg: cfg.clone(),
    };
    let (solve_cfg, solve_ch, bf, layout) = if method == Method::Khachan {
        let (xcfg, owners) = cfg.explode_streams();
        *exploded_ch = Some(ch.explode(&owners));
        let bf = init.explode(&owners);
        (
            xcfg,
            exploded_ch.as_ref().expect("just set"),
            bf,
            Layout {
                owners: Some(owners),
                ..layout
            },
        )
    } else if method.is_bd() {
        let tx = bd_transmit(ch, cfg)?;
        (
            cfg.clone(),
            ch_ref,
            BeamformerSet { tx, rx: init.rx },
            layout,
        )
    } else {
        (cfg.clone(), ch_ref, init, layout)
    };
    let budgets = initial_budgets(&solve_cfg);
    let engine = Engine {
        cfg: solve_cfg,
        ch: solve_ch,
        alloc: if method.per_stream() {
            Allocation::PerStream
        } else {
            Allocation::Group
        },
        fixed_tx: method.is_bd(),
        stream_pr_mode: opts.stream_pr_mode,
        bf,
        budgets_dl: budgets.clone(),
        budgets_ul: budgets,
        dl: None,
        ul: None,
        norm: NormalizationDiagnostics::default(),
        step_levels: Vec::new(),
        duality_gaps: Vec::new(),
    };
    Ok((engine, layout))
}

fn finish(
    eng: Engine<'_>,
    layout: &Layout,
    method: Method,
    problem: Problem,
    status: Status,
    initial_level: f64,
    balanced_level_trace: Vec<f64>,
    power_trace: Vec<f64>,
    iters: (usize, usize),
    oscillation_detected: bool,
) -> IterationResult {
    let p = eng
        .dl
        .as_ref()
        .map_or_else(|| StreamPowers::zeros(&eng.cfg), |s| s.powers.clone());
    let q = eng
        .ul
        .as_ref()
        .map_or_else(|| StreamPowers::zeros(&eng.cfg), |s| s.powers.clone());
    let final_solution = match status {
        Status::Infeasible => None,
        _ => eng.dl.clone(),
    };
    IterationResult {
        method,
        problem,
        status,
        initial_level,
        balanced_level_trace,
        step_levels: eng.step_levels,
        duality_gaps: eng.duality_gaps,
        power_trace,
        final_solution,
        powers: PowerAllocation {
            p: layout.powers(&p),
            q: layout.powers(&q),
        },
        beamformers: layout.beamformers(&eng.bf),
        iters_used: iters.0,
        feasibility_iters: iters.1,
        oscillation_detected,
        normalization: eng.norm,
    }
}

/// Outcome of the balancing loop.
struct PrRun {
    initial_level: f64,
    trace: Vec<f64>,
    iters: usize,
    converged: bool,
    /// An iteration ended at level 1 or above (only tracked when gated).
    reached_one: bool,
}

fn run_pr(eng: &mut Engine<'_>, gate: bool) -> Result<PrRun> {
    let max_iters = eng.cfg.max_iters;
    let eps = eng.cfg.epsilon;
    let mut run = PrRun {
        initial_level: f64::NAN,
        trace: Vec::new(),
        iters: 0,
        converged: false,
        reached_one: false,
    };
    let mut prev = f64::NAN;
    for n in 1..=max_iters {
        run.iters = n;
        let levels = eng.pr_iteration().map_err(|e| e.at_iteration(n))?;
        if n == 1 {
            run.initial_level = levels.dl_before;
            prev = run.initial_level;
        }
        let c = eng.end_level(&levels);
        run.trace.push(c);
        if gate && c >= 1.0 {
            run.reached_one = true;
            return Ok(run);
        }
        if eng.fixed_tx || (c - prev).abs() < eps {
            run.converged = true;
            return Ok(run);
        }
        prev = c;
    }
    Ok(run)
}

/// Balanced-level maximization under the configured sum-power budget.
pub fn solve_pr(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    method: Method,
    opts: &SolverOptions,
) -> Result<IterationResult> {
    let mut exploded = None;
    let (mut eng, layout) = start(cfg, ch, &mut exploded, ch, method, opts)?;
    let run = run_pr(&mut eng, false)?;
    if !eng.fixed_tx {
        // the last transmit update has no matching downlink powers yet
        eng.downlink_half(Problem::Pr)
            .map_err(|e| e.at_iteration(run.iters + 1))?;
    }
    let status = if run.converged {
        Status::Converged
    } else {
        Status::MaxIters
    };
    Ok(finish(
        eng,
        &layout,
        method,
        Problem::Pr,
        status,
        run.initial_level,
        run.trace,
        Vec::new(),
        (run.iters, 0),
        false,
    ))
}

/// Runs the balancing iterations at the feasibility budget until an
/// iteration ends at level 1 or above.
fn feasibility_stage(eng: &mut Engine<'_>) -> Result<PrRun> {
    let budget = eng.cfg.noise_power * crate::model::db_to_linear(FEASIBILITY_BUDGET_DB);
    let target_budget = eng.cfg.p_max;
    eng.set_budget(budget);
    let run = run_pr(eng, true);
    eng.set_budget(target_budget);
    run
}

/// Whether the targets are reachable with a large budget.
pub fn feasibility_test(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    method: Method,
    opts: &SolverOptions,
) -> Result<Feasibility> {
    let mut exploded = None;
    let (mut eng, _) = match start(cfg, ch, &mut exploded, ch, method, opts) {
        Ok(v) => v,
        Err(Error::DimensionInfeasible { .. } | Error::InsufficientNullSpace { .. }) => {
            return Ok(Feasibility::Infeasible)
        }
        Err(e) => return Err(e),
    };
    let run = feasibility_stage(&mut eng)?;
    Ok(if run.reached_one {
        Feasibility::Feasible {
            iterations: run.iters,
        }
    } else {
        Feasibility::Infeasible
    })
}

/// Power minimization subject to the SINR targets.
pub fn solve_pp(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    method: Method,
    opts: &SolverOptions,
) -> Result<IterationResult> {
    let mut exploded = None;
    let (mut eng, layout) = start(cfg, ch, &mut exploded, ch, method, opts)?;
    let feas = feasibility_stage(&mut eng)?;
    let initial_level = feas.initial_level;
    let feas_iters = feas.iters;
    if !feas.reached_one {
        return Ok(finish(
            eng,
            &layout,
            method,
            Problem::Pp,
            Status::Infeasible,
            initial_level,
            Vec::new(),
            Vec::new(),
            (feas_iters, feas_iters),
            false,
        ));
    }

    let eps = eng.cfg.epsilon;
    let max_iters = eng.cfg.max_iters;
    let mut trace = Vec::new();
    let mut power_trace = Vec::new();
    let mut oscillating = false;
    let mut status = Status::MaxIters;
    let mut iters = 0;
    let mut switch_iters = 0;
    let watch = eng.alloc == Allocation::PerStream && !eng.fixed_tx;

    for n in 1..=max_iters {
        iters = n;
        let at = feas_iters + switch_iters + n;
        let saved = (eng.bf.clone(), eng.dl.clone(), eng.ul.clone());
        let step = (|| -> Result<f64> {
            eng.downlink_half(Problem::Pp)?;
            let p = eng.dl.as_ref().expect("downlink step ran").powers.clone();
            if eng.fixed_tx {
                return eng.dl_min_ratio(&p);
            }
            let s4 = eng.power(Link::Uplink, Problem::Pp)?;
            eng.receive_ul(&s4.powers)?;
            eng.power(Link::Uplink, Problem::Pp)?;
            eng.dl_min_ratio(&p)
        })();
        let c = match step {
            Ok(c) => c,
            Err(Error::Infeasible) => {
                (eng.bf, eng.dl, eng.ul) = saved;
                status = Status::Stalled;
                break;
            }
            Err(e) => return Err(e.at_iteration(at)),
        };
        trace.push(c);
        power_trace.push(eng.dl.as_ref().expect("downlink step ran").powers.total());
        if eng.fixed_tx || (c - 1.0).abs() < eps {
            status = Status::Converged;
            break;
        }
        if watch
            && !oscillating
            && detect_oscillation(&power_trace, opts.oscillation_window, opts.oscillation_tol)
        {
            oscillating = true;
            if opts.oscillation_policy == OscillationPolicy::SwitchToGroup {
                // filters shaped by per-stream powers may not admit a group
                // solution; rebalance before minimizing again
                let saved = (eng.bf.clone(), eng.dl.clone(), eng.ul.clone());
                eng.alloc = Allocation::Group;
                let feas = feasibility_stage(&mut eng).map_err(|e| e.at_iteration(at))?;
                switch_iters = feas.iters;
                if !feas.reached_one {
                    (eng.bf, eng.dl, eng.ul) = saved;
                    status = Status::Stalled;
                    break;
                }
            }
        }
    }

    if status != Status::Stalled && !eng.fixed_tx {
        // refresh the downlink side for the last transmit update
        let saved = (eng.bf.clone(), eng.dl.clone());
        match eng.downlink_half(Problem::Pp) {
            Ok(_) => {}
            Err(Error::Infeasible) => {
                eng.bf = saved.0;
                eng.dl = saved.1;
            }
            Err(e) => return Err(e.at_iteration(feas_iters + switch_iters + iters + 1)),
        }
    }
    if matches!(status, Status::Converged | Status::MaxIters)
        && eng
            .dl
            .as_ref()
            .is_some_and(|s| s.powers.total() > eng.cfg.p_max)
    {
        status = Status::BudgetExceeded;
    }
    Ok(finish(
        eng,
        &layout,
        method,
        Problem::Pp,
        status,
        initial_level,
        trace,
        power_trace,
        (feas_iters + switch_iters + iters, feas_iters),
        oscillating,
    ))
}

pub fn solve(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    method: Method,
    problem: Problem,
    opts: &SolverOptions,
) -> Result<IterationResult> {
    match problem {
        Problem::Pr => solve_pr(cfg, ch, method, opts),
        Problem::Pp => solve_pp(cfg, ch, method, opts),
    }
}
