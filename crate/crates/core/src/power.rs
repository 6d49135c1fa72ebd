//! SINR-balancing power allocation for fixed beamformers.
//!
//! Every solver works on one link direction at a time. The downlink uses
//! `Ψ` and the `A` gains, the virtual uplink `Ψᵀ` and the `B` gains; `D`
//! and the noise terms are shared.

use crate::error::{Error, Result};
use crate::model::{CouplingData, Link, StreamPowers, SystemConfig};
use crate::numerics::{
    dominant_nonneg_eigpair, lp_min_sum, solve_linear, NumericsError, RealMatrix,
};

pub use crate::driver::feasibility_test;

/// Entries of the closed-form power-minimization solution in
/// `(-NEG_CLAMP, 0)` are treated as zero.
const NEG_CLAMP: f64 = 1e-12;

/// Powers for one link direction with the level they achieve.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedSolution {
    pub link: Link,
    pub powers: StreamPowers,
    /// Common SINR-to-target ratio for exactly balanced solutions; the
    /// smallest per-user ratio otherwise.
    pub balanced_level: f64,
    pub per_user_ratio: Vec<f64>,
}

impl BalancedSolution {
    fn new(
        link: Link,
        powers: StreamPowers,
        balanced_level: f64,
        coupling: &CouplingData,
        cfg: &SystemConfig,
    ) -> Self {
        let per_user_ratio = coupling.side_gains(link).ratios(&powers.per_user, cfg);
        Self {
            link,
            powers,
            balanced_level,
            per_user_ratio,
        }
    }

    /// `max_k |ratio_k - C| / C`
    pub fn ratio_spread(&self) -> f64 {
        self.per_user_ratio
            .iter()
            .map(|r| (r - self.balanced_level).abs())
            .fold(0.0, f64::max)
            / self.balanced_level
    }
}

/// How many level-gain updates [`stream_pr_allocate`] performs per call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StreamPrMode {
    /// One update per call.
    #[default]
    SingleUpdate,
    /// Repeat until `‖Δt‖∞ < 1e-10 P_max` or 500 updates.
    FixedPoint,
}

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_CAP: usize = 500;

/// `(K+1) x (K+1)` extended coupling matrix
/// `[[DΨ, Dσ], [1ᵀDΨ/P, 1ᵀDσ/P]]`, with `Ψᵀ` on the uplink.
pub fn extended_coupling(coupling: &CouplingData, cfg: &SystemConfig, link: Link) -> RealMatrix {
    let k = coupling.users();
    let psi = coupling.psi_for(link);
    let d = &coupling.d;
    let sigma = &coupling.sigma_group;
    let p = cfg.p_max;
    RealMatrix::from_fn(k + 1, k + 1, |r, c| match (r < k, c < k) {
        (true, true) => d[r] * psi[(r, c)],
        (true, false) => d[r] * sigma[r],
        (false, true) => (0..k).map(|i| d[i] * psi[(i, c)]).sum::<f64>() / p,
        (false, false) => (0..k).map(|i| d[i] * sigma[i]).sum::<f64>() / p,
    })
}

/// Balanced-level maximization with equal power over each user's streams.
pub fn group_pr_allocate(
    coupling: &CouplingData,
    cfg: &SystemConfig,
    link: Link,
) -> Result<BalancedSolution> {
    let k = coupling.users();
    let pair = dominant_nonneg_eigpair(&extended_coupling(coupling, cfg, link))?;
    let mut t = pair.vector[..k].to_vec();
    let sum: f64 = t.iter().sum();
    for x in t.iter_mut() {
        *x *= cfg.p_max / sum;
    }
    let powers = StreamPowers::from_group(cfg, &t);
    Ok(BalancedSolution::new(
        link,
        powers,
        1.0 / pair.value,
        coupling,
        cfg,
    ))
}

/// Minimum total power meeting every target with equal power over each
/// user's streams: `t = (I - DΨ)⁻¹ Dσ`.
pub fn group_pp_allocate(
    coupling: &CouplingData,
    cfg: &SystemConfig,
    link: Link,
) -> Result<BalancedSolution> {
    let k = coupling.users();
    let psi = coupling.psi_for(link);
    let d = &coupling.d;
    let a = RealMatrix::from_fn(k, k, |r, c| f64::from(r == c) - d[r] * psi[(r, c)]);
    let rhs: Vec<f64> = (0..k).map(|i| d[i] * coupling.sigma_group[i]).collect();
    let mut t = match solve_linear(&a, &rhs) {
        Ok(t) => t,
        Err(NumericsError::Singular { .. }) => return Err(Error::Infeasible),
        Err(e) => return Err(e.into()),
    };
    for x in t.iter_mut() {
        if *x < -NEG_CLAMP {
            return Err(Error::Infeasible);
        }
        *x = x.max(0.0);
    }
    let powers = StreamPowers::from_group(cfg, &t);
    Ok(BalancedSolution::new(link, powers, 1.0, coupling, cfg))
}

/// Minimum total power meeting every target with individual stream powers,
/// solved as a linear program over the average-SINR equality rows.
pub fn stream_pp_allocate(
    coupling: &CouplingData,
    cfg: &SystemConfig,
    link: Link,
) -> Result<BalancedSolution> {
    let gains = coupling.side_gains(link);
    let k = coupling.users();
    let offsets = cfg.stream_offsets();
    let total = cfg.total_streams();
    let mut a = RealMatrix::zeros(k, total);
    for row in 0..k {
        for j in 0..k {
            for l in 0..cfg.streams[j] {
                a[(row, offsets[j] + l)] = if j == row {
                    gains.own[row][l] / cfg.targets[row]
                } else {
                    -gains.cross[j][row][l]
                };
            }
        }
    }
    let flat = match lp_min_sum(&a, &coupling.sigma_stream) {
        Ok(x) => x,
        Err(NumericsError::Infeasible { .. }) => return Err(Error::Infeasible),
        Err(e) => return Err(e.into()),
    };
    let powers = StreamPowers::from_flat(cfg, &flat);
    Ok(BalancedSolution::new(link, powers, 1.0, coupling, cfg))
}

/// Level-gain update for per-stream balancing under the sum-power budget.
///
/// Each user's budget `t_k` is split over its streams in proportion to the
/// streams' own gains; the aggregated gains then give a level gain `G_k`
/// per user and the budget is redistributed in proportion to `1/G_k`.
/// Returns the new budgets and the resulting allocation.
pub fn stream_pr_allocate(
    coupling: &CouplingData,
    cfg: &SystemConfig,
    link: Link,
    t_prev: &[f64],
    mode: StreamPrMode,
) -> Result<(Vec<f64>, BalancedSolution)> {
    let gains = coupling.side_gains(link);
    let k = coupling.users();
    let own_sum: Vec<f64> = gains.own.iter().map(|g| g.iter().sum()).collect();
    if let Some(user) = own_sum.iter().position(|&s| s <= 0.0) {
        return Err(Error::ZeroGain { user });
    }
    // g[j][u]: aggregated gain of user j's proportional split at receiver u
    let g: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            (0..k)
                .map(|u| {
                    let col = if u == j {
                        &gains.own[j]
                    } else {
                        &gains.cross[j][u]
                    };
                    gains.own[j]
                        .iter()
                        .zip(col)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        / own_sum[j]
                })
                .collect()
        })
        .collect();

    let update = |t: &[f64]| -> Result<Vec<f64>> {
        let mut inv = Vec::with_capacity(k);
        for u in 0..k {
            let interference: f64 = (0..k).filter(|&j| j != u).map(|j| t[j] * g[j][u]).sum();
            let level_gain = (g[u][u] / cfg.targets[u]) / (interference + coupling.sigma_stream[u]);
            if !(level_gain > 0.0) {
                return Err(Error::ZeroGain { user: u });
            }
            inv.push(1.0 / level_gain);
        }
        let sum: f64 = inv.iter().sum();
        Ok(inv.iter().map(|x| cfg.p_max * x / sum).collect())
    };

    let mut t = update(t_prev)?;
    if mode == StreamPrMode::FixedPoint {
        for _ in 1..FIXED_POINT_CAP {
            let next = update(&t)?;
            let delta = next
                .iter()
                .zip(&t)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            t = next;
            if delta < FIXED_POINT_TOL * cfg.p_max {
                break;
            }
        }
    }

    let powers = StreamPowers {
        per_user: (0..k)
            .map(|u| gains.own[u].iter().map(|a| t[u] * a / own_sum[u]).collect())
            .collect(),
    };
    let mut sol = BalancedSolution::new(link, powers, 0.0, coupling, cfg);
    sol.balanced_level = sol
        .per_user_ratio
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok((t, sol))
}

/// Starting budgets for [`stream_pr_allocate`]: `t_k = P_max L_k / L`.
pub fn initial_budgets(cfg: &SystemConfig) -> Vec<f64> {
    StreamPowers::uniform(cfg, cfg.p_max).group_totals()
}
