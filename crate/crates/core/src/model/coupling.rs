use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, RealMatrix};

use super::{BeamformerSet, ChannelSet, Link, SystemConfig};

/// Cross-user coupling for fixed beamformers.
///
/// Indices follow the convention "interferer first": `a[j][k]` is
/// `A_jk = U_jᴴ H_k V_k V_kᴴ H_kᴴ U_j` (`L_j x L_j`), whose `l`-th diagonal
/// entry is the power user `k`'s filter bank collects from stream `l` of
/// user `j`; `b[j][k]` is `B_jk = V_jᴴ H_jᴴ U_k U_kᴴ H_j V_j`, its virtual
/// uplink counterpart.
#[derive(Debug, Clone)]
pub struct CouplingData {
    pub a: Vec<Vec<ComplexMatrix>>,
    pub b: Vec<Vec<ComplexMatrix>>,
    /// `D_kk = L_k² γ_k / ‖V_kᴴ H_kᴴ U_k‖²_F`
    pub d: Vec<f64>,
    /// `Ψ_kj = ‖V_kᴴ H_kᴴ U_j‖²_F / (L_k L_j)` off the diagonal, zero on it.
    pub psi: RealMatrix,
    /// Noise term of the group form, `σ²` per user.
    pub sigma_group: Vec<f64>,
    /// Noise term of the per-stream form, `L_k σ²` per user.
    pub sigma_stream: Vec<f64>,
}

/// Diagonal gains of one link direction.
///
/// `own[k][l]` is the gain of user `k`'s stream `l` at its own receiver;
/// `cross[j][k][l]` the leakage of user `j`'s stream `l` into user `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SideGains {
    pub own: Vec<Vec<f64>>,
    pub cross: Vec<Vec<Vec<f64>>>,
}

impl SideGains {
    /// Per-user averaged SINR over target for the given per-stream powers.
    pub fn ratios(&self, powers: &[Vec<f64>], cfg: &SystemConfig) -> Vec<f64> {
        (0..cfg.users)
            .map(|k| {
                let signal: f64 = powers[k].iter().zip(&self.own[k]).map(|(p, g)| p * g).sum();
                let interference: f64 = (0..cfg.users)
                    .filter(|&j| j != k)
                    .map(|j| {
                        powers[j]
                            .iter()
                            .zip(&self.cross[j][k])
                            .map(|(p, g)| p * g)
                            .sum::<f64>()
                    })
                    .sum();
                let noise = cfg.streams[k] as f64 * cfg.noise_power;
                signal / (interference + noise) / cfg.targets[k]
            })
            .collect()
    }
}

impl CouplingData {
    pub fn users(&self) -> usize {
        self.d.len()
    }

    /// `Ψ` for the downlink, `Ψᵀ` for the virtual uplink.
    pub fn psi_for(&self, link: Link) -> RealMatrix {
        match link {
            Link::Downlink => self.psi.clone(),
            Link::Uplink => self.psi.transpose(),
        }
    }

    /// Diagonals of `A` (downlink) or `B` (uplink).
    pub fn side_gains(&self, link: Link) -> SideGains {
        let mats = match link {
            Link::Downlink => &self.a,
            Link::Uplink => &self.b,
        };
        let k = self.users();
        SideGains {
            own: (0..k).map(|u| mats[u][u].diag_re()).collect(),
            cross: (0..k)
                .map(|j| (0..k).map(|u| mats[j][u].diag_re()).collect())
                .collect(),
        }
    }
}

pub fn build_coupling(
    ch: &ChannelSet,
    bf: &BeamformerSet,
    cfg: &SystemConfig,
) -> Result<CouplingData> {
    let k = cfg.users;
    // effective[j][u] = V_uᴴ H_uᴴ U_j  (L_u x L_j)
    let effective: Vec<Vec<ComplexMatrix>> = (0..k)
        .map(|j| {
            (0..k)
                .map(|u| {
                    let vh_hh = bf.rx[u].adjoint_mul(&ch.h[u].adjoint())?;
                    Ok(vh_hh.matmul(&bf.tx[j])?)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let a = (0..k)
        .map(|j| {
            (0..k)
                .map(|u| effective[j][u].adjoint_mul(&effective[j][u]))
                .collect()
        })
        .collect::<Result<Vec<Vec<_>>, _>>()?;
    // B_ju = V_jᴴ H_jᴴ U_u U_uᴴ H_j V_j = E[u][j] E[u][j]ᴴ
    let b = (0..k)
        .map(|j| {
            (0..k)
                .map(|u| effective[u][j].matmul(&effective[u][j].adjoint()))
                .collect()
        })
        .collect::<Result<Vec<Vec<_>>, _>>()?;

    let mut d = Vec::with_capacity(k);
    for u in 0..k {
        let gain = effective[u][u].frobenius_norm_sqr();
        if gain.sqrt() <= 1e-14 {
            return Err(Error::ZeroSignalGain { user: u });
        }
        let l = cfg.streams[u] as f64;
        d.push(l * l * cfg.targets[u] / gain);
    }
    let psi = RealMatrix::from_fn(k, k, |victim, src| {
        if victim == src {
            0.0
        } else {
            effective[src][victim].frobenius_norm_sqr()
                / (cfg.streams[victim] * cfg.streams[src]) as f64
        }
    });
    Ok(CouplingData {
        a,
        b,
        d,
        psi,
        sigma_group: vec![cfg.noise_power; k],
        sigma_stream: cfg
            .streams
            .iter()
            .map(|&l| l as f64 * cfg.noise_power)
            .collect(),
    })
}
