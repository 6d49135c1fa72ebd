//! Receive/transmit filter design: the group maximum-SINR filter bank, the
//! independent-stream maximum-SINR filter and block-diagonalization
//! precoding.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    dl_covariances, ul_covariances, BeamformerSet, ChannelSet, StreamPowers, SystemConfig,
};
use crate::numerics::{hermitian_eig, hermitian_generalized_eig, null_space, ComplexMatrix};

/// Relative singular-value threshold for null-space rank decisions.
const BD_RANK_TOL: f64 = 1e-10;

/// A normalized filter bank and the per-stream SINRs (generalized
/// eigenvalues) it achieves.
#[derive(Debug, Clone)]
pub struct FilterBank {
    pub filter: ComplexMatrix,
    pub sinrs: Vec<f64>,
}

/// Top-`count` generalized eigenvectors of `(r_s, r_n)`, made
/// `r_n`-orthonormal and then rescaled together so that `tr(WᴴW) = count`.
/// The rescale keeps `Wᴴ R_n W` a multiple of the identity.
fn filter_bank(r_s: &ComplexMatrix, r_n: &ComplexMatrix, count: usize) -> Result<FilterBank> {
    let eig = hermitian_generalized_eig(r_s, r_n, count)?;
    let energy = eig.vectors.frobenius_norm_sqr();
    let filter = eig.vectors.scale((count as f64 / energy).sqrt());
    Ok(FilterBank {
        filter,
        sinrs: eig.values,
    })
}

/// Downlink receive filter bank `V_k` maximising the sum of user `k`'s
/// stream SINRs for fixed transmit filters and powers.
pub fn gsinr_receive_dl(
    k: usize,
    ch: &ChannelSet,
    bf: &BeamformerSet,
    p: &StreamPowers,
    noise_power: f64,
) -> Result<FilterBank> {
    let (r_s, r_n) = dl_covariances(k, ch, bf, p, noise_power);
    filter_bank(&r_s, &r_n, bf.tx[k].cols())
}

/// Virtual-uplink receive filter bank, used as the new transmit filter
/// `U_k`.
pub fn gsinr_receive_ul(
    k: usize,
    ch: &ChannelSet,
    bf: &BeamformerSet,
    q: &StreamPowers,
    noise_power: f64,
) -> Result<FilterBank> {
    let (r_s, r_n) = ul_covariances(k, ch, bf, q, noise_power);
    filter_bank(&r_s, &r_n, bf.rx[k].cols())
}

/// Deviation of a filter bank from the two normalization conditions:
/// `|tr(WᴴW) - L|` and the largest off-diagonal magnitude of `Wᴴ R_n W`
/// relative to its mean diagonal.
pub fn normalization_defect(w: &ComplexMatrix, r_n: &ComplexMatrix) -> (f64, f64) {
    let l = w.cols();
    let trace_err = (w.frobenius_norm_sqr() - l as f64).abs();
    let g = w.adjoint_mul(&(r_n * w)).expect("compatible shapes");
    let mean_diag = g.diag_re().iter().sum::<f64>() / l as f64;
    let mut off = 0.0f64;
    for r in 0..l {
        for c in 0..l {
            if r != c {
                off = off.max(g[(r, c)].norm());
            }
        }
    }
    (trace_err, off / mean_diag)
}

/// Receive vector for stream `j` of user `k` when the user's other streams
/// count as interference: the top generalized eigenvector of
/// `(p_kj H_kᴴ u_kj u_kjᴴ H_k, R_n,kj)`, scaled to unit norm. Returns the
/// vector and its SINR (the top eigenvalue).
pub fn khachan_stream_beamformer(
    k: usize,
    j: usize,
    ch: &ChannelSet,
    bf: &BeamformerSet,
    p: &StreamPowers,
    noise_power: f64,
) -> Result<(Vec<Complex64>, f64)> {
    let hk = &ch.h[k];
    let n = hk.cols();
    // R_n,kj = R_n,k + Σ_{l≠j} p_kl H_kᴴ u_kl u_klᴴ H_k
    let (_, mut r_n) = dl_covariances(k, ch, bf, p, noise_power);
    let g = hk.adjoint_mul(&bf.tx[k])?;
    let mut r_s = ComplexMatrix::zeros(n, n);
    for l in 0..g.cols() {
        let col = g.columns(l, 1);
        let outer = (&col * &col.adjoint()).scale(p.per_user[k][l]);
        if l == j {
            r_s = outer;
        } else {
            r_n = &r_n + &outer;
        }
    }
    let eig = hermitian_generalized_eig(&r_s.hermitian_part(), &r_n.hermitian_part(), 1)?;
    let mut v = eig.vector(0);
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
    Ok((v, eig.values[0]))
}

/// Block-diagonalization precoders: `U_k` spans `L_k` directions of the null
/// space of the other users' stacked channels `[H_iᴴ]_{i≠k}`, picked as the
/// strongest right singular directions of user `k`'s channel restricted to
/// that null space.
pub fn bd_transmit(ch: &ChannelSet, cfg: &SystemConfig) -> Result<Vec<ComplexMatrix>> {
    let m = cfg.tx_antennas;
    let total_rx: usize = cfg.rx_antennas.iter().sum();
    for k in 0..cfg.users {
        let others = total_rx - cfg.rx_antennas[k];
        if m <= others {
            return Err(Error::DimensionInfeasible {
                user: k,
                required: others,
                available: m,
            });
        }
    }
    (0..cfg.users)
        .map(|k| {
            let blocks: Vec<&ComplexMatrix> = (0..cfg.users)
                .filter(|&i| i != k)
                .map(|i| &ch.h[i])
                .collect();
            let basis = if blocks.is_empty() {
                ComplexMatrix::identity(m)
            } else {
                let stacked = ComplexMatrix::hstack(&blocks)?.adjoint();
                null_space(&stacked, BD_RANK_TOL)?
            };
            let l = cfg.streams[k];
            if basis.cols() < l {
                return Err(Error::InsufficientNullSpace {
                    user: k,
                    available: basis.cols(),
                    needed: l,
                });
            }
            let restricted = ch.h[k].adjoint_mul(&basis)?; // H_kᴴ Z
            let gram = restricted.adjoint_mul(&restricted)?;
            let directions = hermitian_eig(&gram)?.vectors.columns(0, l);
            Ok(basis.matmul(&directions)?)
        })
        .collect()
}
