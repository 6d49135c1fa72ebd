use crate::numerics::{dot_h, norm_sqr, ComplexMatrix};

use super::{BeamformerSet, ChannelSet, Link, StreamPowers};

/// How a receive filter output treats the user's other streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamModel {
    /// The user's streams cooperate: everything the filter collects from the
    /// own precoder counts as signal. This is the per-stream SINR that the
    /// group filter bank's generalized eigenvalues report.
    Grouped,
    /// Every other stream, the user's own included, is interference.
    Independent,
}

/// `G diag(w) Gᴴ`
fn weighted_gram(g: &ComplexMatrix, w: &[f64]) -> ComplexMatrix {
    g.scale_columns(w)
        .matmul(&g.adjoint())
        .expect("inner dimensions agree")
}

/// Downlink signal and interference-plus-noise covariances at user `k`
/// (`N_k x N_k`).
pub fn dl_covariances(
    k: usize,
    ch: &ChannelSet,
    bf: &BeamformerSet,
    p: &StreamPowers,
    noise_power: f64,
) -> (ComplexMatrix, ComplexMatrix) {
    let hk = &ch.h[k];
    let n = hk.cols();
    let mut r_n = ComplexMatrix::identity(n).scale(noise_power);
    let mut r_s = ComplexMatrix::zeros(n, n);
    for (i, u) in bf.tx.iter().enumerate() {
        let g = hk.adjoint_mul(u).expect("H_k and U_i share M");
        let cov = weighted_gram(&g, &p.per_user[i]);
        if i == k {
            r_s = cov;
        } else {
            r_n = &r_n + &cov;
        }
    }
    (r_s.hermitian_part(), r_n.hermitian_part())
}

/// Virtual-uplink signal and interference-plus-noise covariances at the
/// base station for user `k` (`M x M`). Base-station noise is `σ² I_M`.
pub fn ul_covariances(
    k: usize,
    ch: &ChannelSet,
    bf: &BeamformerSet,
    q: &StreamPowers,
    noise_power: f64,
) -> (ComplexMatrix, ComplexMatrix) {
    let m = ch.h[k].rows();
    let mut r_n = ComplexMatrix::identity(m).scale(noise_power);
    let mut r_s = ComplexMatrix::zeros(m, m);
    for (i, (h, v)) in ch.h.iter().zip(&bf.rx).enumerate() {
        let f = h.matmul(v).expect("H_i and V_i share N_i");
        let cov = weighted_gram(&f, &q.per_user[i]);
        if i == k {
            r_s = cov;
        } else {
            r_n = &r_n + &cov;
        }
    }
    (r_s.hermitian_part(), r_n.hermitian_part())
}

/// Average downlink SINR of user `k`:
/// `Σ_l p_kl ‖V_kᴴ H_kᴴ u_kl‖² / (Σ_{j≠k} Σ_l p_jl ‖V_kᴴ H_kᴴ u_jl‖² + L_k σ²)`.
pub fn avg_sinr_dl(
    k: usize,
    ch: &ChannelSet,
    bf: &BeamformerSet,
    p: &StreamPowers,
    noise_power: f64,
) -> f64 {
    let effective = bf.rx[k]
        .adjoint_mul(&ch.h[k].adjoint())
        .expect("V_k and H_k share N_k");
    let received = |j: usize| -> f64 {
        let e = effective.matmul(&bf.tx[j]).expect("H_k and U_j share M");
        (0..e.cols())
            .map(|l| p.per_user[j][l] * norm_sqr(&e.column(l)))
            .sum()
    };
    let signal = received(k);
    let interference: f64 = (0..bf.tx.len()).filter(|&j| j != k).map(received).sum();
    signal / (interference + bf.rx[k].cols() as f64 * noise_power)
}

/// Average virtual-uplink SINR of user `k`, the mirror image of
/// [`avg_sinr_dl`] with `U_k` receiving and `V_j` transmitting.
pub fn avg_sinr_ul(
    k: usize,
    ch: &ChannelSet,
    bf: &BeamformerSet,
    q: &StreamPowers,
    noise_power: f64,
) -> f64 {
    let received = |j: usize| -> f64 {
        let e = bf.tx[k]
            .adjoint_mul(&ch.h[j].matmul(&bf.rx[j]).expect("H_j and V_j share N_j"))
            .expect("U_k and H_j share M");
        (0..e.cols())
            .map(|l| q.per_user[j][l] * norm_sqr(&e.column(l)))
            .sum()
    };
    let signal = received(k);
    let interference: f64 = (0..bf.rx.len()).filter(|&j| j != k).map(received).sum();
    signal / (interference + bf.tx[k].cols() as f64 * noise_power)
}

pub fn avg_sinr(
    link: Link,
    k: usize,
    ch: &ChannelSet,
    bf: &BeamformerSet,
    powers: &StreamPowers,
    noise_power: f64,
) -> f64 {
    match link {
        Link::Downlink => avg_sinr_dl(k, ch, bf, powers, noise_power),
        Link::Uplink => avg_sinr_ul(k, ch, bf, powers, noise_power),
    }
}

/// Trace form `tr(V_kᴴ R_s V_k) / tr(V_kᴴ R_n V_k)`; agrees with
/// [`avg_sinr_dl`] whenever `tr(V_kᴴ V_k) = L_k`.
pub fn avg_sinr_dl_trace(
    k: usize,
    ch: &ChannelSet,
    bf: &BeamformerSet,
    p: &StreamPowers,
    noise_power: f64,
) -> f64 {
    let (r_s, r_n) = dl_covariances(k, ch, bf, p, noise_power);
    let v = &bf.rx[k];
    let num = v.adjoint_mul(&(&r_s * v)).expect("square").trace().re;
    let den = v.adjoint_mul(&(&r_n * v)).expect("square").trace().re;
    num / den
}

/// Per-stream downlink SINRs of user `k`, one per column of `V_k`.
pub fn stream_sinrs_dl(
    k: usize,
    ch: &ChannelSet,
    bf: &BeamformerSet,
    p: &StreamPowers,
    noise_power: f64,
    model: StreamModel,
) -> Vec<f64> {
    let hk = &ch.h[k];
    (0..bf.rx[k].cols())
        .map(|j| {
            let v = bf.rx[k].column(j);
            let hv = hk.mul_vec(&v); // H_k v, so |vᴴ H_kᴴ u|² = |uᴴ (H_k v)|²
            let mut signal = 0.0;
            let mut interference = 0.0;
            for (i, u) in bf.tx.iter().enumerate() {
                for l in 0..u.cols() {
                    let gain = p.per_user[i][l] * dot_h(&u.column(l), &hv).norm_sqr();
                    let own = match model {
                        StreamModel::Grouped => i == k,
                        StreamModel::Independent => i == k && l == j,
                    };
                    if own {
                        signal += gain;
                    } else {
                        interference += gain;
                    }
                }
            }
            signal / (interference + noise_power * norm_sqr(&v))
        })
        .collect()
}

/// `Σ_k Σ_j log₂(1 + SINR_kj)` with unit SNR gap.
pub fn sum_rate(
    ch: &ChannelSet,
    bf: &BeamformerSet,
    p: &StreamPowers,
    noise_power: f64,
    model: StreamModel,
) -> f64 {
    (0..ch.h.len())
        .flat_map(|k| stream_sinrs_dl(k, ch, bf, p, noise_power, model))
        .map(|s| (1.0 + s).log2())
        .sum()
}
