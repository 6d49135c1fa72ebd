//! System configuration, channels, beamformers and power vectors, plus the
//! SINR and coupling quantities derived from them.

mod coupling;
mod sinr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

pub use coupling::{build_coupling, CouplingData, SideGains};
pub use sinr::{
    avg_sinr, avg_sinr_dl, avg_sinr_dl_trace, avg_sinr_ul, dl_covariances, stream_sinrs_dl,
    sum_rate, ul_covariances, StreamModel,
};

/// Downlink or virtual uplink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    Downlink,
    Uplink,
}

/// Dimensions, targets and solver tolerances of one multiuser system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// K
    pub users: usize,
    /// M
    pub tx_antennas: usize,
    /// N_k per user
    pub rx_antennas: Vec<usize>,
    /// L_k per user
    pub streams: Vec<usize>,
    /// Average-SINR targets, linear scale.
    pub targets: Vec<f64>,
    /// Noise variance per receive antenna (W).
    pub noise_power: f64,
    /// Total power budget (W).
    pub p_max: f64,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl SystemConfig {
    /// All users share antenna count, stream count and target. Noise is 1 W,
    /// epsilon 1e-3 and the iteration cap 50.
    pub fn symmetric(
        users: usize,
        tx_antennas: usize,
        rx_antennas: usize,
        streams: usize,
        target: f64,
        p_max: f64,
    ) -> Self {
        Self {
            users,
            tx_antennas,
            rx_antennas: vec![rx_antennas; users],
            streams: vec![streams; users],
            targets: vec![target; users],
            noise_power: 1.0,
            p_max,
            epsilon: 1e-3,
            max_iters: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.users;
        if k == 0 {
            return Err(Error::InvalidConfig("need at least one user".into()));
        }
        if self.tx_antennas == 0 {
            return Err(Error::InvalidConfig(
                "need at least one transmit antenna".into(),
            ));
        }
        for (name, len) in [
            ("rx_antennas", self.rx_antennas.len()),
            ("streams", self.streams.len()),
            ("targets", self.targets.len()),
        ] {
            if len != k {
                return Err(Error::InvalidConfig(format!(
                    "{name} has {len} entries, expected {k}"
                )));
            }
        }
        for u in 0..k {
            let l = self.streams[u];
            let cap = self.tx_antennas.min(self.rx_antennas[u]);
            if l == 0 || l > cap {
                return Err(Error::InvalidConfig(format!(
                    "user {u}: {l} streams, allowed 1..={cap}"
                )));
            }
            let g = self.targets[u];
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "user {u}: target must be positive"
                )));
            }
        }
        for (name, v) in [
            ("noise_power", self.noise_power),
            ("p_max", self.p_max),
            ("epsilon", self.epsilon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite"
                )));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    /// L = Σ L_k
    pub fn total_streams(&self) -> usize {
        self.streams.iter().sum()
    }

    /// Offset of each user's first stream in the global stream order.
    pub fn stream_offsets(&self) -> Vec<usize> {
        self.streams
            .iter()
            .scan(0, |acc, &l| {
                let start = *acc;
                *acc += l;
                Some(start)
            })
            .collect()
    }

    /// Every stream becomes its own single-stream user sharing the owner's
    /// antennas and target. Returns the owning `(user, stream)` per virtual
    /// user.
    pub fn explode_streams(&self) -> (SystemConfig, Vec<(usize, usize)>) {
        let owners: Vec<(usize, usize)> = (0..self.users)
            .flat_map(|k| (0..self.streams[k]).map(move |j| (k, j)))
            .collect();
        let cfg = SystemConfig {
            users: owners.len(),
            tx_antennas: self.tx_antennas,
            rx_antennas: owners.iter().map(|&(k, _)| self.rx_antennas[k]).collect(),
            streams: vec![1; owners.len()],
            targets: owners.iter().map(|&(k, _)| self.targets[k]).collect(),
            ..self.clone()
        };
        (cfg, owners)
    }
}

/// Per-user channel matrices `H_k` of shape `M x N_k`; the downlink applies
/// `H_kᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h: Vec<ComplexMatrix>,
}

impl ChannelSet {
    /// I.i.d. circularly-symmetric unit-variance complex Gaussian entries,
    /// drawn from a ChaCha8 stream seeded with `seed`.
    pub fn generate(cfg: &SystemConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let h = cfg
            .rx_antennas
            .iter()
            .map(|&n| {
                ComplexMatrix::from_fn(cfg.tx_antennas, n, |_, _| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re * half, im * half)
                })
            })
            .collect();
        Self { h }
    }

    /// Every entry equal to `value`.
    pub fn constant(cfg: &SystemConfig, value: f64) -> Self {
        let h = cfg
            .rx_antennas
            .iter()
            .map(|&n| ComplexMatrix::from_fn(cfg.tx_antennas, n, |_, _| Complex64::new(value, 0.0)))
            .collect();
        Self { h }
    }

    pub fn check_shapes(&self, cfg: &SystemConfig) -> Result<()> {
        if self.h.len() != cfg.users {
            return Err(Error::ShapeMismatch(format!(
                "{} channel matrices for {} users",
                self.h.len(),
                cfg.users
            )));
        }
        for (k, h) in self.h.iter().enumerate() {
            if h.shape() != (cfg.tx_antennas, cfg.rx_antennas[k]) {
                return Err(Error::ShapeMismatch(format!(
                    "H_{k} is {:?}, expected {:?}",
                    h.shape(),
                    (cfg.tx_antennas, cfg.rx_antennas[k])
                )));
            }
        }
        Ok(())
    }

    /// Channel of each virtual user of an exploded configuration.
    pub fn explode(&self, owners: &[(usize, usize)]) -> Self {
        Self {
            h: owners.iter().map(|&(k, _)| self.h[k].clone()).collect(),
        }
    }
}

/// Transmit filters `U_k` (`M x L_k`) and receive filters `V_k` (`N_k x L_k`).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub tx: Vec<ComplexMatrix>,
    pub rx: Vec<ComplexMatrix>,
}

impl BeamformerSet {
    /// `U_k` = columns `offset_k..offset_k + L_k` of `I_M`, wrapping around
    /// when `Σ L_k > M`; `V_k` = first `L_k` columns of `I_{N_k}`.
    pub fn identity_slices(cfg: &SystemConfig) -> Self {
        let offsets = cfg.stream_offsets();
        let tx = (0..cfg.users)
            .map(|k| ComplexMatrix::identity_slice(cfg.tx_antennas, cfg.streams[k], offsets[k]))
            .collect();
        let rx = (0..cfg.users)
            .map(|k| ComplexMatrix::identity_slice(cfg.rx_antennas[k], cfg.streams[k], 0))
            .collect();
        Self { tx, rx }
    }

    pub fn check_shapes(&self, cfg: &SystemConfig) -> Result<()> {
        if self.tx.len() != cfg.users || self.rx.len() != cfg.users {
            return Err(Error::ShapeMismatch(
                "beamformer count differs from user count".into(),
            ));
        }
        for k in 0..cfg.users {
            let l = cfg.streams[k];
            if self.tx[k].shape() != (cfg.tx_antennas, l) {
                return Err(Error::ShapeMismatch(format!(
                    "U_{k} is {:?}",
                    self.tx[k].shape()
                )));
            }
            if self.rx[k].shape() != (cfg.rx_antennas[k], l) {
                return Err(Error::ShapeMismatch(format!(
                    "V_{k} is {:?}",
                    self.rx[k].shape()
                )));
            }
        }
        Ok(())
    }

    /// Splits every user's filters into one single-column pair per stream.
    pub fn explode(&self, owners: &[(usize, usize)]) -> Self {
        Self {
            tx: owners
                .iter()
                .map(|&(k, j)| self.tx[k].columns(j, 1))
                .collect(),
            rx: owners
                .iter()
                .map(|&(k, j)| self.rx[k].columns(j, 1))
                .collect(),
        }
    }

    /// Inverse of [`BeamformerSet::explode`].
    pub fn collapse(&self, owners: &[(usize, usize)], users: usize) -> Self {
        let gather = |mats: &[ComplexMatrix], k: usize| {
            let cols: Vec<&ComplexMatrix> = owners
                .iter()
                .zip(mats)
                .filter(|((owner, _), _)| *owner == k)
                .map(|(_, m)| m)
                .collect();
            ComplexMatrix::hstack(&cols).expect("columns of one user share a row count")
        };
        Self {
            tx: (0..users).map(|k| gather(&self.tx, k)).collect(),
            rx: (0..users).map(|k| gather(&self.rx, k)).collect(),
        }
    }
}

/// Per-stream powers grouped by user.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamPowers {
    pub per_user: Vec<Vec<f64>>,
}

impl StreamPowers {
    pub fn zeros(cfg: &SystemConfig) -> Self {
        Self {
            per_user: cfg.streams.iter().map(|&l| vec![0.0; l]).collect(),
        }
    }

    /// Group totals split evenly over each user's streams.
    pub fn from_group(cfg: &SystemConfig, totals: &[f64]) -> Self {
        Self {
            per_user: cfg
                .streams
                .iter()
                .zip(totals)
                .map(|(&l, &t)| vec![t / l as f64; l])
                .collect(),
        }
    }

    /// `total` split over users in proportion to their stream counts, then
    /// evenly within each user.
    pub fn uniform(cfg: &SystemConfig, total: f64) -> Self {
        let l = cfg.total_streams() as f64;
        let totals: Vec<f64> = cfg
            .streams
            .iter()
            .map(|&lk| total * lk as f64 / l)
            .collect();
        Self::from_group(cfg, &totals)
    }

    pub fn from_flat(cfg: &SystemConfig, flat: &[f64]) -> Self {
        let mut it = flat.iter().copied();
        Self {
            per_user: cfg
                .streams
                .iter()
                .map(|&l| it.by_ref().take(l).collect())
                .collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.per_user.concat()
    }

    /// `t_k = Σ_l p_kl`
    pub fn group_totals(&self) -> Vec<f64> {
        self.per_user.iter().map(|p| p.iter().sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.per_user.iter().flatten().sum()
    }

    /// Virtual-user view for an exploded configuration.
    pub fn explode(&self, owners: &[(usize, usize)]) -> Self {
        Self {
            per_user: owners
                .iter()
                .map(|&(k, j)| vec![self.per_user[k][j]])
                .collect(),
        }
    }

    pub fn collapse(&self, owners: &[(usize, usize)], cfg: &SystemConfig) -> Self {
        let mut out = Self::zeros(cfg);
        for (&(k, j), p) in owners.iter().zip(&self.per_user) {
            out.per_user[k][j] = p[0];
        }
        out
    }
}

/// Downlink powers `p` and virtual-uplink powers `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub p: StreamPowers,
    pub q: StreamPowers,
}

/// `10^(db/10)`
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_too_many_streams() {
        let mut cfg = SystemConfig::symmetric(2, 4, 2, 2, 1.0, 10.0);
        assert!(cfg.validate().is_ok());
        cfg.streams[1] = 3;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let mut cfg = SystemConfig::symmetric(1, 1, 1, 1, 1.0, 10.0);
        cfg.noise_power = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn generate_is_deterministic_with_expected_shapes() {
        let cfg = SystemConfig::symmetric(4, 8, 2, 2, 1.0, 10.0);
        let a = ChannelSet::generate(&cfg, 42);
        let b = ChannelSet::generate(&cfg, 42);
        assert_eq!(a, b);
        assert_eq!(a.h.len(), 4);
        assert!(a.h.iter().all(|h| h.shape() == (8, 2)));
        assert_ne!(a, ChannelSet::generate(&cfg, 43));
        a.check_shapes(&cfg).unwrap();
    }

    #[test]
    fn generated_entries_have_unit_variance() {
        let cfg = SystemConfig::symmetric(1, 100, 100, 1, 1.0, 1.0);
        let mut sum = 0.0;
        let mut count = 0usize;
        for seed in 0..10 {
            let ch = ChannelSet::generate(&cfg, seed);
            sum += ch.h[0].frobenius_norm_sqr();
            count += 100 * 100;
        }
        let mean = sum / count as f64;
        assert!((0.99..=1.01).contains(&mean), "mean |h|^2 = {mean}");
    }

    #[test]
    fn explode_and_collapse_round_trip() {
        let mut cfg = SystemConfig::symmetric(2, 4, 2, 2, 2.0, 10.0);
        cfg.streams[1] = 1;
        let (ex, owners) = cfg.explode_streams();
        assert_eq!(ex.users, 3);
        assert_eq!(owners, vec![(0, 0), (0, 1), (1, 0)]);
        assert_eq!(ex.rx_antennas, vec![2, 2, 2]);
        let bf = BeamformerSet::identity_slices(&cfg);
        let back = bf.explode(&owners).collapse(&owners, cfg.users);
        assert_eq!(back, bf);
        let p = StreamPowers::from_flat(&cfg, &[1.0, 2.0, 3.0]);
        assert_eq!(p.explode(&owners).collapse(&owners, &cfg), p);
    }

    #[test]
    fn uniform_powers_follow_stream_counts() {
        let mut cfg = SystemConfig::symmetric(2, 4, 2, 2, 1.0, 9.0);
        cfg.streams[1] = 1;
        let p = StreamPowers::uniform(&cfg, 9.0);
        assert_eq!(p.per_user, vec![vec![3.0, 3.0], vec![3.0]]);
        assert_eq!(p.group_totals(), vec![6.0, 3.0]);
    }
}
