//! Acceptance suite: twelve criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line is printed; exits nonzero
//! when any criterion fails.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use mubeam::beamform::{bd_transmit, gsinr_receive_dl};
use mubeam::driver::{solve, Method, Problem, SolverOptions};
use mubeam::error::Error;
use mubeam::harness::{parse_spec, run_experiment, run_feasibility, ExperimentOutput, TrialRecord};
use mubeam::model::{
    build_coupling, db_to_linear, dl_covariances, BeamformerSet, ChannelSet, Link, StreamPowers,
    SystemConfig,
};
use mubeam::numerics::{hermitian_generalized_eig, ComplexMatrix};
use mubeam::power::{group_pp_allocate, group_pr_allocate, stream_pp_allocate};

type CMat = DMatrix<Complex64>;

fn to_na(m: &ComplexMatrix) -> CMat {
    CMat::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn gauss(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gauss(rng))
}

/// Random filter with `‖W‖²_F = cols`.
fn random_filter(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let w = random_matrix(rng, rows, cols);
    let s = (cols as f64 / w.frobenius_norm_sqr()).sqrt();
    w.scale(s)
}

/// Average downlink SINR of user `k`, straight from the definition.
fn oracle_avg_sinr(
    k: usize,
    ch: &ChannelSet,
    bf: &BeamformerSet,
    p: &StreamPowers,
    noise: f64,
) -> f64 {
    let vh_hh = to_na(&bf.rx[k]).adjoint() * to_na(&ch.h[k]).adjoint();
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (j, u) in bf.tx.iter().enumerate() {
        let e = &vh_hh * to_na(u);
        let rx: f64 = (0..e.ncols())
            .map(|l| p.per_user[j][l] * e.column(l).norm_squared())
            .sum();
        if j == k {
            signal = rx;
        } else {
            interference += rx;
        }
    }
    signal / (interference + bf.rx[k].cols() as f64 * noise)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_instance(rng: &mut ChaCha8Rng, seed: u64) -> (SystemConfig, ChannelSet, BeamformerSet) {
    let k = rng.random_range(2..=4);
    let m = if rng.random_bool(0.5) { 4 } else { 8 };
    let mut cfg =
        SystemConfig::symmetric(k, m, 2, 2, 1.0, db_to_linear(rng.random_range(0.0..20.0)));
    for u in 0..k {
        cfg.streams[u] = rng.random_range(1..=2);
        cfg.targets[u] = db_to_linear(rng.random_range(-6.0..3.0));
    }
    let ch = ChannelSet::generate(&cfg, seed);
    let bf = BeamformerSet {
        tx: cfg
            .streams
            .iter()
            .map(|&l| random_filter(rng, m, l))
            .collect(),
        rx: cfg
            .streams
            .iter()
            .map(|&l| random_filter(rng, 2, l))
            .collect(),
    };
    (cfg, ch, bf)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut pp_checked = 0;
    let mut budget_err: f64 = 0.0;
    for seed in 0..100 {
        let (cfg, ch, bf) = random_instance(&mut rng, seed);
        let coupling = build_coupling(&ch, &bf, &cfg).expect("nonzero gains");
        let pr = group_pr_allocate(&coupling, &cfg, Link::Downlink).expect("Pr solvable");
        budget_err = budget_err.max((pr.powers.total() - cfg.p_max).abs() / cfg.p_max);
        let spread = |powers: &StreamPowers, c: f64| {
            (0..cfg.users)
                .map(|k| {
                    (oracle_avg_sinr(k, &ch, &bf, powers, cfg.noise_power) / cfg.targets[k] - c)
                        .abs()
                        / c
                })
                .fold(0.0, f64::max)
        };
        worst = worst.max(spread(&pr.powers, pr.balanced_level));
        match group_pp_allocate(&coupling, &cfg, Link::Downlink) {
            Ok(pp) => {
                pp_checked += 1;
                worst = worst.max(spread(&pp.powers, 1.0));
            }
            Err(Error::Infeasible) => {}
            Err(e) => return outcome(false, format!("group Pp error {e}")),
        }
    }
    outcome(
        worst <= 1e-6 && budget_err <= 1e-9 && pp_checked > 0,
        format!("max relative spread {worst:.2e}, Pr budget error {budget_err:.1e}, {pp_checked} feasible Pp instances"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (cfg, ch, _) = random_instance(&mut rng, 1000 + seed);
        let bf = BeamformerSet::identity_slices(&cfg);
        let coupling = build_coupling(&ch, &bf, &cfg).expect("nonzero gains");
        let dl = group_pr_allocate(&coupling, &cfg, Link::Downlink).expect("downlink");
        let ul = group_pr_allocate(&coupling, &cfg, Link::Uplink).expect("uplink");
        worst = worst.max((dl.balanced_level - ul.balanced_level).abs() / dl.balanced_level);
    }
    outcome(
        worst <= 1e-8,
        format!("max |C_DL - C_UL| / C_DL = {worst:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst_res: f64 = 0.0;
    let mut worst_orth: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let count = rng.random_range(1..=n);
        let x = random_matrix(&mut rng, n, n);
        let y = random_matrix(&mut rng, n, n);
        let a = to_na(&x) + to_na(&x).adjoint();
        let b = to_na(&y) * to_na(&y).adjoint() + CMat::identity(n, n).scale(0.1);
        let a_lib = ComplexMatrix::from_fn(n, n, |i, j| a[(i, j)]);
        let b_lib = ComplexMatrix::from_fn(n, n, |i, j| b[(i, j)]);
        let eig = match hermitian_generalized_eig(&a_lib, &b_lib, count) {
            Ok(e) => e,
            Err(e) => return outcome(false, format!("solver error {e}")),
        };
        let v = to_na(&eig.vectors);
        let (na, nb) = (a.norm(), b.norm());
        for (i, &lambda) in eig.values.iter().enumerate() {
            let vi = v.column(i);
            let r = &a * vi - (&b * vi).scale(lambda);
            let bound = (na + lambda.abs() * nb) * vi.norm();
            worst_res = worst_res.max(r.norm() / bound);
        }
        let gram = v.adjoint() * &b * &v - CMat::identity(count, count);
        worst_orth = worst_orth.max(gram.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    outcome(
        worst_res <= 1e-10 && worst_orth <= 1e-10,
        format!("scaled residual {worst_res:.2e}, B-orthonormality {worst_orth:.2e}"),
    )
}

/// Minimum of `Σx` over `{x ≥ 0 : A x ≥ b}` by enumerating the basic
/// solutions of `[A  -I] (x, s) = b`.
fn vertex_min(a: &[Vec<f64>], b: &[f64]) -> Option<f64> {
    let rows = a.len();
    assert_eq!(rows, 2);
    let n = a[0].len();
    let column = |c: usize| -> [f64; 2] {
        if c < n {
            [a[0][c], a[1][c]]
        } else {
            let mut e = [0.0; 2];
            e[c - n] = -1.0;
            e
        }
    };
    let mut best: Option<f64> = None;
    for i in 0..n + rows {
        for j in i + 1..n + rows {
            let (ci, cj) = (column(i), column(j));
            let det = ci[0] * cj[1] - cj[0] * ci[1];
            if det.abs() < 1e-14 {
                continue;
            }
            let xi = (b[0] * cj[1] - cj[0] * b[1]) / det;
            let xj = (ci[0] * b[1] - b[0] * ci[1]) / det;
            if xi < -1e-12 || xj < -1e-12 {
                continue;
            }
            let obj = if i < n { xi } else { 0.0 } + if j < n { xj } else { 0.0 };
            best = Some(best.map_or(obj, |v: f64| v.min(obj)));
        }
    }
    best
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst_gap: f64 = 0.0;
    let mut compared = 0;
    let mut mismatch = None;
    let mut dominance_checked = 0;
    let mut dominance_fail = 0;
    for seed in 0..100 {
        let mut cfg =
            SystemConfig::symmetric(2, 8, 4, 4, db_to_linear(rng.random_range(-6.0..6.0)), 1e3);
        cfg.targets[1] = db_to_linear(rng.random_range(-6.0..6.0));
        let ch = ChannelSet::generate(&cfg, 4000 + seed);
        let bf = BeamformerSet {
            tx: (0..2).map(|_| random_filter(&mut rng, 8, 4)).collect(),
            rx: (0..2).map(|_| random_filter(&mut rng, 4, 4)).collect(),
        };
        // SINR_k ≥ γ_k written as signal - γ_k interference ≥ γ_k L_k σ²
        let vh_hh: Vec<CMat> = (0..2)
            .map(|k| to_na(&bf.rx[k]).adjoint() * to_na(&ch.h[k]).adjoint())
            .collect();
        let gain =
            |k: usize, j: usize, l: usize| (&vh_hh[k] * to_na(&bf.tx[j])).column(l).norm_squared();
        let rows: Vec<Vec<f64>> = (0..2)
            .map(|k| {
                (0..2)
                    .flat_map(|j| (0..4).map(move |l| (j, l)))
                    .map(|(j, l)| {
                        if j == k {
                            gain(k, j, l)
                        } else {
                            -cfg.targets[k] * gain(k, j, l)
                        }
                    })
                    .collect()
            })
            .collect();
        let rhs: Vec<f64> = (0..2)
            .map(|k| cfg.targets[k] * 4.0 * cfg.noise_power)
            .collect();
        let oracle = vertex_min(&rows, &rhs);
        let coupling = build_coupling(&ch, &bf, &cfg).expect("nonzero gains");
        let lp = stream_pp_allocate(&coupling, &cfg, Link::Downlink);
        match (&lp, oracle) {
            (Ok(sol), Some(best)) => {
                compared += 1;
                worst_gap = worst_gap.max((sol.powers.total() - best).abs() / best);
            }
            (Err(Error::Infeasible), None) => {}
            _ => mismatch = Some(seed),
        }
        let ident = BeamformerSet::identity_slices(&cfg);
        let c_ident = build_coupling(&ch, &ident, &cfg).expect("nonzero gains");
        for c in [&coupling, &c_ident] {
            if let Ok(group) = group_pp_allocate(c, &cfg, Link::Downlink) {
                dominance_checked += 1;
                match stream_pp_allocate(c, &cfg, Link::Downlink) {
                    Ok(s) if s.powers.total() <= group.powers.total() * (1.0 + 1e-9) => {}
                    _ => dominance_fail += 1,
                }
            }
        }
    }
    let pass = worst_gap <= 1e-8
        && mismatch.is_none()
        && compared > 0
        && dominance_fail == 0
        && dominance_checked > 0;
    outcome(
        pass,
        format!(
            "{compared} LP optima vs vertex oracle, max relative gap {worst_gap:.2e}, feasibility mismatch {mismatch:?}; \
             per-stream <= group on {}/{dominance_checked} group-feasible instances",
            dominance_checked - dominance_fail
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut worst_trace: f64 = 0.0;
    let mut worst_off: f64 = 0.0;
    let opts = SolverOptions::default();
    let mut runs = 0;
    for seed in 0..10 {
        let pr_cfg = SystemConfig::symmetric(4, 8, 2, 2, 1.0, db_to_linear(14.0));
        let pp_cfg = SystemConfig::symmetric(2, 8, 4, 4, db_to_linear(4.0), db_to_linear(43.0));
        for (cfg, problem) in [(&pr_cfg, Problem::Pr), (&pp_cfg, Problem::Pp)] {
            let ch = ChannelSet::generate(cfg, 500 + seed);
            for method in [Method::GroupGsinr, Method::PerStreamGsinr, Method::BdGroup] {
                let r = match solve(cfg, &ch, method, problem, &opts) {
                    Ok(r) => r,
                    Err(e) => return outcome(false, format!("{method} {problem} error {e}")),
                };
                runs += 1;
                worst_trace = worst_trace.max(r.normalization.trace_error);
                worst_off = worst_off.max(r.normalization.offdiag_ratio);
            }
        }
    }
    // independent check of single filter banks
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for seed in 0..50 {
        let (cfg, ch, bf) = random_instance(&mut rng, 5000 + seed);
        let p = StreamPowers::from_flat(
            &cfg,
            &(0..cfg.total_streams())
                .map(|_| rng.random_range(0.1..10.0))
                .collect::<Vec<_>>(),
        );
        for k in 0..cfg.users {
            let fb = gsinr_receive_dl(k, &ch, &bf, &p, cfg.noise_power).expect("filter bank");
            let v = to_na(&fb.filter);
            let (_, r_n) = dl_covariances(k, &ch, &bf, &p, cfg.noise_power);
            let w = v.adjoint() * to_na(&r_n) * &v;
            let l = v.ncols();
            let mean_diag = (0..l).map(|i| w[(i, i)].re).sum::<f64>() / l as f64;
            let off = (0..l)
                .flat_map(|i| (0..l).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| w[(i, j)].norm())
                .fold(0.0, f64::max);
            worst_trace = worst_trace.max(((v.adjoint() * &v).trace().re - l as f64).abs());
            worst_off = worst_off.max(off / mean_diag);
        }
    }
    outcome(
        worst_trace <= 1e-9 && worst_off <= 1e-8,
        format!("{runs} solves plus 50 direct instances: trace error {worst_trace:.2e}, off-diagonal ratio {worst_off:.2e}"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    let mut ok = 0;
    let mut raised = 0;
    for seed in 0..200 {
        let k = rng.random_range(1..=4);
        let m = rng.random_range(2..=8);
        let mut cfg = SystemConfig::symmetric(k, m, 1, 1, 1.0, 10.0);
        for u in 0..k {
            cfg.rx_antennas[u] = rng.random_range(1..=3);
        }
        let total: usize = cfg.rx_antennas.iter().sum();
        let short = (0..k).any(|u| m <= total - cfg.rx_antennas[u]);
        for u in 0..k {
            let room = if short {
                1
            } else {
                m - (total - cfg.rx_antennas[u])
            };
            cfg.streams[u] = rng.random_range(1..=cfg.rx_antennas[u].min(room).min(m));
        }
        let ch = ChannelSet::generate(&cfg, 6000 + seed);
        match bd_transmit(&ch, &cfg) {
            Ok(tx) => {
                if short {
                    return outcome(
                        false,
                        format!("seed {seed}: succeeded although M <= sum of other N"),
                    );
                }
                ok += 1;
                for (u, t) in tx.iter().enumerate() {
                    for (i, h) in ch.h.iter().enumerate() {
                        if i != u {
                            let leak = to_na(h).adjoint() * to_na(t);
                            worst = worst.max(leak.iter().map(|z| z.norm()).fold(0.0, f64::max));
                        }
                    }
                }
            }
            Err(Error::DimensionInfeasible { .. }) if short => raised += 1,
            Err(e) => return outcome(false, format!("seed {seed}: unexpected {e}")),
        }
    }
    outcome(
        worst <= 1e-10 && ok > 0 && raised > 0,
        format!("{ok} precoder sets with max leakage {worst:.2e}, {raised} DimensionInfeasible exactly when M <= sum of other N"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    let mut eig_err: f64 = 0.0;
    for seed in 0..100 {
        let (cfg, ch, bf) = random_instance(&mut rng, 7000 + seed);
        let p = StreamPowers::from_flat(
            &cfg,
            &(0..cfg.total_streams())
                .map(|_| rng.random_range(0.1..10.0))
                .collect::<Vec<_>>(),
        );
        for k in 0..cfg.users {
            let fb = gsinr_receive_dl(k, &ch, &bf, &p, cfg.noise_power).expect("filter bank");
            let group_sum: f64 = fb.sinrs.iter().sum();
            // top eigenvalues of R_n^{-1/2} R_s R_n^{-1/2}
            let (r_s, r_n) = dl_covariances(k, &ch, &bf, &p, cfg.noise_power);
            let chol = nalgebra::Cholesky::new(to_na(&r_n)).expect("positive definite");
            let linv = chol.l().try_inverse().expect("invertible");
            let reduced = &linv * to_na(&r_s) * linv.adjoint();
            let reduced = (&reduced + reduced.adjoint()).scale(0.5);
            let mut ev: Vec<f64> = reduced.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            let oracle: f64 = ev[..cfg.streams[k]].iter().sum();
            eig_err = eig_err.max((oracle - group_sum).abs() / oracle.max(1e-300));
            // single-stream max SINR: p g_jᴴ R_j⁻¹ g_j with the other own streams in R_j
            let g = to_na(&ch.h[k]).adjoint() * to_na(&bf.tx[k]);
            let r_n_na = to_na(&r_n);
            let stream_sum: f64 = (0..cfg.streams[k])
                .map(|j| {
                    let mut r = r_n_na.clone();
                    for l in 0..cfg.streams[k] {
                        if l != j {
                            let c = g.column(l);
                            r += (&c * c.adjoint()).scale(p.per_user[k][l]);
                        }
                    }
                    let gj = g.column(j).into_owned();
                    let x = r.lu().solve(&gj).expect("invertible");
                    p.per_user[k][j] * (gj.adjoint() * x)[(0, 0)].re
                })
                .sum();
            let margin = (group_sum - stream_sum) / stream_sum;
            min_margin = min_margin.min(margin);
            if margin < -1e-9 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0 && eig_err <= 1e-9,
        format!("{violations} violations, smallest relative margin {min_margin:.2e}, eigenvalue oracle error {eig_err:.1e}"),
    )
}

fn experiment(text: &str) -> ExperimentOutput {
    run_experiment(&parse_spec(text).expect("valid spec"))
}

fn records_for<'a>(out: &'a ExperimentOutput, value: f64, method: Method) -> Vec<&'a TrialRecord> {
    out.records
        .iter()
        .filter(|r| r.sweep_value == value && r.method == method)
        .collect()
}

/// Mean and standard error of `a - b` over trials where every method
/// converged.
fn paired_gap(
    out: &ExperimentOutput,
    value: f64,
    a: Method,
    b: Method,
    methods: &[Method],
) -> (f64, f64) {
    let per: Vec<Vec<&TrialRecord>> = methods
        .iter()
        .map(|&m| records_for(out, value, m))
        .collect();
    let ia = methods
        .iter()
        .position(|&m| m == a)
        .expect("method present");
    let ib = methods
        .iter()
        .position(|&m| m == b)
        .expect("method present");
    let diffs: Vec<f64> = (0..per[0].len())
        .filter(|&t| per.iter().all(|recs| recs[t].converged()))
        .map(|t| per[ia][t].c - per[ib][t].c)
        .collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

const THREE: [Method; 3] = [Method::GroupGsinr, Method::PerStreamGsinr, Method::Khachan];

fn criterion_8() -> Outcome {
    let out = experiment(
        "problem = pr\nmethods = group, per-stream, khachan\nK = 4\nM = 8\nN = 2\nLequal = N\n\
         gamma_db = 0\nsweep = pmax_db\npmax_db = 10, 14, 18\ntrials = 200\nseed = 0\n",
    );
    let mut pass = true;
    let mut parts = Vec::new();
    for value in [10.0, 14.0, 18.0] {
        let (d1, se1) = paired_gap(
            &out,
            value,
            Method::PerStreamGsinr,
            Method::GroupGsinr,
            &THREE,
        );
        let (d2, se2) = paired_gap(&out, value, Method::GroupGsinr, Method::Khachan, &THREE);
        pass &= d1 > se1 && d2 > se2;
        parts.push(format!(
            "{value} dB: ps-g {d1:.3}±{se1:.3}, g-kh {d2:.3}±{se2:.3}"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn row<'a>(
    out: &'a ExperimentOutput,
    value: f64,
    method: Method,
) -> &'a mubeam::harness::ExperimentRow {
    out.rows
        .iter()
        .find(|r| r.sweep_value == value && r.method == method)
        .expect("row present")
}

fn criterion_9() -> Outcome {
    let out = experiment(
        "problem = pp\nmethods = group, per-stream, khachan\nK = 2\nM = 8\nN = 4\nLequal = N\n\
         pmax_db = 43\nsweep = gamma_db\ngamma_db = 2, 6\ntrials = 200\nseed = 0\n",
    );
    let mut pass = true;
    let mut parts = Vec::new();
    for value in [2.0, 6.0] {
        let [g, ps, kh] = THREE.map(|m| row(&out, value, m).mean_power_db);
        pass &= ps <= g.min(kh);
        parts.push(format!(
            "{value} dB: group {g:.3} dB, per-stream {ps:.3} dB, khachan {kh:.3} dB"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let case1 = parse_spec(
        "problem = pp\nmethods = group, per-stream, khachan, bd-group, bd-per-stream\nK = 2\nM = 8\nN = 4\n\
         gamma_db = 12\ntrials = 200\nseed = 0\n",
    )
    .expect("valid spec");
    let case2 = parse_spec(
        "problem = pp\nmethods = group, per-stream, khachan\nK = 3\nM = 8\nN = 4\ngamma_db = 3\ntrials = 200\nseed = 0\n",
    )
    .expect("valid spec");
    let mut pass = true;
    let mut parts = Vec::new();
    for (spec, expected, tol, name) in [
        (
            &case1,
            &[99.0, 100.0, 67.0, 100.0, 100.0][..],
            10.0,
            "case 1",
        ),
        (&case2, &[100.0, 100.0, 0.0][..], 5.0, "case 2"),
    ] {
        let rows = run_feasibility(spec);
        let mut cells = Vec::new();
        for (r, &want) in rows.iter().zip(expected) {
            let got = 100.0 * r.feasibility_rate;
            let ok = (got - want).abs() <= tol;
            pass &= ok;
            cells.push(format!(
                "{} {got:.1}% (reference {want}%){}",
                r.method,
                if ok { "" } else { " OUT" }
            ));
        }
        parts.push(format!("{name}: {}", cells.join(", ")));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_11() -> Outcome {
    let out = experiment(
        "problem = pp\nmethods = group, per-stream, khachan\nK = 2\nM = 8\nN = 4\nsweep = gamma_db\ngamma_db = 4\ntrials = 200\nseed = 0\n",
    );
    let reference = [10.72, 26.11, 17.76];
    let iters = THREE.map(|m| row(&out, 4.0, m).mean_iters);
    let within = iters
        .iter()
        .zip(reference)
        .all(|(&x, p)| x >= p / 2.0 && x <= 2.0 * p);
    let [g, ps, kh] = iters;
    let ordered = g < kh && kh < ps;
    outcome(
        within && ordered,
        format!(
            "group {g:.2} (reference 10.72), khachan {kh:.2} (reference 17.76), per-stream {ps:.2} (reference 26.11); \
             factor-2 band {}, ordering {}",
            if within { "ok" } else { "violated" },
            if ordered { "ok" } else { "violated" }
        ),
    )
}

fn criterion_12() -> Outcome {
    let out = experiment(
        "problem = pp\nmethods = group, per-stream\nK = 2\nM = 8\nN = 4\nsweep = gamma_db\ngamma_db = 2, 6, 10\n\
         trials = 200\nseed = 0\n",
    );
    let ps2 = row(&out, 2.0, Method::PerStreamGsinr).convergence_rate;
    let ps10 = row(&out, 10.0, Method::PerStreamGsinr).convergence_rate;
    let groups: Vec<f64> = [2.0, 6.0, 10.0]
        .iter()
        .map(|&v| row(&out, v, Method::GroupGsinr).convergence_rate)
        .collect();
    let pass = ps2 >= ps10 && groups.iter().all(|&r| r >= 0.95);
    outcome(
        pass,
        format!(
            "per-stream {ps2:.3} at 2 dB vs {ps10:.3} at 10 dB; group {groups:.3?} at 2/6/10 dB"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("SINR balancing", criterion_1),
        ("duality", criterion_2),
        ("generalized eigensolver", criterion_3),
        ("LP optimality", criterion_4),
        ("filter normalization", criterion_5),
        ("BD nulling", criterion_6),
        ("GSINR dominance", criterion_7),
        ("Pr balanced-level ordering", criterion_8),
        ("Pp minimum-power ordering", criterion_9),
        ("feasibility rates", criterion_10),
        ("iteration counts", criterion_11),
        ("convergence probability", criterion_12),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {verdict} [{name}] {} ({:.1}s)",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
