//! Fast invariant suite behind `hfsync selftest`.
//!
//! Each check is self-contained and deterministic. A check passes or fails
//! with a short detail line; nothing here panics on a failed invariant.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::analysis::{doppler_mse_integral, TheoryInputs};
use crate::channel::LinkChannel;
use crate::config::SystemConfig;
use crate::ofdm::{apply_link, dft, eta, hadamard_receive, idft, make_map, modulate, phase_rotation, stacked_receive, Impairments};
use crate::scenario::Device;
use crate::seed::Seed;
use crate::sync::{doppler_residual, run_hfs, HfsOptions, TrialWorld, TruthOracle};

#[derive(Debug, Clone, Default)]
pub struct SelftestOptions {
    /// Run only checks whose name contains this substring.
    pub filter: Option<String>,
    /// Fault injection: negate the stage-1 term during HFS reconstruction.
    pub flip_stage1_sign: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn(&SelftestOptions) -> Result<String, String>;

const CHECKS: [(&str, CheckFn); 6] = [
    ("model-identity", model_identity),
    ("rotation-algebra", rotation_algebra),
    ("dft-parseval", dft_parseval),
    ("dft-loopback", dft_loopback),
    ("oracle-reconstruction", oracle_reconstruction),
    ("quadrature-monte-carlo", quadrature_monte_carlo),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

pub fn run_selftest(opts: &SelftestOptions) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .filter(|(name, _)| opts.filter.as_deref().is_none_or(|f| name.contains(f)))
        .map(|&(name, check)| {
            let (passed, detail) = match check(opts) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome { name, passed, detail }
        })
        .collect()
}

fn cn<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

fn model_identity(_: &SelftestOptions) -> Result<String, String> {
    let mut rng = Seed(0x5e1f).rng();
    let mut worst = 0.0f64;
    for case in 0..25u64 {
        let n = if rng.random_bool(0.5) { 8 } else { 16 };
        let l = rng.random_range(1..=3);
        let cfg = SystemConfig {
            n_subcarriers: n,
            n_data: n / 2,
            cp_len: rng.random_range(l - 1..=4).max(1),
            n_taps: l,
            n_symbols: rng.random_range(1..=3),
            ..Default::default()
        };
        let (m, k) = (rng.random_range(1..=4), rng.random_range(1..=2));
        let map = make_map(&cfg).map_err(|e| e.to_string())?;
        let bursts: Vec<_> = (0..k).map(|i| modulate(&cfg, &map, case * 10 + i as u64)).collect();
        let channels: Vec<Vec<LinkChannel>> = (0..m)
            .map(|mi| {
                (0..k)
                    .map(|ki| LinkChannel {
                        tx: Device::Ue(ki),
                        rx: Device::Aau(mi),
                        taps: (0..l).map(|_| cn(&mut rng)).collect(),
                        pathloss_db: 0.0,
                    })
                    .collect()
            })
            .collect();
        let cfo = DMatrix::from_fn(m, k, |_, _| rng.random_range(-0.5..0.5));
        let gains: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
        let a = stacked_receive(&cfg, &bursts, &channels, &cfo, &gains).map_err(|e| e.to_string())?;
        let b = hadamard_receive(&cfg, &bursts, &channels, &cfo, &gains).map_err(|e| e.to_string())?;
        for (ya, yb) in a.iter().zip(&b) {
            worst = worst.max((ya - yb).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    if worst < 1e-9 {
        Ok(format!("25 instances, max abs diff {worst:.2e}"))
    } else {
        Err(format!("max abs diff {worst:.2e} exceeds 1e-9"))
    }
}

fn rotation_algebra(_: &SelftestOptions) -> Result<String, String> {
    let mut rng = Seed(0xd0d0).rng();
    let cfg = SystemConfig::default();
    let n = cfg.n_subcarriers;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (a, b) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let (da, db, dab) = (phase_rotation(a, n), phase_rotation(b, n), phase_rotation(a + b, n));
        for i in 0..n {
            worst = worst.max((da[i] * db[i] - dab[i]).norm());
            worst = worst.max((da[i].norm() - 1.0).abs());
        }
        let g = rng.random_range(0..4);
        let expect = Complex64::from_polar(1.0, 2.0 * PI * a * (g * cfg.symbol_len()) as f64 / n as f64);
        worst = worst.max((eta(a, g, &cfg) - expect).norm());
    }
    let identity = phase_rotation(0.0, n).iter().all(|z| *z == Complex64::new(1.0, 0.0));
    if worst < 1e-12 && identity {
        Ok(format!("200 pairs, max deviation {worst:.2e}"))
    } else {
        Err(format!("max deviation {worst:.2e}, D(0) identity: {identity}"))
    }
}

fn dft_parseval(_: &SelftestOptions) -> Result<String, String> {
    let mut rng = Seed(0xf7).rng();
    let mut worst = 0.0f64;
    for n in [8usize, 16, 32, 24, 64] {
        let x: Vec<Complex64> = (0..n).map(|_| cn(&mut rng)).collect();
        let fx = dft(&x);
        let e_t: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let e_f: f64 = fx.iter().map(|z| z.norm_sqr()).sum();
        worst = worst.max((e_t - e_f).abs() / e_t);
        let back = idft(&fx);
        worst = worst.max(back.iter().zip(&x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
    }
    if worst < 1e-12 {
        Ok(format!("max deviation {worst:.2e}"))
    } else {
        Err(format!("max deviation {worst:.2e} exceeds 1e-12"))
    }
}

fn dft_loopback(_: &SelftestOptions) -> Result<String, String> {
    let cfg = SystemConfig::default();
    let map = make_map(&cfg).map_err(|e| e.to_string())?;
    let mut rng = Seed(0x100b).rng();
    let link = LinkChannel {
        tx: Device::Ue(0),
        rx: Device::Aau(0),
        taps: (0..cfg.n_taps).map(|_| cn(&mut rng)).collect(),
        pathloss_db: 0.0,
    };
    let tx = modulate(&cfg, &map, 9);
    let phi = 0.3137;
    let rx = apply_link(&tx, &link, &Impairments::clean(phi), &cfg, &mut rng);
    let n = cfg.n_subcarriers;
    let derot = phase_rotation(-phi, n);
    let mut worst = 0.0f64;
    for g in 0..rx.n_symbols() {
        let e = eta(phi, g, &cfg).conj();
        let body: Vec<Complex64> = rx.body(g).iter().zip(&derot).map(|(y, d)| y * d * e).collect();
        let fy = dft(&body);
        for q in 0..n {
            let expect = tx.symbols[g][q] * link.frequency_response(n, q);
            worst = worst.max((fy[q] - expect).norm());
        }
    }
    if worst < 1e-10 {
        Ok(format!("max deviation {worst:.2e}"))
    } else {
        Err(format!("max deviation {worst:.2e} exceeds 1e-10"))
    }
}

fn oracle_reconstruction(opts: &SelftestOptions) -> Result<String, String> {
    let hfs = HfsOptions {
        flip_stage1_sign: opts.flip_stage1_sign,
    };
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        for speed in [0.0, 40.0] {
            let cfg = SystemConfig {
                n_aaus: 16,
                n_ues: 3,
                ue_speed_mps: speed,
                ..Default::default()
            };
            let w = TrialWorld::new(&cfg, seed).map_err(|e| e.to_string())?;
            let r = run_hfs(&w, &TruthOracle, hfs);
            let err = r.errors();
            for m in 0..cfg.n_aaus {
                for k in 0..cfg.n_ues {
                    worst = worst.max((err[(m, k)] - doppler_residual(&w, m, k)).abs());
                }
            }
        }
    }
    if worst < 1e-14 {
        Ok(format!("40 worlds, max residual {worst:.2e}"))
    } else {
        Err(format!("reconstruction off by up to {worst:.2e}"))
    }
}

fn quadrature_monte_carlo(_: &SelftestOptions) -> Result<String, String> {
    let cfg = SystemConfig {
        ue_speed_mps: 60.0,
        ..Default::default()
    };
    let t = TheoryInputs::from_config(&cfg, 0.0, 0.0);
    let quad = doppler_mse_integral(&t).map_err(|e| e.to_string())?;
    let scale = (cfg.carrier_freq_hz * 60.0 / (crate::config::SPEED_OF_LIGHT * cfg.subcarrier_spacing_hz)).powi(2);
    let mut rng = Seed(0x3c).rng();
    let samples = 200_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let psi = rng.random_range(0.0..2.0 * PI);
        let theta = rng.random_range(0.0..2.0 * PI);
        let u: f64 = rng.random();
        let x = u * theta.cos() + (1.0 - (u * theta.sin()).powi(2)).sqrt();
        let v = scale * (0.5 + (theta + psi).cos().powi(2) * x * x);
        s += v;
        s2 += v * v;
    }
    let mean = s / samples as f64;
    let se = ((s2 / samples as f64 - mean * mean) / samples as f64).sqrt();
    let z = (quad - mean).abs() / se;
    if z <= 3.0 {
        Ok(format!("quadrature {quad:.6e}, Monte Carlo {mean:.6e} +/- {se:.1e}"))
    } else {
        Err(format!("quadrature {quad:.6e} is {z:.1} standard errors from {mean:.6e}"))
    }
}
