//! Theoretical MSE predictors and operation-count models.

use std::f64::consts::PI;

use crate::config::{doppler_scale, SystemConfig};
use crate::error::Result;
use crate::quad::integrate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryInputs {
    /// Stage-1 (AAU-AAU) estimation MSE.
    pub sigma1_sq: f64,
    /// Stage-2 (UE-secondary) estimation MSE.
    pub sigma2_sq: f64,
    pub speed_mps: f64,
    pub carrier_freq_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub cell_radius_m: f64,
    /// Master and secondary AAU are the same unit.
    pub colocated: bool,
}

impl TheoryInputs {
    pub fn from_config(cfg: &SystemConfig, sigma1_sq: f64, sigma2_sq: f64) -> Self {
        TheoryInputs {
            sigma1_sq,
            sigma2_sq,
            speed_mps: cfg.ue_speed_mps,
            carrier_freq_hz: cfg.carrier_freq_hz,
            subcarrier_spacing_hz: cfg.subcarrier_spacing_hz,
            cell_radius_m: cfg.cell_radius_m,
            colocated: false,
        }
    }

    fn doppler_sq(&self) -> f64 {
        doppler_scale(self.carrier_freq_hz, self.speed_mps, self.subcarrier_spacing_hz).powi(2)
    }
}

/// Closed-form system MSE for a UE assumed at the cell centre:
/// `2 s1 + s2 + (f v / (c df))^2`, or `s1 + s2 + ...` when colocated.
pub fn mse_simplified(t: &TheoryInputs) -> f64 {
    let stage1 = if t.colocated { t.sigma1_sq } else { 2.0 * t.sigma1_sq };
    stage1 + t.sigma2_sq + t.doppler_sq()
}

/// Expected squared Doppler on the master and secondary links for a UE at
/// uniform position and heading, with the secondary uniform over the sector
/// geometry. Evaluated by nested adaptive quadrature.
pub fn doppler_mse_integral(t: &TheoryInputs) -> Result<f64> {
    const REL_TOL: f64 = 1e-4;
    let scale = t.doppler_sq();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let r_max = t.cell_radius_m;
    let two_pi = 2.0 * PI;
    let mut failure = None;
    let mut guard = |res: Result<crate::quad::Estimate>| match res {
        Ok(e) => e.value,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    // Inner tolerances are tighter so the outer error estimate stays honest.
    let outer = integrate(
        |psi| {
            let mid = integrate(
                |r| {
                    let u = r / r_max;
                    let inner = integrate(
                        |theta| {
                            let xi = two_pi - theta - psi;
                            let x = u * theta.cos() + (1.0 - u * u * theta.sin().powi(2)).max(0.0).sqrt();
                            xi.cos().powi(2) * x * x
                        },
                        0.0,
                        two_pi,
                        REL_TOL * 1e-3,
                        1e-14,
                        4000,
                    );
                    guard(inner) / (two_pi * r_max)
                },
                0.0,
                r_max,
                REL_TOL * 1e-2,
                1e-14,
                4000,
            );
            guard(mid) / two_pi
        },
        0.0,
        two_pi,
        REL_TOL,
        0.0,
        4000,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(scale * (0.5 + outer?.value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityInputs {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    /// Null subcarriers.
    pub q: usize,
    /// OFDM symbols per burst.
    pub lb: usize,
    /// Grid points of the one-dimensional MUSIC-like search.
    pub rho: usize,
    /// Search points of the pairing-based estimator.
    pub epsilon: usize,
}

impl ComplexityInputs {
    pub fn from_config(cfg: &SystemConfig, epsilon: usize) -> Self {
        ComplexityInputs {
            m: cfg.n_aaus,
            k: cfg.n_ues,
            n: cfg.n_subcarriers,
            q: cfg.n_nulls(),
            lb: cfg.n_symbols,
            rho: cfg.grid_points,
            epsilon,
        }
    }

    fn n_log_n(&self) -> f64 {
        let n = self.n as f64;
        n * n.log2()
    }
}

/// `Lb rho ((M-1)^2 + (M+K-1)(Q + N log2 N) + K)`
pub fn complexity_hfs(c: &ComplexityInputs) -> f64 {
    let (m, k) = (c.m as f64, c.k as f64);
    let per_link = c.q as f64 + c.n_log_n();
    (c.lb * c.rho) as f64 * ((m - 1.0).powi(2) + (m + k - 1.0) * per_link + k)
}

/// `M K Lb rho (M + N log2 N + Q)`
pub fn complexity_music_baseline(c: &ComplexityInputs) -> f64 {
    let m = c.m as f64;
    let kappa = (c.lb * c.rho) as f64 * (m + c.n_log_n() + c.q as f64);
    m * c.k as f64 * kappa
}

/// `6 (eps+1) K Lb N ceil(M/2) (log2 N + Lb)`
pub fn complexity_pbee(c: &ComplexityInputs) -> f64 {
    let n = c.n as f64;
    6.0 * (c.epsilon + 1) as f64
        * c.k as f64
        * c.lb as f64
        * n
        * c.m.div_ceil(2) as f64
        * (n.log2() + c.lb as f64)
}
