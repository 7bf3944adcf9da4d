//! Null-subcarrier MUSIC-like CFO estimator.
//!
//! A residual CFO leaks data-carrier energy onto the null subcarriers. The
//! cost of a candidate `phi` is the total energy left on the nulls after the
//! received bodies are de-rotated by `D(-phi)`; it vanishes at the true CFO
//! in the absence of noise. The candidate is searched on a cell-centred grid
//! of `rho` points over (-0.5, 0.5), optionally refined by a three-point
//! parabolic fit around the grid minimum.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::ofdm::{OfdmBurst, SubcarrierMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfoEstimate {
    pub value: f64,
    pub cost_at_min: f64,
    pub grid_points_used: usize,
    /// Set when the cost was flat over the whole grid (e.g. no signal).
    pub degenerate: bool,
}

impl CfoEstimate {
    pub fn is_valid(&self) -> bool {
        !self.degenerate
    }
}

#[derive(Debug, Clone)]
pub struct MusicEstimator {
    n: usize,
    cp_len: usize,
    /// `exp(-j 2 pi q n / N) / sqrt(N)` for each null `q`, row-major by null.
    null_basis: Vec<Vec<Complex64>>,
    grid: Vec<f64>,
    refine: bool,
}

impl MusicEstimator {
    pub fn new(cfg: &SystemConfig, map: &SubcarrierMap) -> Self {
        let n = cfg.n_subcarriers;
        let s = 1.0 / (n as f64).sqrt();
        let null_basis = map
            .nulls
            .iter()
            .map(|&q| {
                (0..n)
                    .map(|i| Complex64::from_polar(s, -2.0 * PI * ((q * i) % n) as f64 / n as f64))
                    .collect()
            })
            .collect();
        MusicEstimator {
            n,
            cp_len: cfg.cp_len,
            null_basis,
            grid: search_grid(cfg.grid_points),
            refine: cfg.refine,
        }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Energy on the null subcarriers after de-rotating by `phi`.
    pub fn cost(&self, burst: &OfdmBurst, phi: f64) -> f64 {
        let step = -2.0 * PI * phi / self.n as f64;
        let derot: Vec<Complex64> = (0..self.n)
            .map(|i| Complex64::from_polar(1.0, step * i as f64))
            .collect();
        let mut total = 0.0;
        let mut z = vec![Complex64::new(0.0, 0.0); self.n];
        for sym in &burst.time {
            let body = &sym[self.cp_len..];
            for ((zi, y), d) in z.iter_mut().zip(body).zip(&derot) {
                *zi = y * d;
            }
            for basis in &self.null_basis {
                let c: Complex64 = z.iter().zip(basis).map(|(a, b)| a * b).sum();
                total += c.norm_sqr();
            }
        }
        total
    }

    pub fn estimate(&self, burst: &OfdmBurst) -> CfoEstimate {
        let costs: Vec<f64> = self.grid.iter().map(|&p| self.cost(burst, p)).collect();
        let (mut best, mut lo, mut hi) = (0, f64::INFINITY, 0.0f64);
        for (i, &c) in costs.iter().enumerate() {
            if c < lo {
                lo = c;
                best = i;
            }
            hi = hi.max(c);
        }
        if !(hi > 0.0) || hi - lo <= 1e-12 * hi {
            return CfoEstimate {
                value: 0.0,
                cost_at_min: lo,
                grid_points_used: costs.len(),
                degenerate: true,
            };
        }
        let mut value = self.grid[best];
        let mut cost_at_min = lo;
        if self.refine {
            let h = 1.0 / self.grid.len() as f64;
            // At either end of the grid the missing neighbour is evaluated just
            // outside the search span.
            let a = match best {
                0 => self.cost(burst, value - h),
                _ => costs[best - 1],
            };
            let c = match costs.get(best + 1) {
                Some(&c) => c,
                None => self.cost(burst, value + h),
            };
            let b = costs[best];
            let curvature = a - 2.0 * b + c;
            if curvature > 0.0 {
                let offset = (0.5 * (a - c) / curvature).clamp(-1.0, 1.0);
                value += offset * h;
                cost_at_min = self.cost(burst, value);
            }
        }
        CfoEstimate {
            value,
            cost_at_min,
            grid_points_used: costs.len(),
            degenerate: false,
        }
    }
}

/// Cell-centred grid `-0.5 + (i + 0.5) / rho`, `i = 0..rho`.
pub fn search_grid(rho: usize) -> Vec<f64> {
    (0..rho).map(|i| -0.5 + (i as f64 + 0.5) / rho as f64).collect()
}

pub fn cost(burst: &OfdmBurst, map: &SubcarrierMap, phi: f64, cfg: &SystemConfig) -> f64 {
    MusicEstimator::new(cfg, map).cost(burst, phi)
}

pub fn estimate(burst: &OfdmBurst, map: &SubcarrierMap, cfg: &SystemConfig) -> CfoEstimate {
    MusicEstimator::new(cfg, map).estimate(burst)
}
