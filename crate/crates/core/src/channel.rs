//! Large-scale path loss and Rayleigh multipath taps per link.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{db_to_linear, ChannelModel, SystemConfig};
use crate::scenario::{Device, Topology};
use crate::seed::{Seed, Stream};

/// Links shorter than this are evaluated at this distance.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannel {
    pub tx: Device,
    pub rx: Device,
    pub taps: Vec<Complex64>,
    /// Mean link gain in dB, shadowing included.
    pub pathloss_db: f64,
}

impl LinkChannel {
    /// A flat channel with a single unit tap, for loopback tests.
    pub fn identity(tx: Device, rx: Device, n_taps: usize) -> Self {
        let mut taps = vec![Complex64::new(0.0, 0.0); n_taps.max(1)];
        taps[0] = Complex64::new(1.0, 0.0);
        LinkChannel {
            tx,
            rx,
            taps,
            pathloss_db: 0.0,
        }
    }

    /// Channel frequency response on subcarrier `q` of an `n`-point grid.
    pub fn frequency_response(&self, n: usize, q: usize) -> Complex64 {
        self.taps
            .iter()
            .enumerate()
            .map(|(l, h)| h * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (q * l) as f64 / n as f64))
            .sum()
    }
}

/// Mean gain in dB at distance `d_m`: `zeta - 10 lambda log10(d_km) + shadow`.
///
/// Panics if `d_m <= 0`.
pub fn pathloss_db(cfg: &SystemConfig, d_m: f64, shadow_db: f64) -> f64 {
    assert!(d_m > 0.0, "path loss needs a positive distance, got {d_m}");
    cfg.ref_gain_db - 10.0 * cfg.pathloss_exponent * (d_m / 1000.0).log10() + shadow_db
}

/// Draw the channel of the `tx -> rx` link for a given trial.
pub fn draw_link(cfg: &SystemConfig, topo: &Topology, tx: Device, rx: Device, trial_seed: u64) -> LinkChannel {
    let mut rng = Seed(trial_seed)
        .stream(Stream::Channel)
        .child(tx.id())
        .child(rx.id())
        .rng();
    let shadow_std = cfg.shadow_var_db.sqrt();
    let shadow_on = tx.is_ue() || rx.is_ue() || cfg.shadow_aau_links;
    let shadow: f64 = rng.sample::<f64, _>(StandardNormal) * shadow_std;
    let beta = match cfg.channel_model {
        ChannelModel::Pathloss => {
            let d = topo.distance(tx, rx).max(MIN_DISTANCE_M);
            pathloss_db(cfg, d, if shadow_on { shadow } else { 0.0 })
        }
        ChannelModel::Normalized => -10.0 * (topo.n_aaus() as f64).log10(),
    };
    let tap_std = (db_to_linear(beta) / cfg.n_taps as f64 / 2.0).sqrt();
    let taps = (0..cfg.n_taps)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * tap_std
        })
        .collect();
    LinkChannel {
        tx,
        rx,
        taps,
        pathloss_db: beta,
    }
}

/// Expected per-sample SNR of a link in dB, from the mean channel gain.
pub fn link_snr_db(cfg: &SystemConfig, link: &LinkChannel, tx_power_w: f64) -> f64 {
    10.0 * (tx_power_w * 1000.0).log10() + link.pathloss_db - cfg.noise_power_dbm
}
