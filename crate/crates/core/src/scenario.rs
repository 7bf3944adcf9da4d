//! Device placement, role assignment and ground-truth CFOs.

use std::f64::consts::PI;

use rand::Rng;

use crate::config::{SystemConfig, BIAS_HALF_RANGE, SPEED_OF_LIGHT};
use crate::seed::{Seed, Stream};

pub type Point = [f64; 2];

/// A radio endpoint: either an AAU or a UE, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Device {
    Aau(usize),
    Ue(usize),
}

impl Device {
    /// Stable numeric id used when deriving per-device random streams.
    pub fn id(self) -> u64 {
        match self {
            Device::Aau(m) => m as u64,
            Device::Ue(k) => (1u64 << 32) | k as u64,
        }
    }

    pub fn is_ue(self) -> bool {
        matches!(self, Device::Ue(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub aau_pos: Vec<Point>,
    pub ue_pos: Vec<Point>,
    pub master: usize,
    /// Nearest AAU of each UE.
    pub secondary: Vec<usize>,
    /// Normalized oscillator bias of each AAU, units of the subcarrier spacing.
    pub aau_bias: Vec<f64>,
    pub ue_bias: Vec<f64>,
    pub ue_velocity: Vec<Point>,
}

impl Topology {
    /// Build a topology from explicit positions, assigning master and
    /// secondary roles by the nearest-distance rules.
    pub fn from_parts(
        aau_pos: Vec<Point>,
        ue_pos: Vec<Point>,
        aau_bias: Vec<f64>,
        ue_bias: Vec<f64>,
        ue_velocity: Vec<Point>,
    ) -> Self {
        assert!(!aau_pos.is_empty(), "at least one AAU required");
        assert_eq!(aau_pos.len(), aau_bias.len());
        assert_eq!(ue_pos.len(), ue_bias.len());
        assert_eq!(ue_pos.len(), ue_velocity.len());
        let master = select_master(&aau_pos);
        let secondary = ue_pos.iter().map(|u| nearest(&aau_pos, *u)).collect();
        Topology {
            aau_pos,
            ue_pos,
            master,
            secondary,
            aau_bias,
            ue_bias,
            ue_velocity,
        }
    }

    pub fn n_aaus(&self) -> usize {
        self.aau_pos.len()
    }

    pub fn n_ues(&self) -> usize {
        self.ue_pos.len()
    }

    pub fn position(&self, d: Device) -> Point {
        match d {
            Device::Aau(m) => self.aau_pos[m],
            Device::Ue(k) => self.ue_pos[k],
        }
    }

    pub fn bias(&self, d: Device) -> f64 {
        match d {
            Device::Aau(m) => self.aau_bias[m],
            Device::Ue(k) => self.ue_bias[k],
        }
    }

    pub fn distance(&self, a: Device, b: Device) -> f64 {
        dist(self.position(a), self.position(b))
    }
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Index of the point closest to `target`; the lowest index wins ties.
fn nearest(points: &[Point], target: Point) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = dist(*p, target);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// The AAU closest to the centroid of all AAU positions.
pub fn select_master(aau_pos: &[Point]) -> usize {
    let n = aau_pos.len() as f64;
    let cx = aau_pos.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = aau_pos.iter().map(|p| p[1]).sum::<f64>() / n;
    nearest(aau_pos, [cx, cy])
}

fn uniform_disk<R: Rng>(rng: &mut R, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let a = 2.0 * PI * rng.random::<f64>();
    [r * a.cos(), r * a.sin()]
}

/// Random placement, oscillator biases and UE headings for one trial.
pub fn generate_topology(cfg: &SystemConfig, trial_seed: u64) -> Topology {
    let mut rng = Seed(trial_seed).stream(Stream::Topology).rng();
    let r = cfg.cell_radius_m;
    let aau_pos: Vec<Point> = (0..cfg.n_aaus).map(|_| uniform_disk(&mut rng, r)).collect();
    let ue_pos: Vec<Point> = (0..cfg.n_ues).map(|_| uniform_disk(&mut rng, r)).collect();
    let b = BIAS_HALF_RANGE;
    let aau_bias = (0..cfg.n_aaus).map(|_| rng.random_range(-b..b)).collect();
    let ue_bias = (0..cfg.n_ues).map(|_| rng.random_range(-b..b)).collect();
    let v = cfg.ue_speed_mps;
    let ue_velocity = (0..cfg.n_ues)
        .map(|_| {
            let heading = 2.0 * PI * rng.random::<f64>();
            [v * heading.cos(), v * heading.sin()]
        })
        .collect();
    Topology::from_parts(aau_pos, ue_pos, aau_bias, ue_bias, ue_velocity)
}

/// Normalized Doppler shift seen on the UE -> AAU link: the UE's radial
/// velocity toward the AAU, scaled by `f / (c df)`.
pub fn doppler(topo: &Topology, cfg: &SystemConfig, ue: usize, aau: usize) -> f64 {
    let u = topo.ue_pos[ue];
    let a = topo.aau_pos[aau];
    let (dx, dy) = (a[0] - u[0], a[1] - u[1]);
    let d = dx.hypot(dy);
    if d == 0.0 {
        return 0.0;
    }
    let v = topo.ue_velocity[ue];
    let radial = (v[0] * dx + v[1] * dy) / d;
    cfg.carrier_freq_hz * radial / (SPEED_OF_LIGHT * cfg.subcarrier_spacing_hz)
}

/// Normalized CFO of the `tx -> rx` link: oscillator bias difference plus
/// the Doppler term when one endpoint is a UE. Antisymmetric in its endpoints.
///
/// Panics if `tx == rx` or if both endpoints are UEs.
pub fn true_cfo(topo: &Topology, cfg: &SystemConfig, tx: Device, rx: Device) -> f64 {
    assert_ne!(tx, rx, "a link needs two distinct endpoints");
    let bias = topo.bias(tx) - topo.bias(rx);
    let dop = match (tx, rx) {
        (Device::Aau(_), Device::Aau(_)) => 0.0,
        (Device::Ue(k), Device::Aau(m)) => doppler(topo, cfg, k, m),
        (Device::Aau(m), Device::Ue(k)) => -doppler(topo, cfg, k, m),
        (Device::Ue(_), Device::Ue(_)) => panic!("UE-UE links are not modeled"),
    };
    bias + dop
}
