//! Hierarchical frequency synchronization (HFS) and the per-link baseline.
//!
//! HFS runs in two stages. The master AAU broadcasts a burst and every slave
//! AAU estimates its offset to the master, then retunes by that amount. Each
//! UE then transmits to its secondary AAU, which estimates the residual
//! offset against its already-retuned oscillator. The CFO of any UE-AAU pair
//! is recovered by composing the two estimates, so a link error decomposes as
//! `e1[m] - e1[sec] + e2 + (doppler(k, sec) - doppler(k, m))`.
//!
//! The baseline estimates every UE-AAU link independently from the UE's own
//! uplink burst.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::channel::{draw_link, LinkChannel};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimator::MusicEstimator;
use crate::ofdm::{apply_link, make_map, modulate, Impairments, OfdmBurst, SubcarrierMap};
use crate::scenario::{doppler, generate_topology, true_cfo, Device, Topology};
use crate::seed::{Seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Hfs,
    Baseline,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::Hfs, Scheme::Baseline];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Hfs => "hfs",
            Scheme::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hfs" => Ok(Scheme::Hfs),
            "baseline" | "music" => Ok(Scheme::Baseline),
            other => Err(Error::config("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

/// Number of point-to-point estimations a scheme performs.
pub fn count_estimations(scheme: Scheme, m: usize, k: usize) -> usize {
    match scheme {
        Scheme::Hfs => m.saturating_sub(1) + k,
        Scheme::Baseline => m * k,
    }
}

/// Everything random about one trial that all schemes share: the topology
/// and the channel of every link any scheme may use.
#[derive(Debug, Clone)]
pub struct TrialWorld {
    pub cfg: SystemConfig,
    pub map: SubcarrierMap,
    pub topo: Topology,
    pub trial_seed: u64,
    /// `uplink[m][k]`: UE `k` -> AAU `m`.
    uplink: Vec<Vec<LinkChannel>>,
    /// `backhaul[m]`: master -> AAU `m`; `None` for the master itself.
    backhaul: Vec<Option<LinkChannel>>,
}

impl TrialWorld {
    pub fn new(cfg: &SystemConfig, trial_seed: u64) -> Result<Self> {
        cfg.validate()?;
        let topo = generate_topology(cfg, trial_seed);
        Self::with_topology(cfg, topo, trial_seed)
    }

    pub fn with_topology(cfg: &SystemConfig, topo: Topology, trial_seed: u64) -> Result<Self> {
        let map = make_map(cfg)?;
        let uplink = (0..topo.n_aaus())
            .map(|m| {
                (0..topo.n_ues())
                    .map(|k| draw_link(cfg, &topo, Device::Ue(k), Device::Aau(m), trial_seed))
                    .collect()
            })
            .collect();
        let backhaul = (0..topo.n_aaus())
            .map(|m| {
                (m != topo.master)
                    .then(|| draw_link(cfg, &topo, Device::Aau(topo.master), Device::Aau(m), trial_seed))
            })
            .collect();
        Ok(TrialWorld {
            cfg: cfg.clone(),
            map,
            topo,
            trial_seed,
            uplink,
            backhaul,
        })
    }

    pub fn n_aaus(&self) -> usize {
        self.topo.n_aaus()
    }

    pub fn n_ues(&self) -> usize {
        self.topo.n_ues()
    }

    pub fn channel(&self, tx: Device, rx: Device) -> &LinkChannel {
        match (tx, rx) {
            (Device::Ue(k), Device::Aau(m)) => &self.uplink[m][k],
            (Device::Aau(a), Device::Aau(m)) if a == self.topo.master => self.backhaul[m]
                .as_ref()
                .expect("no backhaul link from the master to itself"),
            _ => panic!("no channel drawn for {tx:?} -> {rx:?}"),
        }
    }

    pub fn channel_mut(&mut self, tx: Device, rx: Device) -> &mut LinkChannel {
        match (tx, rx) {
            (Device::Ue(k), Device::Aau(m)) => &mut self.uplink[m][k],
            (Device::Aau(a), Device::Aau(m)) if a == self.topo.master => self.backhaul[m]
                .as_mut()
                .expect("no backhaul link from the master to itself"),
            _ => panic!("no channel drawn for {tx:?} -> {rx:?}"),
        }
    }

    pub fn true_cfo(&self, tx: Device, rx: Device) -> f64 {
        true_cfo(&self.topo, &self.cfg, tx, rx)
    }

    /// Hash of the topology and every channel tap. Two schemes that saw the
    /// same world report the same fingerprint.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.trial_seed.hash(&mut h);
        let t = &self.topo;
        for p in t.aau_pos.iter().chain(&t.ue_pos).chain(&t.ue_velocity) {
            p[0].to_bits().hash(&mut h);
            p[1].to_bits().hash(&mut h);
        }
        for b in t.aau_bias.iter().chain(&t.ue_bias) {
            b.to_bits().hash(&mut h);
        }
        t.master.hash(&mut h);
        t.secondary.hash(&mut h);
        for link in self.uplink.iter().flatten().chain(self.backhaul.iter().flatten()) {
            link.pathloss_db.to_bits().hash(&mut h);
            for tap in &link.taps {
                tap.re.to_bits().hash(&mut h);
                tap.im.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    /// Transmit burst of a device; identical for every receiver and scheme.
    pub fn payload(&self, tx: Device) -> OfdmBurst {
        let seed = Seed(self.trial_seed).stream(Stream::Payload).child(tx.id()).0;
        modulate(&self.cfg, &self.map, seed)
    }

    fn tx_power(&self, tx: Device) -> f64 {
        match tx {
            Device::Aau(_) => self.cfg.aau_power_w,
            Device::Ue(_) => self.cfg.ue_power_w,
        }
    }

    /// Synthesize what `rx` receives from `tx` when the pair is offset by `cfo`.
    pub fn receive(&self, tx: Device, rx: Device, cfo: f64) -> OfdmBurst {
        let burst = self.payload(tx);
        let imp = Impairments::for_power(&self.cfg, cfo, self.tx_power(tx));
        let mut rng = Seed(self.trial_seed)
            .stream(Stream::Noise)
            .child(tx.id())
            .child(rx.id())
            .rng();
        apply_link(&burst, self.channel(tx, rx), &imp, &self.cfg, &mut rng)
    }
}

/// One point-to-point estimation task as seen by an estimator.
#[derive(Debug, Clone, Copy)]
pub struct LinkProbe<'w> {
    pub world: &'w TrialWorld,
    pub tx: Device,
    pub rx: Device,
    /// The offset actually present on the link at estimation time.
    pub cfo: f64,
}

impl LinkProbe<'_> {
    pub fn received(&self) -> OfdmBurst {
        self.world.receive(self.tx, self.rx, self.cfo)
    }
}

/// A point-to-point synchronization algorithm. `None` marks a failed estimate.
pub trait LinkEstimator: Sync {
    fn estimate(&self, probe: &LinkProbe<'_>) -> Option<f64>;
}

impl LinkEstimator for MusicEstimator {
    fn estimate(&self, probe: &LinkProbe<'_>) -> Option<f64> {
        let e = MusicEstimator::estimate(self, &probe.received());
        e.is_valid().then_some(e.value)
    }
}

/// Returns the exact link CFO without synthesizing any signal.
#[derive(Debug, Clone, Copy, Default)]
pub struct TruthOracle;

impl LinkEstimator for TruthOracle {
    fn estimate(&self, probe: &LinkProbe<'_>) -> Option<f64> {
        Some(probe.cfo)
    }
}

/// Truth plus a caller-chosen error per `(tx, rx)` link.
pub struct InjectedOracle<F>(pub F);

impl<F> LinkEstimator for InjectedOracle<F>
where
    F: Fn(Device, Device) -> f64 + Sync,
{
    fn estimate(&self, probe: &LinkProbe<'_>) -> Option<f64> {
        Some(probe.cfo + (self.0)(probe.tx, probe.rx))
    }
}

/// Switches for fault injection in self-tests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HfsOptions {
    /// Compose the per-link estimate with the stage-1 term negated.
    pub flip_stage1_sign: bool,
}

#[derive(Debug, Clone)]
pub struct SchemeResult {
    pub scheme: Scheme,
    /// `estimates[(m, k)]`, NaN where the link failed.
    pub estimates: DMatrix<f64>,
    pub truths: DMatrix<f64>,
    /// Stage-1 error per AAU; 0 for the master, NaN on failure. Empty for the baseline.
    pub stage1_errors: Vec<f64>,
    /// Stage-2 error per UE; NaN on failure. Empty for the baseline.
    pub stage2_errors: Vec<f64>,
    pub estimations: usize,
    pub master: usize,
}

impl SchemeResult {
    pub fn errors(&self) -> DMatrix<f64> {
        &self.estimates - &self.truths
    }

    pub fn failures(&self) -> usize {
        self.estimates.iter().filter(|v| !v.is_finite()).count()
    }

    /// Mean squared error over all non-failed links; `None` if every link failed.
    pub fn mse(&self) -> Option<f64> {
        mean(self.errors().iter().filter(|e| e.is_finite()).map(|e| e * e))
    }

    /// Mean squared stage-1 error over slave AAUs.
    pub fn stage1_mse(&self) -> Option<f64> {
        mean(self.stage1_sq_errors())
    }

    pub fn stage1_sq_errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.stage1_errors
            .iter()
            .enumerate()
            .filter(move |(m, e)| *m != self.master && e.is_finite())
            .map(|(_, e)| e * e)
    }

    pub fn stage2_mse(&self) -> Option<f64> {
        mean(self.stage2_errors.iter().filter(|e| e.is_finite()).map(|e| e * e))
    }
}

fn mean(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn run_hfs(world: &TrialWorld, est: &dyn LinkEstimator, opts: HfsOptions) -> SchemeResult {
    let topo = &world.topo;
    let (m_count, k_count) = (world.n_aaus(), world.n_ues());
    let master = topo.master;
    let mut estimations = 0;

    // Stage 1: slaves estimate their offset to the master and retune.
    let mut stage1 = vec![0.0; m_count];
    let mut stage1_errors = vec![0.0; m_count];
    for m in (0..m_count).filter(|&m| m != master) {
        let (tx, rx) = (Device::Aau(master), Device::Aau(m));
        let cfo = world.true_cfo(tx, rx);
        estimations += 1;
        match est.estimate(&LinkProbe { world, tx, rx, cfo }) {
            Some(v) => {
                stage1[m] = v;
                stage1_errors[m] = v - cfo;
            }
            None => {
                stage1[m] = f64::NAN;
                stage1_errors[m] = f64::NAN;
            }
        }
    }

    // Stage 2: each UE against its retuned secondary.
    let mut stage2 = vec![f64::NAN; k_count];
    let mut stage2_errors = vec![f64::NAN; k_count];
    for k in 0..k_count {
        let sec = topo.secondary[k];
        let (tx, rx) = (Device::Ue(k), Device::Aau(sec));
        estimations += 1;
        if !stage1[sec].is_finite() {
            continue;
        }
        let cfo = world.true_cfo(tx, rx) - stage1[sec];
        if let Some(v) = est.estimate(&LinkProbe { world, tx, rx, cfo }) {
            stage2[k] = v;
            stage2_errors[k] = v - cfo;
        }
    }

    let sign = if opts.flip_stage1_sign { -1.0 } else { 1.0 };
    let estimates = DMatrix::from_fn(m_count, k_count, |m, k| sign * stage1[m] + stage2[k]);
    let truths = DMatrix::from_fn(m_count, k_count, |m, k| {
        world.true_cfo(Device::Ue(k), Device::Aau(m))
    });
    SchemeResult {
        scheme: Scheme::Hfs,
        estimates,
        truths,
        stage1_errors,
        stage2_errors,
        estimations,
        master,
    }
}

pub fn run_baseline(world: &TrialWorld, est: &dyn LinkEstimator) -> SchemeResult {
    let (m_count, k_count) = (world.n_aaus(), world.n_ues());
    let truths = DMatrix::from_fn(m_count, k_count, |m, k| {
        world.true_cfo(Device::Ue(k), Device::Aau(m))
    });
    let estimates = DMatrix::from_fn(m_count, k_count, |m, k| {
        let probe = LinkProbe {
            world,
            tx: Device::Ue(k),
            rx: Device::Aau(m),
            cfo: truths[(m, k)],
        };
        est.estimate(&probe).unwrap_or(f64::NAN)
    });
    SchemeResult {
        scheme: Scheme::Baseline,
        estimates,
        truths,
        stage1_errors: Vec::new(),
        stage2_errors: Vec::new(),
        estimations: m_count * k_count,
        master: world.topo.master,
    }
}

pub fn run_scheme(world: &TrialWorld, est: &dyn LinkEstimator, scheme: Scheme) -> SchemeResult {
    match scheme {
        Scheme::Hfs => run_hfs(world, est, HfsOptions::default()),
        Scheme::Baseline => run_baseline(world, est),
    }
}

/// Doppler mismatch `doppler(k, sec) - doppler(k, m)` that HFS cannot remove.
pub fn doppler_residual(world: &TrialWorld, m: usize, k: usize) -> f64 {
    let sec = world.topo.secondary[k];
    doppler(&world.topo, &world.cfg, k, sec) - doppler(&world.topo, &world.cfg, k, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::trial_seed;
    use rand::Rng;

    fn cfg(m: usize, k: usize, v: f64) -> SystemConfig {
        SystemConfig {
            n_aaus: m,
            n_ues: k,
            ue_speed_mps: v,
            ..Default::default()
        }
    }

    #[test]
    fn estimation_counts() {
        assert_eq!(count_estimations(Scheme::Hfs, 64, 1), 64);
        assert_eq!(count_estimations(Scheme::Baseline, 64, 1), 64);
        assert_eq!(count_estimations(Scheme::Hfs, 16, 16), 31);
        assert_eq!(count_estimations(Scheme::Baseline, 16, 16), 256);
    }

    #[test]
    fn scheme_names_roundtrip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("pbee".parse::<Scheme>().is_err());
    }

    #[test]
    fn oracle_reconstruction_is_exact_without_doppler() {
        let c = cfg(12, 3, 0.0);
        let w = TrialWorld::new(&c, 17).unwrap();
        let r = run_hfs(&w, &TruthOracle, HfsOptions::default());
        assert_eq!(r.estimations, count_estimations(Scheme::Hfs, 12, 3));
        for e in r.errors().iter() {
            assert!(e.abs() < 1e-15, "{e}");
        }
        assert_eq!(r.failures(), 0);
        assert_eq!(r.stage1_mse(), Some(0.0));
    }

    #[test]
    fn oracle_error_is_doppler_mismatch() {
        let c = cfg(12, 3, 100.0);
        let w = TrialWorld::new(&c, 18).unwrap();
        let r = run_hfs(&w, &TruthOracle, HfsOptions::default());
        let err = r.errors();
        for m in 0..12 {
            for k in 0..3 {
                assert!((err[(m, k)] - doppler_residual(&w, m, k)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn injected_errors_decompose() {
        let c = cfg(10, 2, 50.0);
        let w = TrialWorld::new(&c, 19).unwrap();
        let e1 = |m: usize| 0.001 * (m as f64 + 1.0) * if m % 2 == 0 { 1.0 } else { -1.0 };
        let e2 = |k: usize| 0.0007 * (k as f64 + 2.0);
        let oracle = InjectedOracle(move |tx: Device, rx: Device| match (tx, rx) {
            (Device::Aau(_), Device::Aau(m)) => e1(m),
            (Device::Ue(k), Device::Aau(_)) => e2(k),
            _ => unreachable!(),
        });
        let r = run_hfs(&w, &oracle, HfsOptions::default());
        let err = r.errors();
        let master = w.topo.master;
        let e1m = |m: usize| if m == master { 0.0 } else { e1(m) };
        for m in 0..10 {
            for k in 0..2 {
                let sec = w.topo.secondary[k];
                let expect = e1m(m) - e1m(sec) + e2(k) + doppler_residual(&w, m, k);
                assert!((err[(m, k)] - expect).abs() < 1e-15);
            }
        }
        for k in 0..2 {
            assert!((r.stage2_errors[k] - e2(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn sign_flip_breaks_reconstruction() {
        let c = cfg(8, 1, 0.0);
        let w = TrialWorld::new(&c, 3).unwrap();
        let r = run_hfs(&w, &TruthOracle, HfsOptions { flip_stage1_sign: true });
        assert!(r.errors().iter().any(|e| e.abs() > 1e-6));
    }

    #[test]
    fn baseline_oracle_is_exact() {
        let c = cfg(6, 2, 100.0);
        let w = TrialWorld::new(&c, 4).unwrap();
        let r = run_baseline(&w, &TruthOracle);
        assert!(r.errors().iter().all(|e| *e == 0.0));
        assert_eq!(r.estimations, 12);
    }

    #[test]
    fn single_aau_schemes_coincide() {
        let c = cfg(1, 1, 0.0);
        for seed in 0..5 {
            let w = TrialWorld::new(&c, seed).unwrap();
            let est = MusicEstimator::new(&c, &w.map);
            let h = run_hfs(&w, &est, HfsOptions::default());
            let b = run_baseline(&w, &est);
            assert_eq!(h.estimates, b.estimates);
            assert_eq!(h.estimations, 1);
        }
    }

    #[test]
    fn fingerprint_tracks_world() {
        let c = cfg(4, 1, 0.0);
        let a = TrialWorld::new(&c, 1).unwrap();
        let b = TrialWorld::new(&c, 1).unwrap();
        let d = TrialWorld::new(&c, 2).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), d.fingerprint());
    }

    #[test]
    fn ues_sharing_a_secondary_see_the_same_stage1_part() {
        let c = cfg(6, 3, 30.0);
        let aau = vec![[0.0, 0.0], [400.0, 0.0], [-400.0, 0.0], [0.0, 400.0], [0.0, -400.0], [300.0, 300.0]];
        let topo = Topology::from_parts(
            aau,
            vec![[390.0, 20.0], [410.0, -15.0], [-380.0, 5.0]],
            vec![0.1, -0.2, 0.05, 0.17, -0.08, 0.22],
            vec![0.03, -0.11, 0.2],
            vec![[30.0, 0.0], [0.0, -30.0], [-21.0, 21.0]],
        );
        assert_eq!(topo.secondary[0], topo.secondary[1]);
        let w = TrialWorld::with_topology(&c, topo, 7).unwrap();
        let est = MusicEstimator::new(&c, &w.map);
        let r = run_hfs(&w, &est, HfsOptions::default());
        let err = r.errors();
        let common = |m: usize, k: usize| err[(m, k)] - r.stage2_errors[k] - doppler_residual(&w, m, k);
        for m in 0..6 {
            assert!((common(m, 0) - common(m, 1)).abs() < 1e-14);
            let expect = r.stage1_errors[m] - r.stage1_errors[w.topo.secondary[2]];
            assert!((common(m, 2) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn distant_link_error_dominates_near_link() {
        let c = SystemConfig {
            shadow_var_db: 0.0,
            ..cfg(2, 1, 0.0)
        };
        let r_cell = c.cell_radius_m;
        let mut near = Vec::new();
        let mut far = Vec::new();
        for t in 0..200u64 {
            let mut rng = Seed(t).rng();
            let bias = |rng: &mut rand_chacha::ChaCha8Rng| rng.random_range(-0.25..0.25);
            let topo = Topology::from_parts(
                vec![[r_cell / 100.0, 0.0], [-r_cell, 0.0]],
                vec![[0.0, 0.0]],
                vec![bias(&mut rng), bias(&mut rng)],
                vec![bias(&mut rng)],
                vec![[0.0, 0.0]],
            );
            let w = TrialWorld::with_topology(&c, topo, trial_seed(c.master_seed, t)).unwrap();
            let est = MusicEstimator::new(&c, &w.map);
            let e = run_baseline(&w, &est).errors();
            near.push(e[(0, 0)].powi(2));
            far.push(e[(1, 0)].powi(2));
        }
        near.sort_by(f64::total_cmp);
        far.sort_by(f64::total_cmp);
        assert!(near.iter().zip(&far).all(|(n, f)| n <= f));
        assert!(far[100] > 10.0 * near[100]);
    }
}
