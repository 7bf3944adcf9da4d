//! Multi-trial experiments, empirical CDFs and theory-vs-simulation tables.
//!
//! Trial `t` uses the seed `trial_seed(master_seed, t)`; every scheme in a
//! trial runs against the same [`TrialWorld`], so scheme comparisons are
//! paired. Trials run on a rayon pool and are reduced in trial order, so
//! results do not depend on the worker count.

use rayon::prelude::*;

use crate::analysis::{mse_simplified, TheoryInputs};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimator::MusicEstimator;
use crate::ofdm::make_map;
use crate::seed::trial_seed;
use crate::sync::{run_scheme, LinkEstimator, Scheme, TrialWorld, TruthOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimatorKind {
    #[default]
    Music,
    /// Exact CFOs; isolates the Doppler residual of the scheme structure.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub estimator: EstimatorKind,
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub scheme: Scheme,
    /// Mean squared CFO error over the non-failed links; NaN if all failed.
    pub mse: f64,
    pub stage1_mse: Option<f64>,
    pub stage2_mse: Option<f64>,
    pub stage1_sq_sum: f64,
    pub stage1_count: usize,
    pub stage2_sq_sum: f64,
    pub stage2_count: usize,
    pub failures: usize,
    pub links: usize,
    /// Fingerprint of the shared trial world.
    pub world: u64,
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::config("jobs", "must be at least 1"));
        }
        b = b.num_threads(j);
    }
    b.build().map_err(|e| Error::ConfigParse(format!("thread pool: {e}")))
}

pub fn run_trial(
    cfg: &SystemConfig,
    t: usize,
    schemes: &[Scheme],
    est: &dyn LinkEstimator,
) -> Result<Vec<TrialResult>> {
    let world = TrialWorld::new(cfg, trial_seed(cfg.master_seed, t as u64))?;
    let fp = world.fingerprint();
    Ok(schemes
        .iter()
        .map(|&s| {
            let r = run_scheme(&world, est, s);
            let s1: Vec<f64> = r.stage1_sq_errors().collect();
            let s2: Vec<f64> = r
                .stage2_errors
                .iter()
                .filter(|e| e.is_finite())
                .map(|e| e * e)
                .collect();
            TrialResult {
                trial: t,
                scheme: s,
                mse: r.mse().unwrap_or(f64::NAN),
                stage1_mse: r.stage1_mse(),
                stage2_mse: r.stage2_mse(),
                stage1_sq_sum: s1.iter().sum(),
                stage1_count: s1.len(),
                stage2_sq_sum: s2.iter().sum(),
                stage2_count: s2.len(),
                failures: r.failures(),
                links: r.estimates.len(),
                world: fp,
            }
        })
        .collect())
}

/// Run `cfg.trials` trials of every scheme. Results are ordered by trial,
/// then by the order of `schemes`.
pub fn run_experiment_with(cfg: &SystemConfig, schemes: &[Scheme], opts: RunOptions) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    let music;
    let est: &dyn LinkEstimator = match opts.estimator {
        EstimatorKind::Music => {
            music = MusicEstimator::new(cfg, &make_map(cfg)?);
            &music
        }
        EstimatorKind::Oracle => &TruthOracle,
    };
    let per_trial: Vec<Result<Vec<TrialResult>>> = pool(opts.jobs)?.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, t, schemes, est))
            .collect()
    });
    let mut out = Vec::with_capacity(cfg.trials * schemes.len());
    for r in per_trial {
        out.extend(r?);
    }
    Ok(out)
}

pub fn run_experiment(cfg: &SystemConfig, schemes: &[Scheme]) -> Result<Vec<TrialResult>> {
    run_experiment_with(cfg, schemes, RunOptions::default())
}

/// Per-trial MSE values of one scheme, in trial order.
pub fn mse_values(results: &[TrialResult], scheme: Scheme) -> Vec<f64> {
    results.iter().filter(|r| r.scheme == scheme).map(|r| r.mse).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    /// `(value, cumulative probability)`, ascending.
    pub points: Vec<(f64, f64)>,
}

impl CdfTable {
    /// Smallest value whose cumulative probability reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let idx = self
            .points
            .iter()
            .position(|&(_, c)| c >= p - 1e-12)
            .unwrap_or(self.points.len() - 1);
        self.points[idx].0
    }
}

/// Empirical CDF: the i-th smallest of T values gets probability i / T.
pub fn make_cdf(values: &[f64]) -> Result<CdfTable> {
    if values.is_empty() {
        return Err(Error::Empty("no values for CDF"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let t = v.len() as f64;
    Ok(CdfTable {
        points: v
            .into_iter()
            .enumerate()
            .map(|(i, x)| (x, (i + 1) as f64 / t))
            .collect(),
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryRow {
    pub speed_mps: f64,
    pub empirical_mse: f64,
    pub theory_mse: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone)]
pub struct SpeedSweep {
    /// HFS trial results per speed, in input order.
    pub runs: Vec<(f64, Vec<TrialResult>)>,
    pub theory: Vec<TheoryRow>,
}

/// Compare the measured HFS MSE with the closed-form prediction fed by the
/// measured per-stage MSEs.
pub fn theory_row(cfg: &SystemConfig, speed: f64, results: &[TrialResult]) -> TheoryRow {
    let hfs: Vec<&TrialResult> = results.iter().filter(|r| r.scheme == Scheme::Hfs).collect();
    let ratio = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    let sigma1_sq = ratio(
        hfs.iter().map(|r| r.stage1_sq_sum).sum(),
        hfs.iter().map(|r| r.stage1_count).sum(),
    );
    let sigma2_sq = ratio(
        hfs.iter().map(|r| r.stage2_sq_sum).sum(),
        hfs.iter().map(|r| r.stage2_count).sum(),
    );
    let finite: Vec<f64> = hfs.iter().map(|r| r.mse).filter(|m| m.is_finite()).collect();
    let empirical_mse = ratio(finite.iter().sum(), finite.len());
    let t = TheoryInputs {
        speed_mps: speed,
        ..TheoryInputs::from_config(cfg, sigma1_sq, sigma2_sq)
    };
    let theory_mse = mse_simplified(&t);
    TheoryRow {
        speed_mps: speed,
        empirical_mse,
        theory_mse,
        sigma1_sq,
        sigma2_sq,
        abs_diff: (theory_mse - empirical_mse).abs(),
    }
}

/// Run the HFS experiment at each speed (same seeds, so trials are paired
/// across speeds) and tabulate theory against simulation.
pub fn speed_sweep(cfg: &SystemConfig, speeds: &[f64], opts: RunOptions) -> Result<SpeedSweep> {
    if speeds.is_empty() {
        return Err(Error::Empty("no speeds given"));
    }
    let mut runs = Vec::with_capacity(speeds.len());
    let mut theory = Vec::with_capacity(speeds.len());
    for &v in speeds {
        let c = SystemConfig {
            ue_speed_mps: v,
            ..cfg.clone()
        };
        let res = run_experiment_with(&c, &[Scheme::Hfs], opts)?;
        theory.push(theory_row(&c, v, &res));
        runs.push((v, res));
    }
    Ok(SpeedSweep { runs, theory })
}

pub fn theory_vs_sim(cfg: &SystemConfig, speeds: &[f64], opts: RunOptions) -> Result<Vec<TheoryRow>> {
    Ok(speed_sweep(cfg, speeds, opts)?.theory)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(m: usize, trials: usize) -> SystemConfig {
        SystemConfig {
            n_aaus: m,
            trials,
            ..Default::default()
        }
    }

    #[test]
    fn cdf_examples() {
        let c = make_cdf(&[4.0]).unwrap();
        assert_eq!(c.points, vec![(4.0, 1.0)]);
        let c = make_cdf(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(c.points, vec![(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)]);
        assert!(make_cdf(&[]).is_err());
        let vals: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64 * 0.01).collect();
        let c = make_cdf(&vals).unwrap();
        assert_eq!(c.points.last().unwrap(), &(0.49, 1.0));
        assert!(c.points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
        assert_eq!(c.points[0].1, 1.0 / 50.0);
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn deterministic_and_paired() {
        let cfg = quick(8, 3);
        let a = run_experiment(&cfg, &Scheme::ALL).unwrap();
        let b = run_experiment_with(
            &cfg,
            &Scheme::ALL,
            RunOptions {
                jobs: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        for pair in a.chunks(2) {
            assert_eq!(pair[0].trial, pair[1].trial);
            assert_eq!(pair[0].world, pair[1].world);
            assert_eq!(pair[0].scheme, Scheme::Hfs);
            assert_eq!(pair[1].scheme, Scheme::Baseline);
        }
        assert_ne!(a[0].world, a[2].world);
    }

    #[test]
    fn adding_a_scheme_does_not_perturb_another() {
        let cfg = quick(6, 2);
        let both = run_experiment(&cfg, &Scheme::ALL).unwrap();
        let hfs = run_experiment(&cfg, &[Scheme::Hfs]).unwrap();
        assert_eq!(mse_values(&both, Scheme::Hfs), mse_values(&hfs, Scheme::Hfs));
    }

    #[test]
    fn oracle_zero_speed_theory_is_zero() {
        let cfg = quick(8, 4);
        let rows = theory_vs_sim(
            &cfg,
            &[0.0],
            RunOptions {
                estimator: EstimatorKind::Oracle,
                jobs: None,
            },
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].empirical_mse.abs() < 1e-28);
        assert_eq!(rows[0].theory_mse, 0.0);
    }

    #[test]
    fn empty_speeds_rejected() {
        assert!(speed_sweep(&quick(4, 1), &[], RunOptions::default()).is_err());
    }
}
