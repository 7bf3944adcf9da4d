use hfsync::analysis::{complexity_hfs, complexity_music_baseline, complexity_pbee, ComplexityInputs};
use hfsync::montecarlo::{make_cdf, median, mse_values, run_experiment_with, speed_sweep, RunOptions};
use hfsync::scenario::Device;
use hfsync::seed::trial_seed;
use hfsync::selftest::{run_selftest, SelftestOptions};
use hfsync::sync::TrialWorld;
use hfsync::SystemConfig;
use serde_json::json;

use crate::output::{Csv, Run};
use crate::{CliError, ComplexityArgs, Common, MseArgs, SelftestArgs, SpeedArgs};

fn options(common: &Common) -> RunOptions {
    RunOptions {
        estimator: common.estimator.into(),
        jobs: common.jobs,
    }
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() {
        Err(CliError::Usage(format!("--{name} needs at least one value")))
    } else {
        Ok(())
    }
}

pub fn mse(args: MseArgs) -> Result<(), CliError> {
    let cfg = args.common.load()?;
    nonempty("scheme", &args.scheme)?;
    nonempty("aaus", &args.aaus)?;
    let mut schemes = args.scheme.clone();
    schemes.sort();
    schemes.dedup();

    let mut run = Run::start(&args.common.out, "mse")?;
    let mut table = Csv::new(&["scheme", "M", "trial_rank", "mse", "cum_prob"]);
    for &m in &args.aaus {
        let c = SystemConfig { n_aaus: m, ..cfg.clone() };
        let results = run_experiment_with(&c, &schemes, options(&args.common))?;
        for &s in &schemes {
            let values = mse_values(&results, s);
            let failures: usize = results.iter().filter(|r| r.scheme == s).map(|r| r.failures).sum();
            println!(
                "{s:>8} M={m:<3} median MSE {:.4e} over {} trials ({failures} failed links)",
                median(&values),
                values.len()
            );
            for (rank, (v, p)) in make_cdf(&values)?.points.into_iter().enumerate() {
                table.row(&[&s, &m, &(rank + 1), &v, &p]);
            }
        }
    }
    run.write_csv("mse_cdf.csv", &table)?;

    if args.dump_burst {
        let w = TrialWorld::new(&cfg, trial_seed(cfg.master_seed, 0))?;
        let (ue, sec) = (Device::Ue(0), Device::Aau(w.topo.secondary[0]));
        let burst = w.receive(ue, sec, w.true_cfo(ue, sec));
        let mut buf = Vec::new();
        burst.write_csv(&mut buf).expect("writing to memory");
        run.write("burst.csv", &String::from_utf8(buf).expect("CSV is ASCII"))?;
    }

    let schemes: Vec<String> = schemes.iter().map(|s| s.to_string()).collect();
    let path = run.finish(&cfg, json!({ "schemes": schemes, "aaus": args.aaus }))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn speed(args: SpeedArgs) -> Result<(), CliError> {
    let cfg = args.common.load()?;
    nonempty("speeds", &args.speeds)?;
    if let Some(v) = args.speeds.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(CliError::Usage(format!("speed {v} must be finite and nonnegative")));
    }

    let mut run = Run::start(&args.common.out, "speed")?;
    let sweep = speed_sweep(&cfg, &args.speeds, options(&args.common))?;
    let mut cdf = Csv::new(&["speed_mps", "trial_rank", "mse", "cum_prob"]);
    for (v, results) in &sweep.runs {
        let values: Vec<f64> = results.iter().map(|r| r.mse).collect();
        for (rank, (x, p)) in make_cdf(&values)?.points.into_iter().enumerate() {
            cdf.row(&[v, &(rank + 1), &x, &p]);
        }
    }
    let mut theory = Csv::new(&[
        "speed_mps",
        "empirical_mse",
        "theory_mse",
        "sigma1_sq",
        "sigma2_sq",
        "abs_diff",
    ]);
    for t in &sweep.theory {
        theory.row(&[&t.speed_mps, &t.empirical_mse, &t.theory_mse, &t.sigma1_sq, &t.sigma2_sq, &t.abs_diff]);
        println!(
            "v={:>6} m/s  empirical {:.4e}  theory {:.4e}  |diff| {:.2e}",
            t.speed_mps, t.empirical_mse, t.theory_mse, t.abs_diff
        );
    }
    run.write_csv("speed_cdf.csv", &cdf)?;
    run.write_csv("theory_vs_sim.csv", &theory)?;
    let path = run.finish(&cfg, json!({ "speeds": args.speeds }))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn complexity(args: ComplexityArgs) -> Result<(), CliError> {
    let cfg = SystemConfig::load(args.config.as_deref(), &args.overrides)?;
    nonempty("aaus", &args.aaus)?;
    nonempty("ues", &args.ues)?;
    if args.aaus.contains(&0) || args.ues.contains(&0) {
        return Err(CliError::Usage("AAU and UE counts must be positive".into()));
    }
    let mut run = Run::start(&args.out, "complexity")?;
    let mut table = Csv::new(&["M", "K", "hfs_ops", "music_ops", "pbee_ops"]);
    for &m in &args.aaus {
        for &k in &args.ues {
            let c = ComplexityInputs {
                m,
                k,
                ..ComplexityInputs::from_config(&cfg, args.epsilon)
            };
            table.row(&[&m, &k, &complexity_hfs(&c), &complexity_music_baseline(&c), &complexity_pbee(&c)]);
        }
    }
    run.write_csv("complexity.csv", &table)?;
    let path = run.finish(
        &cfg,
        json!({ "aaus": args.aaus, "ues": args.ues, "epsilon": args.epsilon }),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn selftest(args: SelftestArgs) -> Result<(), CliError> {
    let outcomes = run_selftest(&SelftestOptions {
        filter: args.filter.clone(),
        flip_stage1_sign: args.inject_sign_flip,
    });
    if outcomes.is_empty() {
        return Err(CliError::Usage(format!(
            "no check matches `{}`",
            args.filter.unwrap_or_default()
        )));
    }
    let mut failed = 0;
    for o in &outcomes {
        println!("{} {:<24} {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} of {} checks failed", outcomes.len())));
    }
    println!("all {} checks passed", outcomes.len());
    Ok(())
}
