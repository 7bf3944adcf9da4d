use hfsync::montecarlo::*;
use hfsync::sync::Scheme;
use hfsync::SystemConfig;
fn main() {
    let args: Vec<String> = std::env::args().collect();
    let noise: f64 = args[1].parse().unwrap();
    let seed: u64 = args[2].parse().unwrap();
    let mut c2 = true;
    let mut base64 = 0.0;
    for m in [16usize, 64] {
        let cfg = SystemConfig { n_aaus: m, noise_power_dbm: noise, master_seed: seed, ..Default::default() };
        let r = run_experiment(&cfg, &Scheme::ALL).unwrap();
        let mut h = mse_values(&r, Scheme::Hfs); let mut b = mse_values(&r, Scheme::Baseline);
        h.sort_by(f64::total_cmp); b.sort_by(f64::total_cmp);
        c2 &= h.iter().zip(&b).all(|(x,y)| x<=y) && median(&h) <= 0.1*median(&b);
        if m == 64 { base64 = median(&b); }
    }
    let cfg = SystemConfig { noise_power_dbm: noise, master_seed: seed, ..Default::default() };
    let sw = speed_sweep(&cfg, &[0.0,10.0,50.0,100.0], RunOptions::default()).unwrap();
    let meds: Vec<f64> = sw.runs.iter().map(|(_,r)| median(&mse_values(r, Scheme::Hfs))).collect();
    let mono = meds.windows(2).all(|w| w[0] <= w[1]);
    let c3 = mono && meds[1] < 1.25*meds[0] && meds[3] < base64;
    let maxd = sw.theory.iter().map(|t| t.abs_diff).fold(0.0, f64::max);
    println!("noise {noise} seed {seed}: c2 {c2} c3 {c3} (mono {mono} r10 {:.3}) c4 {} maxdiff {:.2e}", meds[1]/meds[0], maxd <= 2e-3, maxd);
}
