use hfsync::analysis::*;
use hfsync::SystemConfig;
fn main() {
    for (v, r) in [(100.0, 1000.0), (100.0, 1.0), (10.0, 250.0)] {
        let cfg = SystemConfig { ue_speed_mps: v, cell_radius_m: r, ..Default::default() };
        let t = TheoryInputs::from_config(&cfg, 0.0, 0.0);
        let s = std::time::Instant::now();
        let d = doppler_mse_integral(&t).unwrap();
        println!("{v} {r}: {d:.12e} vs simplified {:.12e}  ({:?})", mse_simplified(&t), s.elapsed());
    }
}
