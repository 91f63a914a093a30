//! Fewest CPMG plates that keep the +45 state above a target fidelity.
//!
//! cargo run --release --example min_waveplates -- [target]

use ddfiber::ensemble::{min_waveplates, ExperimentConfig, MinWaveplates};
use ddfiber::noise::NoiseParams;

fn main() -> ddfiber::Result<()> {
    let target = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.99);
    println!("target {target}");
    for l in [4.0, 8.0, 16.0, 32.0] {
        let c = ExperimentConfig {
            noise: NoiseParams {
                sigma_seg_len: 0.3,
                sigma_phase: 1.0,
                ..NoiseParams::default()
            },
            fiber_length: l,
            ensemble_size: 2048,
            ..ExperimentConfig::default()
        };
        match min_waveplates(&c, target, 4096)? {
            MinWaveplates::Found { count, estimate } => {
                println!(
                    "L = {l:>4}: {count:>5} plates, F = {:.4} ± {:.4}",
                    estimate.mean, estimate.std_error
                )
            }
            MinWaveplates::NotAchievable => println!("L = {l:>4}: not reachable with 4096 plates"),
        }
    }
    Ok(())
}
