//! Fidelity across fiber lengths at a fixed plate density.
//!
//! cargo run --release --example length_sweep -- [plates_per_unit_length]

use ddfiber::ensemble::{sweep_lengths, ExperimentConfig};
use ddfiber::noise::NoiseParams;

fn main() -> ddfiber::Result<()> {
    let density = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(8.0);
    let c = ExperimentConfig {
        noise: NoiseParams {
            sigma_seg_len: 0.3,
            sigma_phase: 1.0,
            ..NoiseParams::default()
        },
        ensemble_size: 4096,
        ..ExperimentConfig::default()
    };
    println!(
        "{:>8} {:>8} {:>10} {:>10}",
        "L", "plates", "fidelity", "std_error"
    );
    for r in sweep_lengths(&c, &[2.0, 4.0, 8.0, 16.0, 32.0, 64.0], density)? {
        println!(
            "{:>8} {:>8} {:>10.5} {:>10.5}",
            r.fiber_length, r.pulses, r.estimate.mean, r.estimate.std_error
        );
    }
    Ok(())
}
