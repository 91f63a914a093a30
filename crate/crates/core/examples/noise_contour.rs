//! Fidelity over segment-length and phase noise with 32 CPMG plates.
//!
//! cargo run --release --example noise_contour

use ddfiber::ensemble::{contour_noise, ExperimentConfig, SequenceSpec};

fn main() -> ddfiber::Result<()> {
    let sigma_len = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
    let sigma_phase = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
    let c = ExperimentConfig {
        sequence: SequenceSpec::cpmg(32),
        ensemble_size: 2048,
        ..ExperimentConfig::default()
    };
    let t = contour_noise(&c, &sigma_len, &sigma_phase)?;
    print!("{:>8}", "sL \\ sP");
    for sp in sigma_phase {
        print!("{sp:>8}");
    }
    println!();
    for (i, sl) in sigma_len.iter().enumerate() {
        print!("{sl:>8}");
        for j in 0..sigma_phase.len() {
            print!("{:>8.4}", t.get(i, j).mean);
        }
        println!();
    }
    Ok(())
}
