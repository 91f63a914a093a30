//! Fidelity of the +45 state against the number of CPMG plates, for a few
//! phase-noise strengths.
//!
//! cargo run --release --example waveplate_sweep

use ddfiber::ensemble::{sweep_waveplates, ExperimentConfig};
use ddfiber::noise::NoiseParams;

fn main() -> ddfiber::Result<()> {
    let counts = [0, 2, 4, 8, 16, 32, 64, 128, 256, 512];
    let sigmas = [0.5, 1.0, 2.0, 10.0];
    let mut columns = Vec::new();
    for sigma in sigmas {
        let c = ExperimentConfig {
            noise: NoiseParams {
                mean_seg_len: 1.0,
                sigma_seg_len: 0.3,
                sigma_phase: sigma,
                ..NoiseParams::default()
            },
            fiber_length: 8.0,
            ensemble_size: 4096,
            ..ExperimentConfig::default()
        };
        columns.push(sweep_waveplates(&c, &counts)?);
    }
    print!("{:>6}", "plates");
    for s in sigmas {
        print!("  sigma={s:<8}");
    }
    println!();
    for (i, n) in counts.iter().enumerate() {
        print!("{n:>6}");
        for col in &columns {
            print!("  {:.4}±{:.4}", col[i].1.mean, col[i].1.std_error);
        }
        println!();
    }
    Ok(())
}
