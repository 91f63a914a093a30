//! Fixed birefringence is undone exactly by any CPMG sequence, while a
//! random fiber is only partly refocused.
//!
//! cargo run --example echo_refocusing

use ddfiber::jones::{apply, fidelity, DensityMatrix2, JonesState};
use ddfiber::noise::{sample_profile, FiberProfile, NoiseParams};
use ddfiber::sequence::{build_propagator, residual_phase, PulseSequence};

fn main() -> ddfiber::Result<()> {
    let psi = JonesState::diagonal();
    let fixed = FiberProfile::constant(3.7, 8.0)?;
    let random = sample_profile(
        &NoiseParams {
            sigma_phase: 0.5,
            seed: 7,
            ..NoiseParams::default()
        },
        8.0,
        1,
    )?;

    println!(
        "{:>6} {:>14} {:>14} {:>14}",
        "pulses", "F fixed", "F random", "residual"
    );
    for n in [0, 1, 2, 4, 8, 16, 32] {
        let seq = if n == 0 {
            PulseSequence::none(8.0)?
        } else {
            PulseSequence::cpmg(n, 8.0)?
        };
        let f_fixed = fidelity(
            &psi,
            &DensityMatrix2::pure(&apply(&build_propagator(&fixed, &seq)?, &psi)),
        );
        let f_random = fidelity(
            &psi,
            &DensityMatrix2::pure(&apply(&build_propagator(&random, &seq)?, &psi)),
        );
        println!(
            "{n:>6} {f_fixed:>14.10} {f_random:>14.10} {:>14.6}",
            residual_phase(&random, &seq)?
        );
    }
    Ok(())
}
