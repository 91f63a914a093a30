//! Plate layouts of the built-in sequences, and what a systematic
//! over-rotation does to CPMG and CP.
//!
//! cargo run --example pulse_sequences

use ddfiber::jones::{apply, fidelity, DensityMatrix2, JonesState};
use ddfiber::noise::FiberProfile;
use ddfiber::sequence::{build_propagator, PulseError, PulseSequence, SequenceKind};

fn main() -> ddfiber::Result<()> {
    for kind in [
        SequenceKind::Cpmg,
        SequenceKind::Cp,
        SequenceKind::Pdd,
        SequenceKind::Udd,
    ] {
        let s = PulseSequence::generate(kind, 4, 1.0)?;
        let pos: Vec<String> = s.positions().iter().map(|x| format!("{x:.4}")).collect();
        println!("{kind:<5} axis {:?}  {}", s.axis(), pos.join(" "));
    }
    let two = PulseSequence::cpmg(4, 8.0)?.repeated_cycles(2)?;
    println!("CPMG-4 cycle twice over 16: {:?}", two.positions());

    // the +45 state through a plain fiber with 5% over-rotated plates
    let psi = JonesState::diagonal();
    let fiber = FiberProfile::constant(0.9, 16.0)?;
    let err = PulseError {
        rotation: 0.05 * std::f64::consts::PI,
        axis_tilt: 0.0,
    };
    println!("\n{:>6} {:>12} {:>12}", "pulses", "CPMG", "CP");
    for n in [4, 16, 64] {
        let f = |s: PulseSequence| -> ddfiber::Result<f64> {
            let u = build_propagator(&fiber, &s.with_pulse_error(err))?;
            Ok(fidelity(&psi, &DensityMatrix2::pure(&apply(&u, &psi))))
        };
        println!(
            "{n:>6} {:>12.6} {:>12.6}",
            f(PulseSequence::cpmg(n, 16.0)?)?,
            f(PulseSequence::cp(n, 16.0)?)?
        );
    }
    Ok(())
}
