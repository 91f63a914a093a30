//! Draw one random fiber and look at it.
//!
//! cargo run --example fiber_profile -- [seed] [length]

use ddfiber::noise::{sample_profile, NoiseParams};

fn main() -> ddfiber::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let length = args.next().and_then(|s| s.parse().ok()).unwrap_or(6.0);

    let p = NoiseParams {
        sigma_phase: 2.0,
        seed,
        ..NoiseParams::default()
    };
    let profile = sample_profile(&p, length, 0)?;

    println!("{} segments covering {length}", profile.segments().len());
    println!(
        "{:>10} {:>10} {:>12} {:>14}",
        "start", "length", "phase_rate", "phase so far"
    );
    for (s, x) in profile.segments().iter().zip(profile.boundaries()) {
        let end = (x + s.length).min(length);
        println!(
            "{x:>10.4} {:>10.4} {:>12.4} {:>14.4}",
            s.length,
            s.phase_rate,
            profile.accumulated_phase(0.0, end)?
        );
    }
    println!("\n{}", profile.to_json());
    Ok(())
}
