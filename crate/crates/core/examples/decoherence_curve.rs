//! Decoherence function W(L) with no plates and with four-pulse CPMG, for
//! exponentially correlated birefringence.
//!
//! cargo run --example decoherence_curve -- [correlation_scale]

use ddfiber::filter::{w_curve, FilterSpec, SpectralModel};

fn main() -> ddfiber::Result<()> {
    let ell = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1.0);
    let model = SpectralModel::lorentzian(1.0, ell)?;
    let lengths: Vec<f64> = (1..=20).map(|i| i as f64 * 0.25).collect();
    let free = w_curve(&model, &FilterSpec::Free, &lengths)?;
    let cpmg = w_curve(&model, &FilterSpec::cpmg(4)?, &lengths)?;
    println!("# LORENTZIAN amplitude 1 correlation_scale {ell}");
    println!("L,w_free,w_cpmg4");
    for ((l, a), (_, b)) in free.iter().zip(&cpmg) {
        println!("{l},{a:.10},{b:.10}");
    }
    Ok(())
}
