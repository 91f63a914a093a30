use ddfiber::ensemble::{
    contour_noise, run_ensemble, sweep_waveplates, ExperimentConfig, InputState, SequenceSpec,
};
use ddfiber::jones::{apply, DensityMatrix2, JonesState};
use ddfiber::noise::{sample_profile, FiberProfile, NoiseParams};
use ddfiber::sequence::{build_propagator, residual_phase, PulseSequence, SequenceKind};
use proptest::prelude::*;

fn moderate(sigma_phase: f64, n: usize) -> ExperimentConfig {
    ExperimentConfig {
        noise: NoiseParams {
            sigma_phase,
            ..NoiseParams::default()
        },
        ensemble_size: n,
        base_seed: 21,
        ..ExperimentConfig::default()
    }
}

#[test]
fn more_plates_do_not_hurt_at_moderate_noise() {
    let rows = sweep_waveplates(&moderate(1.0, 4096), &[0, 2, 4, 8, 16, 32, 64, 128]).unwrap();
    for w in rows.windows(2) {
        let (a, b) = (w[0].1, w[1].1);
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!(
            b.mean >= a.mean - 3.0 * se,
            "{} -> {}: {} vs {}",
            w[0].0,
            w[1].0,
            a.mean,
            b.mean
        );
    }
    assert!(rows.last().unwrap().1.mean > 0.99);
    assert!(rows[0].1.mean < 0.7);
}

#[test]
fn more_phase_noise_does_not_help() {
    let c = ExperimentConfig {
        sequence: SequenceSpec::cpmg(8),
        ..moderate(1.0, 2048)
    };
    let t = contour_noise(&c, &[0.1, 0.3], &[0.0, 0.25, 0.5, 1.0, 2.0, 4.0]).unwrap();
    for i in 0..2 {
        for j in 1..6 {
            let (a, b) = (t.get(i, j - 1), t.get(i, j));
            let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
            assert!(b.mean <= a.mean + 3.0 * se);
        }
    }
}

#[test]
fn estimator_is_consistent_over_many_seeds() {
    let sigma2: f64 = 2.0;
    let want = 0.5 * (1.0 + (-sigma2 / 2.0).exp());
    let mut hits = 0;
    for seed in 0..200 {
        let c = ExperimentConfig {
            noise: NoiseParams {
                sigma_seg_len: 0.0,
                sigma_phase: sigma2.sqrt(),
                ..NoiseParams::default()
            },
            fiber_length: 1.0,
            ensemble_size: 2000,
            base_seed: seed,
            ..ExperimentConfig::default()
        };
        let e = run_ensemble(&c).unwrap();
        if (e.mean - want).abs() <= 3.0 * e.std_error {
            hits += 1;
        }
    }
    assert!(hits >= 196, "{hits}/200");
}

#[test]
fn phase_variance_adds_over_segments() {
    // L segments of fixed unit length: total phase variance L sigma^2
    let c = ExperimentConfig {
        noise: NoiseParams {
            sigma_seg_len: 0.0,
            sigma_phase: 0.5,
            ..NoiseParams::default()
        },
        fiber_length: 6.0,
        ensemble_size: 20_000,
        ..ExperimentConfig::default()
    };
    let e = run_ensemble(&c).unwrap();
    let want = 0.5 * (1.0 + (-0.5 * 6.0 * 0.25f64).exp());
    assert!(
        (e.mean - want).abs() <= 4.0 * e.std_error,
        "{} vs {want}",
        e.mean
    );
}

#[test]
fn minus45_behaves_like_plus45() {
    let a = run_ensemble(&ExperimentConfig {
        sequence: SequenceSpec::cpmg(4),
        ..moderate(1.0, 1000)
    })
    .unwrap();
    let b = run_ensemble(&ExperimentConfig {
        input_state: InputState::Minus45,
        sequence: SequenceSpec::cpmg(4),
        ..moderate(1.0, 1000)
    })
    .unwrap();
    assert!((a.mean - b.mean).abs() < 1e-12);
}

#[test]
fn sampled_profiles_round_trip_through_json() {
    let p = sample_profile(&NoiseParams::default(), 12.5, 3).unwrap();
    assert_eq!(FiberProfile::from_json(&p.to_json()).unwrap(), p);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagator_matches_scalar_phase(
        seed in 0u64..1000,
        sigma in 0.0..20.0f64,
        n in 0usize..24,
        kind in prop_oneof![Just(SequenceKind::Cpmg), Just(SequenceKind::Pdd), Just(SequenceKind::Udd)],
    ) {
        let noise = NoiseParams { sigma_phase: sigma, seed, ..NoiseParams::default() };
        let profile = sample_profile(&noise, 8.0, 1).unwrap();
        let seq = if n == 0 { PulseSequence::none(8.0).unwrap() } else { PulseSequence::generate(kind, n, 8.0).unwrap() };
        let u = build_propagator(&profile, &seq).unwrap();
        let psi = JonesState::diagonal();
        let f = DensityMatrix2::pure(&apply(&u, &psi)).expectation(&psi).re;
        let phi = residual_phase(&profile, &seq).unwrap();
        prop_assert!((f - 0.5 * (1.0 + phi.cos())).abs() < 1e-10);
        prop_assert!(u.unitarity_error() < 1e-11);
    }
}
