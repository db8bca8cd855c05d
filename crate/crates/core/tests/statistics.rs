use aqds_core::adversary::{collision_experiment, forgery_known_signature_with, IrreducibleProduct, KnownSignatureSetup};
use aqds_core::baselines::ext_round;
use aqds_core::protocol::VerificationOutcome;
use aqds_core::BitString;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn collision_rate_respects_bound() {
    let r = collision_experiment(10, 32, 20_000, 11).unwrap();
    assert!(r.passes(), "{r:?}");
    assert_eq!(r.bound, 1.0 / 16.0);
}

/// Fraction of the 2^n seeds times fraction of irreducibles a 3-factor
/// difference hits: 3/99 + (96/99) / 1024 at n = 10, m = 32.
#[test]
fn product_strategy_hits_expected_rate() {
    let setup = KnownSignatureSetup {
        n: 10,
        m_bits: 32,
        receivers: 3,
        colluders: 3,
    };
    let trials = 20_000;
    let r = forgery_known_signature_with(setup, &IrreducibleProduct, trials, 3).unwrap();
    let expected: f64 = 3.0 / 99.0 + (96.0 / 99.0) / 1024.0;
    let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
    assert!((r.rate() - expected).abs() < 4.0 * sigma, "{r:?}");
    assert!(r.passes());
}

#[test]
fn extended_baseline_never_rejects_honest_rounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..2000 {
        let msg = BitString::random(64, &mut rng);
        let out = ext_round(&msg, 3, 16, &mut rng, None).unwrap();
        assert!(out.iter().all(|o| o.outcome == VerificationOutcome::Accepted));
    }
}
