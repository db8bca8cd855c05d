//! Monte Carlo attack experiments checked against the analytic bounds.
//!
//! Every trial draws its randomness from its own ChaCha stream derived from
//! a master seed and the trial index, so results do not depend on how the
//! trials are scheduled across threads.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bits::BitString;
use crate::error::Result;
use crate::gf2_hash::{collision_bound, sample_irreducible, Gf2Poly, LfsrToeplitzHasher};
use crate::keymat::{combine, distribute_keys, KeyBundle, SecurityParams};
use crate::netsim::{run_round, Action, AdversaryScript, NodeId, Rule, SignerConduct, TamperTarget, TamperableKind, Topology};
use crate::protocol::{arbitrator_verify, sign, ForwardPacket, ReceiverId, SignatureBundle, VerificationOutcome};

/// Standard deviations of binomial slack allowed above an analytic bound.
pub const Z_SLACK: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct AttackResult {
    pub experiment: String,
    pub trials: u64,
    pub successes: u64,
    /// Trials where the attack had nothing to attack (no honest party left).
    pub not_applicable: u64,
    pub bound: f64,
    pub z_slack: f64,
}

impl AttackResult {
    fn new(experiment: impl Into<String>, trials: u64, successes: u64, bound: f64) -> Self {
        AttackResult {
            experiment: experiment.into(),
            trials,
            successes,
            not_applicable: 0,
            bound,
            z_slack: Z_SLACK,
        }
    }

    pub fn rate(&self) -> f64 {
        let applicable = self.trials - self.not_applicable;
        if applicable == 0 {
            0.0
        } else {
            self.successes as f64 / applicable as f64
        }
    }

    /// `bound + z * sqrt(bound (1 - bound) / trials)`.
    pub fn threshold(&self) -> f64 {
        let applicable = (self.trials - self.not_applicable).max(1) as f64;
        self.bound + self.z_slack * (self.bound * (1.0 - self.bound) / applicable).sqrt()
    }

    pub fn passes(&self) -> bool {
        if self.bound == 0.0 {
            self.successes == 0
        } else {
            self.rate() <= self.threshold()
        }
    }
}

pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

fn count_parallel<F>(trials: u64, f: F) -> u64
where
    F: Fn(u64) -> bool + Sync,
{
    (0..trials).into_par_iter().filter(|&t| f(t)).count() as u64
}

/// A receiver with no information submits a uniformly random `(M', S')`.
/// Bound `2^-n`.
pub fn forgery_blind(n: u32, m_bits: u64, trials: u64, seed: u64) -> Result<AttackResult> {
    SecurityParams::with_n(m_bits, 1, n)?;
    let successes = count_parallel(trials, |t| {
        let mut rng = trial_rng(seed, t);
        let (receivers, arb) = distribute_keys(n as usize, 1, &mut rng).expect("validated sizes");
        let session = combine(&receivers, &arb).expect("equal sizes");
        let packet = ForwardPacket {
            receiver: ReceiverId(1),
            bundle: SignatureBundle {
                message: BitString::random(m_bits as usize, &mut rng),
                signature: BitString::random(2 * n as usize, &mut rng),
            },
            keys: receivers[0].clone(),
            sent_at: 0,
            received_at: 0,
        };
        arbitrator_verify(&packet, &session) == VerificationOutcome::Accepted
    });
    Ok(AttackResult::new("forgery-blind", trials, successes, 0.5f64.powi(n as i32)))
}

/// What a colluding receiver coalition sees before forging.
pub struct AdversaryView<'a> {
    pub n: usize,
    pub message: &'a BitString,
    pub signature: &'a BitString,
    /// Receiver keys `K_{s,i}` held by the coalition. The arbitrator's key is never included.
    pub known_keys: &'a [KeyBundle],
}

/// Pluggable forging strategy for the known-signature attack.
pub trait ForgeryStrategy: Sync {
    fn name(&self) -> &str;
    fn forge(&self, view: &AdversaryView<'_>, rng: &mut ChaCha8Rng) -> SignatureBundle;
}

/// Keeps `S` and replaces `M` by `M + D` where `D(x)` is a product of
/// distinct random irreducible degree-n polynomials (as many as fit below
/// degree m). The tag survives exactly when the secret polynomial divides
/// `D`, or the seed is zero.
pub struct IrreducibleProduct;

/// Like [`IrreducibleProduct`] with a single guessed polynomial, shifted to a random offset.
pub struct IrreducibleGuess;

/// Flips one random message bit, keeping `S`.
pub struct BitFlip;

/// Keeps `M` and substitutes a uniformly random signature.
pub struct RandomSignature;

fn with_difference(message: &BitString, diff: &Gf2Poly, shift: usize) -> BitString {
    let mut out = message.clone();
    for (i, c) in diff.coeffs().into_iter().enumerate() {
        if c {
            out.flip(i + shift);
        }
    }
    out
}

impl ForgeryStrategy for IrreducibleProduct {
    fn name(&self) -> &str {
        "irreducible-product"
    }

    fn forge(&self, view: &AdversaryView<'_>, rng: &mut ChaCha8Rng) -> SignatureBundle {
        let m = view.message.len();
        let factors = (m - 1) / view.n;
        if factors == 0 {
            return BitFlip.forge(view, rng);
        }
        let mut chosen: Vec<Gf2Poly> = Vec::with_capacity(factors);
        while chosen.len() < factors {
            let (p, _) = sample_irreducible(view.n, rng).expect("n >= 2");
            if !chosen.contains(&p) {
                chosen.push(p);
            }
        }
        let diff = chosen.iter().fold(Gf2Poly::one(), |acc, p| acc.mul(p));
        SignatureBundle {
            message: with_difference(view.message, &diff, 0),
            signature: view.signature.clone(),
        }
    }
}

impl ForgeryStrategy for IrreducibleGuess {
    fn name(&self) -> &str {
        "irreducible-guess"
    }

    fn forge(&self, view: &AdversaryView<'_>, rng: &mut ChaCha8Rng) -> SignatureBundle {
        let m = view.message.len();
        if m <= view.n {
            return BitFlip.forge(view, rng);
        }
        let (p, _) = sample_irreducible(view.n, rng).expect("n >= 2");
        let shift = rng.random_range(0..m - view.n);
        SignatureBundle {
            message: with_difference(view.message, &p, shift),
            signature: view.signature.clone(),
        }
    }
}

impl ForgeryStrategy for BitFlip {
    fn name(&self) -> &str {
        "bit-flip"
    }

    fn forge(&self, view: &AdversaryView<'_>, rng: &mut ChaCha8Rng) -> SignatureBundle {
        let mut message = view.message.clone();
        message.flip(rng.random_range(0..message.len()));
        SignatureBundle {
            message,
            signature: view.signature.clone(),
        }
    }
}

impl ForgeryStrategy for RandomSignature {
    fn name(&self) -> &str {
        "random-signature"
    }

    fn forge(&self, view: &AdversaryView<'_>, rng: &mut ChaCha8Rng) -> SignatureBundle {
        SignatureBundle {
            message: view.message.clone(),
            signature: BitString::random(view.signature.len(), rng),
        }
    }
}

/// Parameters for [`forgery_known_signature_with`].
#[derive(Clone, Copy, Debug)]
pub struct KnownSignatureSetup {
    pub n: u32,
    pub m_bits: u64,
    pub receivers: usize,
    /// How many receiver keys the coalition holds (`1..=receivers`).
    pub colluders: usize,
}

/// Coalition holding `(M, S)` and every receiver key attempts `(M', S')`
/// with `M' != M`, using the irreducible-product strategy. Bound `m / 2^(n-1)`.
pub fn forgery_known_signature(n: u32, m_bits: u64, trials: u64, seed: u64) -> Result<AttackResult> {
    let setup = KnownSignatureSetup {
        n,
        m_bits,
        receivers: 3,
        colluders: 3,
    };
    forgery_known_signature_with(setup, &IrreducibleProduct, trials, seed)
}

pub fn forgery_known_signature_with(
    setup: KnownSignatureSetup,
    strategy: &dyn ForgeryStrategy,
    trials: u64,
    seed: u64,
) -> Result<AttackResult> {
    let KnownSignatureSetup {
        n,
        m_bits,
        receivers: k,
        colluders,
    } = setup;
    SecurityParams::with_n(m_bits, k, n)?;
    let colluders = colluders.clamp(1, k);
    let successes = count_parallel(trials, |t| {
        let mut rng = trial_rng(seed, t);
        let (keys, arb) = distribute_keys(n as usize, k, &mut rng).expect("validated sizes");
        let session = combine(&keys, &arb).expect("equal sizes");
        let message = BitString::random(m_bits as usize, &mut rng);
        let (genuine, _) = sign(&message, &session, &mut rng).expect("validated sizes");
        let view = AdversaryView {
            n: n as usize,
            message: &genuine.message,
            signature: &genuine.signature,
            known_keys: &keys[..colluders],
        };
        let forged = strategy.forge(&view, &mut rng);
        if forged.message == genuine.message && forged.signature == genuine.signature {
            return false;
        }
        let packet = ForwardPacket {
            receiver: ReceiverId(1),
            bundle: forged,
            keys: keys[0].clone(),
            sent_at: 0,
            received_at: 0,
        };
        arbitrator_verify(&packet, &session) == VerificationOutcome::Accepted
    });
    Ok(AttackResult::new(
        format!("forgery-known-signature/{}/{}of{}", strategy.name(), colluders, k),
        trials,
        successes,
        collision_bound(m_bits, n),
    ))
}

/// Overall forgery bound: the larger of the blind and collision bounds.
pub fn forgery_bound(n: u32, m_bits: u64) -> f64 {
    0.5f64.powi(n as i32).max(collision_bound(m_bits, n))
}

/// Random hasher, random distinct message pair; a success is equal tags.
/// Bound `m / 2^(n-1)`.
pub fn collision_experiment(n: u32, m_bits: u64, trials: u64, seed: u64) -> Result<AttackResult> {
    SecurityParams::with_n(m_bits, 1, n)?;
    let successes = count_parallel(trials, |t| {
        let mut rng = trial_rng(seed, t);
        let (p, _) = sample_irreducible(n as usize, &mut rng).expect("n >= 2");
        let h = LfsrToeplitzHasher::new(p, BitString::random(n as usize, &mut rng)).expect("irreducible");
        let a = BitString::random(m_bits as usize, &mut rng);
        let mut b = BitString::random(m_bits as usize, &mut rng);
        while b == a {
            b = BitString::random(m_bits as usize, &mut rng);
        }
        h.hash(&a).expect("non-empty") == h.hash(&b).expect("non-empty")
    });
    Ok(AttackResult::new("collision", trials, successes, collision_bound(m_bits, n)))
}

/// All-honest rounds; a success is any receiver not accepting. Expected exactly 0.
pub fn robustness_experiment(
    topology: &Topology,
    security: SecurityParams,
    trials: u64,
    seed: u64,
) -> Result<AttackResult> {
    run_round(topology, security, &AdversaryScript::honest(), seed)?;
    let successes = count_parallel(trials, |t| {
        let round_seed = trial_rng(seed, t).random::<u64>();
        let transcript = run_round(topology, security, &AdversaryScript::honest(), round_seed)
            .expect("validated configuration");
        !transcript.all_accepted()
    });
    Ok(AttackResult::new("robustness", trials, successes, 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepudiationVerdict {
    /// Some honest receiver accepted yet the arbitrator confirmed none of them.
    Success,
    Failure,
    /// No honest receiver took part.
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RepudiationSetup {
    /// Fixed number of honest receivers; `None` draws `1..=k` per trial.
    pub honest_receivers: Option<usize>,
    pub dishonest_signer: bool,
}

impl Default for RepudiationSetup {
    fn default() -> Self {
        RepudiationSetup {
            honest_receivers: None,
            dishonest_signer: true,
        }
    }
}

/// One repudiation attempt: the signer picks random deviations, colluding
/// receivers misbehave on their forwards, honest receivers follow the protocol.
pub fn repudiation_trial<R: Rng>(
    topology: &Topology,
    security: SecurityParams,
    setup: RepudiationSetup,
    rng: &mut R,
) -> Result<RepudiationVerdict> {
    let k = topology.receivers();
    let honest_count = match setup.honest_receivers {
        Some(h) => h.min(k),
        None => rng.random_range(1..=k),
    };
    let honest: BTreeSet<ReceiverId> = sample(rng, k, honest_count)
        .into_iter()
        .map(|i| ReceiverId(i as u32 + 1))
        .collect();

    let mut script = AdversaryScript::honest();
    if setup.dishonest_signer {
        script.signer = SignerConduct {
            equivocate: rng.random_bool(0.5),
            garbage_to: topology.receiver_ids().filter(|_| rng.random_bool(0.3)).collect(),
            corrupt_timeout_keys: rng.random_bool(0.5),
        };
    }
    for r in topology.receiver_ids().filter(|r| !honest.contains(r)) {
        let action = match rng.random_range(0..4) {
            0 => Action::Drop,
            1 => Action::Delay(topology.deadline() + 1),
            2 => Action::Replace,
            _ => Action::Tamper {
                target: TamperTarget::Signature,
                positions: vec![rng.random_range(0..2 * security.n as usize)],
            },
        };
        script.rules.push(Rule {
            kind: TamperableKind::Forward,
            sender: Some(NodeId::Receiver(r)),
            receiver: Some(NodeId::Arbitrator),
            action,
        });
    }
    let transcript = run_round(topology, security, &script, rng.random())?;
    if honest.is_empty() {
        return Ok(RepudiationVerdict::NotApplicable);
    }
    let some_honest_accepted = honest
        .iter()
        .any(|r| transcript.reports[r].receiver_verdict == Some(VerificationOutcome::Accepted));
    let arbitrator_confirmed = honest
        .iter()
        .any(|r| transcript.status(*r) == Some(VerificationOutcome::Accepted));
    Ok(if some_honest_accepted && !arbitrator_confirmed {
        RepudiationVerdict::Success
    } else {
        RepudiationVerdict::Failure
    })
}

pub fn repudiation_experiment(
    topology: &Topology,
    security: SecurityParams,
    trials: u64,
    seed: u64,
) -> Result<AttackResult> {
    repudiation_experiment_with(topology, security, RepudiationSetup::default(), trials, seed)
}

pub fn repudiation_experiment_with(
    topology: &Topology,
    security: SecurityParams,
    setup: RepudiationSetup,
    trials: u64,
    seed: u64,
) -> Result<AttackResult> {
    // surface configuration errors before spawning trials
    run_round(topology, security, &AdversaryScript::honest(), seed)?;
    let verdicts: Vec<RepudiationVerdict> = (0..trials)
        .into_par_iter()
        .map(|t| {
            repudiation_trial(topology, security, setup, &mut trial_rng(seed, t))
                .expect("validated configuration")
        })
        .collect();
    let mut result = AttackResult::new(
        "repudiation",
        trials,
        verdicts.iter().filter(|v| **v == RepudiationVerdict::Success).count() as u64,
        0.0,
    );
    result.not_applicable = verdicts
        .iter()
        .filter(|v| **v == RepudiationVerdict::NotApplicable)
        .count() as u64;
    Ok(result)
}

pub fn summary_header() -> &'static str {
    "experiment,trials,successes,not_applicable,rate,bound,threshold,pass"
}

pub fn summary_row(r: &AttackResult) -> String {
    format!(
        "{},{},{},{},{:e},{:e},{:e},{}",
        r.experiment,
        r.trials,
        r.successes,
        r.not_applicable,
        r.rate(),
        r.bound,
        r.threshold(),
        if r.passes() { "pass" } else { "FAIL" }
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2_hash::decode_poly;
    use crate::keymat::SessionKeys;

    /// Brute force over every 2n-bit signature for fixed keys and message.
    fn accepting_signatures(session: &SessionKeys, message: &BitString) -> usize {
        let n = session.n();
        (0u32..1 << (2 * n))
            .filter(|s| {
                let sig: BitString = (0..2 * n).map(|i| (s >> i) & 1 == 1).collect();
                let d = session.xs.xor(&sig).unwrap();
                let (tag, r) = d.split_at(n);
                decode_poly(&r).is_some_and(|p| {
                    LfsrToeplitzHasher::new(p, session.ys.clone())
                        .unwrap()
                        .hash(message)
                        .unwrap()
                        == tag
                })
            })
            .count()
    }

    #[test]
    fn exhaustive_blind_forgery_at_n2() {
        for seed in 0..20 {
            let mut rng = trial_rng(seed, 0);
            let (rs, arb) = distribute_keys(2, 1, &mut rng).unwrap();
            let session = combine(&rs, &arb).unwrap();
            for m in 0u32..16 {
                let msg: BitString = (0..4).map(|i| (m >> i) & 1 == 1).collect();
                assert_eq!(accepting_signatures(&session, &msg), 1);
            }
        }
    }

    #[test]
    fn zero_trials() {
        let r = forgery_blind(8, 16, 0, 1).unwrap();
        assert_eq!((r.trials, r.successes), (0, 0));
        assert!(r.passes());
    }

    #[test]
    fn blind_forgery_small_run() {
        let r = forgery_blind(8, 16, 20_000, 3).unwrap();
        assert!(r.passes(), "{r:?}");
    }

    #[test]
    fn bound_values() {
        assert_eq!(collision_bound(16, 8), 0.125);
        assert_eq!(collision_bound(32, 10), 1.0 / 16.0);
        assert_eq!(forgery_bound(8, 16), 0.125);
        assert_eq!(forgery_bound(8, 1), 1.0 / 128.0);
    }

    #[test]
    fn single_guess_strategy_succeeds_only_on_right_polynomial() {
        // With n = 4 there are 3 irreducibles; single-guess success should
        // be near 1/3 (plus the zero-seed case) and below the bound 16/8 clamp.
        let setup = KnownSignatureSetup {
            n: 4,
            m_bits: 16,
            receivers: 2,
            colluders: 2,
        };
        let r = forgery_known_signature_with(setup, &IrreducibleGuess, 6000, 5).unwrap();
        let expected: f64 = 1.0 / 3.0 + (2.0 / 3.0) / 16.0;
        let sigma = (expected * (1.0 - expected) / 6000.0).sqrt();
        assert!((r.rate() - expected).abs() < 4.0 * sigma, "{r:?}");
    }

    #[test]
    fn bit_flip_and_random_signature_are_bounded() {
        let setup = KnownSignatureSetup {
            n: 10,
            m_bits: 32,
            receivers: 2,
            colluders: 1,
        };
        let flip = forgery_known_signature_with(setup, &BitFlip, 20_000, 1).unwrap();
        assert!(flip.passes());
        let mut rs = forgery_known_signature_with(setup, &RandomSignature, 20_000, 2).unwrap();
        rs.bound = 0.5f64.powi(10);
        assert!(rs.passes(), "{rs:?}");
    }

    #[test]
    fn robustness_small() {
        let topo = Topology::new(1).unwrap();
        let p = SecurityParams::with_n(32, 1, 8).unwrap();
        let r = robustness_experiment(&topo, p, 200, 0).unwrap();
        assert_eq!(r.successes, 0);
    }

    #[test]
    fn repudiation_edge_setups() {
        let topo = Topology::new(4).unwrap();
        let p = SecurityParams::with_n(32, 4, 16).unwrap();
        let none = RepudiationSetup {
            honest_receivers: Some(0),
            dishonest_signer: true,
        };
        let r = repudiation_experiment_with(&topo, p, none, 100, 1).unwrap();
        assert_eq!((r.successes, r.not_applicable), (0, 100));
        let control = RepudiationSetup {
            honest_receivers: None,
            dishonest_signer: false,
        };
        let r = repudiation_experiment_with(&topo, p, control, 200, 2).unwrap();
        assert_eq!(r.successes, 0);
    }

    #[test]
    fn results_do_not_depend_on_scheduling() {
        let a = forgery_known_signature(10, 32, 3000, 77).unwrap();
        let b = forgery_known_signature(10, 32, 3000, 77).unwrap();
        assert_eq!(a, b);
    }
}
