//! Messaging stage and timeout verification stage.
//!
//! The signer one-time-pads the digest `(T || R_s)` with `X_s`. Receivers and
//! the arbitrator both decrypt with the combined key `X'_a`, rebuild the hash
//! from the decrypted polynomial `R` and the seed `Y'_a`, and compare tags.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::gf2_hash::{decode_poly, sample_irreducible, LfsrToeplitzHasher};
use crate::keymat::{combine, KeyBundle, SessionKeys};

/// 1-based receiver index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReceiverId(pub u32);

impl fmt::Display for ReceiverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignatureBundle {
    pub message: BitString,
    pub signature: BitString,
}

/// What a receiver hands the arbitrator: `(M_i, S_i, K_{s,i})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForwardPacket {
    pub receiver: ReceiverId,
    pub bundle: SignatureBundle,
    pub keys: KeyBundle,
    pub sent_at: u64,
    pub received_at: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VerificationOutcome {
    Accepted,
    Rejected,
    TimedOut,
    Invalid,
}

impl VerificationOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            VerificationOutcome::Accepted => "Accepted",
            VerificationOutcome::Rejected => "Rejected",
            VerificationOutcome::TimedOut => "TimedOut",
            VerificationOutcome::Invalid => "Invalid",
        }
    }
}

impl fmt::Display for VerificationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Signs `message` with the combined signer keys. Returns the bundle and
/// the n-bit polynomial encoding `R_s` that was embedded in the digest.
pub fn sign<R: Rng + ?Sized>(
    message: &BitString,
    sk: &SessionKeys,
    rng: &mut R,
) -> Result<(SignatureBundle, BitString)> {
    if message.is_empty() {
        return Err(Error::invalid("cannot sign an empty message"));
    }
    if !sk.is_consistent() {
        return Err(Error::LengthMismatch {
            expected: 2 * sk.n(),
            actual: sk.xs.len(),
        });
    }
    let (poly, r_s) = sample_irreducible(sk.n(), rng)?;
    let tag = LfsrToeplitzHasher::new(poly, sk.ys.clone())?.hash(message)?;
    let signature = sk.xs.xor(&tag.concat(&r_s))?;
    Ok((
        SignatureBundle {
            message: message.clone(),
            signature,
        },
        r_s,
    ))
}

/// Shared by receivers and the arbitrator; identical inputs give identical verdicts.
fn check_digest(message: &BitString, signature: &BitString, sk: &SessionKeys) -> VerificationOutcome {
    let n = sk.n();
    if !sk.is_consistent() || n == 0 || signature.len() != 2 * n || message.is_empty() {
        return VerificationOutcome::Invalid;
    }
    let (tag, r) = match sk.xs.xor(signature) {
        Ok(d) => d.split_at(n),
        Err(_) => return VerificationOutcome::Invalid,
    };
    let Some(poly) = decode_poly(&r) else {
        return VerificationOutcome::Rejected;
    };
    match LfsrToeplitzHasher::new(poly, sk.ys.clone()).and_then(|h| h.hash(message)) {
        Ok(expected) if expected == tag => VerificationOutcome::Accepted,
        _ => VerificationOutcome::Rejected,
    }
}

pub fn receiver_verify(bundle: &SignatureBundle, sk: &SessionKeys) -> VerificationOutcome {
    check_digest(&bundle.message, &bundle.signature, sk)
}

pub fn arbitrator_verify(packet: &ForwardPacket, sk: &SessionKeys) -> VerificationOutcome {
    check_digest(&packet.bundle.message, &packet.bundle.signature, sk)
}

/// Status recorded for a receiver once both checks have run: the receiver's
/// own verdict gates the arbitrator's, and an arbitrator failure after a
/// receiver accepted marks the signature invalid.
pub fn settle(receiver: VerificationOutcome, arbitrator: Option<VerificationOutcome>) -> VerificationOutcome {
    use VerificationOutcome::*;
    match (receiver, arbitrator) {
        (TimedOut, _) => TimedOut,
        (Accepted, Some(Accepted)) => Accepted,
        (Accepted, _) => Invalid,
        (other, _) => other,
    }
}

/// The arbitrator's archive for one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub receivers: Vec<ReceiverId>,
    pub deadline: u64,
    /// First `(M, S)` the arbitrator confirmed this round.
    pub bundle: Option<SignatureBundle>,
    pub key_set: BTreeMap<ReceiverId, KeyBundle>,
    pub verdicts: BTreeMap<ReceiverId, VerificationOutcome>,
    pub released_to: BTreeSet<ReceiverId>,
    pub closed: bool,
}

impl RoundRecord {
    pub fn new(k: usize, deadline: u64) -> Self {
        RoundRecord {
            receivers: (1..=k as u32).map(ReceiverId).collect(),
            deadline,
            bundle: None,
            key_set: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            released_to: BTreeSet::new(),
            closed: false,
        }
    }

    /// Receivers whose forward reached the arbitrator strictly before the deadline.
    pub fn on_time<'a>(&self, packets: &'a [ForwardPacket]) -> BTreeMap<ReceiverId, &'a ForwardPacket> {
        let mut out = BTreeMap::new();
        for p in packets
            .iter()
            .filter(|p| p.received_at < self.deadline && self.receivers.contains(&p.receiver))
        {
            out.entry(p.receiver).or_insert(p);
        }
        out
    }

    pub fn timed_out(&self, packets: &[ForwardPacket]) -> Vec<ReceiverId> {
        let on_time = self.on_time(packets);
        self.receivers
            .iter()
            .filter(|r| !on_time.contains_key(r))
            .copied()
            .collect()
    }

    /// Records the arbitrator's confirmation (or refusal) for `receiver`.
    pub fn record_verdict(&mut self, receiver: ReceiverId, status: VerificationOutcome, bundle: &SignatureBundle) {
        if status == VerificationOutcome::Accepted && self.bundle.is_none() {
            self.bundle = Some(bundle.clone());
        }
        self.verdicts.insert(receiver, status);
    }
}

/// Closes the collection phase: gathers on-time keys, fetches the keys of
/// timed-out receivers from the signer, and returns `(X'_a, Y'_a)`.
///
/// The returned keys may only be released to `record.released_to`.
pub fn arbitrator_close_round<F>(
    record: &mut RoundRecord,
    arbitrator_keys: &KeyBundle,
    packets: &[ForwardPacket],
    now: u64,
    mut signer_key_oracle: F,
) -> Result<SessionKeys>
where
    F: FnMut(&[ReceiverId]) -> Result<Vec<(ReceiverId, KeyBundle)>>,
{
    if now < record.deadline {
        return Err(Error::invalid(format!(
            "round cannot close at t={now} before its deadline t={}",
            record.deadline
        )));
    }
    let on_time = record.on_time(packets);
    let missing = record.timed_out(packets);
    let mut key_set: BTreeMap<ReceiverId, KeyBundle> =
        on_time.iter().map(|(&r, p)| (r, p.keys.clone())).collect();
    if !missing.is_empty() {
        let fetched = signer_key_oracle(&missing)?;
        for (r, keys) in fetched {
            if missing.contains(&r) {
                key_set.entry(r).or_insert(keys);
            }
        }
        if let Some(r) = missing.iter().find(|r| !key_set.contains_key(r)) {
            return Err(Error::KeyOracle(format!("signer supplied no key for {r}")));
        }
    }
    let session = combine(key_set.values(), arbitrator_keys)?;
    for &r in &missing {
        record.verdicts.insert(r, VerificationOutcome::TimedOut);
    }
    record.key_set = key_set;
    record.released_to = on_time.keys().copied().collect();
    record.closed = true;
    Ok(session)
}

/// A late receiver's request to have the arbitrator vouch for a round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeoutClaim {
    pub bundle: SignatureBundle,
    pub keys: KeyBundle,
}

/// True iff the claim replays the round's confirmed `(M, S)` bit for bit and
/// carries a key from the round's key set.
pub fn timeout_forward_verify(record: &RoundRecord, claim: &TimeoutClaim) -> bool {
    record.closed
        && record.bundle.as_ref() == Some(&claim.bundle)
        && record.key_set.values().any(|k| *k == claim.keys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keymat::distribute_keys;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Fixture {
        receivers: Vec<KeyBundle>,
        arb: KeyBundle,
        signer: SessionKeys,
        bundle: SignatureBundle,
        r_s: BitString,
    }

    fn fixture(seed: u64, n: usize, k: usize, m: usize) -> Fixture {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (receivers, arb) = distribute_keys(n, k, &mut rng).unwrap();
        let signer = combine(&receivers, &arb).unwrap();
        let msg = BitString::random(m, &mut rng);
        let (bundle, r_s) = sign(&msg, &signer, &mut rng).unwrap();
        Fixture {
            receivers,
            arb,
            signer,
            bundle,
            r_s,
        }
    }

    fn packets(f: &Fixture, times: &[u64]) -> Vec<ForwardPacket> {
        f.receivers
            .iter()
            .zip(times)
            .enumerate()
            .map(|(i, (keys, &t))| ForwardPacket {
                receiver: ReceiverId(i as u32 + 1),
                bundle: f.bundle.clone(),
                keys: keys.clone(),
                sent_at: t.saturating_sub(1),
                received_at: t,
            })
            .collect()
    }

    fn no_oracle(_: &[ReceiverId]) -> Result<Vec<(ReceiverId, KeyBundle)>> {
        panic!("oracle must not be consulted")
    }

    #[test]
    fn honest_round_accepts() {
        for seed in 0..50 {
            let f = fixture(seed, 16, 3, 64);
            assert_eq!(receiver_verify(&f.bundle, &f.signer), VerificationOutcome::Accepted);
        }
    }

    #[test]
    fn decrypting_recovers_digest() {
        let f = fixture(1, 12, 2, 40);
        let d = f.signer.xs.xor(&f.bundle.signature).unwrap();
        let (tag, r) = d.split_at(12);
        assert_eq!(r, f.r_s);
        let p = decode_poly(&r).unwrap();
        let h = LfsrToeplitzHasher::new(p, f.signer.ys.clone()).unwrap();
        assert_eq!(h.hash(&f.bundle.message).unwrap(), tag);
    }

    #[test]
    fn resigning_draws_fresh_polynomials() {
        let f = fixture(4, 32, 1, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let (_, r1) = sign(&f.bundle.message, &f.signer, &mut rng).unwrap();
        let (_, r2) = sign(&f.bundle.message, &f.signer, &mut rng).unwrap();
        assert_ne!(r1, r2);
    }

    #[test]
    fn length_mismatch_is_invalid() {
        let f = fixture(2, 8, 1, 16);
        let mut b = f.bundle.clone();
        b.signature = BitString::zeros(15);
        assert_eq!(receiver_verify(&b, &f.signer), VerificationOutcome::Invalid);
    }

    #[test]
    fn tampered_message_rejected_by_arbitrator() {
        let f = fixture(3, 32, 2, 64);
        let mut p = packets(&f, &[2, 2]).remove(0);
        p.bundle.message.flip(5);
        assert_eq!(arbitrator_verify(&p, &f.signer), VerificationOutcome::Rejected);
        // same input, same verdict at the receiver
        assert_eq!(receiver_verify(&p.bundle, &f.signer), VerificationOutcome::Rejected);
    }

    #[test]
    fn close_round_all_on_time_matches_signer() {
        let f = fixture(5, 16, 3, 32);
        let mut record = RoundRecord::new(3, 10);
        let pk = packets(&f, &[2, 3, 9]);
        let session = arbitrator_close_round(&mut record, &f.arb, &pk, 10, no_oracle).unwrap();
        assert_eq!(session, f.signer);
        assert_eq!(record.released_to.len(), 3);
    }

    #[test]
    fn close_round_fetches_timeout_keys() {
        let f = fixture(6, 16, 3, 32);
        let mut record = RoundRecord::new(3, 10);
        // R2 arrives exactly at the deadline: late.
        let pk = packets(&f, &[2, 10, 4]);
        let mut asked = Vec::new();
        let session = arbitrator_close_round(&mut record, &f.arb, &pk, 12, |ids: &[ReceiverId]| {
            asked.extend_from_slice(ids);
            Ok(ids.iter().map(|&r| (r, f.receivers[r.0 as usize - 1].clone())).collect())
        })
        .unwrap();
        assert_eq!(asked, vec![ReceiverId(2)]);
        assert_eq!(session, f.signer);
        assert_eq!(record.verdicts[&ReceiverId(2)], VerificationOutcome::TimedOut);
        assert!(!record.released_to.contains(&ReceiverId(2)));
    }

    #[test]
    fn close_round_errors() {
        let f = fixture(7, 8, 2, 16);
        let mut record = RoundRecord::new(2, 10);
        let pk = packets(&f, &[2, 20]);
        assert!(arbitrator_close_round(&mut record, &f.arb, &pk, 9, no_oracle).is_err());
        let err = arbitrator_close_round(&mut record, &f.arb, &pk, 10, |_: &[ReceiverId]| {
            Err(Error::KeyOracle("signer offline".into()))
        });
        assert!(matches!(err, Err(Error::KeyOracle(_))));
        let err = arbitrator_close_round(&mut record, &f.arb, &pk, 10, |_: &[ReceiverId]| Ok(vec![]));
        assert!(matches!(err, Err(Error::KeyOracle(_))));
        assert!(!record.closed);
    }

    #[test]
    fn timeout_claims() {
        let f = fixture(8, 16, 2, 32);
        let mut record = RoundRecord::new(2, 10);
        let pk = packets(&f, &[2, 30]);
        let claim = TimeoutClaim {
            bundle: f.bundle.clone(),
            keys: f.receivers[1].clone(),
        };
        assert!(!timeout_forward_verify(&record, &claim), "round still open");
        arbitrator_close_round(&mut record, &f.arb, &pk, 10, |ids: &[ReceiverId]| {
            Ok(ids.iter().map(|&r| (r, f.receivers[r.0 as usize - 1].clone())).collect())
        })
        .unwrap();
        record.record_verdict(ReceiverId(1), VerificationOutcome::Accepted, &pk[0].bundle);
        assert!(timeout_forward_verify(&record, &claim));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let forged_key = TimeoutClaim {
            bundle: f.bundle.clone(),
            keys: KeyBundle::random(16, &mut rng),
        };
        assert!(!timeout_forward_verify(&record, &forged_key));

        let mut altered = claim.clone();
        altered.bundle.message.flip(0);
        assert!(!timeout_forward_verify(&record, &altered));
    }

    #[test]
    fn settle_rules() {
        use VerificationOutcome::*;
        assert_eq!(settle(Accepted, Some(Accepted)), Accepted);
        assert_eq!(settle(Accepted, Some(Rejected)), Invalid);
        assert_eq!(settle(Rejected, None), Rejected);
        assert_eq!(settle(TimedOut, None), TimedOut);
    }
}
