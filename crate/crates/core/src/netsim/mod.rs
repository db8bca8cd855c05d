//! Deterministic discrete-event simulation of one signing round.
//!
//! Time is a logical integer clock. Every message travels over a link with a
//! fixed delay and is delivered at `send time + delay` (plus any adversarial
//! delay). The deadline fires before any delivery scheduled for the same
//! instant, so a forward arriving exactly at the deadline is late.
//!
//! Adversary rules can only touch the two payloads a dishonest party could
//! forge: the signer's broadcast `(M, S)` and a receiver's forwarded
//! `(M_i, S_i)`. Key material and key-release traffic have no rule hook.

mod config;
mod queue;
mod transcript;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::keymat::{combine, distribute_keys, KeyBundle, SecurityParams, SessionKeys};
use crate::protocol::{
    arbitrator_close_round, arbitrator_verify, receiver_verify, settle, sign, timeout_forward_verify,
    ForwardPacket, ReceiverId, RoundRecord, SignatureBundle, TimeoutClaim, VerificationOutcome,
};

pub use config::{parse_config, SimConfig};
pub use queue::{advance, Event, EventKind, EventQueue};
pub use transcript::{ReceiverReport, Transcript, TranscriptLine};

pub const DEFAULT_LINK_DELAY: u64 = 1;
pub const DEFAULT_DEADLINE: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Signer,
    Arbitrator,
    Receiver(ReceiverId),
}

impl NodeId {
    pub fn receiver(i: u32) -> Self {
        NodeId::Receiver(ReceiverId(i))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Signer => f.write_str("S"),
            NodeId::Arbitrator => f.write_str("A"),
            NodeId::Receiver(r) => write!(f, "{r}"),
        }
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "s" | "signer" => return Ok(NodeId::Signer),
            "a" | "arbitrator" => return Ok(NodeId::Arbitrator),
            _ => {}
        }
        let digits = lower
            .strip_prefix("receiver:")
            .or_else(|| lower.strip_prefix('r'))
            .ok_or_else(|| Error::config(format!("unknown node {s:?}")))?;
        match digits.parse::<u32>() {
            Ok(i) if i >= 1 => Ok(NodeId::receiver(i)),
            _ => Err(Error::config(format!("bad receiver id in {s:?}"))),
        }
    }
}

/// One signer, one arbitrator and `k` receivers. Classical links exist
/// signer-receiver, signer-arbitrator and arbitrator-receiver; receivers are
/// not linked to each other.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    k: usize,
    default_delay: u64,
    deadline: u64,
    overrides: BTreeMap<(NodeId, NodeId), u64>,
}

impl Topology {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("topology needs at least one receiver"));
        }
        Ok(Topology {
            k,
            default_delay: DEFAULT_LINK_DELAY,
            deadline: DEFAULT_DEADLINE,
            overrides: BTreeMap::new(),
        })
    }

    pub fn with_deadline(mut self, deadline: u64) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn with_default_delay(mut self, delay: u64) -> Self {
        self.default_delay = delay;
        self
    }

    pub fn set_link_delay(&mut self, a: NodeId, b: NodeId, delay: u64) -> Result<()> {
        if !self.has_link(a, b) {
            return Err(Error::config(format!("no link between {a} and {b}")));
        }
        self.overrides.insert(ordered(a, b), delay);
        Ok(())
    }

    pub fn receivers(&self) -> usize {
        self.k
    }

    pub fn deadline(&self) -> u64 {
        self.deadline
    }

    pub fn receiver_ids(&self) -> impl Iterator<Item = ReceiverId> {
        (1..=self.k as u32).map(ReceiverId)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        match node {
            NodeId::Receiver(ReceiverId(i)) => i >= 1 && i as usize <= self.k,
            _ => true,
        }
    }

    pub fn has_link(&self, a: NodeId, b: NodeId) -> bool {
        use NodeId::*;
        self.contains(a)
            && self.contains(b)
            && matches!(
                ordered(a, b),
                (Signer, Arbitrator) | (Signer, Receiver(_)) | (Arbitrator, Receiver(_))
            )
    }

    pub fn delay(&self, a: NodeId, b: NodeId) -> Option<u64> {
        self.has_link(a, b)
            .then(|| *self.overrides.get(&ordered(a, b)).unwrap_or(&self.default_delay))
    }
}

fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Message bodies exchanged between roles.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Deadline,
    Adversary(String),
    /// Signer to receiver: `(M, S)`.
    Broadcast(SignatureBundle),
    /// Receiver to arbitrator: `(M_i, S_i, K_{s,i})`.
    Forward(ForwardPacket),
    TimeoutList(Vec<ReceiverId>),
    TimeoutKeys(Vec<(ReceiverId, KeyBundle)>),
    KeyRelease(SessionKeys),
    Announce(VerificationOutcome),
    Verdict(VerificationOutcome),
    RoundClosed,
    TimeoutClaim(TimeoutClaim),
    ClaimResult(bool),
}

impl Payload {
    pub fn event_name(&self) -> &'static str {
        match self {
            Payload::Deadline => "deadline",
            Payload::Adversary(_) => "adversary",
            Payload::Broadcast(_) => "broadcast",
            Payload::Forward(_) => "forward",
            Payload::TimeoutList(_) => "timeout-list",
            Payload::TimeoutKeys(_) => "timeout-keys",
            Payload::KeyRelease(_) => "key-release",
            Payload::Announce(_) => "announce",
            Payload::Verdict(_) => "verdict",
            Payload::RoundClosed => "round-closed",
            Payload::TimeoutClaim(_) => "timeout-claim",
            Payload::ClaimResult(_) => "claim-result",
        }
    }

    fn tamperable(&self) -> Option<TamperableKind> {
        match self {
            Payload::Broadcast(_) => Some(TamperableKind::Broadcast),
            Payload::Forward(_) => Some(TamperableKind::Forward),
            _ => None,
        }
    }

    fn bundle_mut(&mut self) -> Option<&mut SignatureBundle> {
        match self {
            Payload::Broadcast(b) => Some(b),
            Payload::Forward(p) => Some(&mut p.bundle),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TamperableKind {
    Broadcast,
    Forward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TamperTarget {
    Message,
    Signature,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    /// Flip the listed bit positions.
    Tamper { target: TamperTarget, positions: Vec<usize> },
    Delay(u64),
    Drop,
    /// Swap in a uniformly random `(M, S)` of the same lengths.
    Replace,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub kind: TamperableKind,
    pub sender: Option<NodeId>,
    pub receiver: Option<NodeId>,
    pub action: Action,
}

impl Rule {
    fn matches(&self, kind: TamperableKind, from: NodeId, to: NodeId) -> bool {
        self.kind == kind
            && self.sender.is_none_or(|s| s == from)
            && self.receiver.is_none_or(|r| r == to)
    }
}

/// Deviations of a dishonest signer.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SignerConduct {
    /// Sign a different random message for every receiver.
    pub equivocate: bool,
    /// Receivers sent the genuine message with a random signature.
    pub garbage_to: BTreeSet<ReceiverId>,
    /// Answer the arbitrator's timeout key request with random keys.
    pub corrupt_timeout_keys: bool,
}

impl SignerConduct {
    pub fn is_honest(&self) -> bool {
        *self == SignerConduct::default()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdversaryScript {
    pub rules: Vec<Rule>,
    pub signer: SignerConduct,
}

impl AdversaryScript {
    pub fn honest() -> Self {
        Self::default()
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rules.push(rule);
        self
    }

    /// Checks every rule against the topology and the round's bit lengths.
    pub fn validate(&self, topology: &Topology, m_bits: usize, n: usize) -> Result<()> {
        for (i, rule) in self.rules.iter().enumerate() {
            let bad = |msg: String| Err(Error::config(format!("rule {}: {msg}", i + 1)));
            let (sender_ok, receiver_ok) = match rule.kind {
                TamperableKind::Broadcast => (
                    rule.sender.is_none_or(|s| s == NodeId::Signer),
                    rule.receiver
                        .is_none_or(|r| matches!(r, NodeId::Receiver(_)) && topology.contains(r)),
                ),
                TamperableKind::Forward => (
                    rule.sender
                        .is_none_or(|s| matches!(s, NodeId::Receiver(_)) && topology.contains(s)),
                    rule.receiver.is_none_or(|r| r == NodeId::Arbitrator),
                ),
            };
            if !sender_ok || !receiver_ok {
                return bad(format!(
                    "{:?} traffic cannot match sender {:?} / receiver {:?}",
                    rule.kind, rule.sender, rule.receiver
                ));
            }
            if let Action::Tamper { target, positions } = &rule.action {
                let len = match target {
                    TamperTarget::Message => m_bits,
                    TamperTarget::Signature => 2 * n,
                };
                if positions.is_empty() {
                    return bad("tamper rule lists no bit positions".into());
                }
                if let Some(p) = positions.iter().find(|&&p| p >= len) {
                    return bad(format!("bit position {p} outside {target:?} of {len} bits"));
                }
            }
        }
        if let Some(r) = self
            .signer
            .garbage_to
            .iter()
            .find(|r| !topology.contains(NodeId::Receiver(**r)))
        {
            return Err(Error::config(format!("signer garbage target {r} is not a receiver")));
        }
        Ok(())
    }
}

/// One configured round, ready to run under any seed.
#[derive(Clone, Debug)]
pub struct Simulation {
    topology: Topology,
    security: SecurityParams,
    script: AdversaryScript,
    round_id: u64,
    message: Option<BitString>,
}

impl Simulation {
    pub fn new(topology: Topology, security: SecurityParams, script: AdversaryScript) -> Self {
        Simulation {
            topology,
            security,
            script,
            round_id: 1,
            message: None,
        }
    }

    pub fn round_id(mut self, id: u64) -> Self {
        self.round_id = id;
        self
    }

    /// Fixes the signed message instead of drawing it from the seed.
    pub fn message(mut self, message: BitString) -> Self {
        self.message = Some(message);
        self
    }

    pub fn run(&self, seed: u64) -> Result<Transcript> {
        let m = self.security.m_bits as usize;
        let n = self.security.n as usize;
        if self.security.k != self.topology.k {
            return Err(Error::config(format!(
                "security parameters expect {} receivers, topology has {}",
                self.security.k, self.topology.k
            )));
        }
        if let Some(msg) = &self.message {
            if msg.len() != m {
                return Err(Error::LengthMismatch {
                    expected: m,
                    actual: msg.len(),
                });
            }
        }
        self.script.validate(&self.topology, m, n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (receiver_keys, arbitrator_keys) = distribute_keys(n, self.topology.k, &mut rng)?;
        let session = combine(&receiver_keys, &arbitrator_keys)?;
        let message = match &self.message {
            Some(msg) => msg.clone(),
            None => BitString::random(m, &mut rng),
        };
        let (genuine, _) = sign(&message, &session, &mut rng)?;

        let mut world = World {
            sim: self,
            rng,
            queue: EventQueue::new(),
            now: 0,
            lines: Vec::new(),
            receivers: receiver_keys
                .iter()
                .map(|k| ReceiverState {
                    keys: k.clone(),
                    ..ReceiverState::default()
                })
                .collect(),
            receiver_keys,
            signer_session: session,
            genuine: genuine.clone(),
            arbitrator: ArbitratorState {
                keys: arbitrator_keys,
                record: RoundRecord::new(self.topology.k, self.topology.deadline),
                packets: Vec::new(),
                session: None,
                finished: false,
            },
        };
        world.start()?;
        while let Some(event) = world.queue.advance() {
            world.handle(event)?;
        }
        Ok(world.into_transcript())
    }
}

/// Runs one round of the signature scheme and returns its transcript.
pub fn run_round(
    topology: &Topology,
    security: SecurityParams,
    script: &AdversaryScript,
    seed: u64,
) -> Result<Transcript> {
    Simulation::new(topology.clone(), security, script.clone()).run(seed)
}

#[derive(Default)]
struct ReceiverState {
    keys: KeyBundle,
    held: Option<SignatureBundle>,
    own_verdict: Option<VerificationOutcome>,
    final_status: Option<VerificationOutcome>,
    keys_released: bool,
    claim: Option<bool>,
}

struct ArbitratorState {
    keys: KeyBundle,
    record: RoundRecord,
    packets: Vec<ForwardPacket>,
    session: Option<SessionKeys>,
    finished: bool,
}

struct World<'a> {
    sim: &'a Simulation,
    rng: ChaCha8Rng,
    queue: EventQueue,
    now: u64,
    lines: Vec<TranscriptLine>,
    receiver_keys: Vec<KeyBundle>,
    receivers: Vec<ReceiverState>,
    signer_session: SessionKeys,
    genuine: SignatureBundle,
    arbitrator: ArbitratorState,
}

impl World<'_> {
    fn receiver(&mut self, r: ReceiverId) -> &mut ReceiverState {
        &mut self.receivers[r.0 as usize - 1]
    }

    fn start(&mut self) -> Result<()> {
        let topo = &self.sim.topology;
        let deadline = topo.deadline;
        let conduct = self.sim.script.signer.clone();
        self.queue.schedule(
            deadline,
            EventKind::DeadlineFire,
            NodeId::Arbitrator,
            NodeId::Arbitrator,
            Payload::Deadline,
        );
        let ids: Vec<ReceiverId> = topo.receiver_ids().collect();
        for r in ids {
            let bundle = if conduct.garbage_to.contains(&r) {
                SignatureBundle {
                    message: self.genuine.message.clone(),
                    signature: BitString::random(self.genuine.signature.len(), &mut self.rng),
                }
            } else if conduct.equivocate && r.0 > 1 {
                let msg = BitString::random(self.genuine.message.len(), &mut self.rng);
                sign(&msg, &self.signer_session, &mut self.rng)?.0
            } else {
                self.genuine.clone()
            };
            self.send(NodeId::Signer, NodeId::Receiver(r), Payload::Broadcast(bundle));
        }
        Ok(())
    }

    fn send(&mut self, from: NodeId, to: NodeId, mut payload: Payload) {
        let mut delay = self
            .sim
            .topology
            .delay(from, to)
            .unwrap_or_else(|| panic!("protocol sent over missing link {from}-{to}"));
        if let Some(kind) = payload.tamperable() {
            for rule in self.sim.script.rules.iter().filter(|r| r.matches(kind, from, to)) {
                let note = format!("{:?} on {} {from}->{to}", rule.action, payload.event_name());
                self.queue.schedule(
                    self.now,
                    EventKind::AdversaryAction,
                    from,
                    to,
                    Payload::Adversary(note),
                );
                let bundle = payload.bundle_mut().expect("tamperable payloads carry a bundle");
                match &rule.action {
                    Action::Tamper { target, positions } => {
                        let bits = match target {
                            TamperTarget::Message => &mut bundle.message,
                            TamperTarget::Signature => &mut bundle.signature,
                        };
                        positions.iter().for_each(|&p| bits.flip(p));
                    }
                    Action::Delay(extra) => delay += extra,
                    Action::Drop => return,
                    Action::Replace => {
                        bundle.message = BitString::random(bundle.message.len(), &mut self.rng);
                        bundle.signature = BitString::random(bundle.signature.len(), &mut self.rng);
                    }
                }
            }
        }
        self.queue
            .schedule(self.now + delay, EventKind::Deliver, from, to, payload);
    }

    fn handle(&mut self, event: Event) -> Result<()> {
        debug_assert!(event.at >= self.now, "events must not travel back in time");
        self.now = event.at;
        self.lines.push(TranscriptLine::new(self.sim.round_id, &event));
        let Event {
            sender,
            receiver,
            payload,
            ..
        } = event;
        match (receiver, payload) {
            (_, Payload::Adversary(_)) => {}
            (NodeId::Arbitrator, Payload::Deadline) => {
                let late = self.arbitrator.record.timed_out(&self.arbitrator.packets);
                if late.is_empty() {
                    self.close(Vec::new())?;
                } else {
                    self.send(NodeId::Arbitrator, NodeId::Signer, Payload::TimeoutList(late));
                }
            }
            (NodeId::Receiver(r), Payload::Broadcast(bundle)) => {
                let state = self.receiver(r);
                if state.held.is_none() {
                    state.held = Some(bundle.clone());
                    let packet = ForwardPacket {
                        receiver: r,
                        bundle,
                        keys: state.keys.clone(),
                        sent_at: self.now,
                        received_at: self.now,
                    };
                    self.send(NodeId::Receiver(r), NodeId::Arbitrator, Payload::Forward(packet));
                }
            }
            (NodeId::Arbitrator, Payload::Forward(mut packet)) => {
                if !self.arbitrator.record.closed {
                    packet.received_at = self.now;
                    self.arbitrator.packets.push(packet);
                }
            }
            (NodeId::Signer, Payload::TimeoutList(ids)) => {
                let corrupt = self.sim.script.signer.corrupt_timeout_keys;
                let n = self.signer_session.n();
                let keys = ids
                    .into_iter()
                    .map(|r| {
                        let k = if corrupt {
                            KeyBundle::random(n, &mut self.rng)
                        } else {
                            self.receiver_keys[r.0 as usize - 1].clone()
                        };
                        (r, k)
                    })
                    .collect();
                self.send(NodeId::Signer, NodeId::Arbitrator, Payload::TimeoutKeys(keys));
            }
            (NodeId::Arbitrator, Payload::TimeoutKeys(keys)) => self.close(keys)?,
            (NodeId::Receiver(r), Payload::KeyRelease(sk)) => {
                let state = self.receiver(r);
                state.keys_released = true;
                let verdict = state
                    .held
                    .as_ref()
                    .map_or(VerificationOutcome::Invalid, |b| receiver_verify(b, &sk));
                state.own_verdict = Some(verdict);
                self.send(NodeId::Receiver(r), NodeId::Arbitrator, Payload::Announce(verdict));
            }
            (NodeId::Arbitrator, Payload::Announce(verdict)) => {
                let NodeId::Receiver(r) = sender else {
                    return Err(Error::config("announcement from a non-receiver"));
                };
                let arb = &mut self.arbitrator;
                let session = arb.session.as_ref().expect("keys released before announcements");
                let packet = arb
                    .record
                    .on_time(&arb.packets)
                    .get(&r)
                    .map(|p| (*p).clone())
                    .expect("only on-time receivers are released keys");
                let arbitrator_view =
                    (verdict == VerificationOutcome::Accepted).then(|| arbitrator_verify(&packet, session));
                let status = settle(verdict, arbitrator_view);
                arb.record.record_verdict(r, status, &packet.bundle);
                self.send(NodeId::Arbitrator, NodeId::Receiver(r), Payload::Verdict(status));
                self.maybe_finish();
            }
            (NodeId::Receiver(r), Payload::Verdict(status)) => {
                self.receiver(r).final_status = Some(status);
            }
            (NodeId::Receiver(r), Payload::RoundClosed) => {
                let state = self.receiver(r);
                if let Some(bundle) = state.held.clone() {
                    let claim = TimeoutClaim {
                        bundle,
                        keys: state.keys.clone(),
                    };
                    self.send(NodeId::Receiver(r), NodeId::Arbitrator, Payload::TimeoutClaim(claim));
                }
            }
            (NodeId::Arbitrator, Payload::TimeoutClaim(claim)) => {
                let ok = timeout_forward_verify(&self.arbitrator.record, &claim);
                self.send(NodeId::Arbitrator, sender, Payload::ClaimResult(ok));
            }
            (NodeId::Receiver(r), Payload::ClaimResult(ok)) => {
                self.receiver(r).claim = Some(ok);
            }
            (to, payload) => {
                return Err(Error::config(format!(
                    "{to} cannot handle {} from {sender}",
                    payload.event_name()
                )))
            }
        }
        Ok(())
    }

    fn close(&mut self, fetched: Vec<(ReceiverId, KeyBundle)>) -> Result<()> {
        let arb = &mut self.arbitrator;
        let session = arbitrator_close_round(&mut arb.record, &arb.keys, &arb.packets, self.now, |_| {
            Ok(fetched.clone())
        })?;
        arb.session = Some(session.clone());
        let released: Vec<ReceiverId> = arb.record.released_to.iter().copied().collect();
        for r in released {
            self.send(NodeId::Arbitrator, NodeId::Receiver(r), Payload::KeyRelease(session.clone()));
        }
        self.maybe_finish();
        Ok(())
    }

    /// Once every released receiver has a verdict, invites late receivers to
    /// submit timeout claims.
    fn maybe_finish(&mut self) {
        let arb = &self.arbitrator;
        if arb.finished || arb.session.is_none() {
            return;
        }
        if arb.record.released_to.iter().any(|r| !arb.record.verdicts.contains_key(r)) {
            return;
        }
        self.arbitrator.finished = true;
        let late: Vec<ReceiverId> = self
            .sim
            .topology
            .receiver_ids()
            .filter(|r| !self.arbitrator.record.released_to.contains(r))
            .collect();
        for r in late {
            self.send(NodeId::Arbitrator, NodeId::Receiver(r), Payload::RoundClosed);
        }
    }

    fn into_transcript(self) -> Transcript {
        let record = self.arbitrator.record;
        let reports = self
            .receivers
            .iter()
            .enumerate()
            .map(|(i, st)| {
                let id = ReceiverId(i as u32 + 1);
                let status = record
                    .verdicts
                    .get(&id)
                    .copied()
                    .unwrap_or(VerificationOutcome::TimedOut);
                (
                    id,
                    ReceiverReport {
                        receiver_verdict: st.own_verdict,
                        notified_status: st.final_status,
                        status,
                        keys_released: st.keys_released,
                        timeout_claim: st.claim,
                    },
                )
            })
            .collect();
        Transcript {
            round: self.sim.round_id,
            params: self.sim.security,
            deadline: self.sim.topology.deadline,
            genuine: self.genuine,
            lines: self.lines,
            reports,
            record,
        }
    }
}

#[cfg(test)]
mod tests;
