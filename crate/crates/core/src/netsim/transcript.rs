use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::keymat::SecurityParams;
use crate::protocol::{ReceiverId, RoundRecord, SignatureBundle, VerificationOutcome};

use super::{Event, NodeId, Payload};

/// One processed event: `round event sender receiver time digest`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranscriptLine {
    pub round: u64,
    pub event: &'static str,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub time: u64,
    /// First 8 bytes of SHA-256 over the payload encoding, hex.
    pub digest: String,
}

impl TranscriptLine {
    pub(crate) fn new(round: u64, event: &Event) -> Self {
        let hash = Sha256::digest(payload_encoding(&event.payload).as_bytes());
        TranscriptLine {
            round,
            event: event.payload.event_name(),
            sender: event.sender,
            receiver: event.receiver,
            time: event.at,
            digest: hash[..8].iter().map(|b| format!("{b:02x}")).collect(),
        }
    }

    pub fn render(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.round, self.event, self.sender, self.receiver, self.time, self.digest
        )
    }
}

fn bundle_encoding(b: &SignatureBundle) -> String {
    format!("{}:{}:{}:{}", b.message.len(), b.message.to_hex(), b.signature.len(), b.signature.to_hex())
}

fn payload_encoding(p: &Payload) -> String {
    let body = match p {
        Payload::Deadline | Payload::RoundClosed => String::new(),
        Payload::Adversary(note) => note.clone(),
        Payload::Broadcast(b) => bundle_encoding(b),
        Payload::Forward(f) => format!(
            "{}|{}|{}|{}",
            f.receiver,
            bundle_encoding(&f.bundle),
            f.keys.to_bits().to_hex(),
            f.sent_at
        ),
        Payload::TimeoutList(ids) => ids.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","),
        Payload::TimeoutKeys(keys) => keys
            .iter()
            .map(|(r, k)| format!("{r}={}", k.to_bits().to_hex()))
            .collect::<Vec<_>>()
            .join(","),
        Payload::KeyRelease(sk) => format!("{}|{}", sk.xs.to_hex(), sk.ys.to_hex()),
        Payload::Announce(v) | Payload::Verdict(v) => v.to_string(),
        Payload::TimeoutClaim(c) => format!("{}|{}", bundle_encoding(&c.bundle), c.keys.to_bits().to_hex()),
        Payload::ClaimResult(ok) => ok.to_string(),
    };
    format!("{}/{}", p.event_name(), body)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceiverReport {
    /// The receiver's own check after key release; `None` if it was never released keys.
    pub receiver_verdict: Option<VerificationOutcome>,
    /// Status the arbitrator sent back, if any.
    pub notified_status: Option<VerificationOutcome>,
    /// Final status recorded by the arbitrator.
    pub status: VerificationOutcome,
    pub keys_released: bool,
    /// Result of the post-round timeout claim, for late receivers that made one.
    pub timeout_claim: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct Transcript {
    pub round: u64,
    pub params: SecurityParams,
    pub deadline: u64,
    /// The `(M, S)` the signer produced for the round.
    pub genuine: SignatureBundle,
    pub lines: Vec<TranscriptLine>,
    pub reports: BTreeMap<ReceiverId, ReceiverReport>,
    pub record: RoundRecord,
}

impl Transcript {
    pub fn status(&self, r: ReceiverId) -> Option<VerificationOutcome> {
        self.reports.get(&r).map(|rep| rep.status)
    }

    pub fn count(&self, status: VerificationOutcome) -> usize {
        self.reports.values().filter(|r| r.status == status).count()
    }

    pub fn all_accepted(&self) -> bool {
        self.reports.values().all(|r| r.status == VerificationOutcome::Accepted)
    }

    /// Line-delimited event log with a header comment.
    pub fn render(&self) -> String {
        let mut out = String::from("# round\tevent\tsender\treceiver\ttime\tdigest\n");
        for line in &self.lines {
            out.push_str(&line.render());
            out.push('\n');
        }
        out
    }

    pub fn verdict_rows(&self) -> Vec<[String; 5]> {
        let show = |v: Option<VerificationOutcome>| v.map_or("-".to_string(), |v| v.to_string());
        self.reports
            .iter()
            .map(|(r, rep)| {
                [
                    r.to_string(),
                    show(rep.receiver_verdict),
                    rep.status.to_string(),
                    rep.keys_released.to_string(),
                    rep.timeout_claim.map_or("-".to_string(), |c| c.to_string()),
                ]
            })
            .collect()
    }

    pub fn verdicts_csv(&self) -> String {
        let mut out = String::from("receiver,receiver_verdict,status,keys_released,timeout_claim\n");
        for row in self.verdict_rows() {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    /// Key bits spent per signer link and in total.
    pub fn key_accounting(&self) -> (u64, u64) {
        (self.params.per_link_bits(), self.params.total_bits())
    }
}
