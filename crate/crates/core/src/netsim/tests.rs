use super::*;
use proptest::prelude::*;
use VerificationOutcome::*;

fn params(k: usize, n: u32) -> SecurityParams {
    SecurityParams::with_n(64, k, n).unwrap()
}

fn forward_rule(from: u32, action: Action) -> Rule {
    Rule {
        kind: TamperableKind::Forward,
        sender: Some(NodeId::receiver(from)),
        receiver: None,
        action,
    }
}

#[test]
fn honest_round_all_accept() {
    let topo = Topology::new(3).unwrap();
    let t = run_round(&topo, params(3, 16), &AdversaryScript::honest(), 1).unwrap();
    assert!(t.all_accepted());
    for rep in t.reports.values() {
        assert!(rep.keys_released);
        assert_eq!(rep.notified_status, Some(Accepted));
    }
}

#[test]
fn delayed_forward_times_out() {
    let topo = Topology::new(3).unwrap();
    let script = AdversaryScript::honest().with_rule(forward_rule(2, Action::Delay(20)));
    let t = run_round(&topo, params(3, 16), &script, 7).unwrap();
    assert_eq!(t.status(ReceiverId(1)), Some(Accepted));
    assert_eq!(t.status(ReceiverId(2)), Some(TimedOut));
    assert_eq!(t.status(ReceiverId(3)), Some(Accepted));
    let late = &t.reports[&ReceiverId(2)];
    assert!(!late.keys_released);
    assert_eq!(late.receiver_verdict, None);
    assert_eq!(late.timeout_claim, Some(true));
    assert!(t
        .lines
        .iter()
        .all(|l| !(l.event == "key-release" && l.receiver == NodeId::receiver(2))));
}

#[test]
fn arrival_exactly_at_deadline_is_late() {
    // broadcast lands at 1, the forward over a 9-unit link lands at 10 == deadline.
    let mut topo = Topology::new(2).unwrap();
    topo.set_link_delay(NodeId::receiver(1), NodeId::Arbitrator, 9).unwrap();
    let t = run_round(&topo, params(2, 8), &AdversaryScript::honest(), 3).unwrap();
    assert_eq!(t.status(ReceiverId(1)), Some(TimedOut));
    assert_eq!(t.status(ReceiverId(2)), Some(Accepted));

    topo.set_link_delay(NodeId::receiver(1), NodeId::Arbitrator, 8).unwrap();
    let t = run_round(&topo, params(2, 8), &AdversaryScript::honest(), 3).unwrap();
    assert!(t.all_accepted());
}

#[test]
fn tampered_forward_is_invalid_for_that_receiver_only() {
    let topo = Topology::new(3).unwrap();
    let script = AdversaryScript::honest().with_rule(forward_rule(
        1,
        Action::Tamper {
            target: TamperTarget::Message,
            positions: vec![3],
        },
    ));
    let t = run_round(&topo, params(3, 32), &script, 5).unwrap();
    assert_eq!(t.reports[&ReceiverId(1)].receiver_verdict, Some(Accepted));
    assert_eq!(t.status(ReceiverId(1)), Some(Invalid));
    assert_eq!(t.count(Accepted), 2);
}

#[test]
fn dropped_broadcast_leaves_receiver_without_claim() {
    let topo = Topology::new(2).unwrap();
    let script = AdversaryScript::honest().with_rule(Rule {
        kind: TamperableKind::Broadcast,
        sender: None,
        receiver: Some(NodeId::receiver(2)),
        action: Action::Drop,
    });
    let t = run_round(&topo, params(2, 16), &script, 9).unwrap();
    assert_eq!(t.status(ReceiverId(2)), Some(TimedOut));
    assert_eq!(t.reports[&ReceiverId(2)].timeout_claim, None);
    assert_eq!(t.status(ReceiverId(1)), Some(Accepted));
}

#[test]
fn corrupt_timeout_keys_break_verification_for_everyone() {
    let topo = Topology::new(3).unwrap();
    let mut script = AdversaryScript::honest().with_rule(forward_rule(3, Action::Drop));
    script.signer.corrupt_timeout_keys = true;
    let t = run_round(&topo, params(3, 32), &script, 2).unwrap();
    assert_eq!(t.status(ReceiverId(3)), Some(TimedOut));
    for r in [ReceiverId(1), ReceiverId(2)] {
        assert_eq!(t.reports[&r].receiver_verdict, Some(Rejected));
        assert_eq!(t.status(r), Some(Rejected));
    }
}

#[test]
fn malformed_script_fails_before_running() {
    let topo = Topology::new(2).unwrap();
    let cases = [
        forward_rule(5, Action::Drop),
        forward_rule(
            1,
            Action::Tamper {
                target: TamperTarget::Signature,
                positions: vec![32],
            },
        ),
        Rule {
            kind: TamperableKind::Broadcast,
            sender: Some(NodeId::Arbitrator),
            receiver: None,
            action: Action::Drop,
        },
        Rule {
            kind: TamperableKind::Forward,
            sender: None,
            receiver: Some(NodeId::Signer),
            action: Action::Drop,
        },
    ];
    for rule in cases {
        let script = AdversaryScript::honest().with_rule(rule);
        assert!(matches!(
            run_round(&topo, params(2, 16), &script, 0),
            Err(Error::Config(_))
        ));
    }
    assert!(run_round(&topo, params(3, 16), &AdversaryScript::honest(), 0).is_err());
}

#[test]
fn transcript_is_deterministic() {
    let topo = Topology::new(4).unwrap();
    let script = AdversaryScript::honest().with_rule(forward_rule(2, Action::Delay(30)));
    let a = run_round(&topo, params(4, 16), &script, 42).unwrap();
    let b = run_round(&topo, params(4, 16), &script, 42).unwrap();
    assert_eq!(a.render(), b.render());
    assert_eq!(a.verdicts_csv(), b.verdicts_csv());
    let c = run_round(&topo, params(4, 16), &script, 43).unwrap();
    assert_ne!(a.render(), c.render());
}

#[test]
fn transcript_line_format() {
    let topo = Topology::new(1).unwrap();
    let t = run_round(&topo, params(1, 8), &AdversaryScript::honest(), 0).unwrap();
    let text = t.render();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# round\tevent\tsender\treceiver\ttime\tdigest"));
    let first: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(first[..5], ["1", "broadcast", "S", "R1", "1"]);
    assert_eq!(first[5].len(), 16);
    let events: Vec<&str> = t.lines.iter().map(|l| l.event).collect();
    assert_eq!(events, ["broadcast", "forward", "deadline", "key-release", "announce", "verdict"]);
}

#[test]
fn fixed_message_is_signed() {
    let topo = Topology::new(2).unwrap();
    let msg = BitString::from_bytes(b"pay 10");
    let p = SecurityParams::with_n(msg.len() as u64, 2, 16).unwrap();
    let t = Simulation::new(topo, p, AdversaryScript::honest())
        .message(msg.clone())
        .round_id(7)
        .run(1)
        .unwrap();
    assert_eq!(t.genuine.message, msg);
    assert_eq!(t.record.bundle.as_ref().unwrap().message, msg);
    assert!(t.lines.iter().all(|l| l.round == 7));
}

fn arb_node() -> impl Strategy<Value = Option<NodeId>> {
    prop_oneof![
        Just(None),
        Just(Some(NodeId::Signer)),
        Just(Some(NodeId::Arbitrator)),
        (1u32..5).prop_map(|i| Some(NodeId::receiver(i))),
    ]
}

fn arb_rule() -> impl Strategy<Value = Rule> {
    let action = prop_oneof![
        (0u64..15).prop_map(Action::Delay),
        Just(Action::Drop),
        Just(Action::Replace),
        proptest::collection::vec(0usize..16, 1..4).prop_map(|positions| Action::Tamper {
            target: TamperTarget::Message,
            positions,
        }),
        proptest::collection::vec(0usize..16, 1..4).prop_map(|positions| Action::Tamper {
            target: TamperTarget::Signature,
            positions,
        }),
    ];
    (
        prop_oneof![Just(TamperableKind::Broadcast), Just(TamperableKind::Forward)],
        arb_node(),
        arb_node(),
        action,
    )
        .prop_map(|(kind, sender, receiver, action)| Rule {
            kind,
            sender,
            receiver,
            action,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Whatever the script does, key material only ever moves untouched and
    /// causality holds on every link.
    #[test]
    fn fuzzed_scripts_respect_channel_integrity(
        rules in proptest::collection::vec(arb_rule(), 0..4),
        seed in any::<u64>(),
    ) {
        let k = 3;
        let topo = Topology::new(k).unwrap();
        let p = SecurityParams::with_n(16, k, 8).unwrap();
        let script = AdversaryScript { rules, signer: SignerConduct::default() };
        let Ok(t) = run_round(&topo, p, &script, seed) else {
            // invalid scripts are rejected up front
            prop_assert!(script.validate(&topo, 16, 8).is_err());
            return Ok(());
        };
        // on-time keys come straight from forwards and late keys from the
        // signer; both must be the receiver's genuine QKD key
        let reference = run_round(&topo, p, &AdversaryScript::honest(), seed).unwrap();
        prop_assert_eq!(&t.record.key_set, &reference.record.key_set);
        // untouched receivers' verdicts: a receiver whose broadcast and forward
        // match no rule is accepted
        for r in topo.receiver_ids() {
            let touched = script.rules.iter().any(|rule| {
                rule.matches(TamperableKind::Broadcast, NodeId::Signer, NodeId::Receiver(r))
                    || rule.matches(TamperableKind::Forward, NodeId::Receiver(r), NodeId::Arbitrator)
            });
            if !touched {
                prop_assert_eq!(t.status(r), Some(Accepted));
            }
        }
        // time never decreases and every delivery honours its link delay
        prop_assert!(t.lines.windows(2).all(|w| w[0].time <= w[1].time));
        for line in t.lines.iter().filter(|l| l.event != "deadline" && l.event != "adversary") {
            let d = topo.delay(line.sender, line.receiver).unwrap();
            prop_assert!(line.time >= d);
        }
    }
}
