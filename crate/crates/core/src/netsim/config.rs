//! TOML configuration for topologies and adversary scripts.
//!
//! ```toml
//! [topology]
//! receivers = 3
//! link_delay = 1
//! deadline = 10
//!
//! [[topology.links]]
//! a = "R2"
//! b = "A"
//! delay = 4
//!
//! [signer]
//! equivocate = false
//! garbage_to = [3]
//! corrupt_timeout_keys = false
//!
//! [[rules]]
//! kind = "forward"
//! sender = "R2"
//! action = "delay"
//! by = 20
//! ```

use std::collections::BTreeSet;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::protocol::ReceiverId;

use super::{Action, AdversaryScript, NodeId, Rule, SignerConduct, TamperTarget, TamperableKind, Topology};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub topology: Option<TopologySection>,
    #[serde(default)]
    pub signer: SignerSection,
    #[serde(default)]
    pub rules: Vec<RuleSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub receivers: usize,
    pub link_delay: Option<u64>,
    pub deadline: Option<u64>,
    #[serde(default)]
    pub links: Vec<LinkSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub a: String,
    pub b: String,
    pub delay: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignerSection {
    #[serde(default)]
    pub equivocate: bool,
    #[serde(default)]
    pub garbage_to: Vec<u32>,
    #[serde(default)]
    pub corrupt_timeout_keys: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSection {
    pub kind: String,
    pub sender: Option<String>,
    pub receiver: Option<String>,
    pub action: String,
    pub target: Option<String>,
    pub positions: Option<Vec<usize>>,
    pub by: Option<u64>,
}

impl RuleSection {
    fn to_rule(&self, index: usize) -> Result<Rule> {
        let ctx = |msg: String| Error::config(format!("rule {}: {msg}", index + 1));
        let kind = match self.kind.to_ascii_lowercase().as_str() {
            "broadcast" => TamperableKind::Broadcast,
            "forward" => TamperableKind::Forward,
            other => return Err(ctx(format!("kind {other:?} is not tamperable (broadcast|forward)"))),
        };
        let node = |s: &Option<String>| s.as_deref().map(str::parse::<NodeId>).transpose();
        let action = match self.action.to_ascii_lowercase().as_str() {
            "tamper" => {
                let target = match self.target.as_deref().map(str::to_ascii_lowercase).as_deref() {
                    Some("message") => TamperTarget::Message,
                    Some("signature") => TamperTarget::Signature,
                    other => return Err(ctx(format!("tamper target must be message|signature, got {other:?}"))),
                };
                let positions = self
                    .positions
                    .clone()
                    .ok_or_else(|| ctx("tamper rule needs `positions`".into()))?;
                Action::Tamper { target, positions }
            }
            "delay" => Action::Delay(self.by.ok_or_else(|| ctx("delay rule needs `by`".into()))?),
            "drop" => Action::Drop,
            "replace" => Action::Replace,
            other => return Err(ctx(format!("unknown action {other:?}"))),
        };
        Ok(Rule {
            kind,
            sender: node(&self.sender).map_err(|e| ctx(e.to_string()))?,
            receiver: node(&self.receiver).map_err(|e| ctx(e.to_string()))?,
            action,
        })
    }
}

/// Parses a config document into an optional topology and an adversary script.
pub fn parse_config(text: &str) -> Result<(Option<Topology>, AdversaryScript)> {
    let raw: SimConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
    let topology = raw
        .topology
        .as_ref()
        .map(|t| {
            let mut topo = Topology::new(t.receivers)?
                .with_default_delay(t.link_delay.unwrap_or(super::DEFAULT_LINK_DELAY))
                .with_deadline(t.deadline.unwrap_or(super::DEFAULT_DEADLINE));
            for link in &t.links {
                topo.set_link_delay(link.a.parse()?, link.b.parse()?, link.delay)?;
            }
            Ok::<_, Error>(topo)
        })
        .transpose()?;
    let rules = raw
        .rules
        .iter()
        .enumerate()
        .map(|(i, r)| r.to_rule(i))
        .collect::<Result<Vec<_>>>()?;
    let signer = SignerConduct {
        equivocate: raw.signer.equivocate,
        garbage_to: raw.signer.garbage_to.iter().map(|&i| ReceiverId(i)).collect::<BTreeSet<_>>(),
        corrupt_timeout_keys: raw.signer.corrupt_timeout_keys,
    };
    Ok((topology, AdversaryScript { rules, signer }))
}
