//! Per-link key stocks of a deployed network and the signature rounds they support.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::keymat::required_n;
use crate::qkd_model::supported_rounds;

const EIGHT_USER: &str = include_str!("../data/eight_user_keys.toml");

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyStockFile {
    pub arbitrator: String,
    pub message_bytes: u64,
    pub epsilon: f64,
    pub scenario: Vec<KeyStock>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyStock {
    pub name: String,
    #[serde(default)]
    pub duration: Option<String>,
    /// Bits per unit of the `links` figures.
    pub unit_bits: f64,
    pub links: BTreeMap<String, f64>,
}

impl KeyStock {
    pub fn link_bits(&self) -> impl Iterator<Item = (&str, f64)> {
        self.links.iter().map(|(name, v)| (name.as_str(), v * self.unit_bits))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioReport {
    pub name: String,
    pub bottleneck_link: String,
    pub bottleneck_bits: f64,
    pub bits_per_round: u64,
    pub rounds: u64,
}

impl KeyStockFile {
    pub fn eight_user() -> Self {
        Self::parse(EIGHT_USER).expect("bundled key file is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: KeyStockFile = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if file.scenario.is_empty() {
            return Err(Error::config("no scenarios listed"));
        }
        for s in &file.scenario {
            if !s.links.contains_key(&file.arbitrator) {
                return Err(Error::config(format!(
                    "scenario {:?} has no arbitrator link {:?}",
                    s.name, file.arbitrator
                )));
            }
            if let Some((l, v)) = s.links.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::config(format!("link {l} has invalid key amount {v}")));
            }
        }
        Ok(file)
    }

    pub fn m_bits(&self) -> u64 {
        self.message_bytes * 8
    }

    pub fn reports(&self) -> Result<Vec<ScenarioReport>> {
        let per_round = 3 * required_n(self.m_bits(), self.epsilon)? as u64;
        self.scenario
            .iter()
            .map(|s| {
                let bits: Vec<(&str, f64)> = s.link_bits().collect();
                let (link, min) = bits
                    .iter()
                    .copied()
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("arbitrator link present");
                let all: Vec<f64> = bits.iter().map(|(_, b)| *b).collect();
                Ok(ScenarioReport {
                    name: s.name.clone(),
                    bottleneck_link: link.to_string(),
                    bottleneck_bits: min,
                    bits_per_round: per_round,
                    rounds: supported_rounds(&all, self.m_bits(), self.epsilon)?,
                })
            })
            .collect()
    }
}

pub fn scenario_csv(reports: &[ScenarioReport]) -> String {
    let mut out = String::from("scenario,bottleneck_link,bottleneck_bits,bits_per_round,rounds\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.name, r.bottleneck_link, r.bottleneck_bits, r.bits_per_round, r.rounds
        );
    }
    out
}
