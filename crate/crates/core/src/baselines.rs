//! Extended three-party scheme with a fixed trusted party, run once per
//! receiver, and the key-consumption comparison against it and published schemes.

use std::fmt::Write as _;

use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::keymat::{combine, required_n, total_consumption, KeyBundle};
use crate::protocol::{receiver_verify, sign, ReceiverId, SignatureBundle, VerificationOutcome};

/// Keys for k independent flows: signer-receiver `(X_i, Y_i)` and
/// signer-trusted-party `(X_Ti, Y_Ti)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtBaselineKeys {
    pub receiver: Vec<KeyBundle>,
    pub trusted: Vec<KeyBundle>,
}

impl ExtBaselineKeys {
    pub fn random<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Self {
        ExtBaselineKeys {
            receiver: (0..k).map(|_| KeyBundle::random(n, rng)).collect(),
            trusted: (0..k).map(|_| KeyBundle::random(n, rng)).collect(),
        }
    }

    pub fn bit_len(&self) -> usize {
        self.receiver.iter().chain(&self.trusted).map(KeyBundle::bit_len).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtOutcome {
    pub receiver: ReceiverId,
    pub bundle: SignatureBundle,
    pub outcome: VerificationOutcome,
}

/// Signs `message` k times, once per receiver flow, and verifies each flow
/// with `X_Ti + X_i`, `Y_Ti + Y_i`. `tamper` flips message bit 0 on that
/// receiver's copy in transit.
pub fn ext_round<R: Rng + ?Sized>(
    message: &BitString,
    k: usize,
    n: usize,
    rng: &mut R,
    tamper: Option<ReceiverId>,
) -> Result<Vec<ExtOutcome>> {
    if k == 0 || n < 2 {
        return Err(Error::invalid(format!("need k >= 1 and n >= 2, got k = {k}, n = {n}")));
    }
    if message.is_empty() {
        return Err(Error::invalid("empty message"));
    }
    let keys = ExtBaselineKeys::random(k, n, rng);
    keys.receiver
        .iter()
        .zip(&keys.trusted)
        .enumerate()
        .map(|(i, (rk, tk))| {
            let id = ReceiverId(i as u32 + 1);
            let flow_key = combine([rk], tk)?;
            let (mut bundle, _) = sign(message, &flow_key, rng)?;
            if tamper == Some(id) {
                bundle.message.flip(0);
            }
            // the receiver learns (X_Ti, Y_Ti) from the trusted party and recombines
            let outcome = receiver_verify(&bundle, &combine([tk], rk)?);
            Ok(ExtOutcome {
                receiver: id,
                bundle,
                outcome,
            })
        })
        .collect()
}

/// `6nk` bits.
pub fn ext_consumption(k: u64, n: u64) -> u64 {
    6 * n * k
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub scheme: String,
    pub sign_complexity: &'static str,
    pub verify_complexity: &'static str,
    pub k: u64,
    pub m_bits: u64,
    pub eps_f: f64,
    pub total_kbit: f64,
    /// "computed" or the publication the figure is quoted from.
    pub source: &'static str,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scenario {
    pub k: u64,
    pub m_bits: u64,
    pub eps_f: f64,
}

pub const AMIRI: &str = "Amiri et al., Cryptology ePrint Archive 2016/739";
pub const PELET: &str = "Pelet et al., New J. Phys. 24, 093038 (2022)";
pub const KIKTENKO: &str = "Kiktenko et al., Phys. Rev. A 105, 012408 (2022)";

/// Published consumption figures for transferable multi-receiver schemes. Quoted, never recomputed.
pub fn literature_rows() -> Vec<ComparisonRow> {
    let row = |scheme: &str, sign, verify, k, m_bits, total_kbit, source| ComparisonRow {
        scheme: scheme.to_string(),
        sign_complexity: sign,
        verify_complexity: verify,
        k,
        m_bits,
        eps_f: 1e-10,
        total_kbit,
        source,
    };
    vec![
        row("Amiri", "-", "-", 7, 8, 21.888, AMIRI),
        row("Pelet", "O(k^2 xi m)", "O(k xi m)", 7, 8, 35.898, PELET),
        row("Kiktenko", "-", "-", 4, 8 << 20, 279.400, KIKTENKO),
    ]
}

/// AQDS and extended-baseline rows for each scenario, followed by the literature rows.
pub fn comparison_table(scenarios: &[Scenario]) -> Result<Vec<ComparisonRow>> {
    let mut ext = Vec::new();
    let mut aqds = Vec::new();
    for s in scenarios {
        let n = required_n(s.m_bits, s.eps_f)? as u64;
        ext.push(ComparisonRow {
            scheme: "Extended Yin".into(),
            sign_complexity: "O(k m)",
            verify_complexity: "O(m)",
            k: s.k,
            m_bits: s.m_bits,
            eps_f: s.eps_f,
            total_kbit: ext_consumption(s.k, n) as f64 / 1000.0,
            source: "computed",
        });
        aqds.push(ComparisonRow {
            scheme: "AQDS".into(),
            sign_complexity: "O(m)",
            verify_complexity: "O(m)",
            k: s.k,
            m_bits: s.m_bits,
            eps_f: s.eps_f,
            total_kbit: total_consumption(s.m_bits, s.eps_f, s.k)? as f64 / 1000.0,
            source: "computed",
        });
    }
    let mut rows = literature_rows();
    rows.extend(ext);
    rows.extend(aqds);
    Ok(rows)
}

pub fn default_scenarios() -> [Scenario; 2] {
    [
        Scenario {
            k: 7,
            m_bits: 8,
            eps_f: 1e-10,
        },
        Scenario {
            k: 4,
            m_bits: 8 << 20,
            eps_f: 1e-10,
        },
    ]
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("scheme,sign,verify,k,m_bits,eps_f,total_kbit,source\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:e},{:.3},\"{}\"",
            r.scheme, r.sign_complexity, r.verify_complexity, r.k, r.m_bits, r.eps_f, r.total_kbit, r.source
        );
    }
    out
}
