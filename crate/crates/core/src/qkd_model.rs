//! Secure key rate of a CW-pumped entangled-photon (BBM92) link, and the
//! planners built on it: time to sign one round and rounds a key stock supports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keymat::required_n;

const REFERENCE: &str = include_str!("../data/cw_reference.toml");

fn default_q() -> f64 {
    0.5
}

fn default_f() -> f64 {
    1.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    /// Pairs per second.
    pub brightness: f64,
    pub e_pol_a: f64,
    pub e_pol_b: f64,
    /// Dark counts per second, per side.
    pub dark_count: f64,
    /// Coincidence window, seconds.
    pub t_cc: f64,
    /// Receiver loss per side, dB.
    pub eta_receiver_db: f64,
    /// Fraction of true coincidences inside the window.
    #[serde(default)]
    pub eta_tcc: Option<f64>,
    /// Timing jitter FWHM, seconds. Used when `eta_tcc` is absent.
    #[serde(default)]
    pub t_delta: Option<f64>,
    pub alpha_db_per_km: f64,
    #[serde(default = "default_q")]
    pub q_sift: f64,
    #[serde(default = "default_f")]
    pub f_ec: f64,
}

impl SourceParams {
    pub fn reference() -> Self {
        Self::from_toml(REFERENCE).expect("bundled preset is valid")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "reference" | "table1" => Ok(Self::reference()),
            other => Err(Error::config(format!("unknown source preset {other:?}"))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let p: SourceParams = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("brightness", self.brightness),
            ("dark_count", self.dark_count),
            ("t_cc", self.t_cc),
            ("eta_receiver_db", self.eta_receiver_db),
            ("alpha_db_per_km", self.alpha_db_per_km),
            ("q_sift", self.q_sift),
            ("f_ec", self.f_ec),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("e_pol_a", self.e_pol_a), ("e_pol_b", self.e_pol_b)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        self.effective_eta_tcc().map(|_| ())
    }

    /// The direct `eta_tcc` wins over one derived from `t_delta`.
    pub fn effective_eta_tcc(&self) -> Result<f64> {
        let eta = match (self.eta_tcc, self.t_delta) {
            (Some(eta), Some(_)) => {
                log::warn!("both eta_tcc and t_delta given; using eta_tcc = {eta}");
                eta
            }
            (Some(eta), None) => eta,
            (None, Some(td)) => window_efficiency(self.t_cc, td)?,
            (None, None) => return Err(Error::invalid("need eta_tcc or t_delta")),
        };
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(format!("eta_tcc must lie in (0, 1], got {eta}")));
        }
        Ok(eta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkBudget {
    pub arm_loss_db_a: f64,
    pub arm_loss_db_b: f64,
}

impl LinkBudget {
    pub fn new(arm_loss_db_a: f64, arm_loss_db_b: f64) -> Result<Self> {
        for v in [arm_loss_db_a, arm_loss_db_b] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("arm loss must be finite and >= 0 dB, got {v}")));
            }
        }
        Ok(LinkBudget {
            arm_loss_db_a,
            arm_loss_db_b,
        })
    }

    /// Source halfway along `distance_km` of fiber; each arm also pays the receiver loss.
    pub fn midpoint(params: &SourceParams, distance_km: f64) -> Result<Self> {
        if !(distance_km.is_finite() && distance_km >= 0.0) {
            return Err(Error::invalid(format!("distance must be >= 0 km, got {distance_km}")));
        }
        let arm = params.alpha_db_per_km * distance_km / 2.0 + params.eta_receiver_db;
        Self::new(arm, arm)
    }

    pub fn eta_a(&self) -> f64 {
        db_to_transmittance(self.arm_loss_db_a)
    }

    pub fn eta_b(&self) -> f64 {
        db_to_transmittance(self.arm_loss_db_b)
    }
}

pub fn db_to_transmittance(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateResult {
    pub cc_true: f64,
    pub cc_acc: f64,
    pub cc_measured: f64,
    pub cc_err: f64,
    pub qber: f64,
    /// Secure bits per second, clamped at 0.
    pub secure_rate: f64,
}

pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// `erf(sqrt(ln 2) t_cc / t_delta)`: share of a Gaussian jitter profile with
/// FWHM `t_delta` inside a window of width `t_cc`.
pub fn window_efficiency(t_cc: f64, t_delta: f64) -> Result<f64> {
    if !(t_cc > 0.0 && t_delta > 0.0) {
        return Err(Error::invalid("t_cc and t_delta must be positive"));
    }
    Ok(statrs::function::erf::erf(std::f64::consts::LN_2.sqrt() * t_cc / t_delta))
}

pub fn rate(params: &SourceParams, budget: &LinkBudget) -> Result<RateResult> {
    params.validate()?;
    let eta_tcc = params.effective_eta_tcc()?;
    let (eta_a, eta_b) = (budget.eta_a(), budget.eta_b());
    let b = params.brightness;

    let cc_true = b * eta_a * eta_b;
    let e_pol = params.e_pol_a * (1.0 - params.e_pol_b) + params.e_pol_b * (1.0 - params.e_pol_a);
    let singles_a = b * eta_a + params.dark_count;
    let singles_b = b * eta_b + params.dark_count;
    let cc_acc = singles_a * singles_b * params.t_cc;
    let cc_measured = eta_tcc * cc_true + cc_acc;
    if cc_measured <= 0.0 {
        return Err(Error::NoSignal);
    }
    let cc_err = eta_tcc * cc_true * e_pol + 0.5 * cc_acc;
    let qber = cc_err / cc_measured;
    let h = binary_entropy(qber);
    let bracket = 1.0 - params.f_ec * h - h;
    Ok(RateResult {
        cc_true,
        cc_acc,
        cc_measured,
        cc_err,
        qber,
        secure_rate: (params.q_sift * cc_measured * bracket).max(0.0),
    })
}

pub fn rate_at_distance(params: &SourceParams, distance_km: f64) -> Result<RateResult> {
    rate(params, &LinkBudget::midpoint(params, distance_km)?)
}

/// Seconds of key generation needed for the `3n` bits one round takes per link.
pub fn time_to_sign(params: &SourceParams, distance_km: f64, m_bits: u64, eps_f: f64) -> Result<f64> {
    let n = required_n(m_bits, eps_f)?;
    let r = match rate_at_distance(params, distance_km) {
        Ok(r) => r.secure_rate,
        Err(Error::NoSignal) => 0.0,
        Err(e) => return Err(e),
    };
    if r <= 0.0 {
        return Err(Error::DistanceInfeasible { distance_km });
    }
    Ok(3.0 * n as f64 / r)
}

/// Rounds the bottleneck link can pay for at `3n` bits each.
pub fn supported_rounds(key_bits_per_link: &[f64], m_bits: u64, eps_f: f64) -> Result<u64> {
    let min = key_bits_per_link
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or_else(|| Error::invalid("no links given"))?;
    if !(min.is_finite() && min >= 0.0) {
        return Err(Error::invalid(format!("key amounts must be >= 0, got {min}")));
    }
    let per_round = 3 * required_n(m_bits, eps_f)? as u64;
    Ok((min / per_round as f64).floor() as u64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub distance_km: f64,
    pub rate_bps: f64,
    /// `None` where the link yields no key.
    pub seconds: Option<f64>,
}

pub fn time_curve(params: &SourceParams, distances_km: &[f64], m_bits: u64, eps_f: f64) -> Result<Vec<CurvePoint>> {
    required_n(m_bits, eps_f)?;
    distances_km
        .iter()
        .map(|&d| {
            let rate_bps = match rate_at_distance(params, d) {
                Ok(r) => r.secure_rate,
                Err(Error::NoSignal) => 0.0,
                Err(e) => return Err(e),
            };
            let seconds = match time_to_sign(params, d, m_bits, eps_f) {
                Ok(s) => Some(s),
                Err(Error::DistanceInfeasible { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(CurvePoint {
                distance_km: d,
                rate_bps,
                seconds,
            })
        })
        .collect()
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("distance_km,R_bps,seconds\n");
    for p in points {
        let secs = p.seconds.map_or("infeasible".to_string(), |s| format!("{s:.6e}"));
        let _ = writeln!(out, "{},{:.6e},{}", p.distance_km, p.rate_bps, secs);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> SourceParams {
        SourceParams {
            brightness: 1e6,
            e_pol_a: 0.0,
            e_pol_b: 0.0,
            dark_count: 0.0,
            t_cc: 1e-15,
            eta_receiver_db: 0.0,
            eta_tcc: Some(1.0),
            t_delta: None,
            alpha_db_per_km: 0.2,
            q_sift: 0.5,
            f_ec: 1.1,
        }
    }

    /// Composite Simpson over the Gaussian jitter density.
    fn quadrature(t_cc: f64, t_delta: f64) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        let j = |t: f64| 2.0 / t_delta * (ln2 / std::f64::consts::PI).sqrt() * (-4.0 * ln2 / (t_delta * t_delta) * t * t).exp();
        let (a, b, steps) = (-t_cc / 2.0, t_cc / 2.0, 20_000);
        let h = (b - a) / steps as f64;
        let inner: f64 = (1..steps)
            .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * j(a + i as f64 * h))
            .sum();
        h / 3.0 * (j(a) + j(b) + inner)
    }

    #[test]
    fn window_efficiency_matches_quadrature() {
        for (tcc, td) in [(500e-12, 500e-12), (100e-12, 700e-12), (2e-9, 300e-12), (1.0, 3.0)] {
            let closed = window_efficiency(tcc, td).unwrap();
            assert!((closed - quadrature(tcc, td)).abs() < 1e-8, "{tcc} {td}");
        }
    }

    #[test]
    fn window_efficiency_limits() {
        assert!((window_efficiency(1e-6, 1e-12).unwrap() - 1.0).abs() < 1e-6);
        assert!((window_efficiency(500e-12, 500e-12).unwrap() - 0.7609).abs() < 1e-4);
        assert!(window_efficiency(0.0, 1.0).is_err());
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.11) - 0.4999).abs() < 1e-3);
    }

    #[test]
    fn lossless_toy_approaches_q_times_b() {
        let p = toy();
        let r = rate(&p, &LinkBudget::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(r.cc_true, 1e6);
        assert!(r.qber < 1e-6);
        assert!((r.secure_rate / (0.5 * 1e6) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn no_signal_and_infeasible_distance() {
        let mut p = toy();
        p.brightness = 0.0;
        assert_eq!(rate(&p, &LinkBudget::new(0.0, 0.0).unwrap()), Err(Error::NoSignal));
        assert!(matches!(
            time_to_sign(&SourceParams::reference(), 2000.0, 8, 1e-10),
            Err(Error::DistanceInfeasible { .. })
        ));
    }

    #[test]
    fn accidentals_push_qber_to_half_and_rate_to_zero() {
        let mut p = SourceParams::reference();
        p.t_cc = 1e-3;
        let r = rate_at_distance(&p, 100.0).unwrap();
        assert!((r.qber - 0.5).abs() < 1e-3);
        assert_eq!(r.secure_rate, 0.0);
    }

    #[test]
    fn preset_and_eta_resolution() {
        let p = SourceParams::reference();
        assert_eq!(p.brightness, 1e8);
        assert_eq!(p.effective_eta_tcc().unwrap(), 0.761);
        let mut both = p.clone();
        both.t_delta = Some(1e-9);
        assert_eq!(both.effective_eta_tcc().unwrap(), 0.761);
        let mut derived = p.clone();
        derived.eta_tcc = None;
        derived.t_delta = Some(500e-12);
        assert!((derived.effective_eta_tcc().unwrap() - 0.7609).abs() < 1e-4);
        derived.t_delta = None;
        assert!(derived.validate().is_err());
        assert!(SourceParams::preset("nope").is_err());
        assert!(SourceParams::from_toml("brightness = 1.0").is_err());
    }

    #[test]
    fn long_haul_time_is_of_order_thousand_seconds() {
        let secs = time_to_sign(&SourceParams::reference(), 360.0, 8 << 20, 1e-20).unwrap();
        assert!((330.0..=3000.0).contains(&secs), "{secs}");
        let r0 = rate_at_distance(&SourceParams::reference(), 0.0).unwrap().secure_rate;
        let t0 = time_to_sign(&SourceParams::reference(), 0.0, 8 << 20, 1e-20).unwrap();
        assert!((t0 - 3.0 * 91.0 / r0).abs() < 1e-12 * t0);
    }

    #[test]
    fn curve_marks_infeasible_rows() {
        let pts = time_curve(&SourceParams::reference(), &[0.0, 100.0, 2000.0], 8, 1e-10).unwrap();
        assert!(pts[0].seconds.unwrap() < pts[1].seconds.unwrap());
        assert_eq!(pts[2].seconds, None);
        let csv = curve_csv(&pts);
        assert!(csv.starts_with("distance_km,R_bps,seconds\n"));
        assert!(csv.lines().last().unwrap().ends_with("infeasible"));
    }

    #[test]
    fn supported_rounds_edges() {
        assert_eq!(supported_rounds(&[901.0, 5000.0], 8192, 1e-10).unwrap(), 6);
        assert_eq!(supported_rounds(&[143.0], 8192, 1e-10).unwrap(), 0);
        assert!(supported_rounds(&[], 8192, 1e-10).is_err());
    }

    proptest! {
        #[test]
        fn supported_rounds_matches_subtraction(key in 0u32..200_000, k2 in 0u32..200_000, exp in 2.0f64..20.0) {
            let eps = 10f64.powf(-exp);
            let per = 3 * required_n(8192, eps).unwrap();
            let mut stock = key.min(k2);
            let mut rounds = 0;
            while stock >= per {
                stock -= per;
                rounds += 1;
            }
            prop_assert_eq!(supported_rounds(&[key as f64, k2 as f64], 8192, eps).unwrap(), rounds);
        }

        #[test]
        fn chain_is_consistent(d in 0.0f64..400.0, e in 0.0f64..0.2, dc in 0.0f64..1e4, tcc in 1e-12f64..1e-8) {
            let mut p = SourceParams::reference();
            p.e_pol_a = e;
            p.dark_count = dc;
            p.t_cc = tcc;
            let r = rate_at_distance(&p, d).unwrap();
            let eta = p.effective_eta_tcc().unwrap();
            prop_assert!(r.cc_measured >= eta * r.cc_true);
            prop_assert!(r.cc_err <= r.cc_measured);
            prop_assert!((0.0..=1.0).contains(&r.qber));
            let e_pol = e * (1.0 - p.e_pol_b) + p.e_pol_b * (1.0 - e);
            prop_assert!(r.qber <= 0.5 + eta * r.cc_true * e_pol / r.cc_measured + 1e-12);
            let h = binary_entropy(r.qber);
            prop_assert_eq!(r.secure_rate == 0.0, 1.0 - p.f_ec * h - h <= 0.0 || r.cc_measured == 0.0);
        }

        #[test]
        fn time_is_monotone_in_distance(d in 0.0f64..300.0, step in 0.0f64..50.0) {
            let p = SourceParams::reference();
            let a = time_to_sign(&p, d, 8, 1e-10);
            let b = time_to_sign(&p, d + step, 8, 1e-10);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert!(b >= a),
                (Ok(_), Err(_)) | (Err(_), Err(_)) => {}
                (Err(_), Ok(_)) => prop_assert!(false, "feasibility returned at a longer distance"),
            }
        }

        #[test]
        fn window_efficiency_is_monotone(t in 1e-12f64..1e-9, td in 1e-12f64..1e-9, f in 1.01f64..2.0) {
            let base = window_efficiency(t, td).unwrap();
            prop_assert!(window_efficiency(t * f, td).unwrap() >= base);
            prop_assert!(window_efficiency(t, td * f).unwrap() <= base);
        }
    }
}
