//! Closed-form horizons beyond which relative arbitrage is guaranteed.
//!
//! Out-of-range parameters produce `valid = false` with an explanatory note
//! rather than an error, so sweeps can cross validity boundaries freely.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SptError};

/// Open interval `(lo, hi)` for the parameter `name`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    fn new(name: &str, lo: f64, hi: f64) -> Self {
        Interval { name: name.into(), lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

/// Echo of every input a calculator consumed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HorizonInputs {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub eps: f64,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_minus: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonBound {
    /// Time horizon; `NaN` (serialized as null) when undefined.
    #[serde(rename = "threshold_T")]
    pub threshold_t: f64,
    pub valid: bool,
    pub parameter_range: Interval,
    /// Further parameter constraints (e.g. the `p−` range of the two-sided
    /// comparison).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub other_ranges: Vec<Interval>,
    /// Interval exactly as stated alongside the result, when it differs from
    /// `parameter_range`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub printed_range: Option<Interval>,
    /// Auxiliary constant entering the threshold (`C`, or the denominator
    /// factor of the positive small-stock case).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    pub inputs: HorizonInputs,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl HorizonBound {
    fn finish(mut self) -> Self {
        if !self.threshold_t.is_finite() {
            self.threshold_t = f64::NAN;
        }
        if self.valid && (self.threshold_t.is_nan() || self.threshold_t <= 0.0) {
            self.valid = false;
            self.notes.push("threshold is not a positive finite time".into());
        }
        self
    }

    /// True when `t` lies strictly beyond a valid threshold.
    pub fn guarantees(&self, t: f64) -> bool {
        self.valid && t > self.threshold_t
    }
}

struct Checks(Vec<String>);

impl Checks {
    fn new() -> Self {
        Checks(Vec::new())
    }

    fn require(&mut self, ok: bool, msg: impl Into<String>) {
        if !ok {
            self.0.push(msg.into());
        }
    }

    fn ok(&self) -> bool {
        self.0.is_empty()
    }
}

fn thm1_range(n: usize, phi: f64) -> Interval {
    let nf = n as f64;
    Interval::new("p", nf.ln() / (nf * phi).ln(), 0.0)
}

/// Negative-parameter diversity-weighted portfolio under no-failure.
pub fn horizon_thm1(n: usize, phi: f64, eps: f64, p: f64) -> HorizonBound {
    let nf = n as f64;
    let mut c = Checks::new();
    c.require(n >= 2, "requires n >= 2");
    c.require(phi > 0.0 && phi * nf < 1.0, "requires 0 < phi < 1/n");
    c.require(eps > 0.0, "requires eps > 0");
    let range = thm1_range(n, phi);
    c.require(range.contains(p), format!("p={p} outside ({}, 0)", range.lo));
    let np = nf * phi;
    let t = -2.0 * nf * np.ln() / (eps * (1.0 - p) * (nf - np.powf(p)));
    HorizonBound {
        threshold_t: t,
        valid: c.ok(),
        parameter_range: range,
        other_ranges: vec![],
        printed_range: None,
        constant: None,
        inputs: HorizonInputs { n, phi: Some(phi), eps, p: Some(p), ..Default::default() },
        notes: c.0,
    }
    .finish()
}

/// Positive-parameter diversity-weighted portfolio under diversity: the
/// smaller of the classical bound and its improvement.
pub fn horizon_fkk_positive(n: usize, eps: f64, delta: f64, p: f64) -> HorizonBound {
    let nf = n as f64;
    let mut c = Checks::new();
    c.require(n >= 2, "requires n >= 2");
    c.require(delta > 0.0 && delta < 1.0, "requires 0 < delta < 1");
    c.require(eps > 0.0, "requires eps > 0");
    let range = Interval::new("p", 0.0, 1.0);
    c.require(range.contains(p), format!("p={p} outside (0, 1)"));
    let first = 2.0 * nf.ln() / (eps * delta * p);
    let ratio = nf * delta / (nf - 1.0);
    let mut notes = Vec::new();
    let t = if ratio < 1.0 {
        let second = -2.0 * ratio.ln() / (eps * delta * (1.0 - p));
        first.min(second)
    } else {
        notes.push("n*delta/(n-1) >= 1: improved term not applicable".to_string());
        first
    };
    notes.extend(c.0.iter().cloned());
    HorizonBound {
        threshold_t: t,
        valid: c.ok(),
        parameter_range: range,
        other_ranges: vec![],
        printed_range: None,
        constant: None,
        inputs: HorizonInputs { n, delta: Some(delta), eps, p: Some(p), ..Default::default() },
        notes,
    }
    .finish()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallStockCase {
    /// `r ∈ (0,1)` under limited failure; `barrier` is `κ`.
    SmallStockPos,
    /// `r < 0` under no-failure; `barrier` is `φ`.
    SmallStockNeg,
}

/// Small-stock diversity-weighted portfolio (ranks `m+1..=n`).
pub fn horizon_prop2(case: SmallStockCase, n: usize, m: usize, barrier: f64, eps: f64, r: f64) -> HorizonBound {
    let nf = n as f64;
    let k = n as f64 - m as f64;
    let m1 = (m + 1) as f64;
    let mut c = Checks::new();
    c.require(m >= 1 && m < n, "requires 1 <= m < n");
    c.require(eps > 0.0, "requires eps > 0");
    match case {
        SmallStockCase::SmallStockPos => {
            let kappa = barrier;
            let x = m1 * kappa;
            c.require(kappa > 0.0 && kappa < 1.0 / (2.0 * m1), "requires 0 < kappa < 1/(2(m+1))");
            let upper = -(2f64.ln()) / x.ln();
            let range = Interval::new("r", 0.0, upper);
            c.require(range.contains(r), format!("r={r} outside (0, {upper})"));
            let factor = 2.0 - x.powf(-r);
            c.require(factor > 0.0, format!("denominator factor 2-((m+1)kappa)^(-r) = {factor} is not positive"));
            let t = 4.0 * ((k / 2.0).ln() - r * x.ln()) / (eps * r * (1.0 - r) * factor);
            HorizonBound {
                threshold_t: t,
                valid: c.ok(),
                parameter_range: range,
                other_ranges: vec![],
                printed_range: Some(Interval::new("r", upper, 1.0)),
                constant: Some(factor),
                inputs: HorizonInputs { n, kappa: Some(kappa), eps, r: Some(r), m: Some(m), ..Default::default() },
                notes: c.0,
            }
            .finish()
        }
        SmallStockCase::SmallStockNeg => {
            let phi = barrier;
            let x = m1 * phi;
            c.require(phi > 0.0 && phi * nf < 1.0, "requires 0 < phi < 1/n");
            let range = Interval::new("r", k.ln() / x.ln(), 0.0);
            c.require(range.contains(r), format!("r={r} outside ({}, 0)", range.lo));
            let t = -2.0 * k * x.ln() / (eps * (1.0 - r) * (k - x.powf(r)));
            HorizonBound {
                threshold_t: t,
                valid: c.ok(),
                parameter_range: range,
                other_ranges: vec![],
                printed_range: None,
                constant: None,
                inputs: HorizonInputs { n, phi: Some(phi), eps, r: Some(r), m: Some(m), ..Default::default() },
                notes: c.0,
            }
            .finish()
        }
    }
}

/// Negative- versus positive-parameter diversity weighting under
/// no-failure and bounded variance.
pub fn horizon_prop3(n: usize, phi: f64, eps: f64, k_cap: f64, p_plus: f64, p_minus: f64) -> HorizonBound {
    let nf = n as f64;
    let np = nf * phi;
    let mut c = Checks::new();
    c.require(n >= 2, "requires n >= 2");
    c.require(phi > 0.0 && np < 1.0, "requires 0 < phi < 1/n");
    c.require(eps > 0.0 && eps <= k_cap, "requires 0 < eps <= K");
    let minus_range = thm1_range(n, phi);
    c.require(minus_range.contains(p_minus), format!("p_minus={p_minus} outside ({}, 0)", minus_range.lo));
    let lo = (1.0 - eps * (nf - np.powf(p_minus)) * (1.0 - p_minus) / (4.0 * k_cap * (nf - 1.0))).max(0.0);
    let plus_range = Interval::new("p_plus", lo, 1.0);
    c.require(plus_range.contains(p_plus), format!("p_plus={p_plus} outside ({lo}, 1)"));
    let cc =
        0.5 * eps * (1.0 - np.powf(p_minus) / nf) * (1.0 - p_minus) - 2.0 * k_cap / nf * (nf - 1.0) * (1.0 - p_plus);
    c.require(cc > 0.0, format!("C = {cc} is not positive"));
    HorizonBound {
        threshold_t: -2.0 * np.ln() / cc,
        valid: c.ok(),
        parameter_range: plus_range,
        other_ranges: vec![Interval { name: "p_minus".into(), ..minus_range }],
        printed_range: None,
        constant: Some(cc),
        inputs: HorizonInputs {
            n,
            phi: Some(phi),
            eps,
            k: Some(k_cap),
            p_plus: Some(p_plus),
            p_minus: Some(p_minus),
            ..Default::default()
        },
        notes: c.0,
    }
    .finish()
}

/// Mixed portfolio `𝔭π⁺ + (1−𝔭)π⁻` under diversity.
pub fn horizon_prop4(n: usize, delta: f64, eps: f64, p_plus: f64, p_minus: f64) -> HorizonBound {
    let nf = n as f64;
    let mut c = Checks::new();
    c.require(n >= 2, "requires n >= 2");
    c.require(delta > 0.0 && delta < 1.0, "requires 0 < delta < 1");
    c.require(eps > 0.0, "requires eps > 0");
    let plus_range = Interval::new("p_plus", 0.0, 1.0);
    let minus_range = Interval::new("p_minus", f64::NEG_INFINITY, 0.0);
    c.require(plus_range.contains(p_plus), "requires 0 < p_plus < 1");
    c.require(minus_range.contains(p_minus), "requires p_minus < 0");
    let gm = nf.powf(1.0 / p_minus - 1.0);
    let gp = nf.powf(1.0 / p_plus - 1.0);
    let t = 2.0 * (1.0 + gm) * (gp + gm).ln() / (eps * delta * (1.0 - p_plus));
    HorizonBound {
        threshold_t: t,
        valid: c.ok(),
        parameter_range: plus_range,
        other_ranges: vec![minus_range],
        printed_range: None,
        constant: None,
        inputs: HorizonInputs {
            n,
            delta: Some(delta),
            eps,
            p_plus: Some(p_plus),
            p_minus: Some(p_minus),
            ..Default::default()
        },
        notes: c.0,
    }
    .finish()
}

/// Limited-failure parameters `(𝔪, κ)` implied by diversity with `δ`.
pub fn lf_from_diversity(n: usize, delta: f64) -> Result<(usize, f64)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(SptError::Config(format!("lf_from_diversity requires 0 < delta < 1, got {delta}")));
    }
    let inv = 1.0 / (1.0 - delta);
    if n as f64 <= inv {
        return Err(SptError::Config(format!("lf_from_diversity requires n > 1/(1-delta) = {inv}, got n={n}")));
    }
    // absorb round-off when 1/(1-δ) is an integer
    let m = (inv + 1e-12).floor() as usize;
    let kappa = (1.0 - (m as f64 - 1.0) * (1.0 - delta)) / (n as f64 - (m as f64 - 1.0));
    Ok((m, kappa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn thm1_examples() {
        let b = horizon_thm1(2, 0.2, 0.04, -0.5);
        assert!(b.valid);
        assert_relative_eq!(b.parameter_range.lo, 2f64.ln() / 0.4f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(b.parameter_range.lo, -0.75647, max_relative = 1e-5);
        assert_relative_eq!(b.threshold_t, 145.84, max_relative = 1e-4);
        assert!(!horizon_thm1(2, 0.2, 0.04, -5.0).valid);
        assert!(!horizon_thm1(2, 0.6, 0.04, -0.5).valid);
    }

    #[test]
    fn fkk_examples() {
        let b = horizon_fkk_positive(2, 0.04, 0.25, 0.5);
        assert_relative_eq!(b.threshold_t, 2.0 * 2f64.ln() / 0.005, max_relative = 1e-12);
        assert_relative_eq!(b.threshold_t, 277.26, max_relative = 1e-4);
        let near_one = horizon_fkk_positive(5, 0.04, 0.25, 1.0 - 1e-9);
        assert_relative_eq!(near_one.threshold_t, 2.0 * 5f64.ln() / 0.01, max_relative = 1e-6);
    }

    #[test]
    fn prop2_examples() {
        let b = horizon_prop2(SmallStockCase::SmallStockNeg, 5, 2, 0.05, 0.04, -0.5);
        assert!(b.valid);
        assert_relative_eq!(b.threshold_t, 453.8, max_relative = 1e-3);
        let b = horizon_prop2(SmallStockCase::SmallStockPos, 5, 2, 0.1, 0.04, 0.5);
        assert!(b.valid);
        assert_relative_eq!(b.threshold_t, 2312.6, max_relative = 1e-3);
        assert!(b.constant.unwrap() > 0.0);
        let b = horizon_prop2(SmallStockCase::SmallStockPos, 5, 2, 0.1, 0.04, 0.7);
        assert!(!b.valid);
        assert!(b.constant.unwrap() < 0.0);
    }

    #[test]
    fn prop3_examples() {
        let b = horizon_prop3(2, 0.2, 0.04, 0.05, 0.99, -0.5);
        assert!(b.valid);
        assert_relative_eq!(b.parameter_range.lo, 0.874342, max_relative = 1e-6);
        assert_relative_eq!(b.constant.unwrap(), 0.0057829, max_relative = 1e-4);
        assert_relative_eq!(b.threshold_t, 316.9, max_relative = 1e-3);
        let b = horizon_prop3(2, 0.2, 0.04, 0.05, 0.5, -0.5);
        assert!(!b.valid);
        assert!(b.constant.unwrap() <= 0.0);
    }

    #[test]
    fn prop4_examples() {
        let b = horizon_prop4(4, 0.3, 0.04, 0.5, -0.5);
        assert!(b.valid);
        assert_relative_eq!(b.threshold_t, 470.64, max_relative = 1e-4);
        let ts: Vec<f64> = (1..=40).map(|k| horizon_prop4(4, 0.3, 0.04, 0.5, -0.1 * k as f64).threshold_t).collect();
        assert!(ts.windows(2).all(|w| w[0] < w[1]), "threshold decreases as p_minus rises");
        let limit = 2.0 * 4f64.ln() / (0.04 * 0.3 * 0.5);
        assert_relative_eq!(horizon_prop4(4, 0.3, 0.04, 0.5, -1e-6).threshold_t, limit, max_relative = 1e-9);
    }

    #[test]
    fn lf_examples() {
        assert_eq!(lf_from_diversity(5, 0.5).unwrap(), (2, 0.125));
        let (m, kappa) = lf_from_diversity(7, 1e-9).unwrap();
        assert_eq!(m, 1);
        assert_relative_eq!(kappa, 1.0 / 7.0, max_relative = 1e-15);
        for n in 3..30 {
            for k in 1..100 {
                let delta = k as f64 / 100.0;
                if let Ok((m, kappa)) = lf_from_diversity(n, delta) {
                    assert!(kappa < 1.0 / m as f64 && kappa > 0.0);
                }
            }
        }
        assert!(lf_from_diversity(2, 0.6).is_err());
    }
}
