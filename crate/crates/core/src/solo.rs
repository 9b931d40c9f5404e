//! The single-candidate screening game.
//!
//! A candidate privately observes her subjective quality `p` and decides
//! whether to apply. An applicant first faces the gatekeeper, which passes her
//! with probability `α^H` or `α^L` depending on her hidden type, and then
//! takes a costly test (cost `γ`) that a high type always passes and a low
//! type passes with probability `φ`. A hired low type earns `α`, a hired high
//! type earns 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{SignalModel, State};

/// Raw parameters of a [`SoloMarket`], before validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoloParams {
    /// Public belief `Pr(ω = H)`.
    pub mu: f64,
    /// Gatekeeper signal quality.
    pub q: f64,
    /// Test cost.
    pub gamma: f64,
    /// Probability that a low type passes the test.
    pub phi: f64,
    /// Utility of a hired low type.
    pub alpha: f64,
    /// Gatekeeper disutility from a hired low type.
    pub d: f64,
}

impl Default for SoloParams {
    /// The worked example used throughout: `μ=0.5, q=0.75, γ=0.4, φ=0.6,
    /// α=0.5, d=1`.
    fn default() -> Self {
        SoloParams {
            mu: 0.5,
            q: 0.75,
            gamma: 0.4,
            phi: 0.6,
            alpha: 0.5,
            d: 1.0,
        }
    }
}

impl SoloParams {
    pub fn validate(&self) -> Result<()> {
        self.check(false)
    }

    fn check(&self, limits: bool) -> Result<()> {
        let finite = [
            ("mu", self.mu),
            ("q", self.q),
            ("gamma", self.gamma),
            ("phi", self.phi),
            ("alpha", self.alpha),
            ("d", self.d),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(name, "be finite"));
            }
        }
        if limits {
            if !(0.0..=1.0).contains(&self.mu) {
                return Err(Error::param("mu", "lie in [0,1]"));
            }
            if !(0.0..=1.0).contains(&self.phi) {
                return Err(Error::param("phi", "lie in [0,1]"));
            }
        } else {
            if !(self.mu > 0.0 && self.mu < 1.0) {
                return Err(Error::param("mu", "lie in (0,1)"));
            }
            if !(self.phi > 0.0 && self.phi < 1.0) {
                return Err(Error::param("phi", "lie in (0,1)"));
            }
        }
        if !(self.q >= 0.5 && self.q < 1.0) {
            return Err(Error::param("q", "lie in [0.5,1)"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::param("alpha", "be positive"));
        }
        if !(self.d > 0.0) {
            return Err(Error::param("d", "be positive"));
        }
        if !(self.alpha * self.phi < self.gamma && self.gamma < 1.0) {
            return Err(Error::param("gamma", "satisfy alpha*phi < gamma < 1"));
        }
        Ok(())
    }
}

/// How the gatekeeper treats its binary signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GatekeeperPolicy {
    /// No gatekeeper: every applicant takes the test.
    None,
    /// Pass on a high signal, reject on a low one. The signal is correct with
    /// probability `q`.
    Mechanical { q: f64 },
    /// With probability `sigma` pass unconditionally, otherwise act
    /// mechanically.
    Mixed { q: f64, sigma: f64 },
}

impl GatekeeperPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GatekeeperPolicy::None => Ok(()),
            GatekeeperPolicy::Mechanical { q } => check_q(q),
            GatekeeperPolicy::Mixed { q, sigma } => {
                check_q(q)?;
                if (0.0..=1.0).contains(&sigma) {
                    Ok(())
                } else {
                    Err(Error::param("sigma", "lie in [0,1]"))
                }
            }
        }
    }

    /// Pass probabilities `(α^H, α^L)` of a high and a low type.
    pub fn pass_probabilities(&self) -> (f64, f64) {
        match *self {
            GatekeeperPolicy::None => (1.0, 1.0),
            GatekeeperPolicy::Mechanical { q } => (q, 1.0 - q),
            GatekeeperPolicy::Mixed { q, sigma } => (q + sigma * (1.0 - q), (1.0 - q) + sigma * q),
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if (0.5..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::param("q", "lie in [0.5,1]"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdRegime {
    Interior,
    AlwaysApply,
    NeverApply,
}

/// The lowest quality at which applying is optimal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub x: f64,
    pub regime: ThresholdRegime,
}

impl ThresholdResult {
    pub(crate) fn from_x(x: f64) -> Self {
        let regime = if x <= 0.0 {
            ThresholdRegime::AlwaysApply
        } else if x >= 1.0 {
            ThresholdRegime::NeverApply
        } else {
            ThresholdRegime::Interior
        };
        ThresholdResult { x, regime }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessReport {
    /// Correctness with the mechanical gatekeeper.
    pub theta: f64,
    /// Correctness with no gatekeeper.
    pub theta_baseline: f64,
    pub improvement: f64,
    /// Left-hand side of the improvement criterion; the gatekeeper helps iff
    /// it does not exceed `q`.
    pub prop1_lhs: f64,
    pub prop1_holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// A barely informative gatekeeper already improves correctness.
    LowQualityHelps,
    /// A barely informative gatekeeper lowers correctness.
    LowQualityHurts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub regime: Regime,
    /// `μ(1-F_H(x̂)) / ((1-μ)(1-F_L(x̂)))`, compared against `φ`.
    pub ratio: f64,
    /// Set when the ratio equals `φ` exactly; the verdict then defaults to
    /// [`Regime::LowQualityHurts`].
    pub boundary: bool,
}

/// Analytic event probabilities and payoffs of the solo game for a fixed
/// policy and candidate threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoloOutcome {
    pub threshold: f64,
    pub application_rate: f64,
    pub hire_rate: f64,
    pub hire_high_rate: f64,
    pub correctness: f64,
    pub candidate_utility: f64,
    pub keeper_utility: f64,
}

/// A validated single-candidate market.
#[derive(Debug, Clone)]
pub struct SoloMarket {
    params: SoloParams,
    model: SignalModel,
}

impl SoloMarket {
    pub fn new(params: SoloParams, model: SignalModel) -> Result<Self> {
        params.validate()?;
        Ok(SoloMarket { params, model })
    }

    /// Like [`SoloMarket::new`] but admits the closed ranges `μ ∈ [0,1]` and
    /// `φ ∈ [0,1]`, for limit scenarios fed to the simulator.
    pub fn with_limits(params: SoloParams, model: SignalModel) -> Result<Self> {
        params.check(true)?;
        Ok(SoloMarket { params, model })
    }

    /// The worked example with the polynomial signal model.
    pub fn example() -> Self {
        SoloMarket::new(SoloParams::default(), SignalModel::polynomial()).unwrap()
    }

    pub fn params(&self) -> &SoloParams {
        &self.params
    }

    pub fn model(&self) -> &SignalModel {
        &self.model
    }

    pub fn mechanical(&self) -> GatekeeperPolicy {
        GatekeeperPolicy::Mechanical { q: self.params.q }
    }

    pub fn mixed(&self, sigma: f64) -> GatekeeperPolicy {
        GatekeeperPolicy::Mixed {
            q: self.params.q,
            sigma,
        }
    }

    /// `γ - αφ`: the low type's net loss from taking the test.
    fn low_loss(&self) -> f64 {
        self.params.gamma - self.params.alpha * self.params.phi
    }

    /// Indifference threshold for arbitrary pass probabilities.
    pub(crate) fn threshold_for(&self, pass_high: f64, pass_low: f64) -> f64 {
        let SoloParams { mu, gamma, .. } = self.params;
        let low = self.low_loss() * (1.0 - mu) * pass_low;
        let high = (1.0 - gamma) * mu * pass_high;
        if low + high == 0.0 {
            // both pass probabilities vanish; nobody gains anything by applying
            return 1.0;
        }
        low / (low + high)
    }

    pub fn threshold(&self, policy: &GatekeeperPolicy) -> Result<ThresholdResult> {
        policy.validate()?;
        let (ah, al) = policy.pass_probabilities();
        Ok(ThresholdResult::from_x(self.threshold_for(ah, al)))
    }

    /// `x̂`: threshold without a gatekeeper.
    pub fn baseline_threshold(&self) -> ThresholdResult {
        ThresholdResult::from_x(self.threshold_for(1.0, 1.0))
    }

    /// `x(q)`: threshold under the mechanical gatekeeper.
    pub fn mechanical_threshold(&self) -> ThresholdResult {
        let q = self.params.q;
        ThresholdResult::from_x(self.threshold_for(q, 1.0 - q))
    }

    /// Expected utility of applying at quality `p`.
    pub fn candidate_apply_utility(&self, policy: &GatekeeperPolicy, p: f64) -> Result<f64> {
        policy.validate()?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(p));
        }
        let SoloParams { mu, gamma, .. } = self.params;
        let (ah, al) = policy.pass_probabilities();
        let wh = mu * p;
        let wl = (1.0 - mu) * (1.0 - p);
        let post = wh / (wh + wl);
        Ok(post * ah * (1.0 - gamma) - (1.0 - post) * al * self.low_loss())
    }

    /// Event probabilities when the candidate applies at `threshold` and the
    /// gatekeeper plays `policy`.
    pub fn evaluate(&self, policy: &GatekeeperPolicy, threshold: f64) -> SoloOutcome {
        let SoloParams {
            mu,
            gamma,
            phi,
            alpha,
            d,
            ..
        } = self.params;
        let (ah, al) = policy.pass_probabilities();
        let sh = self.model.survival(State::High, threshold);
        let sl = self.model.survival(State::Low, threshold);
        let hire_high = mu * ah * sh;
        let hire_low = (1.0 - mu) * al * sl * phi;
        SoloOutcome {
            threshold,
            application_rate: mu * sh + (1.0 - mu) * sl,
            hire_rate: hire_high + hire_low,
            hire_high_rate: hire_high,
            correctness: hire_high + (1.0 - mu) - hire_low,
            candidate_utility: mu * ah * sh * (1.0 - gamma)
                + (1.0 - mu) * al * sl * (alpha * phi - gamma),
            keeper_utility: hire_high - d * hire_low,
        }
    }

    /// Correctness `θ` under `policy` with the candidate best-responding.
    pub fn correctness(&self, policy: &GatekeeperPolicy) -> Result<f64> {
        let x = self.threshold(policy)?.x;
        Ok(self.evaluate(policy, x).correctness)
    }

    /// `θ̂`: correctness without a gatekeeper.
    pub fn baseline_correctness(&self) -> f64 {
        let x = self.baseline_threshold().x;
        self.evaluate(&GatekeeperPolicy::None, x).correctness
    }

    /// Compares the mechanical gatekeeper against no gatekeeper.
    pub fn mechanical_correctness(&self) -> CorrectnessReport {
        let SoloParams { mu, q, phi, .. } = self.params;
        let x_hat = self.baseline_threshold().x;
        let x_q = self.mechanical_threshold().x;
        let theta = self.evaluate(&self.mechanical(), x_q).correctness;
        let theta_baseline = self.baseline_correctness();
        let m = &self.model;
        let num = mu * m.survival(State::High, x_hat)
            + (1.0 - mu) * phi * (m.cdf(State::Low, x_hat) - m.cdf(State::Low, x_q));
        let den =
            mu * m.survival(State::High, x_q) + (1.0 - mu) * phi * m.survival(State::Low, x_q);
        let prop1_lhs = num / den;
        CorrectnessReport {
            theta,
            theta_baseline,
            improvement: theta - theta_baseline,
            prop1_lhs,
            prop1_holds: prop1_lhs <= q,
        }
    }

    /// Predicts whether a gatekeeper of quality just above one half helps or
    /// hurts correctness.
    pub fn regime_classify(&self) -> RegimeVerdict {
        let SoloParams { mu, phi, .. } = self.params;
        let x_hat = self.baseline_threshold().x;
        let ratio = mu * self.model.survival(State::High, x_hat)
            / ((1.0 - mu) * self.model.survival(State::Low, x_hat));
        let regime = if ratio < phi {
            Regime::LowQualityHelps
        } else {
            Regime::LowQualityHurts
        };
        RegimeVerdict {
            regime,
            ratio,
            boundary: ratio == phi,
        }
    }

    /// `E[p | p ≥ threshold]` under the unconditional quality mixture.
    pub fn mean_applicant_quality(&self, policy: &GatekeeperPolicy) -> Result<f64> {
        let t = self.threshold(policy)?.x;
        self.mean_quality_above(t)
    }

    pub(crate) fn mean_quality_above(&self, t: f64) -> Result<f64> {
        let mu = self.params.mu;
        let mass = mu * self.model.survival(State::High, t)
            + (1.0 - mu) * self.model.survival(State::Low, t);
        if mass <= 0.0 {
            return Ok(1.0);
        }
        let moment = mu * self.model.upper_moment(State::High, t)?
            + (1.0 - mu) * self.model.upper_moment(State::Low, t)?;
        Ok(moment / mass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn market(mu: f64, q: f64) -> SoloMarket {
        SoloMarket::new(
            SoloParams {
                mu,
                q,
                ..SoloParams::default()
            },
            SignalModel::polynomial(),
        )
        .unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn invariant_violations_name_the_parameter() {
        let bad = |p: SoloParams| {
            SoloMarket::new(p, SignalModel::polynomial())
                .unwrap_err()
                .to_string()
        };
        let base = SoloParams::default();
        assert_eq!(bad(SoloParams { mu: 1.1, ..base }), "mu must lie in (0,1)");
        assert_eq!(bad(SoloParams { q: 1.0, ..base }), "q must lie in [0.5,1)");
        assert_eq!(
            bad(SoloParams { phi: 0.0, ..base }),
            "phi must lie in (0,1)"
        );
        assert_eq!(
            bad(SoloParams { gamma: 0.2, ..base }),
            "gamma must satisfy alpha*phi < gamma < 1"
        );
        assert_eq!(
            bad(SoloParams { gamma: 1.0, ..base }),
            "gamma must satisfy alpha*phi < gamma < 1"
        );
        assert_eq!(
            bad(SoloParams { alpha: 0.0, ..base }),
            "alpha must be positive"
        );
        assert_eq!(bad(SoloParams { d: -1.0, ..base }), "d must be positive");
        assert_eq!(
            bad(SoloParams {
                mu: f64::NAN,
                ..base
            }),
            "mu must be finite"
        );
        // gamma below phi is fine as long as alpha*phi < gamma
        assert!(SoloMarket::new(
            SoloParams {
                gamma: 0.35,
                ..base
            },
            SignalModel::polynomial()
        )
        .is_ok());
        assert!(SoloMarket::with_limits(
            SoloParams {
                mu: 1.0,
                phi: 0.0,
                ..base
            },
            SignalModel::polynomial()
        )
        .is_ok());
    }

    #[test]
    fn baseline_threshold_values() {
        assert!(close(
            market(0.5, 0.75).baseline_threshold().x,
            1.0 / 7.0,
            1e-15
        ));
        assert!(close(market(0.2, 0.75).baseline_threshold().x, 0.4, 1e-15));
        let t = market(1.0 - 1e-12, 0.75).baseline_threshold();
        assert!(t.x < 1e-10);
        assert_eq!(
            market(0.5, 0.75).baseline_threshold().regime,
            ThresholdRegime::Interior
        );
    }

    #[test]
    fn mechanical_threshold_values() {
        assert!(close(
            market(0.5, 0.75).mechanical_threshold().x,
            1.0 / 19.0,
            1e-15
        ));
        let m = market(0.5, 0.5);
        assert!(close(
            m.mechanical_threshold().x,
            m.baseline_threshold().x,
            1e-16
        ));
        assert!(market(0.5, 1.0 - 1e-12).mechanical_threshold().x < 1e-10);
    }

    #[test]
    fn apply_utility_values() {
        let m = market(0.5, 0.75);
        let x_q = m.mechanical_threshold().x;
        assert!(close(
            m.candidate_apply_utility(&m.mechanical(), x_q).unwrap(),
            0.0,
            1e-12
        ));
        assert!(close(
            m.candidate_apply_utility(&GatekeeperPolicy::None, 1.0)
                .unwrap(),
            0.6,
            1e-15
        ));
        assert!(close(
            m.candidate_apply_utility(&m.mechanical(), 0.0).unwrap(),
            -0.025,
            1e-15
        ));
        assert!(m.candidate_apply_utility(&m.mechanical(), 1.2).is_err());
        assert!(m.candidate_apply_utility(&m.mixed(1.5), 0.5).is_err());
    }

    #[test]
    fn baseline_correctness_values() {
        // x̂ = 1/7: F_H = 1/49, F_L = 13/49
        let m = market(0.5, 0.75);
        let expected = 0.5 * (48.0 / 49.0) + 0.5 * (1.0 - (36.0 / 49.0) * 0.6);
        assert!(close(m.baseline_correctness(), expected, 1e-15));
        assert!(close(m.baseline_correctness(), 0.769388, 1e-6));
        assert!(close(
            market(0.2, 0.75).baseline_correctness(),
            0.7952,
            1e-12
        ));

        let tiny_phi = SoloMarket::new(
            SoloParams {
                phi: 1e-12,
                ..SoloParams::default()
            },
            SignalModel::polynomial(),
        )
        .unwrap();
        let x = tiny_phi.baseline_threshold().x;
        let limit = 0.5 * (1.0 - x * x) + 0.5;
        assert!(close(tiny_phi.baseline_correctness(), limit, 1e-11));
    }

    #[test]
    fn mechanical_correctness_values() {
        let r = market(0.5, 0.75).mechanical_correctness();
        assert!(close(r.theta, 0.806648, 1e-6));
        assert!(close(r.improvement, 0.037260, 1e-6));
        // x̂ = 1/7 and x(q) = 1/19 in exact fractions
        let num = 0.5 * 48.0 / 49.0 + 0.5 * 0.6 * (13.0 / 49.0 - 37.0 / 361.0);
        let den = 0.5 * 360.0 / 361.0 + 0.5 * 0.6 * 324.0 / 361.0;
        assert!(close(r.prop1_lhs, num / den, 1e-15));
        assert!(close(r.prop1_lhs, 0.70147, 1e-5));
        assert!(r.prop1_holds);

        let r = market(0.5, 0.51).mechanical_correctness();
        assert!(r.improvement < 0.0);
        assert!(!r.prop1_holds);

        // a coin-flip gatekeeper still halves every pass probability, so the
        // limit is signed by the regime classifier, not zero
        for mu in [0.2, 0.5] {
            let m = market(mu, 0.5 + 1e-9);
            let r = m.mechanical_correctness();
            match m.regime_classify().regime {
                Regime::LowQualityHelps => assert!(r.improvement > 0.0),
                Regime::LowQualityHurts => assert!(r.improvement < 0.0),
            }
        }
    }

    #[test]
    fn regime_values() {
        let v = market(0.5, 0.75).regime_classify();
        assert!(close(v.ratio, 4.0 / 3.0, 1e-14));
        assert_eq!(v.regime, Regime::LowQualityHurts);
        assert!(!v.boundary);

        let v = market(0.2, 0.75).regime_classify();
        assert!(close(v.ratio, 0.168 / 0.288, 1e-14));
        assert_eq!(v.regime, Regime::LowQualityHelps);

        let v = market(1.0 - 1e-9, 0.75).regime_classify();
        assert!(v.ratio > 1e6);
        assert_eq!(v.regime, Regime::LowQualityHurts);
    }

    #[test]
    fn mean_quality_values() {
        let m = market(0.5, 0.75);
        assert!(close(
            m.mean_applicant_quality(&GatekeeperPolicy::None).unwrap(),
            4.0 / 7.0,
            1e-14
        ));
        assert!(close(
            m.mean_applicant_quality(&m.mechanical()).unwrap(),
            10.0 / 19.0,
            1e-14
        ));
        assert_eq!(m.mean_quality_above(1.0).unwrap(), 1.0);
        assert!(close(m.mean_quality_above(1.0 - 1e-6).unwrap(), 1.0, 1e-6));
    }

    #[test]
    fn evaluate_is_consistent_with_closed_forms() {
        let m = market(0.3, 0.8);
        let pol = m.mixed(0.4);
        let x = m.threshold(&pol).unwrap().x;
        let o = m.evaluate(&pol, x);
        assert!(close(o.correctness, m.correctness(&pol).unwrap(), 0.0));
        assert!(o.hire_high_rate <= o.hire_rate && o.hire_rate <= o.application_rate);
    }
}
