//! The candidate's private-information structure, expressed directly in
//! subjective-quality space.
//!
//! A quality `x` is the posterior odds statistic `f_H / (f_H + f_L)` of the
//! candidate's raw signal, so every model here must satisfy
//! `f_H(x) / f_L(x) = x / (1 - x)` on the interior. The built-in
//! [`SignalModel::polynomial`] pair `F_H(x) = x²`, `F_L(x) = 1 - (1 - x)²`
//! satisfies it exactly. Custom models are supplied as a pair of
//! [`QualityDistribution`]s, usually piecewise polynomials loaded from a
//! config file.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Hidden state of the world: the candidate is a high or a low fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    High,
    Low,
}

/// A distribution of subjective quality on `[0, 1]` conditional on one state.
pub trait QualityDistribution: Send + Sync + fmt::Debug {
    fn cdf(&self, x: f64) -> f64;
    fn pdf(&self, x: f64) -> f64;

    /// `∫_t^1 x f(x) dx` in closed form, when the distribution knows it.
    fn upper_moment(&self, _t: f64) -> Option<f64> {
        None
    }
}

const BISECTION_TOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;
const MOMENT_TOL: f64 = 1e-9;

#[derive(Clone)]
enum Family {
    Polynomial,
    Custom {
        high: Arc<dyn QualityDistribution>,
        low: Arc<dyn QualityDistribution>,
        config: Option<ModelConfig>,
    },
}

/// Conditional quality distributions `F_H`, `F_L` shared by every candidate in
/// a market. Immutable once built.
#[derive(Clone)]
pub struct SignalModel {
    family: Family,
}

impl fmt::Debug for SignalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Polynomial => f.write_str("SignalModel::Polynomial"),
            Family::Custom { high, low, .. } => f
                .debug_struct("SignalModel::Custom")
                .field("high", high)
                .field("low", low)
                .finish(),
        }
    }
}

impl Default for SignalModel {
    fn default() -> Self {
        Self::polynomial()
    }
}

impl SignalModel {
    /// `F_H(x) = x²`, `F_L(x) = 1 - (1 - x)²`.
    pub fn polynomial() -> Self {
        SignalModel {
            family: Family::Polynomial,
        }
    }

    /// Builds a custom model. Both distributions are probed on a grid: the
    /// cdfs must be finite, run from 0 to 1 and never decrease, and the pdfs
    /// must be finite and nonnegative. Quality-space consistency is not
    /// enforced here; see [`SignalModel::consistency_check`].
    pub fn custom(
        high: Arc<dyn QualityDistribution>,
        low: Arc<dyn QualityDistribution>,
    ) -> Result<Self> {
        validate_distribution("high", high.as_ref())?;
        validate_distribution("low", low.as_ref())?;
        Ok(SignalModel {
            family: Family::Custom {
                high,
                low,
                config: None,
            },
        })
    }

    pub fn from_config(config: &ModelConfig) -> Result<Self> {
        match config {
            ModelConfig::Polynomial => Ok(Self::polynomial()),
            ModelConfig::Custom { high, low, .. } => {
                let h = PiecewisePolynomial::new(high.breaks.clone(), high.cdf.clone())?;
                let l = PiecewisePolynomial::new(low.breaks.clone(), low.cdf.clone())?;
                let mut model = Self::custom(Arc::new(h), Arc::new(l))?;
                if let Family::Custom { config: c, .. } = &mut model.family {
                    *c = Some(config.clone());
                }
                Ok(model)
            }
        }
    }

    /// The config this model was loaded from, if it has a serializable form.
    pub fn to_config(&self) -> Option<ModelConfig> {
        match &self.family {
            Family::Polynomial => Some(ModelConfig::Polynomial),
            Family::Custom { config, .. } => config.clone(),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self.family, Family::Polynomial)
    }

    /// `F_ω(x)`.
    pub fn quality_cdf(&self, state: State, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.cdf(state, x))
    }

    /// `f_ω(x)`.
    pub fn quality_pdf(&self, state: State, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.pdf(state, x))
    }

    /// Unchecked cdf for callers that already hold a quality in `[0, 1]`.
    pub(crate) fn cdf(&self, state: State, x: f64) -> f64 {
        match (&self.family, state) {
            (Family::Polynomial, State::High) => x * x,
            (Family::Polynomial, State::Low) => 1.0 - (1.0 - x) * (1.0 - x),
            (Family::Custom { high, .. }, State::High) => high.cdf(x),
            (Family::Custom { low, .. }, State::Low) => low.cdf(x),
        }
    }

    pub(crate) fn pdf(&self, state: State, x: f64) -> f64 {
        match (&self.family, state) {
            (Family::Polynomial, State::High) => 2.0 * x,
            (Family::Polynomial, State::Low) => 2.0 * (1.0 - x),
            (Family::Custom { high, .. }, State::High) => high.pdf(x),
            (Family::Custom { low, .. }, State::Low) => low.pdf(x),
        }
    }

    /// Survival function `1 - F_ω(x)`. For the polynomial pair this is
    /// evaluated without cancellation.
    pub(crate) fn survival(&self, state: State, x: f64) -> f64 {
        match (&self.family, state) {
            (Family::Polynomial, State::High) => (1.0 - x) * (1.0 + x),
            (Family::Polynomial, State::Low) => (1.0 - x) * (1.0 - x),
            _ => 1.0 - self.cdf(state, x),
        }
    }

    /// `∫_t^1 x f_ω(x) dx`: closed form for the polynomial pair, adaptive
    /// Simpson otherwise.
    pub fn upper_moment(&self, state: State, t: f64) -> Result<f64> {
        check_unit(t)?;
        match (&self.family, state) {
            (Family::Polynomial, State::High) => Ok(2.0 / 3.0 * (1.0 - t * t * t)),
            (Family::Polynomial, State::Low) => Ok((1.0 - t * t) - 2.0 / 3.0 * (1.0 - t * t * t)),
            (Family::Custom { high, low, .. }, _) => {
                let dist = if state == State::High { high } else { low };
                if let Some(v) = dist.upper_moment(t) {
                    return Ok(v);
                }
                adaptive_simpson(|x| x * dist.pdf(x), t, 1.0, MOMENT_TOL)
            }
        }
    }

    /// Inverse-cdf sampling: maps a uniform draw `u ∈ (0,1)` to a quality.
    pub fn sample_quality(&self, state: State, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::UniformDomain(u));
        }
        match (&self.family, state) {
            (Family::Polynomial, State::High) => Ok(u.sqrt()),
            (Family::Polynomial, State::Low) => Ok(1.0 - (1.0 - u).sqrt()),
            (Family::Custom { .. }, _) => self.bisect_quantile(state, u),
        }
    }

    fn bisect_quantile(&self, state: State, u: f64) -> Result<f64> {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..BISECTION_MAX_ITER {
            if hi - lo <= BISECTION_TOL {
                return Ok(0.5 * (lo + hi));
            }
            let mid = 0.5 * (lo + hi);
            let c = self.cdf(state, mid);
            if !c.is_finite() {
                return Err(Error::Model(format!("cdf({mid}) = {c}")));
            }
            if c < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::Bisection(BISECTION_MAX_ITER))
    }

    /// Evaluates the quality-space consistency invariant, first-order
    /// stochastic dominance and interior positivity of both densities on the
    /// uniform interior grid `k / (n + 1)`, `k = 1..=n`.
    pub fn consistency_check(&self, grid_points: usize) -> Result<ConsistencyReport> {
        if grid_points < 2 {
            return Err(Error::param("grid_points", "be at least 2"));
        }
        let mut report = ConsistencyReport {
            grid_points,
            max_ratio_error: 0.0,
            fosd_violations: 0,
            positivity_violations: 0,
        };
        let n = grid_points as f64;
        for k in 1..=grid_points {
            let x = k as f64 / (n + 1.0);
            let (fh, fl) = (self.pdf(State::High, x), self.pdf(State::Low, x));
            let (ch, cl) = (self.cdf(State::High, x), self.cdf(State::Low, x));
            for v in [fh, fl, ch, cl] {
                if !v.is_finite() {
                    return Err(Error::Model(format!("non-finite value {v} at x={x}")));
                }
            }
            if fh <= 1e-12 || fl <= 1e-12 {
                report.positivity_violations += 1;
                report.max_ratio_error = f64::INFINITY;
                continue;
            }
            let target = x / (1.0 - x);
            let err = ((fh / fl) - target).abs() / target;
            report.max_ratio_error = report.max_ratio_error.max(err);
            if ch > cl + 1e-12 {
                report.fosd_violations += 1;
            }
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub grid_points: usize,
    /// Worst relative deviation of `f_H/f_L` from `x/(1-x)`.
    pub max_ratio_error: f64,
    /// Grid points where `F_H(x) > F_L(x)`.
    pub fosd_violations: usize,
    /// Grid points where either density is not strictly positive.
    pub positivity_violations: usize,
}

impl ConsistencyReport {
    pub const RATIO_TOLERANCE: f64 = 1e-8;

    pub fn passes(&self) -> bool {
        self.max_ratio_error <= Self::RATIO_TOLERANCE
            && self.fosd_violations == 0
            && self.positivity_violations == 0
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(x))
    }
}

fn validate_distribution(label: &str, d: &dyn QualityDistribution) -> Result<()> {
    let c0 = d.cdf(0.0);
    let c1 = d.cdf(1.0);
    if !(c0.abs() <= 1e-9 && (c1 - 1.0).abs() <= 1e-9) {
        return Err(Error::Model(format!(
            "{label} cdf must run from 0 to 1, got F(0)={c0}, F(1)={c1}"
        )));
    }
    let mut prev = c0;
    for k in 1..=1000 {
        let x = k as f64 / 1000.0;
        let c = d.cdf(x);
        let p = d.pdf(x);
        if !c.is_finite() || !p.is_finite() {
            return Err(Error::Model(format!(
                "{label} distribution is not finite at x={x}"
            )));
        }
        if c < prev - 1e-12 {
            return Err(Error::Model(format!("{label} cdf decreases near x={x}")));
        }
        if p < -1e-12 {
            return Err(Error::Model(format!("{label} pdf is negative at x={x}")));
        }
        prev = c;
    }
    Ok(())
}

/// A cdf given as a polynomial in `x` on each piece of a partition of `[0, 1]`.
/// Coefficients are in ascending powers of the global coordinate `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial {
    breaks: Vec<f64>,
    cdf: Vec<Vec<f64>>,
    pdf: Vec<Vec<f64>>,
}

impl PiecewisePolynomial {
    pub fn new(breaks: Vec<f64>, cdf: Vec<Vec<f64>>) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::Config("need at least two breakpoints".into()));
        }
        if breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
            return Err(Error::Config(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if cdf.len() != breaks.len() - 1 {
            return Err(Error::Config(format!(
                "{} breakpoints need {} coefficient lists, got {}",
                breaks.len(),
                breaks.len() - 1,
                cdf.len()
            )));
        }
        if cdf
            .iter()
            .any(|c| c.is_empty() || c.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Config(
                "coefficient lists must be non-empty and finite".into(),
            ));
        }
        let pdf = cdf
            .iter()
            .map(|c| {
                let d: Vec<f64> = c
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, a)| k as f64 * a)
                    .collect();
                if d.is_empty() {
                    vec![0.0]
                } else {
                    d
                }
            })
            .collect();
        let pp = PiecewisePolynomial { breaks, cdf, pdf };
        for (k, &b) in pp.breaks.iter().enumerate().skip(1).take(pp.cdf.len() - 1) {
            let left = horner(&pp.cdf[k - 1], b);
            let right = horner(&pp.cdf[k], b);
            if (left - right).abs() > 1e-9 {
                return Err(Error::Config(format!("cdf is discontinuous at x={b}")));
            }
        }
        Ok(pp)
    }

    fn piece(&self, x: f64) -> usize {
        let k = self.breaks.partition_point(|&b| b <= x);
        k.saturating_sub(1).min(self.cdf.len() - 1)
    }
}

impl QualityDistribution for PiecewisePolynomial {
    fn cdf(&self, x: f64) -> f64 {
        horner(&self.cdf[self.piece(x)], x)
    }

    fn pdf(&self, x: f64) -> f64 {
        horner(&self.pdf[self.piece(x)], x)
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Serialized form of a [`SignalModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelConfig {
    #[default]
    Polynomial,
    Custom {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        high: PiecewiseCdf,
        low: PiecewiseCdf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCdf {
    pub breaks: Vec<f64>,
    pub cdf: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn custom(high: (&[f64], &[&[f64]]), low: (&[f64], &[&[f64]])) -> SignalModel {
        let piece = |(b, c): (&[f64], &[&[f64]])| PiecewiseCdf {
            breaks: b.to_vec(),
            cdf: c.iter().map(|v| v.to_vec()).collect(),
        };
        SignalModel::from_config(&ModelConfig::Custom {
            name: None,
            high: piece(high),
            low: piece(low),
        })
        .unwrap()
    }

    /// The polynomial pair written as a custom model, so it goes through the
    /// generic evaluation paths.
    fn polynomial_as_custom() -> SignalModel {
        custom(
            (&[0.0, 0.5, 1.0], &[&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]]),
            (&[0.0, 1.0], &[&[0.0, 2.0, -1.0]]),
        )
    }

    #[test]
    fn polynomial_cdf_values() {
        let m = SignalModel::polynomial();
        assert_eq!(m.quality_cdf(State::High, 0.5).unwrap(), 0.25);
        assert_eq!(m.quality_cdf(State::Low, 0.5).unwrap(), 0.75);
        assert_eq!(m.quality_cdf(State::High, 0.0).unwrap(), 0.0);
        assert_eq!(m.quality_cdf(State::Low, 0.0).unwrap(), 0.0);
        assert_eq!(m.quality_cdf(State::Low, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn polynomial_pdf_values() {
        let m = SignalModel::polynomial();
        assert_eq!(m.quality_pdf(State::High, 0.25).unwrap(), 0.5);
        assert_eq!(m.quality_pdf(State::Low, 0.25).unwrap(), 1.5);
        let r = m.quality_pdf(State::High, 0.5).unwrap() / m.quality_pdf(State::Low, 0.5).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn domain_errors() {
        let m = SignalModel::polynomial();
        assert_eq!(m.quality_cdf(State::High, 1.5), Err(Error::Domain(1.5)));
        assert_eq!(m.quality_pdf(State::Low, -0.1), Err(Error::Domain(-0.1)));
        assert!(m.quality_cdf(State::High, f64::NAN).is_err());
        assert!(m.sample_quality(State::High, 0.0).is_err());
        assert!(m.sample_quality(State::High, 1.0).is_err());
    }

    #[test]
    fn polynomial_passes_consistency() {
        let r = SignalModel::polynomial().consistency_check(1001).unwrap();
        assert!(r.max_ratio_error <= 1e-12, "{r:?}");
        assert_eq!(r.fosd_violations, 0);
        assert!(r.passes());

        let r = SignalModel::polynomial().consistency_check(2).unwrap();
        assert!(r.passes());
        assert!(SignalModel::polynomial().consistency_check(1).is_err());
    }

    #[test]
    fn identical_states_flagged() {
        let m = custom((&[0.0, 1.0], &[&[0.0, 1.0]]), (&[0.0, 1.0], &[&[0.0, 1.0]]));
        let r = m.consistency_check(101).unwrap();
        assert!(r.max_ratio_error > 0.5);
        assert!(!r.passes());
    }

    #[test]
    fn custom_model_validation() {
        let bad = ModelConfig::Custom {
            name: None,
            high: PiecewiseCdf {
                breaks: vec![0.0, 1.0],
                cdf: vec![vec![0.0, 0.5]],
            },
            low: PiecewiseCdf {
                breaks: vec![0.0, 1.0],
                cdf: vec![vec![0.0, 1.0]],
            },
        };
        assert!(matches!(
            SignalModel::from_config(&bad),
            Err(Error::Model(_))
        ));

        let decreasing = ModelConfig::Custom {
            name: None,
            high: PiecewiseCdf {
                breaks: vec![0.0, 1.0],
                cdf: vec![vec![0.0, 3.0, -2.0]],
            },
            low: PiecewiseCdf {
                breaks: vec![0.0, 1.0],
                cdf: vec![vec![0.0, 1.0]],
            },
        };
        assert!(SignalModel::from_config(&decreasing).is_err());

        assert!(PiecewisePolynomial::new(vec![0.0, 0.5], vec![vec![0.0]]).is_err());
        assert!(PiecewisePolynomial::new(vec![0.0, 0.6, 0.6, 1.0], vec![vec![0.0]; 3]).is_err());
        // jump at the breakpoint
        assert!(PiecewisePolynomial::new(
            vec![0.0, 0.5, 1.0],
            vec![vec![0.0, 1.0], vec![0.1, 0.9]]
        )
        .is_err());
    }

    #[test]
    fn custom_matches_polynomial() {
        let c = polynomial_as_custom();
        let p = SignalModel::polynomial();
        assert!(c.consistency_check(999).unwrap().passes());
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            for s in [State::High, State::Low] {
                assert!((c.cdf(s, x) - p.cdf(s, x)).abs() < 1e-15);
                assert!((c.pdf(s, x) - p.pdf(s, x)).abs() < 1e-15);
                let mc = c.upper_moment(s, x).unwrap();
                let mp = p.upper_moment(s, x).unwrap();
                assert!((mc - mp).abs() < 1e-9, "{s:?} {x}: {mc} vs {mp}");
            }
        }
    }

    #[test]
    fn quantiles() {
        let p = SignalModel::polynomial();
        assert_eq!(p.sample_quality(State::High, 0.25).unwrap(), 0.5);
        assert_eq!(p.sample_quality(State::Low, 0.75).unwrap(), 0.5);
        assert!(p.sample_quality(State::High, 1e-300).unwrap() < 1e-100);

        let c = polynomial_as_custom();
        assert!((c.sample_quality(State::High, 0.25).unwrap() - 0.5).abs() < 1e-11);
        assert!((c.sample_quality(State::Low, 0.75).unwrap() - 0.5).abs() < 1e-11);
        assert!(c.sample_quality(State::High, 1e-15).unwrap() < 1e-6);
    }

    #[test]
    fn config_round_trip() {
        let toml_src = r#"
            family = "custom"
            name = "beta-like"
            [high]
            breaks = [0.0, 1.0]
            cdf = [[0.0, 0.0, 0.0, 4.0, -3.0]]
            [low]
            breaks = [0.0, 1.0]
            cdf = [[0.0, 0.0, 6.0, -8.0, 3.0]]
        "#;
        let cfg: ModelConfig = toml::from_str(toml_src).unwrap();
        let m = SignalModel::from_config(&cfg).unwrap();
        assert!(m.consistency_check(501).unwrap().passes());
        assert_eq!(m.to_config(), Some(cfg));
        let poly: ModelConfig = toml::from_str("family = \"polynomial\"").unwrap();
        assert!(SignalModel::from_config(&poly).unwrap().is_polynomial());
    }
}
