//! Strategic gatekeeping: the gatekeeper waives its signal with probability
//! `σ` and passes the applicant unconditionally.
//!
//! Raising `σ` makes the candidate more selective (the threshold `x(σ)`
//! rises from `x(q)` at `σ=0` to `x̂` at `σ=1`). Whether the gatekeeper gains
//! from it is decided by the sign of `∂U_K/∂σ` at `σ = 0`; the prior at which
//! that marginal turns positive for good is `μ̄`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{SignalModel, State};
use crate::solo::{SoloMarket, SoloParams};

const SCAN_STEP: f64 = 1e-3;
const GOLDEN_TOL: f64 = 1e-8;
const MU_BAR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedPolicyAnalysis {
    pub sigma: f64,
    pub x_sigma: f64,
    pub dx_dsigma: f64,
    pub keeper_utility: f64,
    pub marginal_at_zero: f64,
}

/// Both inequalities that rule out trivially dominant gatekeeper strategies,
/// evaluated at the mechanical threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NontrivialityReport {
    /// Payoff from passing a high-signal applicant; must be positive.
    pub high_signal_value: f64,
    /// Payoff from passing a low-signal applicant; must be negative.
    pub low_signal_value: f64,
    pub accept_dominates: bool,
    pub reject_dominates: bool,
    pub interior: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalSigma {
    pub sigma_star: f64,
    pub utility_star: f64,
}

/// Outcome of the search for the prior above which mechanical gatekeeping is
/// no longer a local best response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MuBar {
    Crossing {
        mu_bar: f64,
        /// The marginal changes sign more than once inside the region where
        /// the gatekeeper's problem is non-trivial.
        nonmonotone: bool,
    },
    /// The marginal is positive on the whole scan grid: mechanical play is
    /// never a local best response.
    AlwaysPositive,
    /// The marginal is non-positive at the top of the scan grid.
    NeverPositive,
}

impl MuBar {
    pub fn value(&self) -> Option<f64> {
        match *self {
            MuBar::Crossing { mu_bar, .. } => Some(mu_bar),
            _ => None,
        }
    }

    /// Value usable for ordering comparisons: the sentinels map to the ends of
    /// the prior range.
    pub fn effective_value(&self) -> f64 {
        match *self {
            MuBar::Crossing { mu_bar, .. } => mu_bar,
            MuBar::AlwaysPositive => 0.0,
            MuBar::NeverPositive => 1.0,
        }
    }

    /// Whether the CSV flag column is set: no crossing, or a non-unique one.
    pub fn flagged(&self) -> bool {
        !matches!(
            self,
            MuBar::Crossing {
                nonmonotone: false,
                ..
            }
        )
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&sigma) {
        Ok(())
    } else {
        Err(Error::param("sigma", "lie in [0,1]"))
    }
}

impl SoloMarket {
    fn mixed_pass(&self, sigma: f64) -> (f64, f64) {
        let q = self.params().q;
        (q + sigma * (1.0 - q), (1.0 - q) + sigma * q)
    }

    /// `x(σ)`.
    pub fn mixed_threshold(&self, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        let (ah, al) = self.mixed_pass(sigma);
        Ok(self.threshold_for(ah, al))
    }

    /// `∂x/∂σ` in closed form.
    pub fn threshold_sigma_derivative(&self, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        let SoloParams {
            mu,
            q,
            gamma,
            phi,
            alpha,
            ..
        } = *self.params();
        let loss = gamma - phi * alpha;
        let (ah, al) = self.mixed_pass(sigma);
        let den = loss * (1.0 - mu) * al + (1.0 - gamma) * mu * ah;
        Ok(loss * (1.0 - mu) * (1.0 - gamma) * mu * (2.0 * q - 1.0) / (den * den))
    }

    pub fn nontriviality_check(&self) -> NontrivialityReport {
        let SoloParams { mu, q, phi, d, .. } = *self.params();
        let x = self.mechanical_threshold().x;
        let sh = self.model().survival(State::High, x);
        let sl = self.model().survival(State::Low, x);
        let high_signal_value = mu * q * sh - d * phi * (1.0 - mu) * (1.0 - q) * sl;
        let low_signal_value = mu * (1.0 - q) * sh - d * phi * (1.0 - mu) * q * sl;
        let accept_dominates = low_signal_value >= 0.0;
        let reject_dominates = high_signal_value <= 0.0;
        NontrivialityReport {
            high_signal_value,
            low_signal_value,
            accept_dominates,
            reject_dominates,
            interior: high_signal_value > 0.0 && low_signal_value < 0.0,
        }
    }

    /// `U_K(σ)`: expected gatekeeper payoff when the candidate best-responds
    /// to `σ`.
    pub fn keeper_utility(&self, sigma: f64) -> Result<f64> {
        let x = self.mixed_threshold(sigma)?;
        Ok(self.evaluate(&self.mixed(sigma), x).keeper_utility)
    }

    /// `∂U_K/∂σ` at `σ`, combining the direct effect of waiving the signal
    /// with the induced shift of the candidate threshold.
    pub fn keeper_marginal(&self, sigma: f64) -> Result<f64> {
        let SoloParams { mu, q, phi, d, .. } = *self.params();
        let x = self.mixed_threshold(sigma)?;
        let dx = self.threshold_sigma_derivative(sigma)?;
        let m = self.model();
        let (ah, al) = self.mixed_pass(sigma);
        let direct = mu * (1.0 - q) * m.survival(State::High, x)
            - d * phi * (1.0 - mu) * q * m.survival(State::Low, x);
        let shift = (mu * ah * m.pdf(State::High, x)
            - d * phi * (1.0 - mu) * al * m.pdf(State::Low, x))
            * dx;
        Ok(direct - shift)
    }

    pub fn keeper_marginal_at_zero(&self) -> f64 {
        self.keeper_marginal(0.0).expect("sigma = 0 is valid")
    }

    pub fn analyze_mixed(&self, sigma: f64) -> Result<MixedPolicyAnalysis> {
        Ok(MixedPolicyAnalysis {
            sigma,
            x_sigma: self.mixed_threshold(sigma)?,
            dx_dsigma: self.threshold_sigma_derivative(sigma)?,
            keeper_utility: self.keeper_utility(sigma)?,
            marginal_at_zero: self.keeper_marginal_at_zero(),
        })
    }

    /// `θ(σ)`: correctness under the mixed policy.
    pub fn mixed_correctness(&self, sigma: f64) -> Result<f64> {
        let x = self.mixed_threshold(sigma)?;
        Ok(self.evaluate(&self.mixed(sigma), x).correctness)
    }

    /// Global maximizer of `U_K` over `[0, 1]`. Every local maximum of a
    /// coarse scan is refined by golden-section search and the best one wins,
    /// so concavity is not assumed.
    pub fn optimal_sigma(&self) -> OptimalSigma {
        let n = (1.0 / SCAN_STEP).round() as usize;
        let u = |s: f64| self.keeper_utility(s).expect("sigma in [0,1]");
        let values: Vec<f64> = (0..=n).map(|k| u(k as f64 / n as f64)).collect();

        let mut best = (0.0, values[0]);
        for (k, &v) in values.iter().enumerate() {
            if v > best.1 {
                best = (k as f64 / n as f64, v);
            }
        }
        for k in 0..=n {
            let left = if k > 0 {
                values[k - 1]
            } else {
                f64::NEG_INFINITY
            };
            let right = if k < n {
                values[k + 1]
            } else {
                f64::NEG_INFINITY
            };
            if values[k] < left || values[k] < right {
                continue;
            }
            let lo = k.saturating_sub(1) as f64 / n as f64;
            let hi = (k + 1).min(n) as f64 / n as f64;
            let (s, v) = golden_section_max(&u, lo, hi, GOLDEN_TOL);
            if v > best.1 {
                best = (s, v);
            }
        }
        OptimalSigma {
            sigma_star: best.0,
            utility_star: best.1,
        }
    }
}

/// Maximizes a unimodal `f` on `[a, b]`; returns `(argmax, max)`.
fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for s in [a, b] {
        let v = f(s);
        if v > best.1 {
            best = (s, v);
        }
    }
    best
}

/// Locates `μ̄` for a market template whose `mu` is ignored: the smallest
/// prior such that `∂U_K/∂σ|₀ > 0` at every scan-grid prior above it.
///
/// The scan runs over `μ ∈ {0.001, …, 0.999}`; the last sign change is then
/// bisected to `1e-6`. Sign changes are counted only where the gatekeeper's
/// problem is non-trivial.
pub fn mu_bar(template: &SoloParams, model: &SignalModel) -> Result<MuBar> {
    let at = |mu: f64| -> Result<SoloMarket> {
        SoloMarket::new(SoloParams { mu, ..*template }, model.clone())
    };
    let n = (1.0 / SCAN_STEP).round() as usize;
    let grid: Vec<f64> = (1..n).map(|k| k as f64 / n as f64).collect();
    let mut positive = Vec::with_capacity(grid.len());
    let mut interior = Vec::with_capacity(grid.len());
    for &mu in &grid {
        let m = at(mu)?;
        positive.push(m.keeper_marginal_at_zero() > 0.0);
        interior.push(m.nontriviality_check().interior);
    }

    let Some(last_bad) = positive.iter().rposition(|&p| !p) else {
        return Ok(MuBar::AlwaysPositive);
    };
    if last_bad + 1 == grid.len() {
        return Ok(MuBar::NeverPositive);
    }

    let changes = (1..grid.len())
        .filter(|&k| interior[k - 1] && interior[k] && positive[k - 1] != positive[k])
        .count();

    let (mut lo, mut hi) = (grid[last_bad], grid[last_bad + 1]);
    while hi - lo > MU_BAR_TOL {
        let mid = 0.5 * (lo + hi);
        if at(mid)?.keeper_marginal_at_zero() > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MuBar::Crossing {
        mu_bar: hi,
        nonmonotone: changes > 1,
    })
}
