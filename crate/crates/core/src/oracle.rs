//! Seeded Monte Carlo simulation of the solo and biased games.
//!
//! Replication `k` draws from its own ChaCha stream `(seed, k)`, and
//! replications are grouped into fixed chunks whose tallies are merged in
//! chunk order. Reports are therefore bit-identical at any thread count.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duel::{BiasedMarket, Candidate, Side};
use crate::error::{Error, Result};
use crate::signal::State;
use crate::solo::{GatekeeperPolicy, SoloMarket};

const CHUNK: u64 = 1 << 14;

/// Width of the agreement band in standard errors.
pub const AGREEMENT_SE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub replications: u64,
}

impl SimConfig {
    pub fn new(seed: u64, replications: u64) -> Result<Self> {
        let config = SimConfig { seed, replications };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::param("n", "be at least 1"));
        }
        Ok(())
    }
}

/// A simulated event frequency with its binomial standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEstimate {
    pub name: String,
    pub count: u64,
    pub estimate: f64,
    pub se: f64,
}

/// A simulated mean over `samples` observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub name: String,
    pub samples: u64,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub replications: u64,
    pub events: Vec<EventEstimate>,
    pub means: Vec<MeanEstimate>,
}

/// An analytic value set against its simulated counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub analytic: f64,
    pub estimate: f64,
    pub se: f64,
    /// `None` when the standard error is zero.
    pub z: Option<f64>,
    pub agrees: bool,
}

impl SimReport {
    pub fn event(&self, name: &str) -> Option<&EventEstimate> {
        self.events.iter().find(|e| e.name == name)
    }

    pub fn mean(&self, name: &str) -> Option<&MeanEstimate> {
        self.means.iter().find(|m| m.name == name)
    }

    /// Matches each named analytic value with the event or mean of the same
    /// name. Names without a simulated counterpart are skipped.
    pub fn compare(&self, analytic: &[(&'static str, f64)]) -> Vec<Comparison> {
        analytic
            .iter()
            .filter_map(|&(name, value)| {
                let (estimate, se) = match (self.event(name), self.mean(name)) {
                    (Some(e), _) => (e.estimate, e.se),
                    (None, Some(m)) => (m.mean, m.se),
                    (None, None) => return None,
                };
                let diff = estimate - value;
                Some(Comparison {
                    name: name.to_string(),
                    analytic: value,
                    estimate,
                    se,
                    z: (se > 0.0).then(|| diff / se),
                    agrees: diff.abs() <= AGREEMENT_SE * se + 1e-12,
                })
            })
            .collect()
    }
}

#[derive(Clone)]
struct Tally<const K: usize, const M: usize> {
    counts: [u64; K],
    samples: [u64; M],
    sums: [f64; M],
    squares: [f64; M],
}

impl<const K: usize, const M: usize> Tally<K, M> {
    fn new() -> Self {
        Tally {
            counts: [0; K],
            samples: [0; M],
            sums: [0.0; M],
            squares: [0.0; M],
        }
    }

    fn hit(&mut self, event: usize, happened: bool) {
        self.counts[event] += u64::from(happened);
    }

    fn observe(&mut self, mean: usize, value: f64) {
        self.samples[mean] += 1;
        self.sums[mean] += value;
        self.squares[mean] += value * value;
    }

    fn merge(&mut self, other: &Self) {
        for i in 0..K {
            self.counts[i] += other.counts[i];
        }
        for i in 0..M {
            self.samples[i] += other.samples[i];
            self.sums[i] += other.sums[i];
            self.squares[i] += other.squares[i];
        }
    }
}

fn run<const K: usize, const M: usize>(
    config: &SimConfig,
    event_names: [&str; K],
    mean_names: [&str; M],
    replicate: impl Fn(&mut ChaCha8Rng, &mut Tally<K, M>) + Sync,
) -> Result<SimReport> {
    config.validate()?;
    let n = config.replications;
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<Tally<K, M>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut tally = Tally::new();
            for k in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let mut rng = base.clone();
                rng.set_stream(k);
                replicate(&mut rng, &mut tally);
            }
            tally
        })
        .collect();
    let mut total = Tally::<K, M>::new();
    for t in &partial {
        total.merge(t);
    }

    let nf = n as f64;
    let events = event_names
        .iter()
        .zip(total.counts)
        .map(|(name, count)| {
            let p = count as f64 / nf;
            EventEstimate {
                name: name.to_string(),
                count,
                estimate: p,
                se: (p * (1.0 - p) / nf).sqrt(),
            }
        })
        .collect();
    let means = (0..M)
        .map(|i| {
            let s = total.samples[i];
            let (mean, se) = if s == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let sf = s as f64;
                let mean = total.sums[i] / sf;
                let var = if s > 1 {
                    ((total.squares[i] - sf * mean * mean) / (sf - 1.0)).max(0.0)
                } else {
                    0.0
                };
                (mean, (var / sf).sqrt())
            };
            MeanEstimate {
                name: mean_names[i].to_string(),
                samples: s,
                mean,
                se,
            }
        })
        .collect();
    Ok(SimReport {
        seed: config.seed,
        replications: n,
        events,
        means,
    })
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(Open01)
}

fn draw_state(rng: &mut ChaCha8Rng, mu: f64) -> State {
    if uniform(rng) < mu {
        State::High
    } else {
        State::Low
    }
}

/// Simulates the solo game. The candidate applies when her quality is at
/// least `threshold`, or the analytic threshold for `policy` when `None`.
///
/// Events: `correctness`, `application_rate`, `pass_rate`, `hire_rate`,
/// `hire_high_rate`. Means: `mean_applicant_quality` (over applicants),
/// `candidate_utility` and `keeper_utility` (over replications).
pub fn simulate_solo(
    market: &SoloMarket,
    policy: &GatekeeperPolicy,
    threshold: Option<f64>,
    config: &SimConfig,
) -> Result<SimReport> {
    policy.validate()?;
    let x = match threshold {
        Some(t) if (0.0..=1.0).contains(&t) => t,
        Some(t) => return Err(Error::Domain(t)),
        None => market.threshold(policy)?.x,
    };
    let p = *market.params();
    let model = market.model();
    let (waive, accuracy) = match *policy {
        GatekeeperPolicy::None => (1.0, 1.0),
        GatekeeperPolicy::Mechanical { q } => (0.0, q),
        GatekeeperPolicy::Mixed { q, sigma } => (sigma, q),
    };
    run(
        config,
        [
            "correctness",
            "application_rate",
            "pass_rate",
            "hire_rate",
            "hire_high_rate",
        ],
        [
            "mean_applicant_quality",
            "candidate_utility",
            "keeper_utility",
        ],
        |rng, tally| {
            let state = draw_state(rng, p.mu);
            let quality = model
                .sample_quality(state, uniform(rng))
                .expect("uniform draw lies in (0,1)");
            let applied = quality >= x;
            // gatekeeper: waive with probability σ, otherwise follow a signal
            // that matches the state with probability q
            let waived = uniform(rng) < waive;
            let signal_high = (uniform(rng) < accuracy) == (state == State::High);
            let passed = applied && (waived || signal_high);
            let test_ok = state == State::High || uniform(rng) < p.phi;
            let hired = passed && test_ok;

            tally.hit(0, hired == (state == State::High));
            tally.hit(1, applied);
            tally.hit(2, passed);
            tally.hit(3, hired);
            tally.hit(4, hired && state == State::High);
            if applied {
                tally.observe(0, quality);
            }
            let (candidate, keeper) = match (passed, state) {
                (false, _) => (0.0, 0.0),
                (true, State::High) => (1.0 - p.gamma, 1.0),
                (true, State::Low) if hired => (p.alpha - p.gamma, -p.d),
                (true, State::Low) => (-p.gamma, 0.0),
            };
            tally.observe(1, candidate);
            tally.observe(2, keeper);
        },
    )
}

/// Analytic counterparts of [`simulate_solo`]'s events and means.
pub fn solo_analytic(
    market: &SoloMarket,
    policy: &GatekeeperPolicy,
    threshold: Option<f64>,
) -> Result<Vec<(&'static str, f64)>> {
    policy.validate()?;
    let x = match threshold {
        Some(t) => t,
        None => market.threshold(policy)?.x,
    };
    let o = market.evaluate(policy, x);
    let (ah, al) = policy.pass_probabilities();
    let mu = market.params().mu;
    let m = market.model();
    let pass = mu * ah * m.survival(State::High, x) + (1.0 - mu) * al * m.survival(State::Low, x);
    Ok(vec![
        ("correctness", o.correctness),
        ("application_rate", o.application_rate),
        ("pass_rate", pass),
        ("hire_rate", o.hire_rate),
        ("hire_high_rate", o.hire_high_rate),
        ("mean_applicant_quality", market.mean_quality_above(x)?),
        ("candidate_utility", o.candidate_utility),
        ("keeper_utility", o.keeper_utility),
    ])
}

/// Simulates the biased game at fixed thresholds.
///
/// Events: `pr_hire_a`, `pr_hire_b`, `pr_hire_a_and_h`, `pr_hire_h`,
/// `pr_best`, `pr_no_hire`, `pass_a`, `pass_b`.
pub fn simulate_biased(
    market: &BiasedMarket,
    thresholds: (f64, f64),
    config: &SimConfig,
) -> Result<SimReport> {
    for x in [thresholds.0, thresholds.1] {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(x));
        }
    }
    let model = market.model();
    let tie = market.tie();
    let draw = |rng: &mut ChaCha8Rng, c: &Candidate, x: f64| {
        let state = draw_state(rng, c.mu);
        let quality = model
            .sample_quality(state, uniform(rng))
            .expect("uniform draw lies in (0,1)");
        let applied = quality >= x;
        let signal_high = (uniform(rng) < c.q) == (state == State::High);
        (state, applied, applied && signal_high)
    };
    let a = *market.candidate(Side::A);
    let b = *market.candidate(Side::B);
    run(
        config,
        [
            "pr_hire_a",
            "pr_hire_b",
            "pr_hire_a_and_h",
            "pr_hire_h",
            "pr_best",
            "pr_no_hire",
            "pass_a",
            "pass_b",
        ],
        [],
        |rng, tally| {
            let (ta, applied_a, pass_a) = draw(rng, &a, thresholds.0);
            let (tb, applied_b, pass_b) = draw(rng, &b, thresholds.1);
            let coin = uniform(rng);
            let hired = match (pass_a, pass_b) {
                (true, true) => Some(if coin < tie.a_wins(ta, tb) {
                    (Side::A, ta)
                } else {
                    (Side::B, tb)
                }),
                (true, false) => Some((Side::A, ta)),
                (false, true) => Some((Side::B, tb)),
                (false, false) => None,
            };
            let top = if ta == State::High || tb == State::High {
                State::High
            } else {
                State::Low
            };
            let best = match hired {
                Some((_, t)) => t == top,
                None => !applied_a && !applied_b,
            };
            tally.hit(0, matches!(hired, Some((Side::A, _))));
            tally.hit(1, matches!(hired, Some((Side::B, _))));
            tally.hit(2, hired == Some((Side::A, State::High)));
            tally.hit(3, matches!(hired, Some((_, State::High))));
            tally.hit(4, best);
            tally.hit(5, hired.is_none());
            tally.hit(6, pass_a);
            tally.hit(7, pass_b);
        },
    )
}

/// Analytic counterparts of [`simulate_biased`]'s events.
pub fn biased_analytic(market: &BiasedMarket, thresholds: (f64, f64)) -> Vec<(&'static str, f64)> {
    let o = market.outcomes(thresholds.0, thresholds.1);
    let m = market.model();
    let pass = |c: &Candidate, x: f64| {
        c.mu * c.q * m.survival(State::High, x)
            + (1.0 - c.mu) * (1.0 - c.q) * m.survival(State::Low, x)
    };
    vec![
        ("pr_hire_a", o.pr_hire_a),
        ("pr_hire_b", o.pr_hire_b),
        ("pr_hire_a_and_h", o.pr_hire_a_and_h),
        ("pr_hire_h", o.pr_hire_h),
        ("pr_best", o.pr_best),
        ("pr_no_hire", o.pr_no_hire),
        ("pass_a", pass(market.candidate(Side::A), thresholds.0)),
        ("pass_b", pass(market.candidate(Side::B), thresholds.1)),
    ]
}
