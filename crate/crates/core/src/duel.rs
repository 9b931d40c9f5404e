//! Two candidates competing for one position in front of a mechanical
//! gatekeeper whose accuracy differs between them.
//!
//! An applicant who passes the gatekeeper pays `γ_i` and has her type
//! revealed (the test is fully informative here). The firm hires the passer of
//! the higher type; equal types are broken by the [`TiePolicy`]. A hire is
//! worth 1 to either type.
//!
//! `φ^H_i` and `φ^L_i` denote the probability that candidate `i`, having
//! passed the gatekeeper with type H or L, is eventually hired. They depend on
//! the rival's threshold `x_j`, prior `μ_j` and accuracy `q_j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{SignalModel, State};
use crate::solo::{ThresholdRegime, ThresholdResult};

const DAMPING: f64 = 0.5;
const TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 10_000;
const DISTINCT_EQUILIBRIUM: f64 = 1e-6;
const CERTIFICATE: f64 = 1e-8;
const SCAN_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub mu: f64,
    /// Gatekeeper accuracy on this candidate.
    pub q: f64,
    pub gamma: f64,
}

impl Candidate {
    fn validate(&self, label: &str) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::param(format!("mu_{label}"), "lie in (0,1)"));
        }
        if !(self.q >= 0.5 && self.q < 1.0) {
            return Err(Error::param(format!("q_{label}"), "lie in [0.5,1)"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::param(format!("gamma_{label}"), "lie in (0,1)"));
        }
        Ok(())
    }

    /// Threshold this candidate would use alone, without a gatekeeper and
    /// with a fully revealing test.
    fn solo_baseline(&self) -> f64 {
        let low = self.gamma * (1.0 - self.mu);
        low / (low + (1.0 - self.gamma) * self.mu)
    }
}

/// How the firm chooses between two passers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TiePolicy {
    /// Equal types are hired with probability one half each.
    #[default]
    EqualSplit,
    /// Equal types: A is hired with probability `rho`. Otherwise the higher
    /// type wins.
    TypeConditional { rho: f64 },
    /// Whenever both pass, A is hired with probability `rho`, whatever the
    /// revealed types.
    TypeInvariant { rho: f64 },
}

impl TiePolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TiePolicy::EqualSplit => Ok(()),
            TiePolicy::TypeConditional { rho } | TiePolicy::TypeInvariant { rho } => {
                if (0.0..=1.0).contains(&rho) {
                    Ok(())
                } else {
                    Err(Error::param("rho", "lie in [0,1]"))
                }
            }
        }
    }

    /// Probability that A wins a contest decided by the policy.
    pub fn rho(&self) -> f64 {
        match *self {
            TiePolicy::EqualSplit => 0.5,
            TiePolicy::TypeConditional { rho } | TiePolicy::TypeInvariant { rho } => rho,
        }
    }

    fn share(&self, side: Side) -> f64 {
        match side {
            Side::A => self.rho(),
            Side::B => 1.0 - self.rho(),
        }
    }

    fn is_type_invariant(&self) -> bool {
        matches!(self, TiePolicy::TypeInvariant { .. })
    }

    /// Probability that A is hired when both candidates passed the gatekeeper
    /// with revealed types `a` and `b`.
    pub fn a_wins(&self, a: State, b: State) -> f64 {
        if self.is_type_invariant() || a == b {
            return self.rho();
        }
        if a == State::High {
            1.0
        } else {
            0.0
        }
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        match *self {
            TiePolicy::EqualSplit => "equal".to_string(),
            TiePolicy::TypeConditional { rho } => format!("conditional:{rho}"),
            TiePolicy::TypeInvariant { rho } => format!("invariant:{rho}"),
        }
    }
}

/// `(φ^H_i, φ^L_i)`: hire probabilities of a passer of each type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinProbabilities {
    pub high: f64,
    pub low: f64,
}

impl WinProbabilities {
    /// `φ^H - φ^L`.
    pub fn win_gap(&self) -> f64 {
        self.high - self.low
    }
}

#[derive(Debug, Clone)]
pub struct BiasedMarket {
    a: Candidate,
    b: Candidate,
    model: SignalModel,
    tie: TiePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasedEquilibrium {
    pub x_a: f64,
    pub x_b: f64,
    pub regime_a: ThresholdRegime,
    pub regime_b: ThresholdRegime,
    pub win_a: WinProbabilities,
    pub win_b: WinProbabilities,
    pub iterations: usize,
    /// `max_i |x_i - BR_i(x_j)|` at the returned point.
    pub residual: f64,
    /// Fixed points reached from corner starts that differ from `(x_a, x_b)`.
    pub alternatives: Vec<(f64, f64)>,
}

impl BiasedEquilibrium {
    pub fn threshold(&self, side: Side) -> f64 {
        match side {
            Side::A => self.x_a,
            Side::B => self.x_b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub pr_hire_a: f64,
    pub pr_hire_b: f64,
    pub pr_hire_a_and_h: f64,
    pub pr_hire_h: f64,
    pub pr_best: f64,
    pub pr_no_hire: f64,
}

/// What a candidate would do if the rival applied at every quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntryOutlook {
    /// `γ ≤ φ^L(0)`: applying is dominant.
    AlwaysApply,
    /// `φ^L(0) < γ < φ^H(0)`.
    Interior,
    /// `γ ≥ φ^H(0)`: this candidate may opt out entirely.
    MayOptOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumFamily {
    /// Both candidates apply above an interior threshold.
    TwoCandidate,
    /// One candidate may opt out.
    OneSidedOptOut,
    /// At least one candidate applies at every quality and nobody opts out.
    DominantEntry,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateDiagnosis {
    pub win_at_full_entry: WinProbabilities,
    pub gamma: f64,
    pub outlook: EntryOutlook,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptOutReport {
    pub a: CandidateDiagnosis,
    pub b: CandidateDiagnosis,
    pub family: EquilibriumFamily,
}

/// Where a candidate ends up after the gatekeeper stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Absent,
    Rejected,
    Passed,
}

impl BiasedMarket {
    pub fn new(a: Candidate, b: Candidate, model: SignalModel, tie: TiePolicy) -> Result<Self> {
        a.validate("A")?;
        b.validate("B")?;
        tie.validate()?;
        Ok(BiasedMarket { a, b, model, tie })
    }

    /// `μ_A = μ_B = 0.5`, `q_A = 0.75`, `γ_A = γ_B = 0.6`, polynomial signals.
    pub fn example(q_b: f64, tie: TiePolicy) -> Result<Self> {
        let a = Candidate {
            mu: 0.5,
            q: 0.75,
            gamma: 0.6,
        };
        let b = Candidate { q: q_b, ..a };
        BiasedMarket::new(a, b, SignalModel::polynomial(), tie)
    }

    pub fn candidate(&self, side: Side) -> &Candidate {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }

    pub fn model(&self) -> &SignalModel {
        &self.model
    }

    pub fn tie(&self) -> TiePolicy {
        self.tie
    }

    pub fn with_tie(&self, tie: TiePolicy) -> Result<Self> {
        tie.validate()?;
        Ok(BiasedMarket {
            tie,
            ..self.clone()
        })
    }

    pub fn with_candidate(&self, side: Side, c: Candidate) -> Result<Self> {
        let (a, b) = match side {
            Side::A => (c, self.b),
            Side::B => (self.a, c),
        };
        BiasedMarket::new(a, b, self.model.clone(), self.tie)
    }

    /// Probability that the candidate on `side` applies and passes the
    /// gatekeeper, given her threshold.
    fn pass_probability(&self, side: Side, x: f64) -> f64 {
        let c = self.candidate(side);
        c.mu * self.model.survival(State::High, x) * c.q
            + (1.0 - c.mu) * self.model.survival(State::Low, x) * (1.0 - c.q)
    }

    /// `φ^H_i`, `φ^L_i` for the candidate on `side` when the rival uses
    /// threshold `x_other`.
    pub fn win_probabilities(&self, side: Side, x_other: f64) -> Result<WinProbabilities> {
        if !(0.0..=1.0).contains(&x_other) {
            return Err(Error::Domain(x_other));
        }
        Ok(self.win_unchecked(side, x_other))
    }

    fn win_unchecked(&self, side: Side, x_other: f64) -> WinProbabilities {
        let rival = self.candidate(side.other());
        let lose_tie = 1.0 - self.tie.share(side);
        if self.tie.is_type_invariant() {
            let w = 1.0 - self.pass_probability(side.other(), x_other) * lose_tie;
            return WinProbabilities { high: w, low: w };
        }
        // a rival of the same type who passes wins the tie with `lose_tie`;
        // a rival of a higher type who passes always wins
        let sh = self.model.survival(State::High, x_other);
        let sl = self.model.survival(State::Low, x_other);
        let (mu, q) = (rival.mu, rival.q);
        WinProbabilities {
            high: 1.0 - mu * sh * q * lose_tie,
            low: mu * (1.0 - sh * q) + (1.0 - mu) * (1.0 - sl * (1.0 - q) * lose_tie),
        }
    }

    /// Candidate `side`'s optimal threshold against a rival at `x_other`.
    pub fn best_response(&self, side: Side, x_other: f64) -> Result<ThresholdResult> {
        if !(0.0..=1.0).contains(&x_other) {
            return Err(Error::Domain(x_other));
        }
        Ok(self.respond(side, x_other))
    }

    fn respond(&self, side: Side, x_other: f64) -> ThresholdResult {
        let c = self.candidate(side);
        let w = self.win_unchecked(side, x_other);
        if c.gamma <= w.low {
            return ThresholdResult {
                x: 0.0,
                regime: ThresholdRegime::AlwaysApply,
            };
        }
        if c.gamma >= w.high {
            return ThresholdResult {
                x: 1.0,
                regime: ThresholdRegime::NeverApply,
            };
        }
        let odds = (1.0 - c.mu) / c.mu * (1.0 - c.q) / c.q * (c.gamma - w.low) / (w.high - c.gamma);
        ThresholdResult {
            x: odds / (1.0 + odds),
            regime: ThresholdRegime::Interior,
        }
    }

    fn defect(&self, x_a: f64, x_b: f64) -> f64 {
        let ra = self.respond(Side::A, x_b).x;
        let rb = self.respond(Side::B, x_a).x;
        (ra - x_a).abs().max((rb - x_b).abs())
    }

    /// Damped simultaneous best-response iteration from `start`. Returns the
    /// polished fixed point, the iteration count and the final defect.
    fn iterate(&self, start: (f64, f64)) -> Result<((f64, f64), usize, f64)> {
        let (mut x_a, mut x_b) = start;
        let mut residual = f64::INFINITY;
        for k in 0..MAX_ITERATIONS {
            let ra = self.respond(Side::A, x_b).x;
            let rb = self.respond(Side::B, x_a).x;
            residual = (ra - x_a).abs().max((rb - x_b).abs());
            if residual < TOLERANCE {
                // one undamped step lands exactly on corners
                let polished = (ra, rb);
                let r = self.defect(ra, rb);
                if r <= residual {
                    return Ok((polished, k, r));
                }
                return Ok(((x_a, x_b), k, residual));
            }
            x_a = (1.0 - DAMPING) * x_a + DAMPING * ra;
            x_b = (1.0 - DAMPING) * x_b + DAMPING * rb;
        }
        Err(Error::EquilibriumNotFound {
            iterations: MAX_ITERATIONS,
            residual,
            x_a,
            x_b,
        })
    }

    /// Fixed points of `x_A -> BR_A(BR_B(x_A))`, located by a grid scan and
    /// bisection. The map sends `[0,1]` into itself, so at least one exists.
    fn scan_fixed_points(&self) -> Vec<(f64, f64)> {
        let h = |x: f64| self.respond(Side::A, self.respond(Side::B, x).x).x - x;
        let mut roots = Vec::new();
        let mut lo = 0.0;
        let mut h_lo = h(lo);
        if h_lo == 0.0 {
            roots.push(lo);
        }
        for k in 1..=SCAN_POINTS {
            let hi = k as f64 / SCAN_POINTS as f64;
            let h_hi = h(hi);
            if h_hi == 0.0 {
                roots.push(hi);
            } else if h_lo != 0.0 && (h_lo < 0.0) != (h_hi < 0.0) {
                let (mut a, mut b, neg_a) = (lo, hi, h_lo < 0.0);
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    let hm = h(m);
                    if hm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if (hm < 0.0) == neg_a {
                        a = m;
                    } else {
                        b = m;
                    }
                    if b - a <= f64::EPSILON {
                        break;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            lo = hi;
            h_lo = h_hi;
        }
        roots
            .into_iter()
            .map(|x_a| (x_a, self.respond(Side::B, x_a).x))
            .collect()
    }

    /// Solves for the equilibrium thresholds by damped best-response
    /// iteration from each candidate's solo baseline. When that cycles, the
    /// fixed point nearest the baseline is taken from a one-dimensional scan.
    /// Four corner restarts and the scan are used to report any other
    /// equilibria in `alternatives`.
    pub fn solve_equilibrium(&self) -> Result<BiasedEquilibrium> {
        let start = (self.a.solo_baseline(), self.b.solo_baseline());
        let scanned = self.scan_fixed_points();
        let ((x_a, x_b), iterations, residual) = match self.iterate(start) {
            Ok(found) => found,
            Err(err) => {
                let nearest = scanned
                    .iter()
                    .copied()
                    .min_by(|p, q| (p.0 - start.0).abs().total_cmp(&(q.0 - start.0).abs()));
                match nearest {
                    Some((a, b)) if self.defect(a, b) <= CERTIFICATE => {
                        ((a, b), MAX_ITERATIONS, self.defect(a, b))
                    }
                    _ => return Err(err),
                }
            }
        };

        let mut alternatives: Vec<(f64, f64)> = Vec::new();
        let corners = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]
            .into_iter()
            .filter_map(|c| self.iterate(c).ok().map(|r| r.0));
        for (ca, cb) in corners.chain(scanned.iter().copied()) {
            if self.defect(ca, cb) > CERTIFICATE {
                continue;
            }
            let distinct = (ca - x_a).abs().max((cb - x_b).abs()) > DISTINCT_EQUILIBRIUM;
            let seen = alternatives
                .iter()
                .any(|&(pa, pb)| (ca - pa).abs().max((cb - pb).abs()) <= DISTINCT_EQUILIBRIUM);
            if distinct && !seen {
                alternatives.push((ca, cb));
            }
        }

        Ok(BiasedEquilibrium {
            x_a,
            x_b,
            regime_a: ThresholdResult::from_x(x_a).regime,
            regime_b: ThresholdResult::from_x(x_b).regime,
            win_a: self.win_unchecked(Side::A, x_b),
            win_b: self.win_unchecked(Side::B, x_a),
            iterations,
            residual,
            alternatives,
        })
    }

    fn diagnose(&self, side: Side) -> CandidateDiagnosis {
        let w = self.win_unchecked(side, 0.0);
        let gamma = self.candidate(side).gamma;
        let outlook = if gamma <= w.low {
            EntryOutlook::AlwaysApply
        } else if gamma >= w.high {
            EntryOutlook::MayOptOut
        } else {
            EntryOutlook::Interior
        };
        CandidateDiagnosis {
            win_at_full_entry: w,
            gamma,
            outlook,
        }
    }

    /// Compares each candidate's cost with her hire probabilities against a
    /// rival who always applies, and classifies the equilibrium family.
    pub fn opt_out_diagnosis(&self) -> OptOutReport {
        let a = self.diagnose(Side::A);
        let b = self.diagnose(Side::B);
        let family = match (a.outlook, b.outlook) {
            (EntryOutlook::Interior, EntryOutlook::Interior) => EquilibriumFamily::TwoCandidate,
            (EntryOutlook::MayOptOut, _) | (_, EntryOutlook::MayOptOut) => {
                EquilibriumFamily::OneSidedOptOut
            }
            _ => EquilibriumFamily::DominantEntry,
        };
        OptOutReport { a, b, family }
    }

    pub fn outcome_distribution(&self, eq: &BiasedEquilibrium) -> OutcomeDistribution {
        self.outcomes(eq.x_a, eq.x_b)
    }

    /// Exact hiring-outcome probabilities for arbitrary thresholds, by
    /// enumerating types, application and gatekeeper outcomes.
    pub fn outcomes(&self, x_a: f64, x_b: f64) -> OutcomeDistribution {
        let mut out = OutcomeDistribution::default();
        let types = [State::High, State::Low];
        for ta in types {
            for tb in types {
                let p_types = type_prob(&self.a, ta) * type_prob(&self.b, tb);
                let stages_a = self.stages(&self.a, ta, x_a);
                let stages_b = self.stages(&self.b, tb, x_b);
                for (sa, pa) in stages_a {
                    for (sb, pb) in stages_b {
                        let p = p_types * pa * pb;
                        if p == 0.0 {
                            continue;
                        }
                        let a_share = match (sa, sb) {
                            (Stage::Passed, Stage::Passed) => Some(self.tie.a_wins(ta, tb)),
                            (Stage::Passed, _) => Some(1.0),
                            (_, Stage::Passed) => Some(0.0),
                            _ => None,
                        };
                        let applied = (sa != Stage::Absent, sb != Stage::Absent);
                        match a_share {
                            None => {
                                out.pr_no_hire += p;
                                out.pr_best += p * is_best(None, ta, tb, applied);
                            }
                            Some(w) => {
                                let hi_a = f64::from(u8::from(ta == State::High));
                                let hi_b = f64::from(u8::from(tb == State::High));
                                out.pr_hire_a += p * w;
                                out.pr_hire_b += p * (1.0 - w);
                                out.pr_hire_a_and_h += p * w * hi_a;
                                out.pr_hire_h += p * (w * hi_a + (1.0 - w) * hi_b);
                                out.pr_best += p
                                    * (w * is_best(Some(ta), ta, tb, applied)
                                        + (1.0 - w) * is_best(Some(tb), ta, tb, applied));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn stages(&self, c: &Candidate, t: State, x: f64) -> [(Stage, f64); 3] {
        let apply = self.model.survival(t, x);
        let pass = if t == State::High { c.q } else { 1.0 - c.q };
        [
            (Stage::Absent, 1.0 - apply),
            (Stage::Rejected, apply * (1.0 - pass)),
            (Stage::Passed, apply * pass),
        ]
    }
}

fn type_prob(c: &Candidate, t: State) -> f64 {
    match t {
        State::High => c.mu,
        State::Low => 1.0 - c.mu,
    }
}

/// Whether an outcome counts as hiring the best available candidate: the
/// hired type equals the better of the two realized types, and not hiring is
/// best only when nobody applied.
fn is_best(hired: Option<State>, ta: State, tb: State, applied: (bool, bool)) -> f64 {
    let best = if ta == State::High || tb == State::High {
        State::High
    } else {
        State::Low
    };
    let ok = match hired {
        Some(t) => t == best,
        None => !applied.0 && !applied.1,
    };
    f64::from(u8::from(ok))
}

/// Parameter moved by a comparative-statics probe. All refer to the rival `j`
/// of the candidate whose threshold is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeParameter {
    MuOther,
    QOther,
    GammaOther,
    XOther,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProbeMode {
    /// Track `x^BR_i` against a rival fixed at `x_other` (`XOther` moves it).
    BestResponse { x_other: f64 },
    /// Track the equilibrium threshold `x*_i`.
    Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub value: f64,
    pub x_response: f64,
    pub x_other: f64,
    /// The clause's premises hold at this point.
    pub side_condition_met: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StepVerdict {
    Holds,
    Violated,
    SideConditionUnmet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub parameter: ProbeParameter,
    pub claimed: Direction,
    pub points: Vec<ProbePoint>,
    /// One verdict per consecutive pair of grid points.
    pub steps: Vec<StepVerdict>,
}

impl ProbeReport {
    pub fn checked(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| **s != StepVerdict::SideConditionUnmet)
            .count()
    }

    pub fn all_hold(&self) -> bool {
        !self.steps.contains(&StepVerdict::Violated)
    }
}

/// `μ_j > (1-F_L(x_j)) / ((1-F_L(x_j)) + (1-F_H(x_j)))`: premise of the
/// accuracy clauses.
pub fn accuracy_side_condition(model: &SignalModel, mu_other: f64, x_other: f64) -> bool {
    let sl = model.survival(State::Low, x_other);
    let sh = model.survival(State::High, x_other);
    mu_other > sl / (sl + sh)
}

impl BiasedMarket {
    /// Moves one rival parameter along `grid` and checks the claimed
    /// direction of the tracked candidate's threshold wherever the premises
    /// hold. Every clause claims the threshold strictly increases.
    pub fn comparative_statics_probe(
        &self,
        side: Side,
        parameter: ProbeParameter,
        mode: ProbeMode,
        grid: &[f64],
    ) -> Result<ProbeReport> {
        if grid.len() < 2 {
            return Err(Error::param("grid", "have at least two points"));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("grid", "be strictly increasing"));
        }
        let other = side.other();
        let mut points = Vec::with_capacity(grid.len());
        for &v in grid {
            let point = match mode {
                ProbeMode::BestResponse { x_other } => {
                    self.probe_best_response(side, parameter, x_other, v)?
                }
                ProbeMode::Equilibrium => {
                    if parameter == ProbeParameter::XOther {
                        return Err(Error::param(
                            "parameter",
                            "not be XOther in equilibrium mode",
                        ));
                    }
                    let market = self.with_candidate(other, self.shifted(other, parameter, v))?;
                    let eq = market.solve_equilibrium()?;
                    let entry_i = market.diagnose(side).outlook == EntryOutlook::Interior;
                    let entry_j = market.diagnose(other).outlook == EntryOutlook::Interior;
                    let mut met = entry_i && entry_j;
                    let mut note = (!met).then(|| "two-candidate premise unmet".to_string());
                    let x_j = eq.threshold(other);
                    if parameter == ProbeParameter::QOther
                        && !accuracy_side_condition(&self.model, market.candidate(other).mu, x_j)
                    {
                        met = false;
                        note = Some("prior below the accuracy side condition".into());
                    }
                    ProbePoint {
                        value: v,
                        x_response: eq.threshold(side),
                        x_other: x_j,
                        side_condition_met: met,
                        note,
                    }
                }
            };
            points.push(point);
        }
        let steps = points
            .windows(2)
            .map(|w| {
                if !(w[0].side_condition_met && w[1].side_condition_met) {
                    StepVerdict::SideConditionUnmet
                } else if w[0].x_response < w[1].x_response {
                    StepVerdict::Holds
                } else {
                    StepVerdict::Violated
                }
            })
            .collect();
        Ok(ProbeReport {
            parameter,
            claimed: Direction::Increasing,
            points,
            steps,
        })
    }

    fn shifted(&self, side: Side, parameter: ProbeParameter, v: f64) -> Candidate {
        let mut c = *self.candidate(side);
        match parameter {
            ProbeParameter::MuOther => c.mu = v,
            ProbeParameter::QOther => c.q = v,
            ProbeParameter::GammaOther => c.gamma = v,
            ProbeParameter::XOther => {}
        }
        c
    }

    fn probe_best_response(
        &self,
        side: Side,
        parameter: ProbeParameter,
        x_other: f64,
        v: f64,
    ) -> Result<ProbePoint> {
        let other = side.other();
        if parameter == ProbeParameter::GammaOther {
            return Err(Error::param(
                "parameter",
                "not be GammaOther in best-response mode",
            ));
        }
        let (market, x_j) = match parameter {
            ProbeParameter::XOther => (self.clone(), v),
            _ => (
                self.with_candidate(other, self.shifted(other, parameter, v))?,
                x_other,
            ),
        };
        let br = market.best_response(side, x_j)?;
        let mut met = br.regime == ThresholdRegime::Interior;
        let mut note = (!met).then(|| "cost outside (phi_L, phi_H)".to_string());
        if parameter == ProbeParameter::QOther
            && !accuracy_side_condition(&self.model, market.candidate(other).mu, x_j)
        {
            met = false;
            note = Some("prior below the accuracy side condition".into());
        }
        Ok(ProbePoint {
            value: v,
            x_response: br.x,
            x_other: x_j,
            side_condition_met: met,
            note,
        })
    }
}
