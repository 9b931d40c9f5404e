//! Subcommand arguments and their evaluation.
//!
//! Every argument struct doubles as the config-file schema: keys are the long
//! flag names, unset flags serialize to nothing, and [`Resolve::resolved`]
//! fills in defaults so that the `config` block of a `--json` output loads
//! back to the same run.

use anyhow::Result;
use clap::Args;
use gklab_core::duel::OutcomeDistribution;
use gklab_core::oracle::{
    biased_analytic, simulate_biased, simulate_solo, solo_analytic, Comparison,
};
use gklab_core::solo::Regime;
use gklab_core::strategic::{mu_bar, MuBar};
use gklab_core::{
    BiasedMarket, Candidate, Error as ModelError, GatekeeperPolicy, ModelConfig, SignalModel,
    SimConfig, SimReport, SoloMarket, SoloParams, TiePolicy,
};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::config::invalid;
use crate::table::{flag, num, Table};

pub trait Resolve {
    /// A copy with every defaulted field filled in.
    fn resolved(&self) -> Self;
}

fn model_of(config: &Option<ModelConfig>) -> Result<SignalModel> {
    match config {
        None => Ok(SignalModel::polynomial()),
        Some(c) => Ok(SignalModel::from_config(c)?),
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

/// `steps` evenly spaced points from `min` to `max` inclusive, rounded to
/// twelve decimals so that round grid values are exact.
pub fn linspace(name: &str, min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(invalid(format!("{name}-steps must satisfy steps ≥ 2")));
    }
    if !(min < max) {
        return Err(invalid(format!("{name}-min must be below {name}-max")));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            let v = min + (max - min) * i as f64 / last;
            (v * 1e12).round() / 1e12
        })
        .collect())
}

macro_rules! market_flags {
    ($(#[$meta:meta])* pub struct $name:ident { $($body:tt)* }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, rename_all = "kebab-case")]
        pub struct $name {
            /// Cost of the test [default: 0.4]
            #[arg(long)]
            #[serde(skip_serializing_if = "Option::is_none")]
            pub gamma: Option<f64>,
            /// Probability that a low type passes the test [default: 0.6]
            #[arg(long)]
            #[serde(skip_serializing_if = "Option::is_none")]
            pub phi: Option<f64>,
            /// Utility of a hired low type [default: 0.5]
            #[arg(long)]
            #[serde(skip_serializing_if = "Option::is_none")]
            pub alpha: Option<f64>,
            /// Signal distributions; config file only
            #[arg(skip)]
            #[serde(skip_serializing_if = "Option::is_none")]
            pub model: Option<ModelConfig>,
            $($body)*
        }
    };
}

market_flags! {
    pub struct SoloArgs {
        /// Prior probability of the high state [default: 0.5]
        #[arg(long)]
        #[serde(skip_serializing_if = "Option::is_none")]
        pub mu: Option<f64>,
        /// Gatekeeper signal quality [default: 0.75]
        #[arg(long)]
        #[serde(skip_serializing_if = "Option::is_none")]
        pub q: Option<f64>,
        /// Gatekeeper loss from hiring a low type [default: 1]
        #[arg(long)]
        #[serde(skip_serializing_if = "Option::is_none")]
        pub d: Option<f64>,
    }
}

fn solo_params(
    mu: Option<f64>,
    q: Option<f64>,
    gamma: Option<f64>,
    phi: Option<f64>,
    alpha: Option<f64>,
    d: Option<f64>,
) -> SoloParams {
    let base = SoloParams::default();
    SoloParams {
        mu: mu.unwrap_or(base.mu),
        q: q.unwrap_or(base.q),
        gamma: gamma.unwrap_or(base.gamma),
        phi: phi.unwrap_or(base.phi),
        alpha: alpha.unwrap_or(base.alpha),
        d: d.unwrap_or(base.d),
    }
}

impl SoloArgs {
    pub fn params(&self) -> SoloParams {
        solo_params(self.mu, self.q, self.gamma, self.phi, self.alpha, self.d)
    }
}

impl Resolve for SoloArgs {
    fn resolved(&self) -> Self {
        let p = self.params();
        SoloArgs {
            mu: Some(p.mu),
            q: Some(p.q),
            gamma: Some(p.gamma),
            phi: Some(p.phi),
            alpha: Some(p.alpha),
            d: Some(p.d),
            model: self.model.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoloSummary {
    pub x_hat: f64,
    pub x_q: f64,
    pub theta_hat: f64,
    pub theta_q: f64,
    pub improvement: f64,
    pub prop1_lhs: f64,
    pub verdict: String,
    pub regime: String,
    pub regime_ratio: f64,
    pub regime_boundary: bool,
}

pub fn solo(args: &SoloArgs) -> Result<SoloSummary> {
    let market = SoloMarket::new(args.params(), model_of(&args.model)?)?;
    let c = market.mechanical_correctness();
    let r = market.regime_classify();
    Ok(SoloSummary {
        x_hat: market.baseline_threshold().x,
        x_q: market.mechanical_threshold().x,
        theta_hat: c.theta_baseline,
        theta_q: c.theta,
        improvement: c.improvement,
        prop1_lhs: c.prop1_lhs,
        verdict: if c.prop1_holds { "improves" } else { "harms" }.into(),
        regime: match r.regime {
            Regime::LowQualityHelps => "low-quality-helps",
            Regime::LowQualityHurts => "low-quality-hurts",
        }
        .into(),
        regime_ratio: r.ratio,
        regime_boundary: r.boundary,
    })
}

impl SoloSummary {
    pub fn render(&self) -> String {
        let rows = [
            ("x_hat", format!("{:.6}", self.x_hat)),
            ("x_q", format!("{:.6}", self.x_q)),
            ("theta_hat", format!("{:.6}", self.theta_hat)),
            ("theta_q", format!("{:.6}", self.theta_q)),
            ("improvement", format!("{:+.6}", self.improvement)),
            ("prop1_lhs", format!("{:.6}", self.prop1_lhs)),
            ("verdict", self.verdict.clone()),
            ("regime", self.regime.clone()),
            ("regime_ratio", format!("{:.6}", self.regime_ratio)),
        ];
        rows.iter().map(|(k, v)| format!("{k:<13}{v}\n")).collect()
    }
}

market_flags! {
    pub struct CorrectnessMapArgs {
        /// Gatekeeper loss from hiring a low type [default: 1]
        #[arg(long)]
        #[serde(skip_serializing_if = "Option::is_none")]
        pub d: Option<f64>,
        #[arg(long)]
        #[serde(skip_serializing_if = "Option::is_none")]
        pub mu_min: Option<f64>,
        #[arg(long)]
        #[serde(skip_serializing_if = "Option::is_none")]
        pub mu_max: Option<f64>,
        #[arg(long)]
        #[serde(skip_serializing_if = "Option::is_none")]
        pub mu_steps: Option<usize>,
        #[arg(long)]
        #[serde(skip_serializing_if = "Option::is_none")]
        pub q_min: Option<f64>,
        #[arg(long)]
        #[serde(skip_serializing_if = "Option::is_none")]
        pub q_max: Option<f64>,
        #[arg(long)]
        #[serde(skip_serializing_if = "Option::is_none")]
        pub q_steps: Option<usize>,
    }
}

impl Resolve for CorrectnessMapArgs {
    fn resolved(&self) -> Self {
        let p = solo_params(None, None, self.gamma, self.phi, self.alpha, self.d);
        CorrectnessMapArgs {
            gamma: Some(p.gamma),
            phi: Some(p.phi),
            alpha: Some(p.alpha),
            model: self.model.clone(),
            d: Some(p.d),
            mu_min: Some(self.mu_min.unwrap_or(0.01)),
            mu_max: Some(self.mu_max.unwrap_or(0.99)),
            mu_steps: Some(self.mu_steps.unwrap_or(100)),
            q_min: Some(self.q_min.unwrap_or(0.505)),
            q_max: Some(self.q_max.unwrap_or(0.995)),
            q_steps: Some(self.q_steps.unwrap_or(100)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessCell {
    pub mu: f64,
    pub q: f64,
    pub x_hat: f64,
    pub x_q: f64,
    pub theta_hat: f64,
    pub theta_q: f64,
    pub improvement: f64,
    pub prop1_lhs: f64,
    pub improves: bool,
}

pub fn correctness_cell(params: SoloParams, model: &SignalModel) -> Result<CorrectnessCell> {
    let market = SoloMarket::new(params, model.clone())?;
    let c = market.mechanical_correctness();
    Ok(CorrectnessCell {
        mu: params.mu,
        q: params.q,
        x_hat: market.baseline_threshold().x,
        x_q: market.mechanical_threshold().x,
        theta_hat: c.theta_baseline,
        theta_q: c.theta,
        improvement: c.improvement,
        prop1_lhs: c.prop1_lhs,
        improves: c.prop1_holds,
    })
}

/// Cells of the `(μ, q)` grid in row-major order: `μ` outer, `q` inner.
pub fn correctness_map(args: &CorrectnessMapArgs) -> Result<Vec<CorrectnessCell>> {
    let r = args.resolved();
    let mus = linspace(
        "mu",
        r.mu_min.unwrap(),
        r.mu_max.unwrap(),
        r.mu_steps.unwrap(),
    )?;
    let qs = linspace("q", r.q_min.unwrap(), r.q_max.unwrap(), r.q_steps.unwrap())?;
    let model = model_of(&r.model)?;
    let base = solo_params(None, None, r.gamma, r.phi, r.alpha, r.d);
    let cells: Vec<(f64, f64)> = mus
        .iter()
        .flat_map(|&mu| qs.iter().map(move |&q| (mu, q)))
        .collect();
    cells
        .par_iter()
        .map(|&(mu, q)| correctness_cell(SoloParams { mu, q, ..base }, &model))
        .collect()
}

pub fn correctness_table(cells: &[CorrectnessCell]) -> Table {
    let mut t = Table::new(&[
        "mu",
        "q",
        "x_hat",
        "x_q",
        "theta_hat",
        "theta_q",
        "improvement",
        "prop1_lhs",
        "improves",
    ]);
    for c in cells {
        t.push(vec![
            num(c.mu),
            num(c.q),
            num(c.x_hat),
            num(c.x_q),
            num(c.theta_hat),
            num(c.theta_q),
            num(c.improvement),
            num(c.prop1_lhs),
            flag(c.improves).into(),
        ]);
    }
    t
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct MuBarArgs {
    /// Test cost; repeat for several curves [default: 0.4]
    #[arg(long, value_delimiter = ',')]
    #[serde(
        default,
        deserialize_with = "one_or_many",
        skip_serializing_if = "Vec::is_empty"
    )]
    pub gamma: Vec<f64>,
    /// Gatekeeper loss from hiring a low type; repeat for several curves
    /// [default: 1]
    #[arg(long, value_delimiter = ',')]
    #[serde(
        default,
        deserialize_with = "one_or_many",
        skip_serializing_if = "Vec::is_empty"
    )]
    pub d: Vec<f64>,
    /// Probability that a low type passes the test [default: 0.6]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    /// Utility of a hired low type [default: 0.5]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_steps: Option<usize>,
    /// Signal distributions; config file only
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
}

impl Resolve for MuBarArgs {
    fn resolved(&self) -> Self {
        let base = SoloParams::default();
        let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
        MuBarArgs {
            gamma: or(&self.gamma, base.gamma),
            d: or(&self.d, base.d),
            phi: Some(self.phi.unwrap_or(base.phi)),
            alpha: Some(self.alpha.unwrap_or(base.alpha)),
            q_min: Some(self.q_min.unwrap_or(0.55)),
            q_max: Some(self.q_max.unwrap_or(0.95)),
            q_steps: Some(self.q_steps.unwrap_or(41)),
            model: self.model.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuBarRow {
    pub q: f64,
    pub gamma: f64,
    pub d: f64,
    pub mu_bar: MuBar,
}

/// Rows ordered by `γ`, then `d`, then `q`.
pub fn mu_bar_sweep(args: &MuBarArgs) -> Result<Vec<MuBarRow>> {
    let r = args.resolved();
    let qs = linspace("q", r.q_min.unwrap(), r.q_max.unwrap(), r.q_steps.unwrap())?;
    let model = model_of(&r.model)?;
    let mut points = Vec::new();
    for &gamma in &r.gamma {
        for &d in &r.d {
            for &q in &qs {
                points.push((q, gamma, d));
            }
        }
    }
    let base = SoloParams::default();
    points
        .par_iter()
        .map(|&(q, gamma, d)| {
            let template = SoloParams {
                q,
                gamma,
                d,
                phi: r.phi.unwrap(),
                alpha: r.alpha.unwrap(),
                ..base
            };
            Ok(MuBarRow {
                q,
                gamma,
                d,
                mu_bar: mu_bar(&template, &model)?,
            })
        })
        .collect()
}

pub fn mu_bar_table(rows: &[MuBarRow]) -> Table {
    let mut t = Table::new(&["q", "gamma", "d", "mu_bar", "flag_nonmonotone"]);
    for r in rows {
        t.push(vec![
            num(r.q),
            num(r.gamma),
            num(r.d),
            r.mu_bar.value().map(num).unwrap_or_default(),
            flag(r.mu_bar.flagged()).into(),
        ]);
    }
    t
}

/// Parses `equal`, `conditional:RHO` or `invariant:RHO` (`=` also accepted).
pub fn parse_tie(s: &str) -> Result<TiePolicy> {
    let (kind, rho) = match s.split_once([':', '=']) {
        Some((k, r)) => (k, Some(r)),
        None => (s, None),
    };
    let rho = rho
        .map(|r| {
            r.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("tie: bad rho `{r}`")))
        })
        .transpose()?;
    let tie = match (kind.trim(), rho) {
        ("equal", None) => TiePolicy::EqualSplit,
        ("conditional", Some(rho)) => TiePolicy::TypeConditional { rho },
        ("invariant", Some(rho)) => TiePolicy::TypeInvariant { rho },
        _ => {
            return Err(invalid(format!(
                "tie `{s}` must be equal, conditional:RHO or invariant:RHO"
            )))
        }
    };
    tie.validate()?;
    Ok(tie)
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BiasedArgs {
    /// [default: 0.5]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_a: Option<f64>,
    /// [default: 0.5]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_b: Option<f64>,
    /// Gatekeeper accuracy on candidate A [default: 0.75]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_a: Option<f64>,
    /// [default: 0.6]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_a: Option<f64>,
    /// [default: 0.6]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_b: Option<f64>,
    /// [default: 0.5]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_b_min: Option<f64>,
    /// [default: 0.99]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_b_max: Option<f64>,
    /// [default: 50]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_b_steps: Option<usize>,
    /// Tie policy: equal, conditional:RHO or invariant:RHO; repeat for
    /// several [default: equal]
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tie: Vec<String>,
    /// Fail when an equilibrium is not found instead of flagging the row
    #[arg(long)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub strict: bool,
    /// Signal distributions; config file only
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
}

impl Resolve for BiasedArgs {
    fn resolved(&self) -> Self {
        BiasedArgs {
            mu_a: Some(self.mu_a.unwrap_or(0.5)),
            mu_b: Some(self.mu_b.unwrap_or(0.5)),
            q_a: Some(self.q_a.unwrap_or(0.75)),
            gamma_a: Some(self.gamma_a.unwrap_or(0.6)),
            gamma_b: Some(self.gamma_b.unwrap_or(0.6)),
            q_b_min: Some(self.q_b_min.unwrap_or(0.5)),
            q_b_max: Some(self.q_b_max.unwrap_or(0.99)),
            q_b_steps: Some(self.q_b_steps.unwrap_or(50)),
            tie: if self.tie.is_empty() {
                vec!["equal".into()]
            } else {
                self.tie.clone()
            },
            strict: self.strict,
            model: self.model.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasedRow {
    pub q_b: f64,
    pub tie: TiePolicy,
    pub x_a: f64,
    pub x_b: f64,
    pub outcomes: OutcomeDistribution,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Rows ordered by `q_B`, then tie policy in the order given.
pub fn biased_sweep(args: &BiasedArgs) -> Result<Vec<BiasedRow>> {
    let r = args.resolved();
    let qs = linspace(
        "q-b",
        r.q_b_min.unwrap(),
        r.q_b_max.unwrap(),
        r.q_b_steps.unwrap(),
    )?;
    let ties = r
        .tie
        .iter()
        .map(|t| parse_tie(t))
        .collect::<Result<Vec<_>>>()?;
    let model = model_of(&r.model)?;
    let a = Candidate {
        mu: r.mu_a.unwrap(),
        q: r.q_a.unwrap(),
        gamma: r.gamma_a.unwrap(),
    };
    let points: Vec<(f64, TiePolicy)> = qs
        .iter()
        .flat_map(|&q| ties.iter().map(move |&t| (q, t)))
        .collect();
    points
        .par_iter()
        .map(|&(q_b, tie)| {
            let b = Candidate {
                mu: r.mu_b.unwrap(),
                q: q_b,
                gamma: r.gamma_b.unwrap(),
            };
            let market = BiasedMarket::new(a, b, model.clone(), tie)?;
            let (x_a, x_b, iterations, residual, converged) = match market.solve_equilibrium() {
                Ok(eq) => (eq.x_a, eq.x_b, eq.iterations, eq.residual, true),
                Err(ModelError::EquilibriumNotFound {
                    iterations,
                    residual,
                    x_a,
                    x_b,
                }) => (x_a, x_b, iterations, residual, false),
                Err(e) => return Err(e.into()),
            };
            Ok(BiasedRow {
                q_b,
                tie,
                x_a,
                x_b,
                outcomes: market.outcomes(x_a, x_b),
                iterations,
                residual,
                converged,
            })
        })
        .collect()
}

pub fn biased_table(rows: &[BiasedRow]) -> Table {
    let mut t = Table::new(&[
        "q_B",
        "x_A",
        "x_B",
        "pr_hire_A",
        "pr_hire_A_and_H",
        "pr_hire_H",
        "pr_best",
        "pr_no_hire",
        "iterations",
        "residual",
        "tie",
        "converged",
    ]);
    for r in rows {
        let o = &r.outcomes;
        t.push(vec![
            num(r.q_b),
            num(r.x_a),
            num(r.x_b),
            num(o.pr_hire_a),
            num(o.pr_hire_a_and_h),
            num(o.pr_hire_h),
            num(o.pr_best),
            num(o.pr_no_hire),
            r.iterations.to_string(),
            num(r.residual),
            r.tie.label(),
            flag(r.converged).into(),
        ]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Solo,
    Biased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    None,
    Mechanical,
    Mixed,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Simulate the solo game
    #[arg(long, conflicts_with = "biased")]
    #[serde(skip)]
    pub solo: bool,
    /// Simulate the two-candidate game
    #[arg(long)]
    #[serde(skip)]
    pub biased: bool,
    /// Scenario; set by --solo/--biased
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    /// Replications [default: 1000000]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Solo: prior [default: 0.5]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Solo: gatekeeper signal quality [default: 0.75]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Solo: test cost [default: 0.4]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Solo: low-type test pass probability [default: 0.6]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    /// Solo: utility of a hired low type [default: 0.5]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Solo: gatekeeper loss from a hired low type [default: 1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    /// Solo: gatekeeper policy [default: mechanical]
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyKind>,
    /// Solo: waiver probability of the mixed policy [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Solo: application threshold instead of the analytic one
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,

    /// Biased: [default: 0.5]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_a: Option<f64>,
    /// Biased: [default: 0.5]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_b: Option<f64>,
    /// Biased: [default: 0.75]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_a: Option<f64>,
    /// Biased: [default: 0.75]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_b: Option<f64>,
    /// Biased: [default: 0.6]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_a: Option<f64>,
    /// Biased: [default: 0.6]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_b: Option<f64>,
    /// Biased: tie policy [default: equal]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tie: Option<String>,
    /// Biased: A's threshold instead of the equilibrium one
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_a: Option<f64>,
    /// Biased: B's threshold instead of the equilibrium one
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_b: Option<f64>,

    /// Signal distributions; config file only
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
}

impl SimulateArgs {
    /// Folds `--solo`/`--biased` into `scenario`.
    pub fn with_scenario_flags(mut self) -> Self {
        if self.solo {
            self.scenario = Some(Scenario::Solo);
        } else if self.biased {
            self.scenario = Some(Scenario::Biased);
        }
        self
    }
}

impl Resolve for SimulateArgs {
    fn resolved(&self) -> Self {
        let mut r = self.clone();
        r.solo = false;
        r.biased = false;
        r.n = Some(self.n.unwrap_or(1_000_000));
        r.seed = Some(self.seed.unwrap_or(0));
        match self.scenario {
            Some(Scenario::Solo) => {
                let p = solo_params(self.mu, self.q, self.gamma, self.phi, self.alpha, self.d);
                r.mu = Some(p.mu);
                r.q = Some(p.q);
                r.gamma = Some(p.gamma);
                r.phi = Some(p.phi);
                r.alpha = Some(p.alpha);
                r.d = Some(p.d);
                let policy = self.policy.unwrap_or(PolicyKind::Mechanical);
                r.policy = Some(policy);
                if policy == PolicyKind::Mixed {
                    r.sigma = Some(self.sigma.unwrap_or(0.0));
                }
            }
            Some(Scenario::Biased) => {
                r.mu_a = Some(self.mu_a.unwrap_or(0.5));
                r.mu_b = Some(self.mu_b.unwrap_or(0.5));
                r.q_a = Some(self.q_a.unwrap_or(0.75));
                r.q_b = Some(self.q_b.unwrap_or(0.75));
                r.gamma_a = Some(self.gamma_a.unwrap_or(0.6));
                r.gamma_b = Some(self.gamma_b.unwrap_or(0.6));
                r.tie = Some(self.tie.clone().unwrap_or_else(|| "equal".into()));
            }
            None => {}
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub thresholds: Vec<f64>,
    pub report: SimReport,
    pub comparisons: Vec<Comparison>,
    pub all_agree: bool,
}

fn reject_foreign(args: &SimulateArgs, keys: &[(&str, bool)]) -> Result<()> {
    if let Some((k, _)) = keys.iter().find(|(_, set)| *set) {
        let scenario = match args.scenario {
            Some(Scenario::Solo) => "solo",
            _ => "biased",
        };
        return Err(invalid(format!(
            "{k} does not apply to the {scenario} scenario"
        )));
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<SimulationResult> {
    let r = args.resolved();
    let config = SimConfig::new(r.seed.unwrap(), r.n.unwrap())?;
    let model = model_of(&r.model)?;
    let (thresholds, report, analytic) = match r.scenario {
        None => return Err(invalid("a scenario is required: --solo or --biased")),
        Some(Scenario::Solo) => {
            reject_foreign(
                &r,
                &[
                    ("mu-a", r.mu_a.is_some()),
                    ("mu-b", r.mu_b.is_some()),
                    ("q-a", r.q_a.is_some()),
                    ("q-b", r.q_b.is_some()),
                    ("gamma-a", r.gamma_a.is_some()),
                    ("gamma-b", r.gamma_b.is_some()),
                    ("tie", r.tie.is_some()),
                    ("x-a", r.x_a.is_some()),
                    ("x-b", r.x_b.is_some()),
                ],
            )?;
            let params = solo_params(r.mu, r.q, r.gamma, r.phi, r.alpha, r.d);
            let market = SoloMarket::with_limits(params, model)?;
            let policy = match r.policy.unwrap() {
                PolicyKind::None => GatekeeperPolicy::None,
                PolicyKind::Mechanical => market.mechanical(),
                PolicyKind::Mixed => market.mixed(r.sigma.unwrap()),
            };
            if r.sigma.is_some() && r.policy != Some(PolicyKind::Mixed) {
                return Err(invalid("sigma requires --policy mixed"));
            }
            let x = match r.threshold {
                Some(t) => t,
                None => market.threshold(&policy)?.x,
            };
            let report = simulate_solo(&market, &policy, Some(x), &config)?;
            (vec![x], report, solo_analytic(&market, &policy, Some(x))?)
        }
        Some(Scenario::Biased) => {
            reject_foreign(
                &r,
                &[
                    ("mu", r.mu.is_some()),
                    ("q", r.q.is_some()),
                    ("gamma", r.gamma.is_some()),
                    ("phi", r.phi.is_some()),
                    ("alpha", r.alpha.is_some()),
                    ("d", r.d.is_some()),
                    ("policy", r.policy.is_some()),
                    ("sigma", r.sigma.is_some()),
                    ("threshold", r.threshold.is_some()),
                ],
            )?;
            let a = Candidate {
                mu: r.mu_a.unwrap(),
                q: r.q_a.unwrap(),
                gamma: r.gamma_a.unwrap(),
            };
            let b = Candidate {
                mu: r.mu_b.unwrap(),
                q: r.q_b.unwrap(),
                gamma: r.gamma_b.unwrap(),
            };
            let market = BiasedMarket::new(a, b, model, parse_tie(r.tie.as_deref().unwrap())?)?;
            let th = match (r.x_a, r.x_b) {
                (Some(x_a), Some(x_b)) => (x_a, x_b),
                (x_a, x_b) => {
                    let eq = market.solve_equilibrium()?;
                    (x_a.unwrap_or(eq.x_a), x_b.unwrap_or(eq.x_b))
                }
            };
            let report = simulate_biased(&market, th, &config)?;
            (vec![th.0, th.1], report, biased_analytic(&market, th))
        }
    };
    let comparisons = report.compare(&analytic);
    Ok(SimulationResult {
        thresholds,
        all_agree: comparisons.iter().all(|c| c.agrees),
        report,
        comparisons,
    })
}
