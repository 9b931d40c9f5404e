//! Acceptance suite. Each test is one criterion and prints a single
//! `criterion N: PASS|FAIL` line with the failing detail.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use gklab_cli::commands::{
    biased_sweep, correctness_cell, correctness_map, mu_bar_sweep, BiasedArgs, CorrectnessMapArgs,
    MuBarArgs,
};
use gklab_core::duel::{ProbeMode, ProbeParameter, ProbeReport, StepVerdict};
use gklab_core::oracle::{
    biased_analytic, simulate_biased, simulate_solo, solo_analytic, Comparison,
};
use gklab_core::solo::Regime;
use gklab_core::{
    BiasedMarket, Candidate, GatekeeperPolicy, Side, SignalModel, SimConfig, SoloMarket,
    SoloParams, TiePolicy,
};

fn verdict(n: u32, failures: Vec<String>) {
    if failures.is_empty() {
        println!("criterion {n}: PASS");
    } else {
        println!("criterion {n}: FAIL");
        for f in &failures {
            println!("  {f}");
        }
        panic!("criterion {n} failed: {}", failures.join("; "));
    }
}

fn market(p: SoloParams) -> SoloMarket {
    SoloMarket::new(p, SignalModel::polynomial()).unwrap()
}

fn params(mu: f64, q: f64) -> SoloParams {
    SoloParams {
        mu,
        q,
        ..SoloParams::default()
    }
}

#[test]
fn criterion_01_threshold_values() {
    let m = SoloMarket::example();
    let mut f = Vec::new();
    let x_hat = m.baseline_threshold().x;
    let x_q = m.mechanical_threshold().x;
    if (x_hat - 1.0 / 7.0).abs() > 1e-12 {
        f.push(format!("x_hat = {x_hat}, want 1/7"));
    }
    if (x_q - 1.0 / 19.0).abs() > 1e-12 {
        f.push(format!("x(0.75) = {x_q}, want 1/19"));
    }
    verdict(1, f);
}

#[test]
fn criterion_02_correctness_values() {
    let c = SoloMarket::example().mechanical_correctness();
    let mut f = Vec::new();
    for (name, got, want) in [
        ("theta_hat", c.theta_baseline, 0.769388),
        ("theta(0.75)", c.theta, 0.806648),
        ("prop1 lhs", c.prop1_lhs, 0.701470),
    ] {
        if (got - want).abs() > 1e-6 {
            f.push(format!("{name} = {got:.10}, want {want} within 1e-6"));
        }
    }
    if !c.prop1_holds {
        f.push("verdict is harms, want improves".into());
    }
    verdict(2, f);
}

#[test]
fn criterion_03_accuracy_lowers_threshold_and_applicant_quality() {
    let bundles = [
        (0.5, 0.4, 0.6, 0.5),
        (0.2, 0.3, 0.5, 0.4),
        (0.8, 0.7, 0.3, 0.9),
        (0.35, 0.55, 0.8, 0.2),
        (0.65, 0.25, 0.1, 1.0),
    ];
    let qs: Vec<f64> = (51..=99).map(|k| k as f64 / 100.0).collect();
    assert_eq!(qs.len(), 49);
    let mut f = Vec::new();
    for (mu, gamma, phi, alpha) in bundles {
        let mut prev: Option<(f64, f64, f64)> = None;
        for &q in &qs {
            let m = market(SoloParams {
                mu,
                q,
                gamma,
                phi,
                alpha,
                d: 1.0,
            });
            let x = m.mechanical_threshold().x;
            let quality = m.mean_applicant_quality(&m.mechanical()).unwrap();
            if let Some((pq, px, pm)) = prev {
                if !(x < px) {
                    f.push(format!(
                        "mu={mu} gamma={gamma}: x({q}) = {x} not below x({pq}) = {px}"
                    ));
                }
                if !(quality < pm) {
                    f.push(format!(
                        "mu={mu} gamma={gamma}: mean quality at q={q} not below q={pq}"
                    ));
                }
            }
            prev = Some((q, x, quality));
        }
    }
    verdict(3, f);
}

#[test]
fn criterion_04_correctness_map_signs() {
    let start = Instant::now();
    let cells = correctness_map(&CorrectnessMapArgs::default()).unwrap();
    let elapsed = start.elapsed();
    let mut f = Vec::new();
    if cells.len() != 100 * 100 {
        f.push(format!("{} cells, want 10000", cells.len()));
    }
    for c in &cells {
        if (c.improvement > 0.0) != c.improves {
            f.push(format!(
                "mu={} q={}: improvement {} but predicate says {}",
                c.mu, c.q, c.improvement, c.improves
            ));
        }
    }
    let mut mus: Vec<f64> = cells.iter().map(|c| c.mu).collect();
    mus.dedup();
    let model = SignalModel::polynomial();
    for mu in mus {
        let predicted = market(params(mu, 0.75)).regime_classify().regime;
        let at = correctness_cell(params(mu, 0.501), &model).unwrap();
        if (predicted == Regime::LowQualityHelps) != (at.improvement > 0.0) {
            f.push(format!(
                "mu={mu}: regime {predicted:?} but improvement at q=0.501 is {}",
                at.improvement
            ));
        }
    }
    for (mu, want) in [(0.2, true), (0.5, false)] {
        let c = correctness_cell(params(mu, 0.51), &model).unwrap();
        if c.improves != want {
            f.push(format!(
                "spot cell mu={mu} q=0.51: improves={}, want {want}",
                c.improves
            ));
        }
    }
    if elapsed.as_secs_f64() >= 5.0 {
        f.push(format!("grid took {elapsed:?}"));
    }
    verdict(4, f);
}

/// Keeper utility at waiver probability `sigma` written out directly for the
/// polynomial model; valid for small negative `sigma` as an algebraic
/// extension.
fn keeper_utility_direct(p: &SoloParams, sigma: f64) -> f64 {
    let (mu, q) = (p.mu, p.q);
    let ah = q + sigma * (1.0 - q);
    let al = 1.0 - q + sigma * q;
    let k = (p.gamma - p.alpha * p.phi) * (1.0 - mu);
    let x = k * al / (k * al + (1.0 - p.gamma) * mu * ah);
    let sh = 1.0 - x * x;
    let sl = (1.0 - x) * (1.0 - x);
    mu * ah * sh - p.d * p.phi * (1.0 - mu) * al * sl
}

#[test]
fn criterion_05_strategic_gatekeeper() {
    let mut f = Vec::new();
    for i in 1..=9 {
        for j in 0..=8 {
            for s in 0..=4 {
                let (mu, q, sigma) = (i as f64 / 10.0, 0.55 + 0.05 * j as f64, s as f64 / 4.0);
                let m = market(params(mu, q));
                let dx = m.threshold_sigma_derivative(sigma).unwrap();
                if !(dx > 0.0) {
                    f.push(format!("dx/dsigma = {dx} at mu={mu} q={q} sigma={sigma}"));
                }
            }
        }
    }
    let h = 1e-5;
    let mut checked = 0;
    for (k, mu) in [0.1, 0.3, 0.5, 0.7, 0.95].into_iter().enumerate() {
        for (q, d) in [(0.6, 1.0), (0.75, 0.5), (0.85, 2.0), (0.95, 1.0)] {
            let p = SoloParams {
                mu,
                q,
                d,
                gamma: 0.4 + 0.05 * k as f64,
                ..SoloParams::default()
            };
            let analytic = market(p).keeper_marginal_at_zero();
            let fd = (keeper_utility_direct(&p, h) - keeper_utility_direct(&p, -h)) / (2.0 * h);
            let rel = (analytic - fd).abs() / fd.abs().max(1e-300);
            checked += 1;
            if rel > 1e-6 {
                f.push(format!(
                    "marginal {analytic} vs finite difference {fd} at mu={mu} q={q} d={d}"
                ));
            }
        }
    }
    assert_eq!(checked, 20);
    let m = market(params(0.95, 0.75));
    let marginal = m.keeper_marginal_at_zero();
    if !(marginal > 0.0) {
        f.push(format!("marginal at mu=0.95 is {marginal}"));
    }
    let best = m.optimal_sigma();
    if !(best.sigma_star > 0.0) {
        f.push(format!("optimal sigma at mu=0.95 is {}", best.sigma_star));
    }
    verdict(5, f);
}

#[test]
fn criterion_06_mu_bar_properties() {
    let rows = mu_bar_sweep(&MuBarArgs {
        d: vec![0.5, 1.0, 2.0],
        q_min: Some(0.55),
        q_max: Some(0.95),
        q_steps: Some(41),
        ..MuBarArgs::default()
    })
    .unwrap();
    let curve = |d: f64| -> Vec<(f64, f64)> {
        rows.iter()
            .filter(|r| r.d == d)
            .map(|r| (r.q, r.mu_bar.effective_value()))
            .collect()
    };
    let mut f = Vec::new();
    let unit = curve(1.0);
    for w in unit.windows(2) {
        if w[1].1 < w[0].1 - 1e-3 {
            f.push(format!(
                "d=1: mu_bar({}) = {} below mu_bar({}) = {}",
                w[1].0, w[1].1, w[0].0, w[0].1
            ));
        }
    }
    for &(q, v) in &unit {
        if v > q {
            f.push(format!("d=1: mu_bar({q}) = {v} above the identity"));
        }
    }
    for (lo, hi) in [(0.5, 1.0), (1.0, 2.0)] {
        for (a, b) in curve(lo).iter().zip(curve(hi)) {
            if a.1 > b.1 {
                f.push(format!(
                    "q={}: mu_bar(d={lo}) = {} above mu_bar(d={hi}) = {}",
                    a.0, a.1, b.1
                ));
            }
        }
    }
    verdict(6, f);
}

#[test]
fn criterion_07_biased_equilibrium_anchors() {
    let mut f = Vec::new();
    let eq = BiasedMarket::example(0.5, TiePolicy::EqualSplit)
        .unwrap()
        .solve_equilibrium()
        .unwrap();
    if (eq.x_a - 0.0).abs() > 1e-6 || (eq.x_b - 0.15).abs() > 1e-6 {
        f.push(format!("q_B=0.5: ({}, {}), want (0, 0.15)", eq.x_a, eq.x_b));
    }
    let eq = BiasedMarket::example(0.75, TiePolicy::EqualSplit)
        .unwrap()
        .solve_equilibrium()
        .unwrap();
    for x in [eq.x_a, eq.x_b] {
        if (x - 0.0463).abs() > 1e-3 {
            f.push(format!("q_B=0.75: threshold {x}, want 0.0463 within 1e-3"));
        }
    }
    if (eq.x_a - eq.x_b).abs() > 1e-12 {
        f.push(format!("q_B=0.75: asymmetric ({}, {})", eq.x_a, eq.x_b));
    }
    let rows = biased_sweep(&BiasedArgs {
        tie: vec![
            "equal".into(),
            "conditional:0.75".into(),
            "invariant:0.75".into(),
        ],
        ..BiasedArgs::default()
    })
    .unwrap();
    for r in &rows {
        let m = BiasedMarket::example(r.q_b, r.tie).unwrap();
        let defect_a = (m.best_response(Side::A, r.x_b).unwrap().x - r.x_a).abs();
        let defect_b = (m.best_response(Side::B, r.x_a).unwrap().x - r.x_b).abs();
        if !r.converged || defect_a.max(defect_b) > 1e-8 {
            f.push(format!(
                "q_B={} {}: residual {}",
                r.q_b,
                r.tie.label(),
                defect_a.max(defect_b)
            ));
        }
    }
    verdict(7, f);
}

fn probe_failures(label: &str, r: &ProbeReport) -> Vec<String> {
    r.points
        .windows(2)
        .zip(&r.steps)
        .filter(|(_, s)| **s == StepVerdict::Violated)
        .map(|(w, _)| {
            format!(
                "{label}: {:?} from {} to {} moves x_i from {:.6} to {:.6}, claimed increasing",
                r.parameter, w[0].value, w[1].value, w[0].x_response, w[1].x_response
            )
        })
        .collect()
}

#[test]
fn criterion_08_comparative_statics() {
    let bundles = [
        ([0.5, 0.5], [0.75, 0.8], [0.6, 0.6]),
        ([0.4, 0.6], [0.7, 0.8], [0.55, 0.6]),
        ([0.6, 0.55], [0.8, 0.7], [0.65, 0.6]),
    ];
    let around = |v: f64, h: f64| [v - h, v, v + h];
    let mut f = Vec::new();
    let mut checked = std::collections::BTreeMap::<&str, usize>::new();
    for (k, (mu, q, gamma)) in bundles.iter().enumerate() {
        let m = BiasedMarket::new(
            Candidate {
                mu: mu[0],
                q: q[0],
                gamma: gamma[0],
            },
            Candidate {
                mu: mu[1],
                q: q[1],
                gamma: gamma[1],
            },
            SignalModel::polynomial(),
            TiePolicy::EqualSplit,
        )
        .unwrap();
        for side in [Side::A, Side::B] {
            let j = *m.candidate(side.other());
            let br = ProbeMode::BestResponse { x_other: 0.1 };
            let clauses: [(&str, ProbeParameter, ProbeMode, [f64; 3]); 6] = [
                (
                    "best response vs rival prior",
                    ProbeParameter::MuOther,
                    br,
                    around(j.mu, 0.05),
                ),
                (
                    "best response vs rival threshold",
                    ProbeParameter::XOther,
                    br,
                    [0.05, 0.1, 0.2],
                ),
                (
                    "best response vs rival accuracy",
                    ProbeParameter::QOther,
                    br,
                    around(j.q, 0.05),
                ),
                (
                    "equilibrium vs rival prior",
                    ProbeParameter::MuOther,
                    ProbeMode::Equilibrium,
                    around(j.mu, 0.05),
                ),
                (
                    "equilibrium vs rival accuracy",
                    ProbeParameter::QOther,
                    ProbeMode::Equilibrium,
                    around(j.q, 0.05),
                ),
                (
                    "equilibrium vs rival cost",
                    ProbeParameter::GammaOther,
                    ProbeMode::Equilibrium,
                    around(j.gamma, 0.05),
                ),
            ];
            for (name, parameter, mode, grid) in clauses {
                let r = m
                    .comparative_statics_probe(side, parameter, mode, &grid)
                    .unwrap();
                *checked.entry(name).or_default() += r.checked();
                f.extend(probe_failures(
                    &format!("bundle {k} side {side:?} {name}"),
                    &r,
                ));
            }
        }
    }
    for (name, n) in &checked {
        println!("  {name}: {n} step(s) with side conditions met");
        if *n == 0 {
            f.push(format!("{name}: side conditions never met"));
        }
    }
    verdict(8, f);
}

fn agreement(label: &str, cmps: &[Comparison]) -> Vec<String> {
    cmps.iter()
        .filter(|c| !c.agrees)
        .map(|c| {
            format!(
                "{label}: {} simulated {} vs analytic {} (se {}, z {:?})",
                c.name, c.estimate, c.analytic, c.se, c.z
            )
        })
        .collect()
}

#[test]
fn criterion_09_monte_carlo_agreement() {
    let start = Instant::now();
    let n = 1_000_000;
    let mut f = Vec::new();
    let mut scenarios = 0;
    let solo: [(&str, SoloParams, Option<f64>); 6] = [
        ("mechanical", SoloParams::default(), None),
        ("no gatekeeper", SoloParams::default(), Some(-1.0)),
        ("mixed 0.3", SoloParams::default(), Some(0.3)),
        (
            "mixed 0.8 low prior",
            SoloParams {
                mu: 0.3,
                ..SoloParams::default()
            },
            Some(0.8),
        ),
        (
            "mechanical strict keeper",
            SoloParams {
                mu: 0.2,
                q: 0.9,
                d: 2.0,
                ..SoloParams::default()
            },
            None,
        ),
        (
            "mechanical costly test",
            SoloParams {
                mu: 0.7,
                q: 0.6,
                gamma: 0.7,
                phi: 0.9,
                alpha: 0.3,
                d: 1.0,
            },
            None,
        ),
    ];
    for (k, (label, p, sigma)) in solo.into_iter().enumerate() {
        let m = market(p);
        let policy = match sigma {
            None => m.mechanical(),
            Some(s) if s < 0.0 => GatekeeperPolicy::None,
            Some(s) => m.mixed(s),
        };
        let cfg = SimConfig::new(1000 + k as u64, n).unwrap();
        let r = simulate_solo(&m, &policy, None, &cfg).unwrap();
        f.extend(agreement(
            label,
            &r.compare(&solo_analytic(&m, &policy, None).unwrap()),
        ));
        scenarios += 1;
    }
    let biased = [
        ("equal split", 0.75, TiePolicy::EqualSplit),
        ("equal split asymmetric", 0.9, TiePolicy::EqualSplit),
        (
            "type-conditional",
            0.9,
            TiePolicy::TypeConditional { rho: 0.75 },
        ),
        (
            "type-invariant",
            0.8,
            TiePolicy::TypeInvariant { rho: 0.75 },
        ),
    ];
    for (k, (label, q_b, tie)) in biased.into_iter().enumerate() {
        let m = BiasedMarket::example(q_b, tie).unwrap();
        let eq = m.solve_equilibrium().unwrap();
        let th = (eq.x_a, eq.x_b);
        let cfg = SimConfig::new(2000 + k as u64, n).unwrap();
        let r = simulate_biased(&m, th, &cfg).unwrap();
        f.extend(agreement(label, &r.compare(&biased_analytic(&m, th))));
        scenarios += 1;
    }
    assert_eq!(scenarios, 10);
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 120 {
        f.push(format!("took {elapsed:?}"));
    }
    verdict(9, f);
}

#[test]
fn criterion_10_affirmative_action_ordering() {
    let mut f = Vec::new();
    for q_b in [0.8, 0.9] {
        let outcome = |tie: TiePolicy| {
            let m = BiasedMarket::example(q_b, tie).unwrap();
            m.outcome_distribution(&m.solve_equilibrium().unwrap())
        };
        let equal = outcome(TiePolicy::EqualSplit);
        let cond = outcome(TiePolicy::TypeConditional { rho: 0.75 });
        let inv = outcome(TiePolicy::TypeInvariant { rho: 0.75 });
        for (name, c, e) in [
            ("pr_hire_A", cond.pr_hire_a, equal.pr_hire_a),
            (
                "pr_hire_A_and_H",
                cond.pr_hire_a_and_h,
                equal.pr_hire_a_and_h,
            ),
            ("pr_best", cond.pr_best, equal.pr_best),
        ] {
            if c < e {
                f.push(format!(
                    "q_B={q_b}: type-conditional {name} {c:.6} below equal split {e:.6}"
                ));
            }
        }
        if !(inv.pr_hire_a > equal.pr_hire_a) {
            f.push(format!(
                "q_B={q_b}: type-invariant pr_hire_A {:.6} not above equal split {:.6}",
                inv.pr_hire_a, equal.pr_hire_a
            ));
        }
        for (name, i, c) in [
            ("pr_hire_H", inv.pr_hire_h, cond.pr_hire_h),
            ("pr_best", inv.pr_best, cond.pr_best),
        ] {
            if i > c {
                f.push(format!(
                    "q_B={q_b}: type-invariant {name} {i:.6} above type-conditional {c:.6}"
                ));
            }
        }
    }
    verdict(10, f);
}

fn gklab(args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_gklab"))
        .args(args)
        .env("GKLAB_THREADS", threads)
        .output()
        .expect("gklab runs");
    assert!(
        out.status.success(),
        "gklab {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Invocations producing the golden files.
pub const GOLDEN: [(&str, &[&str]); 3] = [
    ("correctness_map.csv", &["correctness-map"]),
    (
        "mu_bar.csv",
        &["mu-bar", "--d", "0.5", "--d", "1", "--d", "2"],
    ),
    (
        "biased.csv",
        &[
            "biased",
            "--tie",
            "equal",
            "--tie",
            "conditional:0.75",
            "--tie",
            "invariant:0.75",
        ],
    ),
];

#[test]
fn criterion_11_determinism() {
    let mut f = Vec::new();
    for args in [
        &[
            "simulate", "--solo", "--policy", "mixed", "--sigma", "0.3", "--n", "200000", "--seed",
            "7",
        ][..],
        &[
            "simulate",
            "--biased",
            "--q-b",
            "0.9",
            "--tie",
            "conditional:0.75",
            "--n",
            "200000",
            "--seed",
            "7",
        ][..],
    ] {
        let runs = [gklab(args, "1"), gklab(args, "1"), gklab(args, "4")];
        if runs[0] != runs[1] || runs[0] != runs[2] {
            f.push(format!(
                "gklab {args:?} differs between runs or thread counts"
            ));
        }
    }
    for (file, args) in GOLDEN {
        let want = std::fs::read(golden(file)).expect("golden file present");
        for threads in ["1", "4"] {
            if gklab(args, threads) != want {
                f.push(format!(
                    "gklab {args:?} with {threads} thread(s) differs from {file}"
                ));
            }
        }
    }
    verdict(11, f);
}
