use std::collections::BTreeSet;

use serde_json::json;

use herman::exact::{
    closed_form_hitting_time, enumerate_configs, hitting_time_distribution, Arithmetic, Base, LevelSolver, SolveResult,
};
use herman::lemma::{phi_psi_ratio_scan, q_grid_min, q_grid_samples};
use herman::montecarlo::{estimate, McFunctional, SimPlan};
use herman::potentials::{recursion_residual, Epsilon};
use herman::ring::{DoubledConfig, GapTriple, RingConfig};

use crate::report::*;
use crate::spec::{Command, ExperimentSpec, FunctionalKind};
use crate::CliError;

/// Largest `N` for `verify-recursion`; the oracle enumerates `2^K` masks for
/// each of the `2^N` configurations.
const MAX_RECURSION_N: usize = 12;
/// Largest `N` for which `simulate` also runs the exact solver.
const MAX_REFERENCE_N: usize = 12;
const TIE_TOL: f64 = 1e-9;

type Outcome = Result<(Payload, Vec<Check>), CliError>;

pub(crate) fn dispatch(spec: &ExperimentSpec) -> Outcome {
    match spec.command {
        Command::Exact if spec.argmax => argmax(spec),
        Command::Exact => exact(spec),
        Command::Simulate => simulate(spec),
        Command::VerifyRecursion => verify_recursion(spec),
        Command::VerifyConjecture => verify_conjecture(spec),
        Command::ScanQ => scan_q(spec),
        Command::ScanRatio => scan_ratio(spec),
        Command::Distribution => distribution(spec),
    }
}

fn nearest_class(n: usize) -> Result<BTreeSet<RingConfig>, CliError> {
    let nearest = GapTriple::equidistant(n)?.sorted();
    Ok(enumerate_configs(n, 3)?
        .into_iter()
        .filter(|c| c.gaps().map(|g| g.sorted() == nearest).unwrap_or(false))
        .collect())
}

fn is_equidistant_triple(config: &RingConfig) -> bool {
    let n = config.n();
    n.is_multiple_of(3) && config.token_count() == 3 && config.gaps().map(|g| g.sorted() == [n / 3; 3]).unwrap_or(false)
}

fn rows(solved: &SolveResult, only: Option<&RingConfig>) -> Vec<ValueRow> {
    let exact = solved.exact_values();
    solved
        .iter()
        .enumerate()
        .filter(|(_, (c, _))| only.is_none_or(|o| o == *c))
        .map(|(i, (config, value))| ValueRow {
            config: config.clone(),
            value,
            exact: exact.map(|e| e[i].to_string()),
            psi_at_tau: None,
            slack: None,
        })
        .collect()
}

fn exact(spec: &ExperimentSpec) -> Outcome {
    let n = spec.n.expect("resolved");
    let solver = LevelSolver::new(n).arithmetic(spec.arithmetic);
    let only = spec.config.as_ref();
    let functional = spec.functional.expect("resolved");
    let mut checks = Vec::new();
    let table = match functional {
        FunctionalKind::Et => {
            let solved = solver.expected_hitting_time()?;
            let mismatch = solved.iter().enumerate().find(|(i, (c, v))| {
                let Ok(gaps) = c.gaps() else { return false };
                let closed = closed_form_hitting_time(&gaps);
                match solved.exact_values() {
                    Some(e) => e[*i] != closed,
                    None => (v - 4.0 * (gaps.a() * gaps.b() * gaps.c()) as f64 / n as f64).abs() > TIE_TOL,
                }
            });
            checks.push(Check::new(
                "three_token_closed_form",
                mismatch.is_none(),
                mismatch.map(|(_, (c, v))| json!({"config": c, "value": v})),
            ));
            ValueTable {
                n,
                functional: solved.functional().to_string(),
                rows: rows(&solved, only),
            }
        }
        FunctionalKind::Growth | FunctionalKind::Base => {
            let base = match (functional, spec.arithmetic) {
                (FunctionalKind::Growth, Arithmetic::Exact) => {
                    return Err(CliError::Usage(
                        "the growth base 1/(1-ε) is irrational; use --float or --functional base".into(),
                    ))
                }
                (FunctionalKind::Growth, Arithmetic::Float) => Base::growth(n)?,
                (_, Arithmetic::Exact) => Base::exact_from_f64(spec.base.expect("resolved"))?,
                (_, Arithmetic::Float) => Base::Float(spec.base.expect("resolved")),
            };
            let solved = solver.expected_exponential(&base)?;
            if functional == FunctionalKind::Growth {
                let (worst, max) = solved
                    .iter()
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(c, v)| (c.clone(), v))
                    .expect("nonempty state space");
                checks.push(Check::new(
                    "growth_at_most_three_halves",
                    max <= 1.5 + TIE_TOL,
                    Some(json!({"config": worst, "value": max})),
                ));
                let bad = solved
                    .iter()
                    .find(|(c, v)| ((v - 1.5).abs() <= TIE_TOL) != is_equidistant_triple(c));
                checks.push(Check::new(
                    "equality_only_at_equidistant_triples",
                    bad.is_none(),
                    bad.map(|(c, v)| json!({"config": c, "value": v})),
                ));
            }
            ValueTable {
                n,
                functional: solved.functional().to_string(),
                rows: rows(&solved, only),
            }
        }
        FunctionalKind::Tau => {
            let sol = solver.tau_functionals()?;
            let mut min_slack: Option<(f64, &RingConfig)> = None;
            let mut out = Vec::new();
            for (i, config) in sol.configs.iter().enumerate() {
                let slack = sol.slack(i);
                if config.token_count() >= 5 && min_slack.is_none_or(|(s, _)| slack < s) {
                    min_slack = Some((slack, config));
                }
                if only.is_none_or(|o| o == config) {
                    out.push(ValueRow {
                        config: config.clone(),
                        value: sol.expected_tau[i],
                        exact: None,
                        psi_at_tau: Some(sol.expected_psi_at_tau[i]),
                        slack: Some(slack),
                    });
                }
            }
            checks.push(Check::new(
                "drift_bound_until_three_tokens",
                min_slack.is_none_or(|(s, _)| s >= -TIE_TOL),
                min_slack.map(|(s, c)| json!({"config": c, "slack": s})),
            ));
            ValueTable {
                n,
                functional: "E(tau)".into(),
                rows: out,
            }
        }
    };
    Ok((Payload::Values(table), checks))
}

fn argmax(spec: &ExperimentSpec) -> Outcome {
    let n = spec.n.expect("resolved");
    let best = LevelSolver::new(n).arithmetic(spec.arithmetic).argmax_expected_time()?;
    let found: BTreeSet<RingConfig> = best.maximizers.iter().cloned().collect();
    let bound = best.bound();
    let tight = (best.max_value - bound).abs() <= TIE_TOL;
    let checks = vec![
        Check::new(
            "argmax_is_nearest_class",
            found == nearest_class(n)?,
            Some(json!({"maximizers": &best.maximizers})),
        ),
        Check::new(
            "max_within_bound",
            best.max_value <= bound + TIE_TOL,
            Some(json!({"max": best.max_value, "bound": bound})),
        ),
        Check::new(
            "equality_iff_three_divides_n",
            tight == n.is_multiple_of(3),
            Some(json!({"max": best.max_value, "bound": bound})),
        ),
    ];
    let maximizer_gaps = best.maximizers.iter().map(|c| c.gaps()).collect::<Result<_, _>>()?;
    let summary = ArgmaxSummary {
        n,
        max_value: best.max_value,
        exact_max: best.exact_max.map(|r| r.to_string()),
        bound,
        maximizers: best.maximizers,
        maximizer_gaps,
    };
    Ok((Payload::Argmax(summary), checks))
}

fn simulate(spec: &ExperimentSpec) -> Outcome {
    let config = spec.config.clone().expect("resolved");
    let n = config.n();
    let base = match spec.base {
        Some(b) => b,
        None => Epsilon::new(n)?.growth_base(),
    };
    let t_max = spec.t_max.expect("resolved");
    let plan = SimPlan::new(config.clone(), spec.runs.expect("resolved"), spec.seed.expect("resolved"))
        .with_functional(McFunctional::HittingTime)
        .with_functional(McFunctional::Exponential { base })
        .with_t_max(t_max);
    let out = estimate(&plan)?;

    let exact_reference = if n <= MAX_REFERENCE_N {
        let solver = LevelSolver::new(n);
        vec![
            solver.expected_hitting_time().ok().and_then(|s| s.value_of(&config)),
            solver
                .expected_exponential(&Base::Float(base))
                .ok()
                .and_then(|s| s.value_of(&config)),
        ]
    } else {
        vec![None, None]
    };
    let mut checks = Vec::new();
    for (estimate, reference) in out.estimates.iter().zip(&exact_reference) {
        if let Some(r) = reference {
            let name = match estimate.functional {
                McFunctional::HittingTime => "hitting_time_within_4se_of_exact",
                McFunctional::Exponential { .. } => "exponential_within_4se_of_exact",
            };
            checks.push(Check::new(
                name,
                (estimate.mean - r).abs() <= 4.0 * estimate.std_error,
                Some(json!({"mean": estimate.mean, "std_error": estimate.std_error, "exact": r})),
            ));
        }
    }
    let summary = SimulationSummary {
        config,
        runs: out.runs,
        censored: out.censored,
        t_max,
        estimates: out.estimates,
        exact_reference,
        histogram: out.histogram,
    };
    Ok((Payload::Simulation(summary), checks))
}

fn verify_recursion(spec: &ExperimentSpec) -> Outcome {
    let (lo, hi) = (spec.n.expect("resolved"), spec.n_max.expect("resolved"));
    if hi > MAX_RECURSION_N {
        return Err(herman::Error::Capacity {
            what: "ring size for the exhaustive recursion check",
            requested: hi as u128,
            limit: MAX_RECURSION_N as u128,
        }
        .into());
    }
    let tolerance = spec.tolerance.expect("resolved");
    let mut rows = Vec::new();
    for n in lo..=hi {
        let configs = DoubledConfig::all(2 * n)?;
        let mut worst: Option<(f64, DoubledConfig)> = None;
        for config in &configs {
            let r = recursion_residual(config)?;
            if worst.as_ref().is_none_or(|(w, _)| r > *w) {
                worst = Some((r, config.clone()));
            }
        }
        let (max_residual, worst) = worst.expect("nonempty");
        rows.push(RecursionRow {
            n,
            configs: configs.len(),
            max_residual,
            worst,
        });
    }
    let top = rows
        .iter()
        .max_by(|a, b| a.max_residual.total_cmp(&b.max_residual))
        .expect("nonempty range");
    let checks = vec![Check::new(
        "residual_below_tolerance",
        top.max_residual < tolerance,
        Some(json!({"config": top.worst, "residual": top.max_residual})),
    )];
    let summary = RecursionSummary {
        tolerance,
        max_residual: top.max_residual,
        rows,
    };
    Ok((Payload::Recursion(summary), checks))
}

fn verify_conjecture(spec: &ExperimentSpec) -> Outcome {
    let (lo, hi) = (spec.n.expect("resolved"), spec.n_max.expect("resolved"));
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for n in lo..=hi {
        let best = LevelSolver::new(n).arithmetic(spec.arithmetic).argmax_expected_time()?;
        let growth = LevelSolver::new(n).expected_exponential(&Base::growth(n)?)?;
        let growth_max = growth.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let matches = best.maximizers.iter().cloned().collect::<BTreeSet<_>>() == nearest_class(n)?;
        let bound = best.bound();
        let tight = (best.max_value - bound).abs() <= TIE_TOL;
        let witness = json!({"n": n, "max": best.max_value, "maximizers": &best.maximizers});
        checks.push(Check::new(format!("n{n}_argmax_is_nearest_class"), matches, Some(witness.clone())));
        checks.push(Check::new(
            format!("n{n}_bound_with_equality_iff_three_divides_n"),
            best.max_value <= bound + TIE_TOL && tight == (n % 3 == 0),
            Some(witness),
        ));
        checks.push(Check::new(
            format!("n{n}_growth_at_most_three_halves"),
            growth_max <= 1.5 + TIE_TOL,
            Some(json!({"n": n, "max": growth_max})),
        ));
        rows.push(ConjectureRow {
            n,
            max_value: best.max_value,
            bound,
            maximizers: best.maximizers,
            nearest_gaps: GapTriple::equidistant(n)?,
            matches_nearest_class: matches,
            growth_max,
        });
    }
    Ok((Payload::Conjecture(ConjectureSummary { rows }), checks))
}

fn scan_q(spec: &ExperimentSpec) -> Outcome {
    let (step, delta) = (spec.step.expect("resolved"), spec.delta.expect("resolved"));
    let threshold = spec.threshold.expect("resolved");
    let scan = q_grid_min(step, delta, delta)?;
    let refined = q_grid_min(step / 2.0, delta, delta)?;
    let change = (scan.min - refined.min).abs();
    let checks = vec![
        Check::new(
            "grid_min_at_least_threshold",
            scan.min >= threshold,
            Some(json!({"min": scan.min, "argmin": scan.argmin, "threshold": threshold})),
        ),
        Check::new(
            "refinement_change_below_1e-3",
            change < 1e-3,
            Some(json!({"coarse": scan.min, "fine": refined.min})),
        ),
    ];
    let samples = spec.sample_step.map(q_grid_samples).transpose()?;
    let summary = QScanSummary {
        threshold,
        scan,
        refined,
        refinement_change: change,
        samples,
    };
    Ok((Payload::QScan(summary), checks))
}

fn scan_ratio(spec: &ExperimentSpec) -> Outcome {
    let threshold = spec.threshold.expect("resolved");
    let scan = phi_psi_ratio_scan(spec.n.expect("resolved"), spec.n_max.expect("resolved"))?;
    let checks = vec![Check::new(
        "ratio_min_at_least_threshold",
        scan.min_ratio >= threshold,
        Some(json!({"min": scan.min_ratio, "gaps": scan.argmin, "threshold": threshold})),
    )];
    Ok((Payload::RatioScan(RatioSummary { threshold, scan }), checks))
}

fn distribution(spec: &ExperimentSpec) -> Outcome {
    let config = spec.config.clone().expect("resolved");
    let t_max = spec.t_max.expect("resolved");
    let cdf = hitting_time_distribution(&config, t_max)?;
    let drop = cdf.windows(2).position(|w| w[1] < w[0]);
    let outside = cdf.iter().position(|p| !(0.0..=1.0).contains(p));
    let checks = vec![
        Check::new("monotone", drop.is_none(), drop.map(|t| json!({"t": t + 1}))),
        Check::new("within_unit_interval", outside.is_none(), outside.map(|t| json!({"t": t}))),
    ];
    Ok((Payload::Distribution(DistributionTable { config, t_max, cdf }), checks))
}
