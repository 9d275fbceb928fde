//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;

use herman::exact::{closed_form_hitting_time, enumerate_configs, Arithmetic, Base, LevelSolver};
use herman::lemma::{phi_psi_ratio_scan, q_grid_min, LEMMA_CONSTANT};
use herman::montecarlo::{estimate, McFunctional, SimPlan};
use herman::potentials::{psi, psi_of_positions, recursion_residual, Epsilon};
use herman::ring::{step_bitparallel, DoubledConfig, GapTriple, MoveMask, RingConfig};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn closed_form() -> Outcome {
    let mut checked = 0;
    for n in 3..=12 {
        let solved = LevelSolver::new(n)
            .arithmetic(Arithmetic::Exact)
            .max_tokens(3)
            .expected_hitting_time()
            .map_err(|e| e.to_string())?;
        for config in enumerate_configs(n, 3).map_err(|e| e.to_string())? {
            let gaps = config.gaps().map_err(|e| e.to_string())?;
            let got = solved.exact_value_of(&config).ok_or("missing config")?;
            ensure(*got == closed_form_hitting_time(&gaps), || {
                format!("{config}: {got} != 4abc/N")
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} configurations, exact"))
}

fn worst_case() -> Outcome {
    let mut summary = Vec::new();
    for n in 5..=12 {
        let best = LevelSolver::new(n).argmax_expected_time().map_err(|e| e.to_string())?;
        let nearest = GapTriple::equidistant(n).map_err(|e| e.to_string())?.sorted();
        let expected: BTreeSet<RingConfig> = enumerate_configs(n, 3)
            .map_err(|e| e.to_string())?
            .into_iter()
            .filter(|c| c.gaps().map(|g| g.sorted() == nearest).unwrap_or(false))
            .collect();
        let found: BTreeSet<RingConfig> = best.maximizers.iter().cloned().collect();
        ensure(found == expected, || format!("N = {n}: maximizers {found:?}"))?;
        let bound = best.bound();
        ensure(best.max_value <= bound + 1e-9, || format!("N = {n}: {} > 4N²/27", best.max_value))?;
        let tight = (best.max_value - bound).abs() <= 1e-9;
        ensure(tight == (n % 3 == 0), || format!("N = {n}: equality {tight}"))?;
        summary.push(format!("{n}:{:.4}", best.max_value));
    }
    Ok(format!("max E(T) {}", summary.join(" ")))
}

fn recursion() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in 3..=8 {
        for config in DoubledConfig::all(2 * n).map_err(|e| e.to_string())? {
            worst = worst.max(recursion_residual(&config).map_err(|e| e.to_string())?);
            count += 1;
        }
    }
    ensure(worst < 1e-10, || format!("max residual {worst:e}"))?;
    Ok(format!("{count} configurations, max residual {worst:.2e}"))
}

fn exponential_moment() -> Outcome {
    let anchor = LevelSolver::new(3)
        .arithmetic(Arithmetic::Exact)
        .expected_exponential(&Base::Exact(BigRational::new(BigInt::from(4), BigInt::from(3))))
        .map_err(|e| e.to_string())?;
    let full = RingConfig::new(3, [1, 2, 3]).unwrap();
    let three_halves = BigRational::new(BigInt::from(3), BigInt::from(2));
    ensure(anchor.exact_value_of(&full) == Some(&three_halves), || "N = 3 anchor".into())?;

    let mut summary = Vec::new();
    for n in 3..=10 {
        let solved = LevelSolver::new(n)
            .expected_exponential(&Base::growth(n).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let mut max = f64::NEG_INFINITY;
        for (config, v) in solved.iter() {
            ensure(v <= 1.5 + 1e-9, || format!("{config}: {v}"))?;
            let at_bound = (v - 1.5).abs() <= 1e-9;
            let equidistant = n % 3 == 0
                && config.token_count() == 3
                && config.gaps().map(|g| g.sorted() == [n / 3; 3]).unwrap_or(false);
            ensure(at_bound == equidistant, || format!("{config}: {v}, equality mismatch"))?;
            max = max.max(v);
        }
        summary.push(format!("{n}:{max:.5}"));
    }
    Ok(format!("max {}", summary.join(" ")))
}

fn drift_bound() -> Outcome {
    let mut min_slack = f64::INFINITY;
    let mut count = 0;
    for n in 5..=8 {
        let sol = LevelSolver::new(n).tau_functionals().map_err(|e| e.to_string())?;
        for (i, config) in sol.configs.iter().enumerate() {
            if config.token_count() < 5 {
                continue;
            }
            let slack = sol.slack(i);
            ensure(slack >= -1e-9, || format!("{config}: slack {slack}"))?;
            min_slack = min_slack.min(slack);
            count += 1;
        }
    }
    Ok(format!("{count} configurations, min slack {min_slack:.3e}"))
}

fn discrete_ratio() -> Outcome {
    let scan = phi_psi_ratio_scan(3, 200).map_err(|e| e.to_string())?;
    ensure(scan.min_ratio >= LEMMA_CONSTANT, || format!("min ratio {}", scan.min_ratio))?;
    Ok(format!(
        "min Φ/Ψ {:.6} at {} over {} configurations",
        scan.min_ratio, scan.argmin, scan.checked
    ))
}

fn continuous_ratio() -> Outcome {
    let coarse = q_grid_min(1.0 / 1200.0, 0.03, 0.03).map_err(|e| e.to_string())?;
    let fine = q_grid_min(1.0 / 2400.0, 0.03, 0.03).map_err(|e| e.to_string())?;
    ensure(coarse.min >= LEMMA_CONSTANT, || format!("grid min {}", coarse.min))?;
    let change = (coarse.min - fine.min).abs();
    ensure(change < 1e-3, || format!("refinement changed min by {change}"))?;
    Ok(format!(
        "min Q {:.6} at ({:.4}, {:.4}), refinement change {change:.1e}",
        coarse.min, coarse.argmin.0, coarse.argmin.1
    ))
}

fn potential_properties() -> Outcome {
    let mut count = 0;
    for n in 3..=8 {
        let m = 2 * n;
        for config in DoubledConfig::all(m).map_err(|e| e.to_string())? {
            let p = psi(&config);
            ensure((-1e-12..=1.0 + 1e-12).contains(&p), || format!("{config}: Ψ = {p}"))?;
            let one = (p - 1.0).abs() < 1e-12;
            ensure(one == (config.token_count() == 1), || format!("{config}: Ψ = {p}"))?;
            for k in 1..m {
                let q = psi(&config.rotate(k));
                ensure((p - q).abs() < 1e-12, || format!("{config}: rotation by {k}"))?;
            }
            for x in 1..=m {
                let mut with_pair = config.positions().to_vec();
                with_pair.extend([x, x]);
                let q = psi_of_positions(m, &with_pair);
                ensure((p - q).abs() < 1e-12, || format!("{config}: pair at {x}"))?;
            }
            count += 1;
        }
        // Equidistant configurations: odd k ≥ 3 dividing N.
        for k in (3..=n).step_by(2).filter(|k| n % k == 0) {
            let config = RingConfig::new(n, (0..k).map(|i| 1 + i * n / k)).unwrap();
            let p = psi(&config.to_doubled());
            ensure(p.abs() < 1e-12, || format!("{config}: Ψ = {p}"))?;
        }
    }
    Ok(format!("{count} configurations"))
}

fn kernel_equivalence() -> Outcome {
    let mut pairs = 0u64;
    for n in 3..=10 {
        for occ in 1u64..1 << n {
            if occ.count_ones() % 2 == 0 {
                continue;
            }
            let config = RingConfig::from_bits(n, occ).map_err(|e| e.to_string())?;
            for mask in MoveMask::all(config.token_count()) {
                let by_struct = config.step(&mask).map_err(|e| e.to_string())?.to_bits().unwrap();
                let by_bits = step_bitparallel(occ, mask.to_coins(occ), n as u32);
                ensure(by_struct == by_bits, || format!("{config} with {mask:?}"))?;
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} (configuration, mask) pairs"))
}

fn monte_carlo() -> Outcome {
    let n = 9;
    let a = Epsilon::new(n).unwrap().growth_base();
    let plan = SimPlan::new(RingConfig::equidistant(n).unwrap(), 1_000_000, 20_240_917)
        .with_functional(McFunctional::HittingTime)
        .with_functional(McFunctional::Exponential { base: a })
        .with_t_max(40 * (n * n) as u64);
    let first = estimate(&plan).map_err(|e| e.to_string())?;
    let (t, g) = (&first.estimates[0], &first.estimates[1]);
    ensure((t.mean - 12.0).abs() <= 3.0 * t.std_error, || format!("mean T {} ± {}", t.mean, t.std_error))?;
    ensure((g.mean - 1.5).abs() <= 3.0 * g.std_error, || format!("mean a^T {} ± {}", g.mean, g.std_error))?;
    let replay = estimate(&plan).map_err(|e| e.to_string())?;
    ensure(first == replay, || "replay differs".into())?;
    Ok(format!(
        "T {:.4} ± {:.4}, a^T {:.5} ± {:.5}, censored {}",
        t.mean, t.std_error, g.mean, g.std_error, first.censored
    ))
}

/// Name, check, runtime budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

fn main() {
    let criteria: [Criterion; 10] = [
        ("closed form E(T) = 4abc/N, N 3..12", closed_form, 10),
        ("worst case is the nearest-N/3 class, N 5..12", worst_case, 300),
        ("one-step recursion of Ψ, 2N ≤ 16", recursion, 60),
        ("E(a^T) ≤ 3/2 with a = 1/(1-ε), N ≤ 10", exponential_moment, 120),
        ("drift bound up to τ, N ≤ 8", drift_bound, 120),
        ("discrete Φ/Ψ ≥ c, N 3..200", discrete_ratio, 60),
        ("continuous Q ≥ c on the grid", continuous_ratio, 60),
        ("properties of Ψ, 2N ≤ 16", potential_properties, 60),
        ("bit-parallel kernel equivalence, N ≤ 10", kernel_equivalence, 60),
        ("Monte Carlo calibration at N = 9", monte_carlo, 120),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(*budget);
        let (status, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over the {budget}s budget")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} criterion {:>2}: {name} [{detail}] ({:.2}s)", i + 1, elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
