use herman::exact::{default_horizon, enumerate_configs, Base, LevelSolver};
use herman::montecarlo::{estimate, McFunctional, SimPlan};
use herman::potentials::Epsilon;
use herman::ring::RingConfig;

fn sample_configs(n: usize) -> Vec<RingConfig> {
    let all: Vec<RingConfig> = (3..=n)
        .step_by(2)
        .flat_map(|k| enumerate_configs(n, k).unwrap())
        .collect();
    let stride = (all.len() / 10).max(1);
    all.into_iter().step_by(stride).take(10).collect()
}

#[test]
fn agrees_with_exact_solver() {
    for n in 3..=8 {
        let solved = LevelSolver::new(n).expected_hitting_time().unwrap();
        for (i, config) in sample_configs(n).into_iter().enumerate() {
            let plan = SimPlan::new(config.clone(), 1_000_000, 1000 * n as u64 + i as u64)
                .with_functional(McFunctional::HittingTime)
                .with_t_max(default_horizon(n));
            let out = estimate(&plan).unwrap();
            let e = &out.estimates[0];
            let exact = solved.value_of(&config).unwrap();
            assert!(
                (e.mean - exact).abs() <= 4.0 * e.std_error,
                "{config}: {} ± {} vs {exact}",
                e.mean,
                e.std_error
            );
        }
    }
}

#[test]
fn exponential_agrees_with_exact_solver() {
    let n = 7;
    let a = Epsilon::new(n).unwrap().growth_base();
    let solved = LevelSolver::new(n).expected_exponential(&Base::Float(a)).unwrap();
    for config in sample_configs(n) {
        let plan = SimPlan::new(config.clone(), 200_000, 77).with_functional(McFunctional::Exponential { base: a });
        let e = &estimate(&plan).unwrap().estimates[0];
        let exact = solved.value_of(&config).unwrap();
        assert!((e.mean - exact).abs() <= 4.0 * e.std_error, "{config}");
    }
}

#[test]
fn eight_node_five_token_mean_below_bound() {
    let config = RingConfig::new(8, [1, 2, 4, 5, 7]).unwrap();
    let exact = LevelSolver::new(8).expected_hitting_time().unwrap().value_of(&config).unwrap();
    let bound = 4.0 * 64.0 / 27.0;
    assert!(exact < bound);
    let plan = SimPlan::new(config, 200_000, 8).with_functional(McFunctional::HittingTime);
    let e = &estimate(&plan).unwrap().estimates[0];
    assert!(e.mean < bound);
    assert!((e.mean - exact).abs() <= 4.0 * e.std_error);
}

#[test]
fn censoring_is_rare_at_default_horizon() {
    for n in [16, 24, 32] {
        let plan = SimPlan::new(RingConfig::equidistant(n).unwrap(), 20_000, n as u64)
            .with_functional(McFunctional::HittingTime)
            .with_t_max(default_horizon(n));
        let out = estimate(&plan).unwrap();
        assert_eq!(out.censored, 0, "N = {n}");
    }
}

#[test]
fn empirical_cdf_tracks_forward_iteration() {
    let config = RingConfig::new(7, [1, 2, 3, 5, 6]).unwrap();
    let cdf = herman::exact::hitting_time_distribution(&config, 60).unwrap();
    let plan = SimPlan::new(config, 100_000, 3).with_functional(McFunctional::HittingTime);
    let out = estimate(&plan).unwrap();
    for t in [1u64, 5, 10, 20, 40] {
        let p = cdf[t as usize];
        let se = (p * (1.0 - p) / 100_000.0).sqrt().max(1e-6);
        assert!((out.empirical_cdf(t) - p).abs() <= 5.0 * se, "t = {t}");
    }
}
