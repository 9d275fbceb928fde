//! Seeded simulation of the protocol on the bit-parallel kernel.
//!
//! Run `r` of a plan with master seed `s` draws its coins from ChaCha8 keyed
//! by `s` on stream `r`; step `t` consumes the `t`-th 64-bit word of that
//! stream. A sample therefore depends only on `(s, r)`, and runs can be
//! scheduled on any number of threads. Per-run results are merged as an
//! integer histogram, so estimates are bit-identical across thread counts.
//!
//! ```
//! use herman::montecarlo::{estimate, McFunctional, SimPlan};
//! use herman::ring::RingConfig;
//!
//! let plan = SimPlan::new(RingConfig::new(3, [1, 2, 3]).unwrap(), 20_000, 7)
//!     .with_functional(McFunctional::HittingTime);
//! let out = estimate(&plan).unwrap();
//! let t = &out.estimates[0];
//! assert!((t.mean - 4.0 / 3.0).abs() < 4.0 * t.std_error);
//! ```

use std::collections::BTreeMap;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ring::{step_bitparallel, RingConfig};

/// Runs handled by one parallel task.
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum McFunctional {
    /// `T` itself.
    HittingTime,
    /// `a^T`.
    Exponential { base: f64 },
}

impl McFunctional {
    fn validate(&self) -> Result<()> {
        match *self {
            McFunctional::HittingTime => Ok(()),
            McFunctional::Exponential { base } if base.is_finite() && base > 0.0 => Ok(()),
            McFunctional::Exponential { base } => {
                Err(domain(format!("exponential base must be positive and finite, got {base}")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPlan {
    pub config: RingConfig,
    pub runs: u64,
    pub seed: u64,
    pub functionals: Vec<McFunctional>,
    /// Runs still alive after this many steps are censored. `None` means no cap.
    pub t_max: Option<u64>,
}

impl SimPlan {
    pub fn new(config: RingConfig, runs: u64, seed: u64) -> Self {
        Self {
            config,
            runs,
            seed,
            functionals: Vec::new(),
            t_max: None,
        }
    }

    pub fn with_functional(mut self, functional: McFunctional) -> Self {
        self.functionals.push(functional);
        self
    }

    pub fn with_t_max(mut self, t_max: u64) -> Self {
        self.t_max = Some(t_max);
        self
    }

    pub fn n(&self) -> usize {
        self.config.n()
    }

    fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(domain("run count must be at least 1"));
        }
        self.config.to_bits()?;
        self.functionals.iter().try_for_each(McFunctional::validate)
    }
}

/// One simulated hitting time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sample {
    Absorbed(u64),
    /// Still more than one token after `t_max` steps.
    Censored(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub functional: McFunctional,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub std_error: f64,
    /// Uncensored runs the estimate is based on.
    pub runs: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutcome {
    pub estimates: Vec<Estimate>,
    pub runs: u64,
    pub censored: u64,
    /// Hitting time → number of runs.
    pub histogram: BTreeMap<u64, u64>,
}

impl SimulationOutcome {
    /// Empirical `P(T ≤ t)` over all runs, censored ones counted as not absorbed.
    pub fn empirical_cdf(&self, t: u64) -> f64 {
        let hit: u64 = self.histogram.range(..=t).map(|(_, c)| c).sum();
        hit as f64 / self.runs as f64
    }
}

/// A single trajectory on the occupancy word.
#[derive(Debug, Clone)]
pub struct Walk {
    n: u32,
    occupancy: u64,
    time: u64,
    rng: ChaCha8Rng,
}

impl Walk {
    pub fn new(config: &RingConfig, seed: u64, run: u64) -> Result<Self> {
        let occupancy = config.to_bits()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run);
        Ok(Self {
            n: config.n() as u32,
            occupancy,
            time: 0,
            rng,
        })
    }

    pub fn occupancy(&self) -> u64 {
        self.occupancy
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn token_count(&self) -> u32 {
        self.occupancy.count_ones()
    }

    pub fn step(&mut self) -> u64 {
        let coins = self.rng.next_u64();
        self.occupancy = step_bitparallel(self.occupancy, coins, self.n);
        self.time += 1;
        self.occupancy
    }
}

/// Samples `T` for run `run` of master seed `seed`.
pub fn simulate_hitting_time(config: &RingConfig, seed: u64, run: u64, t_max: Option<u64>) -> Result<Sample> {
    let mut walk = Walk::new(config, seed, run)?;
    Ok(run_walk(&mut walk, t_max))
}

fn run_walk(walk: &mut Walk, t_max: Option<u64>) -> Sample {
    let cap = t_max.unwrap_or(u64::MAX);
    while walk.token_count() > 1 {
        if walk.time() >= cap {
            return Sample::Censored(walk.time());
        }
        walk.step();
    }
    Sample::Absorbed(walk.time())
}

#[derive(Default)]
struct Tally {
    histogram: BTreeMap<u64, u64>,
    censored: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (t, c) in other.histogram {
            *self.histogram.entry(t).or_default() += c;
        }
        self.censored += other.censored;
        self
    }
}

/// Runs the plan and reduces each functional over the uncensored runs.
pub fn estimate(plan: &SimPlan) -> Result<SimulationOutcome> {
    plan.validate()?;
    let config = &plan.config;
    let chunks = plan.runs.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut tally = Tally::default();
            let end = ((chunk + 1) * CHUNK).min(plan.runs);
            for run in chunk * CHUNK..end {
                let mut walk = Walk::new(config, plan.seed, run).expect("validated config");
                match run_walk(&mut walk, plan.t_max) {
                    Sample::Absorbed(t) => *tally.histogram.entry(t).or_default() += 1,
                    Sample::Censored(_) => tally.censored += 1,
                }
            }
            tally
        })
        .reduce(Tally::default, Tally::merge);

    if tally.censored == plan.runs {
        return Err(Error::AllCensored {
            runs: plan.runs,
            t_max: plan.t_max.unwrap_or(u64::MAX),
        });
    }
    let estimates = plan
        .functionals
        .iter()
        .map(|f| reduce(*f, &tally.histogram, plan.seed))
        .collect();
    Ok(SimulationOutcome {
        estimates,
        runs: plan.runs,
        censored: tally.censored,
        histogram: tally.histogram,
    })
}

fn reduce(functional: McFunctional, histogram: &BTreeMap<u64, u64>, seed: u64) -> Estimate {
    let runs: u64 = histogram.values().sum();
    let (mean, variance) = match functional {
        McFunctional::HittingTime => {
            // Exact integer moments.
            let (s1, s2) = histogram.iter().fold((0u128, 0u128), |(s1, s2), (&t, &c)| {
                let (t, c) = (t as u128, c as u128);
                (s1 + c * t, s2 + c * t * t)
            });
            let r = runs as u128;
            let mean = s1 as f64 / runs as f64;
            let variance = if runs < 2 {
                0.0
            } else {
                (r * s2 - s1 * s1) as f64 / (r * (r - 1)) as f64
            };
            (mean, variance)
        }
        McFunctional::Exponential { base } => {
            // Moments of a^T scaled by a^(-t_max) to stay in range.
            let ln_a = base.ln();
            let logs: Vec<(f64, f64)> = histogram.iter().map(|(&t, &c)| (t as f64 * ln_a, c as f64)).collect();
            let shift = logs.iter().map(|(l, _)| *l).fold(f64::NEG_INFINITY, f64::max);
            let (m1, m2) = logs.iter().fold((0.0, 0.0), |(m1, m2), &(l, c)| {
                let x = (l - shift).exp();
                (m1 + c * x, m2 + c * x * x)
            });
            let r = runs as f64;
            let mean_scaled = m1 / r;
            let mean = mean_scaled * shift.exp();
            let variance = if runs < 2 {
                0.0
            } else {
                let v = (m2 - r * mean_scaled * mean_scaled) / (r - 1.0);
                v.max(0.0) * (2.0 * shift).exp()
            };
            (mean, variance)
        }
    };
    Estimate {
        functional,
        mean,
        variance,
        std_error: (variance / runs as f64).sqrt(),
        runs,
        seed,
    }
}
