//! Exact hitting-time functionals over the whole configuration space.
//!
//! The token count never increases, so the states split into levels
//! `k = 1, 3, 5, …`. A functional of the form
//!
//! ```text
//! v(x) = c + w · Σ_y P(x → y) · v(y)
//! ```
//!
//! is solved level by level in increasing `k`: within a level the unknowns
//! satisfy `(I - w·P_kk) v_k = c + w·P_k,lower v_lower`, a small dense system
//! whose right-hand side only involves levels already solved. Every level is
//! solved directly (no iteration) in either `f64` or exact rationals.
//!
//! | functional       | `c` | `w` | boundary                 |
//! |------------------|-----|-----|--------------------------|
//! | `E(T)`           | 1   | 1   | `0` on one-token states  |
//! | `E(a^T)`         | 0   | `a` | `1` on one-token states  |
//! | `E(τ)`           | 1   | 1   | `0` on `K ≤ 3` states    |
//! | `E(Ψ(X_τ))`      | 0   | 1   | `Ψ` on `K ≤ 3` states    |

mod chain;
mod linalg;

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::potentials::{psi, Epsilon};
use crate::ring::{DoubledConfig, RingConfig};

use chain::{binomial, combinations, Kernel, OriginalKernel, SymmetrizedKernel};
use linalg::{solve_dense, Scalar};

/// Largest level (number of states with one token count) solved in `f64`.
pub const MAX_FLOAT_LEVEL: u128 = 4_000;
/// Largest level solved in exact rationals.
pub const MAX_EXACT_LEVEL: u128 = 1_000;
/// Largest ring handled by the exact engine.
pub const MAX_RING: usize = 30;
/// Largest number of configurations [`enumerate_configs`] returns.
pub const MAX_ENUMERATION: u128 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    Exact,
    Float,
}

/// Which quantity a [`SolveResult`] holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Functional {
    /// `E(T)`, the expected time to reach one token.
    HittingTime,
    /// `E(a^T)`.
    Exponential { base: f64 },
    /// `E(τ)`, the expected time to reach at most three tokens.
    Tau,
    /// `E(Ψ(X_τ))`.
    PsiAtTau,
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::HittingTime => write!(f, "E(T)"),
            Functional::Exponential { base } => write!(f, "E({base}^T)"),
            Functional::Tau => write!(f, "E(tau)"),
            Functional::PsiAtTau => write!(f, "E(Psi(X_tau))"),
        }
    }
}

/// Base of the exponential functional `E(a^T)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Base {
    Exact(BigRational),
    Float(f64),
}

impl Base {
    /// `1 / (1 - ε)` with `ε = sin²(π / 2N)`.
    pub fn growth(n: usize) -> Result<Self> {
        Ok(Base::Float(Epsilon::new(n)?.growth_base()))
    }

    /// The exact binary value of a finite float.
    pub fn exact_from_f64(x: f64) -> Result<Self> {
        BigRational::from_float(x)
            .map(Base::Exact)
            .ok_or_else(|| domain(format!("base {x} is not finite")))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Base::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Base::Float(x) => *x,
        }
    }
}

/// Per-configuration values of one functional at fixed `N`.
#[derive(Debug, Clone)]
pub struct SolveResult {
    n: usize,
    functional: Functional,
    arithmetic: Arithmetic,
    configs: Vec<RingConfig>,
    values: Vec<f64>,
    exact: Option<Vec<BigRational>>,
    index: HashMap<u64, usize>,
}

impl SolveResult {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn functional(&self) -> &Functional {
        &self.functional
    }

    pub fn arithmetic(&self) -> Arithmetic {
        self.arithmetic
    }

    /// Configurations ordered by token count, then by occupancy word.
    pub fn configs(&self) -> &[RingConfig] {
        &self.configs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Exact values, present when solved in [`Arithmetic::Exact`].
    pub fn exact_values(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RingConfig, f64)> {
        self.configs.iter().zip(self.values.iter().copied())
    }

    pub fn value_of(&self, config: &RingConfig) -> Option<f64> {
        self.position(config).map(|i| self.values[i])
    }

    pub fn exact_value_of(&self, config: &RingConfig) -> Option<&BigRational> {
        let i = self.position(config)?;
        self.exact.as_ref().map(|v| &v[i])
    }

    fn position(&self, config: &RingConfig) -> Option<usize> {
        if config.n() != self.n {
            return None;
        }
        self.index.get(&config.to_bits().ok()?).copied()
    }
}

/// Configurations maximizing `E(T)` at one `N`.
#[derive(Debug, Clone)]
pub struct Argmax {
    pub n: usize,
    pub max_value: f64,
    /// Present when solved exactly.
    pub exact_max: Option<BigRational>,
    pub maximizers: Vec<RingConfig>,
}

impl Argmax {
    /// `4N²/27`.
    pub fn bound(&self) -> f64 {
        4.0 * (self.n * self.n) as f64 / 27.0
    }
}

/// `E(τ)` and `E(Ψ(X_τ))` for every configuration at one `N`, where `τ` is the
/// first time at most three tokens remain.
#[derive(Debug, Clone)]
pub struct TauSolution {
    pub n: usize,
    pub epsilon: f64,
    pub configs: Vec<RingConfig>,
    pub expected_tau: Vec<f64>,
    pub expected_psi_at_tau: Vec<f64>,
    /// `Ψ` of each starting configuration.
    pub initial_psi: Vec<f64>,
}

impl TauSolution {
    /// `E(Ψ(X_τ)) - 4ε·E(τ) - Ψ(X₀)`; nonnegative when the drift bound holds.
    pub fn slack(&self, i: usize) -> f64 {
        self.expected_psi_at_tau[i] - 4.0 * self.epsilon * self.expected_tau[i] - self.initial_psi[i]
    }

    pub fn get(&self, config: &RingConfig) -> Option<(f64, f64)> {
        let i = self.configs.iter().position(|c| c == config)?;
        Some((self.expected_tau[i], self.expected_psi_at_tau[i]))
    }
}

/// All configurations with `k` tokens on `n` nodes, ordered by occupancy word.
pub fn enumerate_configs(n: usize, k: usize) -> Result<Vec<RingConfig>> {
    if k.is_multiple_of(2) || k > n {
        return Err(domain(format!("need odd k <= N, got k = {k}, N = {n}")));
    }
    if n > 64 {
        return Err(Error::Capacity {
            what: "ring size",
            requested: n as u128,
            limit: 64,
        });
    }
    let count = binomial(n as u64, k as u64);
    if count > MAX_ENUMERATION {
        return Err(Error::Capacity {
            what: "configurations",
            requested: count,
            limit: MAX_ENUMERATION,
        });
    }
    combinations(n as u32, k as u32)
        .map(|bits| RingConfig::from_bits(n, bits))
        .collect()
}

/// Default horizon `⌈40·N²⌉` for distributions and simulation caps.
pub fn default_horizon(n: usize) -> u64 {
    40 * (n as u64) * (n as u64)
}

/// `P(T ≤ t)` for `t = 0..=t_max`, by forward iteration of the exact
/// distribution over configurations.
pub fn hitting_time_distribution(config: &RingConfig, t_max: u64) -> Result<Vec<f64>> {
    let n = config.n();
    check_ring(n)?;
    let kernel = OriginalKernel { n: n as u32 };
    let mut transitions: HashMap<u64, Vec<(u64, f64)>> = HashMap::new();
    let mut mass: HashMap<u64, f64> = HashMap::new();
    let start = config.to_bits()?;
    let mut absorbed = 0.0;
    if start.count_ones() == 1 {
        absorbed = 1.0;
    } else {
        mass.insert(start, 1.0);
    }
    let mut out = Vec::with_capacity(t_max as usize + 1);
    out.push(absorbed);
    for _ in 0..t_max {
        let mut next: HashMap<u64, f64> = HashMap::with_capacity(mass.len());
        for (&state, &p) in &mass {
            let succ = transitions.entry(state).or_insert_with(|| {
                let scale = 1.0 / (1u64 << state.count_ones()) as f64;
                kernel
                    .successors(state)
                    .into_iter()
                    .map(|(s, c)| (s, c as f64 * scale))
                    .collect()
            });
            for &(s, q) in succ.iter() {
                if s.count_ones() == 1 {
                    absorbed += p * q;
                } else {
                    *next.entry(s).or_default() += p * q;
                }
            }
        }
        mass = next;
        out.push(absorbed.min(1.0));
    }
    Ok(out)
}

/// Level-by-level solver for the functionals at one ring size.
#[derive(Debug, Clone)]
pub struct LevelSolver {
    n: usize,
    arithmetic: Arithmetic,
    max_tokens: Option<u32>,
}

impl LevelSolver {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            arithmetic: Arithmetic::Float,
            max_tokens: None,
        }
    }

    pub fn arithmetic(mut self, arithmetic: Arithmetic) -> Self {
        self.arithmetic = arithmetic;
        self
    }

    /// Solve only levels up to `k` tokens. Lower levels never depend on
    /// higher ones, so their values are unaffected.
    pub fn max_tokens(mut self, k: u32) -> Self {
        self.max_tokens = Some(k);
        self
    }

    fn top_level(&self, kernel: &dyn Kernel) -> u32 {
        let top = kernel.max_tokens();
        self.max_tokens.map_or(top, |k| k.min(top))
    }

    fn check(&self, kernel: &dyn Kernel, first: u32) -> Result<()> {
        check_ring(self.n)?;
        let limit = match self.arithmetic {
            Arithmetic::Exact => MAX_EXACT_LEVEL,
            Arithmetic::Float => MAX_FLOAT_LEVEL,
        };
        let mut k = first;
        while k <= self.top_level(kernel) {
            let size = binomial(self.n as u64, k as u64);
            if size > limit {
                return Err(Error::Capacity {
                    what: "level size",
                    requested: size,
                    limit,
                });
            }
            k += 2;
        }
        Ok(())
    }

    /// `E(T)` for every odd configuration.
    pub fn expected_hitting_time(&self) -> Result<SolveResult> {
        let kernel = OriginalKernel { n: self.n as u32 };
        self.check(&kernel, 3)?;
        match self.arithmetic {
            Arithmetic::Float => {
                let values = solve_levels::<f64>(&kernel, self.top_level(&kernel), 3, 1.0, 1.0, &|_| 0.0)
                    .map_err(|k| Error::Singular { n: self.n, tokens: k })?;
                Ok(self.collect(Functional::HittingTime, &kernel, values, &|_| 0.0))
            }
            Arithmetic::Exact => {
                let one = BigRational::from_integer(1.into());
                let zero = BigRational::from_integer(0.into());
                let values = solve_levels(&kernel, self.top_level(&kernel), 3, one.clone(), one, &|_| zero.clone())
                    .map_err(|k| Error::Singular { n: self.n, tokens: k })?;
                Ok(self.collect_exact(Functional::HittingTime, &kernel, values, &|_| zero.clone()))
            }
        }
    }

    /// `E(a^T)` for every odd configuration.
    ///
    /// Fails with [`Error::Divergence`] when a level system is singular or
    /// yields a negative or non-finite value, which happens once `a` exceeds
    /// the inverse spectral radius of some level.
    pub fn expected_exponential(&self, base: &Base) -> Result<SolveResult> {
        let kernel = OriginalKernel { n: self.n as u32 };
        self.check(&kernel, 3)?;
        let base_f = base.to_f64();
        if !(base_f.is_finite() && base_f > 0.0) {
            return Err(domain(format!("base must be positive and finite, got {base_f}")));
        }
        let functional = Functional::Exponential { base: base_f };
        let top = self.top_level(&kernel);
        let diverged = |tokens: u32, value: f64| Error::Divergence {
            n: self.n,
            base: base_f,
            tokens,
            value,
        };
        match (self.arithmetic, base) {
            (Arithmetic::Float, _) => {
                let values = solve_levels::<f64>(&kernel, top, 3, 0.0, base_f, &|_| 1.0)
                    .map_err(|k| diverged(k, f64::NAN))?;
                if let Some((&s, &v)) = values.iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
                    return Err(diverged(s.count_ones(), v));
                }
                Ok(self.collect(functional, &kernel, values, &|_| 1.0))
            }
            (Arithmetic::Exact, Base::Exact(a)) => {
                let one = BigRational::from_integer(1.into());
                let zero = BigRational::from_integer(0.into());
                let values = solve_levels(&kernel, top, 3, zero, a.clone(), &|_| one.clone())
                    .map_err(|k| diverged(k, f64::NAN))?;
                if let Some((&s, v)) = values.iter().find(|(_, v)| v.is_negative()) {
                    return Err(diverged(s.count_ones(), v.to_f64().unwrap_or(f64::NAN)));
                }
                Ok(self.collect_exact(functional, &kernel, values, &|_| one.clone()))
            }
            (Arithmetic::Exact, Base::Float(_)) => Err(domain(
                "exact arithmetic needs a rational base",
            )),
        }
    }

    /// `E(τ)` and `E(Ψ(X_τ))` with `τ` the first time at most three tokens remain.
    ///
    /// Always solved in `f64` since `Ψ` is irrational in general.
    pub fn tau_functionals(&self) -> Result<TauSolution> {
        let kernel = OriginalKernel { n: self.n as u32 };
        let solver = Self {
            arithmetic: Arithmetic::Float,
            ..self.clone()
        };
        solver.check(&kernel, 5)?;
        let n = self.n;
        let top = self.top_level(&kernel);
        let boundary_psi = |bits: u64| {
            let config = RingConfig::from_bits(n, bits).expect("kernel states are valid");
            psi(&config.to_doubled())
        };
        let tau = solve_levels::<f64>(&kernel, top, 5, 1.0, 1.0, &|_| 0.0)
            .map_err(|k| Error::Singular { n, tokens: k })?;
        let at_tau = solve_levels::<f64>(&kernel, top, 5, 0.0, 1.0, &boundary_psi)
            .map_err(|k| Error::Singular { n, tokens: k })?;

        let mut sol = TauSolution {
            n,
            epsilon: Epsilon::new(n)?.value(),
            configs: Vec::new(),
            expected_tau: Vec::new(),
            expected_psi_at_tau: Vec::new(),
            initial_psi: Vec::new(),
        };
        for k in (1..=top).step_by(2) {
            for bits in kernel.level(k) {
                let config = RingConfig::from_bits(n, bits)?;
                let psi0 = psi(&config.to_doubled());
                let (t, p) = if k <= 3 {
                    (0.0, psi0)
                } else {
                    (tau[&bits], at_tau[&bits])
                };
                sol.configs.push(config);
                sol.expected_tau.push(t);
                sol.expected_psi_at_tau.push(p);
                sol.initial_psi.push(psi0);
            }
        }
        Ok(sol)
    }

    /// Every configuration attaining the maximum of `E(T)`.
    ///
    /// Ties are exact in rational mode and within `1e-9` in float mode.
    pub fn argmax_expected_time(&self) -> Result<Argmax> {
        let solved = self.expected_hitting_time()?;
        let max_value = solved.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match solved.exact_values() {
            Some(exact) => {
                let best = exact.iter().max().cloned().expect("nonempty state space");
                let maximizers = solved
                    .configs()
                    .iter()
                    .zip(exact)
                    .filter(|(_, v)| **v == best)
                    .map(|(c, _)| c.clone())
                    .collect();
                Ok(Argmax {
                    n: self.n,
                    max_value: best.to_f64().unwrap_or(f64::NAN),
                    exact_max: Some(best),
                    maximizers,
                })
            }
            None => {
                let maximizers = solved
                    .iter()
                    .filter(|(_, v)| (max_value - v).abs() <= 1e-9)
                    .map(|(c, _)| c.clone())
                    .collect();
                Ok(Argmax {
                    n: self.n,
                    max_value,
                    exact_max: None,
                    maximizers,
                })
            }
        }
    }

    /// `E(T)` computed on the symmetrized `2N` ring, for every valid
    /// symmetrized configuration of both parities.
    pub fn symmetrized_expected_hitting_time(&self) -> Result<Vec<(DoubledConfig, f64)>> {
        if self.n > 32 {
            return Err(Error::Capacity {
                what: "ring size for the symmetrized kernel",
                requested: self.n as u128,
                limit: 32,
            });
        }
        let kernel = SymmetrizedKernel { n: self.n as u32 };
        let solver = Self {
            arithmetic: Arithmetic::Float,
            ..self.clone()
        };
        solver.check(&kernel, 3)?;
        // Each level is twice the original one.
        let top = self.top_level(&kernel);
        let mut k = 3;
        while k <= top {
            let size = 2 * binomial(self.n as u64, k as u64);
            if size > MAX_FLOAT_LEVEL {
                return Err(Error::Capacity {
                    what: "level size",
                    requested: size,
                    limit: MAX_FLOAT_LEVEL,
                });
            }
            k += 2;
        }
        let values = solve_levels::<f64>(&kernel, top, 3, 1.0, 1.0, &|_| 0.0)
            .map_err(|k| Error::Singular { n: self.n, tokens: k })?;
        let m = 2 * self.n;
        let mut out = Vec::new();
        for k in (1..=top).step_by(2) {
            for bits in kernel.level(k) {
                let v = if k == 1 { 0.0 } else { values[&bits] };
                out.push((DoubledConfig::from_bits_unchecked(m, bits), v));
            }
        }
        Ok(out)
    }

    fn collect(
        &self,
        functional: Functional,
        kernel: &dyn Kernel,
        values: HashMap<u64, f64>,
        boundary: &dyn Fn(u64) -> f64,
    ) -> SolveResult {
        let mut configs = Vec::new();
        let mut out = Vec::new();
        let mut index = HashMap::new();
        for k in (1..=self.top_level(kernel)).step_by(2) {
            for bits in kernel.level(k) {
                index.insert(bits, configs.len());
                configs.push(RingConfig::from_bits(self.n, bits).expect("kernel states are valid"));
                out.push(values.get(&bits).copied().unwrap_or_else(|| boundary(bits)));
            }
        }
        SolveResult {
            n: self.n,
            functional,
            arithmetic: Arithmetic::Float,
            configs,
            values: out,
            exact: None,
            index,
        }
    }

    fn collect_exact(
        &self,
        functional: Functional,
        kernel: &dyn Kernel,
        values: HashMap<u64, BigRational>,
        boundary: &dyn Fn(u64) -> BigRational,
    ) -> SolveResult {
        let mut configs = Vec::new();
        let mut exact = Vec::new();
        let mut index = HashMap::new();
        for k in (1..=self.top_level(kernel)).step_by(2) {
            for bits in kernel.level(k) {
                index.insert(bits, configs.len());
                configs.push(RingConfig::from_bits(self.n, bits).expect("kernel states are valid"));
                exact.push(values.get(&bits).cloned().unwrap_or_else(|| boundary(bits)));
            }
        }
        SolveResult {
            n: self.n,
            functional,
            arithmetic: Arithmetic::Exact,
            configs,
            values: exact.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
            exact: Some(exact),
            index,
        }
    }
}

fn check_ring(n: usize) -> Result<()> {
    if n == 0 {
        return Err(domain("ring must have at least one node"));
    }
    if n > MAX_RING {
        return Err(Error::Capacity {
            what: "ring size for the exact engine",
            requested: n as u128,
            limit: MAX_RING as u128,
        });
    }
    Ok(())
}

/// Solves `v = c + w·P·v` on levels `first, first + 2, …, top`, with
/// `boundary` supplying values on levels below `first`.
///
/// On failure returns the token count of the singular level.
fn solve_levels<F: Scalar>(
    kernel: &dyn Kernel,
    top: u32,
    first: u32,
    constant: F,
    weight: F,
    boundary: &dyn Fn(u64) -> F,
) -> std::result::Result<HashMap<u64, F>, u32> {
    let mut solved: HashMap<u64, F> = HashMap::new();
    let mut k = first;
    while k <= top {
        let states = kernel.level(k);
        let index: HashMap<u64, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let size = states.len();
        let mut a = vec![vec![F::zero(); size]; size];
        let mut b = vec![constant.clone(); size];
        for (i, &state) in states.iter().enumerate() {
            a[i][i] = F::one();
            for (next, count) in kernel.successors(state) {
                let p = weight.mul(&F::dyadic(count, k));
                match index.get(&next) {
                    Some(&j) => a[i][j].sub_mul_assign(&p, &F::one()),
                    None => {
                        let v = if next.count_ones() < first {
                            boundary(next)
                        } else {
                            solved[&next].clone()
                        };
                        b[i] = b[i].add(&p.mul(&v));
                    }
                }
            }
        }
        let x = solve_dense(a, b).ok_or(k)?;
        solved.extend(states.into_iter().zip(x));
        k += 2;
    }
    Ok(solved)
}

/// `4abc / N` as an exact rational.
pub fn closed_form_hitting_time(gaps: &crate::ring::GapTriple) -> BigRational {
    let abc = BigInt::from(gaps.a()) * BigInt::from(gaps.b()) * BigInt::from(gaps.c());
    BigRational::new(abc * 4, BigInt::from(gaps.n()))
}
