//! The potentials `Φ` and `Ψ` and the one-step recursion of `Ψ`.
//!
//! `Φ` is the normalised remaining time on three-token states,
//! `(N³ - 27abc) / N³`. `Ψ` lives on the symmetrized ring: with positions
//! `x(1) < … < x(K)` in `1..=2N`,
//!
//! ```text
//! Ψ(x) = | Σ_j exp(iπ·x(j) / 2N) · (-1)^j |²
//! ```
//!
//! and under one symmetrized step it satisfies
//! `E[Ψ(X')] = (1 - ε)·Ψ(X) + ε·K` with `ε = sin²(π / 2N)`.
//! [`one_step_expected_psi`] computes the left side by enumerating all `2^K`
//! coin outcomes, independently of the closed form.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{domain, Error, Result};
use crate::ring::{DoubledConfig, GapTriple, MoveMask};

/// Largest token count the exhaustive one-step oracle will enumerate.
pub const MAX_ORACLE_TOKENS: usize = 24;

/// The contraction rate `ε = sin²(π / 2N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epsilon {
    n: usize,
    value: f64,
}

impl Epsilon {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain("epsilon needs N >= 1"));
        }
        let s = (PI / (2.0 * n as f64)).sin();
        Ok(Self { n, value: s * s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// The base `1 / (1 - ε)` of the exponential functional.
    pub fn growth_base(&self) -> f64 {
        1.0 / (1.0 - self.value)
    }

    /// `0.9 · π² / (4N²)`, a lower bound on `ε` for `N ≥ 3`.
    pub fn quadratic_lower_bound(&self) -> f64 {
        0.9 * PI * PI / (4.0 * (self.n * self.n) as f64)
    }
}

/// `Φ = (N³ - 27abc) / N³` in exact arithmetic.
pub fn phi_exact(gaps: &GapTriple) -> BigRational {
    let n = BigInt::from(gaps.n());
    let n3 = &n * &n * &n;
    let abc = BigInt::from(gaps.a()) * BigInt::from(gaps.b()) * BigInt::from(gaps.c());
    BigRational::new(&n3 - abc * 27, n3)
}

/// `Φ = 1 - 27abc / N³`.
pub fn phi(gaps: &GapTriple) -> f64 {
    let n = gaps.n() as f64;
    let abc = (gaps.a() * gaps.b() * gaps.c()) as f64;
    1.0 - 27.0 * abc / (n * n * n)
}

/// `Ψ` of a symmetrized configuration.
pub fn psi(config: &DoubledConfig) -> f64 {
    alternating_norm_sqr(config.doubled_nodes(), config.positions().iter().copied())
}

/// `Ψ` of an arbitrary multiset of positions on a `doubled_nodes` ring.
///
/// Positions are sorted before the alternating signs are assigned, so a pair
/// of equal positions contributes two cancelling terms. This is the form used
/// to check invariance under same-node pair insertion.
pub fn psi_of_positions(doubled_nodes: usize, positions: &[usize]) -> f64 {
    let mut sorted = positions.to_vec();
    sorted.sort_unstable();
    alternating_norm_sqr(doubled_nodes, sorted.into_iter())
}

fn alternating_norm_sqr(doubled_nodes: usize, positions: impl Iterator<Item = usize>) -> f64 {
    let scale = PI / doubled_nodes as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (j, x) in positions.enumerate() {
        // j is 0-based here, so the first token carries sign -1.
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        let (s, c) = (scale * x as f64).sin_cos();
        re += sign * c;
        im += sign * s;
    }
    re * re + im * im
}

/// Average of `Ψ` after one symmetrized step, over all `2^K` masks.
pub fn one_step_expected_psi(config: &DoubledConfig) -> Result<f64> {
    let k = config.token_count();
    if k > MAX_ORACLE_TOKENS {
        return Err(Error::Capacity {
            what: "tokens for exhaustive mask enumeration",
            requested: k as u128,
            limit: MAX_ORACLE_TOKENS as u128,
        });
    }
    let mut total = 0.0;
    for mask in MoveMask::all(k) {
        total += psi(&config.step(&mask)?);
    }
    Ok(total / (1u64 << k) as f64)
}

/// `|E[Ψ(X')] - ((1 - ε)·Ψ(X) + ε·K)|` with the expectation from the oracle.
pub fn recursion_residual(config: &DoubledConfig) -> Result<f64> {
    let eps = Epsilon::new(config.n())?.value();
    let predicted = (1.0 - eps) * psi(config) + eps * config.token_count() as f64;
    Ok((one_step_expected_psi(config)? - predicted).abs())
}
