//! Configurations of the ring and the one-step dynamics.
//!
//! Node indices are 1-based everywhere in the public API: the original ring
//! has nodes `1..=N` and the symmetrized ring has nodes `1..=2N`. Bit-level
//! representations are 0-based, so node `k` lives in bit `k - 1`.
//!
//! Clockwise means index `+1 (mod N)`. A [`MoveMask`] carries one coin per
//! token, ordered by ascending token position; bit `i` set means the `i`-th
//! token moves.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest ring handled by the `u64` bit representation.
pub const MAX_BIT_NODES: usize = 64;

/// Token occupancy of the original `N`-node ring.
///
/// Always holds an odd number of distinct tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawRingConfig")]
pub struct RingConfig {
    n: usize,
    tokens: Vec<usize>,
}

#[derive(Deserialize)]
struct RawRingConfig {
    n: usize,
    tokens: Vec<usize>,
}

impl TryFrom<RawRingConfig> for RingConfig {
    type Error = Error;

    fn try_from(raw: RawRingConfig) -> Result<Self> {
        RingConfig::new(raw.n, raw.tokens)
    }
}

impl RingConfig {
    /// Builds a configuration from 1-based node indices in any order.
    pub fn new(n: usize, tokens: impl IntoIterator<Item = usize>) -> Result<Self> {
        if n == 0 {
            return Err(domain("ring must have at least one node"));
        }
        let mut tokens: Vec<usize> = tokens.into_iter().collect();
        tokens.sort_unstable();
        if let Some(&bad) = tokens.iter().find(|&&t| t == 0 || t > n) {
            return Err(domain(format!("node {bad} is outside 1..={n}")));
        }
        if tokens.windows(2).any(|w| w[0] == w[1]) {
            return Err(domain("token positions must be distinct"));
        }
        if tokens.len().is_multiple_of(2) {
            return Err(domain(format!(
                "token count must be odd, got {}",
                tokens.len()
            )));
        }
        Ok(Self { n, tokens })
    }

    /// The three-token configuration with gaps as equal as integrality allows,
    /// starting at node 1.
    pub fn equidistant(n: usize) -> Result<Self> {
        Ok(GapTriple::equidistant(n)?.to_config())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Occupied nodes in ascending order.
    pub fn tokens(&self) -> &[usize] {
        &self.tokens
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    /// Arc lengths between consecutive tokens, starting from the lowest-indexed one.
    pub fn gaps(&self) -> Result<GapTriple> {
        match self.tokens[..] {
            [x, y, z] => GapTriple::new(y - x, z - y, self.n - z + x),
            _ => Err(domain(format!(
                "gaps need exactly 3 tokens, got {}",
                self.tokens.len()
            ))),
        }
    }

    /// Rotates every token `k` nodes clockwise.
    pub fn rotate(&self, k: usize) -> Self {
        let tokens = self.tokens.iter().map(|&t| (t - 1 + k) % self.n + 1);
        Self::new(self.n, tokens).expect("rotation preserves validity")
    }

    /// One synchronous step: masked tokens advance clockwise, others stay, and
    /// any node reached by two tokens loses both.
    pub fn step(&self, mask: &MoveMask) -> Result<Self> {
        mask.check_len(self.tokens.len())?;
        let targets = self.tokens.iter().enumerate().map(|(i, &t)| {
            if mask.moves(i) {
                t % self.n + 1
            } else {
                t
            }
        });
        Ok(Self {
            n: self.n,
            tokens: annihilate(targets),
        })
    }

    /// Maps node `k` to node `2k` of the `2N`-node symmetrized ring.
    pub fn to_doubled(&self) -> DoubledConfig {
        DoubledConfig {
            doubled_nodes: 2 * self.n,
            positions: self.tokens.iter().map(|&t| 2 * t).collect(),
        }
    }

    /// Occupancy word with node `k` in bit `k - 1`.
    pub fn to_bits(&self) -> Result<u64> {
        check_bit_capacity(self.n)?;
        Ok(self.tokens.iter().fold(0, |acc, &t| acc | 1 << (t - 1)))
    }

    pub fn from_bits(n: usize, bits: u64) -> Result<Self> {
        check_bit_capacity(n)?;
        if n < MAX_BIT_NODES && bits >> n != 0 {
            return Err(domain(format!("occupancy {bits:#b} has bits beyond node {n}")));
        }
        Self::new(n, bit_positions(bits).map(|b| b + 1))
    }
}

impl fmt::Display for RingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} {:?}", self.n, self.tokens)
    }
}

/// Token positions on the symmetrized `2N`-node ring.
///
/// All positions share one parity; at every step each token moves `+1` or
/// `-1` so the parity flips.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawDoubledConfig")]
pub struct DoubledConfig {
    doubled_nodes: usize,
    positions: Vec<usize>,
}

#[derive(Deserialize)]
struct RawDoubledConfig {
    doubled_nodes: usize,
    positions: Vec<usize>,
}

impl TryFrom<RawDoubledConfig> for DoubledConfig {
    type Error = Error;

    fn try_from(raw: RawDoubledConfig) -> Result<Self> {
        DoubledConfig::new(raw.doubled_nodes, raw.positions)
    }
}

impl DoubledConfig {
    /// `doubled_nodes` is the size `2N` of the symmetrized ring.
    pub fn new(doubled_nodes: usize, positions: impl IntoIterator<Item = usize>) -> Result<Self> {
        if doubled_nodes == 0 || !doubled_nodes.is_multiple_of(2) {
            return Err(domain(format!(
                "symmetrized ring size must be a positive even number, got {doubled_nodes}"
            )));
        }
        let mut positions: Vec<usize> = positions.into_iter().collect();
        positions.sort_unstable();
        if let Some(&bad) = positions.iter().find(|&&p| p == 0 || p > doubled_nodes) {
            return Err(domain(format!("position {bad} is outside 1..={doubled_nodes}")));
        }
        if positions.windows(2).any(|w| w[0] == w[1]) {
            return Err(domain("positions must be distinct"));
        }
        if positions.len().is_multiple_of(2) {
            return Err(domain(format!(
                "token count must be odd, got {}",
                positions.len()
            )));
        }
        if positions.iter().any(|p| p % 2 != positions[0] % 2) {
            return Err(domain("positions must share one parity"));
        }
        Ok(Self {
            doubled_nodes,
            positions,
        })
    }

    /// Every valid configuration on a `2N`-node ring, both parities.
    pub fn all(doubled_nodes: usize) -> Result<Vec<Self>> {
        let n = doubled_nodes / 2;
        if n > 24 {
            return Err(Error::Capacity {
                what: "symmetrized ring size for exhaustive enumeration",
                requested: doubled_nodes as u128,
                limit: 48,
            });
        }
        let mut out = Vec::new();
        for parity in [1, 2] {
            for subset in 1u64..1 << n {
                if subset.count_ones() % 2 == 1 {
                    let positions = bit_positions(subset).map(|b| 2 * b + parity);
                    out.push(Self::new(doubled_nodes, positions)?);
                }
            }
        }
        Ok(out)
    }

    pub fn doubled_nodes(&self) -> usize {
        self.doubled_nodes
    }

    /// Size `N` of the original ring.
    pub fn n(&self) -> usize {
        self.doubled_nodes / 2
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn token_count(&self) -> usize {
        self.positions.len()
    }

    /// `0` for even positions, `1` for odd ones.
    pub fn parity(&self) -> usize {
        self.positions[0] % 2
    }

    pub fn rotate(&self, k: usize) -> Self {
        let m = self.doubled_nodes;
        let positions = self.positions.iter().map(|&p| (p - 1 + k) % m + 1);
        Self::new(m, positions).expect("rotation preserves validity")
    }

    /// One symmetrized step: masked tokens move `+1`, the others `-1`;
    /// tokens landing on one node annihilate pairwise.
    pub fn step(&self, mask: &MoveMask) -> Result<Self> {
        mask.check_len(self.positions.len())?;
        let m = self.doubled_nodes;
        let targets = self.positions.iter().enumerate().map(|(i, &p)| {
            if mask.moves(i) {
                p % m + 1
            } else {
                (p + m - 2) % m + 1
            }
        });
        Ok(Self {
            doubled_nodes: m,
            positions: annihilate(targets),
        })
    }

    /// Inverse of [`RingConfig::to_doubled`], defined on even-parity configurations.
    pub fn to_ring(&self) -> Result<RingConfig> {
        if self.parity() != 0 {
            return Err(domain(
                "odd-parity positions correspond to half-integer original nodes",
            ));
        }
        RingConfig::new(self.n(), self.positions.iter().map(|p| p / 2))
    }

    pub(crate) fn from_bits_unchecked(doubled_nodes: usize, bits: u64) -> Self {
        Self {
            doubled_nodes,
            positions: bit_positions(bits).map(|b| b + 1).collect(),
        }
    }
}

impl fmt::Display for DoubledConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2N={} {:?}", self.doubled_nodes, self.positions)
    }
}

/// Inter-token distances `(a, b, c)` of a three-token state, `a + b + c = N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[usize; 3]", into = "[usize; 3]")]
pub struct GapTriple {
    a: usize,
    b: usize,
    c: usize,
}

impl TryFrom<[usize; 3]> for GapTriple {
    type Error = Error;

    fn try_from([a, b, c]: [usize; 3]) -> Result<Self> {
        Self::new(a, b, c)
    }
}

impl From<GapTriple> for [usize; 3] {
    fn from(g: GapTriple) -> Self {
        [g.a, g.b, g.c]
    }
}

impl GapTriple {
    pub fn new(a: usize, b: usize, c: usize) -> Result<Self> {
        if a == 0 || b == 0 || c == 0 {
            return Err(domain(format!("gaps must be positive, got ({a}, {b}, {c})")));
        }
        Ok(Self { a, b, c })
    }

    /// Gaps equal to `⌊N/3⌋` or `⌈N/3⌉`, summing to `N`.
    pub fn equidistant(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(domain(format!("equidistant configuration needs N >= 3, got {n}")));
        }
        let q = n / 3;
        match n % 3 {
            0 => Self::new(q, q, q),
            1 => Self::new(q, q, q + 1),
            _ => Self::new(q + 1, q + 1, q),
        }
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn n(&self) -> usize {
        self.a + self.b + self.c
    }

    /// The gaps as a sorted multiset.
    pub fn sorted(&self) -> [usize; 3] {
        let mut g = [self.a, self.b, self.c];
        g.sort_unstable();
        g
    }

    /// Tokens at `1`, `1 + a`, `1 + a + b`.
    pub fn to_config(&self) -> RingConfig {
        RingConfig::new(self.n(), [1, 1 + self.a, 1 + self.a + self.b])
            .expect("positive gaps give a valid configuration")
    }
}

impl fmt::Display for GapTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

/// Joint coin outcome: one bit per current token, in ascending position order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MoveMask {
    bits: u64,
    len: u32,
}

impl MoveMask {
    pub fn new(bits: u64, len: usize) -> Result<Self> {
        if len > 64 {
            return Err(Error::Capacity {
                what: "mask length",
                requested: len as u128,
                limit: 64,
            });
        }
        if len < 64 && bits >> len != 0 {
            return Err(domain(format!("mask {bits:#b} has bits beyond length {len}")));
        }
        Ok(Self {
            bits,
            len: len as u32,
        })
    }

    pub fn from_moves(moves: &[bool]) -> Result<Self> {
        let bits = moves
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &m)| acc | (u64::from(m) << (i % 64)));
        Self::new(bits, moves.len())
    }

    /// Every token stays (moves `-1` in the symmetrized view).
    pub fn stay(len: usize) -> Self {
        Self::new(0, len).expect("length checked by caller")
    }

    /// Every token advances.
    pub fn advance(len: usize) -> Self {
        let bits = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        Self::new(bits, len).expect("length checked by caller")
    }

    /// All `2^len` masks in increasing bit order.
    pub fn all(len: usize) -> impl Iterator<Item = MoveMask> {
        assert!(len < 64, "cannot enumerate 2^{len} masks");
        (0..1u64 << len).map(move |bits| MoveMask {
            bits,
            len: len as u32,
        })
    }

    /// Reads the coins of the occupied bits of `occupancy`, lowest bit first.
    pub fn from_coins(occupancy: u64, coins: u64) -> Self {
        let bits = bit_positions(occupancy)
            .enumerate()
            .fold(0u64, |acc, (i, b)| acc | (((coins >> b) & 1) << i));
        Self {
            bits,
            len: occupancy.count_ones(),
        }
    }

    /// Scatters the mask bits onto the occupied bits of `occupancy`.
    pub fn to_coins(&self, occupancy: u64) -> u64 {
        bit_positions(occupancy)
            .enumerate()
            .fold(0u64, |acc, (i, b)| acc | (((self.bits >> i) & 1) << b))
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn moves(&self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    fn check_len(&self, tokens: usize) -> Result<()> {
        if self.len() != tokens {
            return Err(domain(format!(
                "mask has {} bits but configuration has {tokens} tokens",
                self.len
            )));
        }
        Ok(())
    }
}

/// Bit-parallel step on an `n`-node ring: bit `i` is node `i + 1`, a set coin
/// moves the token in that bit one node clockwise.
///
/// Returns `(occupancy & !coins) ^ rotl(occupancy & coins)`. At most one
/// stayer and one mover can reach the same node, so XOR removes collisions.
/// `occupancy` should have odd population count and no bits at or above `n`.
#[inline]
pub fn step_bitparallel(occupancy: u64, coins: u64, n: u32) -> u64 {
    debug_assert!((1..=64).contains(&n));
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let movers = occupancy & coins & full;
    let stayers = occupancy & !coins & full;
    let rotated = ((movers << 1) | (movers >> (n - 1))) & full;
    stayers ^ rotated
}

fn check_bit_capacity(n: usize) -> Result<()> {
    if n > MAX_BIT_NODES {
        return Err(Error::Capacity {
            what: "ring size for bit representation",
            requested: n as u128,
            limit: MAX_BIT_NODES as u128,
        });
    }
    Ok(())
}

/// Keeps targets reached an odd number of times, sorted.
fn annihilate(targets: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for t in targets {
        *counts.entry(t).or_default() += 1;
    }
    counts
        .into_iter()
        .filter(|&(_, c)| c % 2 == 1)
        .map(|(t, _)| t)
        .collect()
}

/// Indices of set bits, ascending.
pub(crate) fn bit_positions(mut bits: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if bits == 0 {
            None
        } else {
            let b = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(b)
        }
    })
}
