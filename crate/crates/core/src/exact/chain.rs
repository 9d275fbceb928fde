//! Transition kernels on bit-encoded states.
//!
//! A state is an occupancy word. Both kernels draw one fair coin per token,
//! so a state with `k` tokens has `2^k` equally likely outcomes; successors
//! are reported as `(state, number of masks reaching it)`.

use crate::ring::{bit_positions, step_bitparallel};

pub(crate) trait Kernel: Sync {
    /// Largest token count present in the state space.
    fn max_tokens(&self) -> u32;
    /// All states with `k` tokens, in a fixed order.
    fn level(&self, k: u32) -> Vec<u64>;
    /// Successor counts; the counts sum to `2^popcount(state)`.
    fn successors(&self, state: u64) -> Vec<(u64, u64)>;
}

/// The original ring: tokens stay or advance clockwise.
pub(crate) struct OriginalKernel {
    pub n: u32,
}

impl Kernel for OriginalKernel {
    fn max_tokens(&self) -> u32 {
        if self.n % 2 == 1 {
            self.n
        } else {
            self.n - 1
        }
    }

    fn level(&self, k: u32) -> Vec<u64> {
        combinations(self.n, k).collect()
    }

    fn successors(&self, state: u64) -> Vec<(u64, u64)> {
        let k = state.count_ones();
        tally((0..1u64 << k).map(|mask| {
            let coins = deposit(mask, state);
            step_bitparallel(state, coins, self.n)
        }))
    }
}

/// The symmetrized `2N` ring: tokens move `+1` or `-1`.
pub(crate) struct SymmetrizedKernel {
    pub n: u32,
}

impl SymmetrizedKernel {
    fn nodes(&self) -> u32 {
        2 * self.n
    }
}

impl Kernel for SymmetrizedKernel {
    fn max_tokens(&self) -> u32 {
        OriginalKernel { n: self.n }.max_tokens()
    }

    fn level(&self, k: u32) -> Vec<u64> {
        // Bit b holds position b + 1; parity class `p` uses bits p, p + 2, ...
        let spread = |subset: u64, offset: u32| {
            bit_positions(subset).fold(0u64, |acc, i| acc | 1 << (2 * i as u32 + offset))
        };
        let mut out: Vec<u64> = combinations(self.n, k)
            .flat_map(|s| [spread(s, 0), spread(s, 1)])
            .collect();
        out.sort_unstable();
        out
    }

    fn successors(&self, state: u64) -> Vec<(u64, u64)> {
        let m = self.nodes();
        let full = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        let k = state.count_ones();
        tally((0..1u64 << k).map(|mask| {
            let coins = deposit(mask, state);
            let up = state & coins;
            let down = state & !coins;
            let up = ((up << 1) | (up >> (m - 1))) & full;
            let down = ((down >> 1) | (down << (m - 1))) & full;
            // Same-parity tokens cannot cross, so only an up-mover and a
            // down-mover can share a target.
            up ^ down
        }))
    }
}

/// Places the low bits of `mask` onto the set bits of `support`, in order.
pub(crate) fn deposit(mask: u64, support: u64) -> u64 {
    bit_positions(support)
        .enumerate()
        .fold(0u64, |acc, (i, b)| acc | (((mask >> i) & 1) << b))
}

fn tally(states: impl Iterator<Item = u64>) -> Vec<(u64, u64)> {
    let mut all: Vec<u64> = states.collect();
    all.sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::new();
    for s in all {
        match out.last_mut() {
            Some((last, count)) if *last == s => *count += 1,
            _ => out.push((s, 1)),
        }
    }
    out
}

/// All `k`-subsets of `0..n` as bit words, ascending.
pub(crate) fn combinations(n: u32, k: u32) -> impl Iterator<Item = u64> {
    let limit = if n == 64 { None } else { Some(1u64 << n) };
    let mut next = if k == 0 || k > n {
        None
    } else if k == 64 {
        Some(u64::MAX)
    } else {
        Some((1u64 << k) - 1)
    };
    std::iter::from_fn(move || {
        let cur = next?;
        // Gosper's hack.
        let c = cur & cur.wrapping_neg();
        let r = cur.checked_add(c);
        next = r.and_then(|r| {
            let succ = (((r ^ cur) >> 2) / c) | r;
            match limit {
                Some(l) if succ >= l => None,
                _ => Some(succ),
            }
        });
        Some(cur)
    })
}

pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}
