//! Exact and stochastic analysis of Herman's self-stabilizing token ring.
//!
//! The crate is organised around the objects of the analysis:
//!
//! * [`ring`]: configurations and the one-step dynamics, both on the original
//!   `N`-node ring and on the symmetrized `2N`-node ring, plus a bit-parallel
//!   stepping kernel.
//! * [`potentials`]: the closed-form potential `Φ` on three-token states, the
//!   trigonometric potential `Ψ`, and a brute-force oracle for the one-step
//!   expectation of `Ψ`.
//! * [`exact`]: level-by-level linear solves for `E(T)`, `E(a^T)`, the
//!   three-token hitting time `τ`, and forward iteration of `P(T ≤ t)`.
//! * [`lemma`]: grid and discrete scans certifying `Φ ≥ c·Ψ` numerically.
//! * [`montecarlo`]: reproducible simulation on the bit-parallel kernel.
//!
//! ```
//! use herman::ring::{GapTriple, RingConfig};
//! use herman::exact::{Arithmetic, LevelSolver};
//!
//! let config = RingConfig::new(9, [1, 4, 7]).unwrap();
//! assert_eq!(config.gaps().unwrap(), GapTriple::new(3, 3, 3).unwrap());
//!
//! let solved = LevelSolver::new(9)
//!     .arithmetic(Arithmetic::Float)
//!     .max_tokens(3)
//!     .expected_hitting_time()
//!     .unwrap();
//! assert!((solved.value_of(&config).unwrap() - 12.0).abs() < 1e-9);
//! ```

pub mod error;
pub mod exact;
pub mod lemma;
pub mod montecarlo;
pub mod potentials;
pub mod ring;

pub use error::{Error, Result};

// Book chapters are compiled as doc-tests so the snippets stay in sync with
// the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/potentials.md")]
    mod potentials {}
    #[doc = include_str!("../../../book/src/exact.md")]
    mod exact {}
    #[doc = include_str!("../../../book/src/inequality.md")]
    mod inequality {}
    #[doc = include_str!("../../../book/src/montecarlo.md")]
    mod montecarlo {}
}
