//! Numerical certification of `Φ ≥ c·Ψ` on three-token states.
//!
//! With `u = a/N - 1/3` and `v = b/N - 1/3` the ratio `Φ/Ψ` becomes
//!
//! ```text
//!           9/2·(u² + v² + (u+v)²) + 27·(u²v + uv²)
//! Q(u,v) = -------------------------------------------------------------------------
//!          3 - cos πu - cos πv - cos π(u+v) + √3·(sin πu·(1 - cos πv) + sin πv·(1 - cos πu))
//! ```
//!
//! on the triangle `u, v ∈ [-1/3, 2/3]`, `u + v ≤ 1/3`. Numerator and
//! denominator both vanish at the origin (the equidistant point). The
//! denominator is `Ψ` of the three-token state, which vanishes nowhere else:
//! at the corner `(-1/3, -1/3)` (two tokens on one node) both sides equal 1.
//! Scans still accept an exclusion radius around the corner.
//!
//! The scans here are numerical evidence: a dense lattice minimum, a
//! refinement check, and sampled finite-difference gradients. They are not an
//! interval-arithmetic proof.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::potentials::{phi_exact, psi};
use crate::ring::GapTriple;

use num_traits::ToPrimitive;

/// The constant `27 / (0.9·4π²) ≈ 0.7599`.
pub const LEMMA_CONSTANT: f64 = 27.0 / (0.9 * 4.0 * PI * PI);

/// Default exclusion radius around the origin and the corner.
pub const DEFAULT_DELTA: f64 = 0.03;

/// Points with `Ψ` below this are skipped by the ratio scan.
pub const PSI_FLOOR: f64 = 1e-14;

const DOMAIN_TOL: f64 = 1e-12;
/// Below this `|u| + |v|` the factored form is used.
const FACTORED_RADIUS: f64 = 1e-6;

const THIRD: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QValue {
    Finite(f64),
    /// The origin, where `Q` is `0/0`.
    Singular,
}

impl QValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            QValue::Finite(q) => Some(q),
            QValue::Singular => None,
        }
    }
}

/// A lattice point of the `Q` landscape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QPoint {
    pub u: f64,
    pub v: f64,
    /// `None` at the origin.
    pub q: Option<f64>,
}

pub fn in_domain(u: f64, v: f64) -> bool {
    let lo = -THIRD - DOMAIN_TOL;
    let hi = 2.0 * THIRD + DOMAIN_TOL;
    (lo..=hi).contains(&u) && (lo..=hi).contains(&v) && u + v <= THIRD + DOMAIN_TOL
}

/// `(1 - cos πx) / x²`, with limit `π²/2` at 0.
pub fn f_aux(x: f64) -> f64 {
    if x == 0.0 {
        return PI * PI / 2.0;
    }
    let s = (PI * x / 2.0).sin();
    2.0 * s * s / (x * x)
}

/// `sin(πx) / x`, with limit `π` at 0.
pub fn g_aux(x: f64) -> f64 {
    if x == 0.0 {
        return PI;
    }
    (PI * x).sin() / x
}

pub fn q_numerator(u: f64, v: f64) -> f64 {
    let w = u + v;
    4.5 * (u * u + v * v + w * w) + 27.0 * (u * u * v + u * v * v)
}

pub fn q_denominator(u: f64, v: f64) -> f64 {
    let (su, cu) = (PI * u).sin_cos();
    let (sv, cv) = (PI * v).sin_cos();
    3.0 - cu - cv - (PI * (u + v)).cos() + 3f64.sqrt() * (su * (1.0 - cv) + sv * (1.0 - cu))
}

/// Denominator rewritten with `f` and `g`; accurate near the origin.
fn q_denominator_factored(u: f64, v: f64) -> f64 {
    let w = u + v;
    f_aux(u) * u * u
        + f_aux(v) * v * v
        + f_aux(w) * w * w
        + 3f64.sqrt() * (g_aux(u) * f_aux(v) * u * v * v + g_aux(v) * f_aux(u) * u * u * v)
}

/// `Q(u, v)` on the triangle, or [`QValue::Singular`] at the origin.
pub fn q_value(u: f64, v: f64) -> Result<QValue> {
    if !(u.is_finite() && v.is_finite() && in_domain(u, v)) {
        return Err(domain(format!("({u}, {v}) is outside the Q domain")));
    }
    if u == 0.0 && v == 0.0 {
        return Ok(QValue::Singular);
    }
    let den = if u.abs() + v.abs() < FACTORED_RADIUS {
        q_denominator_factored(u, v)
    } else {
        q_denominator(u, v)
    };
    Ok(QValue::Finite(q_numerator(u, v) / den))
}

/// Result of a lattice scan of `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub step: f64,
    pub delta_origin: f64,
    pub delta_corner: f64,
    pub min: f64,
    pub argmin: (f64, f64),
    pub points: u64,
    pub excluded: u64,
    /// Largest forward-difference gradient norm between evaluated neighbours.
    pub max_gradient: f64,
    /// `None` when no two neighbouring points were evaluated.
    pub max_gradient_at: Option<(f64, f64)>,
}

#[derive(Clone, Copy)]
struct RowScan {
    min: f64,
    argmin: (usize, usize),
    points: u64,
    excluded: u64,
    grad: f64,
    grad_at: (usize, usize),
}

impl RowScan {
    fn empty() -> Self {
        RowScan {
            min: f64::INFINITY,
            argmin: (usize::MAX, usize::MAX),
            points: 0,
            excluded: 0,
            grad: 0.0,
            grad_at: (usize::MAX, usize::MAX),
        }
    }

    /// Smallest value wins; ties go to the lexicographically smaller index.
    fn merge(self, other: Self) -> Self {
        let (min, argmin) = match self.min.total_cmp(&other.min) {
            std::cmp::Ordering::Less => (self.min, self.argmin),
            std::cmp::Ordering::Greater => (other.min, other.argmin),
            std::cmp::Ordering::Equal => (self.min, self.argmin.min(other.argmin)),
        };
        let (grad, grad_at) = match self.grad.total_cmp(&other.grad) {
            std::cmp::Ordering::Greater => (self.grad, self.grad_at),
            std::cmp::Ordering::Less => (other.grad, other.grad_at),
            std::cmp::Ordering::Equal => (self.grad, self.grad_at.min(other.grad_at)),
        };
        RowScan {
            min,
            argmin,
            points: self.points + other.points,
            excluded: self.excluded + other.excluded,
            grad,
            grad_at,
        }
    }
}

/// Lattice `-1/3 + i·step` along each axis.
struct Lattice {
    step: f64,
    count: usize,
}

impl Lattice {
    fn new(step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0 && step <= 1.0) {
            return Err(domain(format!("grid step must be in (0, 1], got {step}")));
        }
        let exact = 1.0 / step;
        let count = if (exact - exact.round()).abs() < 1e-9 {
            exact.round() as usize
        } else {
            exact.floor() as usize
        };
        if count > 200_000 {
            return Err(domain(format!("grid step {step} is too fine")));
        }
        Ok(Self { step, count })
    }

    fn coord(&self, i: usize) -> f64 {
        -THIRD + i as f64 * self.step
    }

    /// Largest `j` with `(i, j)` inside the triangle.
    fn row_len(&self, i: usize) -> usize {
        let u = self.coord(i);
        (0..=self.count)
            .rev()
            .find(|&j| u + self.coord(j) <= THIRD + DOMAIN_TOL)
            .map_or(0, |j| j + 1)
    }
}

fn excluded(u: f64, v: f64, delta_origin: f64, delta_corner: f64) -> bool {
    u.hypot(v) < delta_origin || (u + THIRD).hypot(v + THIRD) < delta_corner
}

/// Minimum of `Q` over the lattice with spacing `step`, minus open balls of
/// radius `delta_origin` around the origin and `delta_corner` around the corner.
pub fn q_grid_min(step: f64, delta_origin: f64, delta_corner: f64) -> Result<ScanReport> {
    if delta_origin < 0.0 || delta_corner < 0.0 {
        return Err(domain("exclusion radii must be nonnegative"));
    }
    let lattice = Lattice::new(step)?;
    let eval = |i: usize, j: usize| -> Option<f64> {
        let (u, v) = (lattice.coord(i), lattice.coord(j));
        if excluded(u, v, delta_origin, delta_corner) {
            return None;
        }
        q_value(u, v).ok().and_then(QValue::finite)
    };

    let scan = (0..=lattice.count)
        .into_par_iter()
        .map(|i| {
            let len = lattice.row_len(i);
            let next_len = if i < lattice.count { lattice.row_len(i + 1) } else { 0 };
            let mut row = RowScan::empty();
            let mut prev: Option<f64> = None;
            for j in 0..len {
                let q = eval(i, j);
                let Some(q) = q else {
                    row.excluded += 1;
                    prev = None;
                    continue;
                };
                row.points += 1;
                if q < row.min {
                    row.min = q;
                    row.argmin = (i, j);
                }
                // Gradient from the neighbour below in v and the one ahead in u.
                if let Some(p) = prev {
                    let dv = (q - p) / lattice.step;
                    let du = if j < next_len {
                        eval(i + 1, j).map(|r| (r - q) / lattice.step)
                    } else {
                        None
                    };
                    if let Some(du) = du {
                        let g = du.hypot(dv);
                        if g > row.grad {
                            row.grad = g;
                            row.grad_at = (i, j);
                        }
                    }
                }
                prev = Some(q);
            }
            row
        })
        .reduce(RowScan::empty, RowScan::merge);

    if scan.points == 0 {
        return Err(domain("every lattice point was excluded"));
    }
    let at = |(i, j): (usize, usize)| (i != usize::MAX).then(|| (lattice.coord(i), lattice.coord(j)));
    Ok(ScanReport {
        step,
        delta_origin,
        delta_corner,
        min: scan.min,
        argmin: at(scan.argmin).expect("at least one point"),
        points: scan.points,
        excluded: scan.excluded,
        max_gradient: scan.grad,
        max_gradient_at: at(scan.grad_at),
    })
}

/// Every lattice point of the triangle with its `Q` value, row by row.
pub fn q_grid_samples(step: f64) -> Result<Vec<QPoint>> {
    let lattice = Lattice::new(step)?;
    let mut out = Vec::new();
    for i in 0..=lattice.count {
        for j in 0..lattice.row_len(i) {
            let (u, v) = (lattice.coord(i), lattice.coord(j));
            out.push(QPoint {
                u,
                v,
                q: q_value(u, v)?.finite(),
            });
        }
    }
    Ok(out)
}

/// Minimum of `Φ/Ψ` over three-token states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioScan {
    pub n_min: usize,
    pub n_max: usize,
    pub min_ratio: f64,
    pub argmin: GapTriple,
    pub checked: u64,
    /// Configurations with `Ψ < 1e-14` (the equidistant ones).
    pub skipped: u64,
}

/// Scans every gap triple `(a, b, c)` with `N = a + b + c` in `n_min..=n_max`.
///
/// `Φ` is evaluated exactly and rounded; `Ψ` comes from the doubled
/// configuration. Configurations are enumerated up to rotation, so every
/// three-token state is covered.
pub fn phi_psi_ratio_scan(n_min: usize, n_max: usize) -> Result<RatioScan> {
    if n_min < 3 || n_max < n_min {
        return Err(domain(format!("need 3 <= n_min <= n_max, got {n_min}..={n_max}")));
    }
    type Best = (f64, (usize, usize, usize), u64, u64);
    let merge = |x: Best, y: Best| -> Best {
        let (min, arg) = match x.0.total_cmp(&y.0) {
            std::cmp::Ordering::Less => (x.0, x.1),
            std::cmp::Ordering::Greater => (y.0, y.1),
            std::cmp::Ordering::Equal => (x.0, x.1.min(y.1)),
        };
        (min, arg, x.2 + y.2, x.3 + y.3)
    };
    let empty: Best = (f64::INFINITY, (usize::MAX, 0, 0), 0, 0);
    let best = (n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            let mut acc = empty;
            for a in 1..n - 1 {
                for b in 1..n - a {
                    let gaps = GapTriple::new(a, b, n - a - b).expect("positive gaps");
                    let psi_value = psi(&gaps.to_config().to_doubled());
                    if psi_value < PSI_FLOOR {
                        acc.3 += 1;
                        continue;
                    }
                    let phi_value = phi_exact(&gaps).to_f64().unwrap_or(f64::NAN);
                    acc = merge(acc, (phi_value / psi_value, (n, a, b), 1, 0));
                }
            }
            acc
        })
        .reduce(|| empty, merge);

    let (min_ratio, (n, a, b), checked, skipped) = best;
    if checked == 0 {
        return Err(domain("no configuration with positive potential in range"));
    }
    Ok(RatioScan {
        n_min,
        n_max,
        min_ratio,
        argmin: GapTriple::new(a, b, n - a - b)?,
        checked,
        skipped,
    })
}

/// Observed ranges of `f` and `g` on `[-1/3, 2/3] \ {0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgCheck {
    pub samples: usize,
    pub f_range: (f64, f64),
    pub g_range: (f64, f64),
    pub pass: bool,
}

/// The closed intervals `f ∈ [27/8, π²/2]` and `g ∈ [3√3/4, π]`.
pub fn fg_bounds() -> ((f64, f64), (f64, f64)) {
    ((27.0 / 8.0, PI * PI / 2.0), (3.0 * 3f64.sqrt() / 4.0, PI))
}

/// Samples `f` and `g` on an evenly spaced grid including both endpoints.
pub fn fg_range_check(samples: usize) -> Result<FgCheck> {
    if samples < 1000 {
        return Err(domain(format!("need at least 1000 samples, got {samples}")));
    }
    let ((f_lo, f_hi), (g_lo, g_hi)) = fg_bounds();
    let mut f_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut g_range = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..samples {
        let x = -THIRD + i as f64 / (samples - 1) as f64;
        if x.abs() < 1e-12 {
            continue;
        }
        let (f, g) = (f_aux(x), g_aux(x));
        f_range = (f_range.0.min(f), f_range.1.max(f));
        g_range = (g_range.0.min(g), g_range.1.max(g));
    }
    let tol = 1e-12;
    let pass = f_range.0 >= f_lo - tol
        && f_range.1 <= f_hi + tol
        && g_range.0 >= g_lo - tol
        && g_range.1 <= g_hi + tol;
    Ok(FgCheck {
        samples,
        f_range,
        g_range,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::phi;

    #[test]
    fn constant_value() {
        assert!((LEMMA_CONSTANT - 0.759_908_877).abs() < 1e-8);
    }

    #[test]
    fn special_points() {
        assert_eq!(q_value(0.0, 0.0).unwrap(), QValue::Singular);
        assert!(q_denominator(0.0, 0.0).abs() < 1e-14);
        // Corner: 3 - 1/2 - 1/2 + 1/2 + √3·2·(-√3/2)(1/2) = 1.
        assert!((q_numerator(-THIRD, -THIRD) - 1.0).abs() < 1e-14);
        assert!((q_denominator(-THIRD, -THIRD) - 1.0).abs() < 1e-14);
        let q = q_value(-THIRD, -THIRD).unwrap().finite().unwrap();
        assert!((q - 1.0).abs() < 1e-14);
    }

    #[test]
    fn symmetric() {
        for i in 0..=30 {
            for j in 0..=30 {
                let (u, v) = (-THIRD + i as f64 / 30.0, -THIRD + j as f64 / 30.0);
                if !in_domain(u, v) || (i == 10 && j == 10) {
                    continue;
                }
                let a = q_value(u, v).unwrap().finite().unwrap();
                let b = q_value(v, u).unwrap().finite().unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "({u}, {v})");
                assert!(a > 0.0);
            }
        }
    }

    #[test]
    fn rejects_points_outside_domain() {
        assert!(q_value(0.5, 0.5).is_err());
        assert!(q_value(-0.4, 0.0).is_err());
        assert!(q_value(0.0, 0.7).is_err());
        assert!(q_value(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn limit_along_diagonal() {
        let q = q_value(1e-4, 1e-4).unwrap().finite().unwrap();
        assert!((q - 9.0 / (PI * PI)).abs() < 1e-3, "{q}");
        // Inside the factored radius the value stays well behaved.
        let q = q_value(1e-9, -3e-10).unwrap().finite().unwrap();
        assert!((q - 9.0 / (PI * PI)).abs() < 1e-6, "{q}");
    }

    #[test]
    fn factored_denominator_agrees() {
        for &(u, v) in &[(0.1, 0.05), (-0.2, 0.3), (0.5, -0.3), (-0.1, -0.1)] {
            let direct = q_denominator(u, v);
            let factored = q_denominator_factored(u, v);
            assert!((direct - factored).abs() < 1e-13 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn discrete_matches_continuous() {
        for n in [5, 7, 10, 31, 64] {
            for a in 1..n - 1 {
                for b in 1..n - a {
                    let gaps = GapTriple::new(a, b, n - a - b).unwrap();
                    let p = psi(&gaps.to_config().to_doubled());
                    if p < PSI_FLOOR {
                        continue;
                    }
                    let u = a as f64 / n as f64 - THIRD;
                    let v = b as f64 / n as f64 - THIRD;
                    let q = q_value(u, v).unwrap().finite().unwrap();
                    assert!((phi(&gaps) / p - q).abs() < 1e-9, "{gaps}");
                }
            }
        }
    }

    #[test]
    fn grid_examples() {
        let coarse = q_grid_min(1.0 / 120.0, DEFAULT_DELTA, DEFAULT_DELTA).unwrap();
        assert!(coarse.min >= LEMMA_CONSTANT);
        assert!(coarse.points > 0 && coarse.excluded > 0);
        let (u, v) = coarse.argmin;
        assert!(in_domain(u, v));

        // Only the origin is dropped when nothing is excluded.
        let open = q_grid_min(1.0 / 120.0, 0.0, 0.0).unwrap();
        assert_eq!(open.excluded, 1);
        assert!(open.min >= LEMMA_CONSTANT);
    }

    #[test]
    fn grid_rejects_bad_step() {
        assert!(q_grid_min(0.0, 0.03, 0.03).is_err());
        assert!(q_grid_min(-0.1, 0.03, 0.03).is_err());
        assert!(q_grid_min(0.01, -1.0, 0.03).is_err());
    }

    #[test]
    fn lattice_covers_boundary_rows() {
        let lattice = Lattice::new(1.0 / 12.0).unwrap();
        assert_eq!(lattice.count, 12);
        assert_eq!(lattice.row_len(0), 13);
        assert_eq!(lattice.row_len(12), 1);
        let samples = q_grid_samples(1.0 / 12.0).unwrap();
        assert_eq!(samples.len(), (1..=13).sum::<usize>());
        assert_eq!(samples.iter().filter(|p| p.q.is_none()).count(), 1);
    }

    #[test]
    fn ratio_scan_small() {
        let scan = phi_psi_ratio_scan(5, 5).unwrap();
        // N = 5 has no equidistant configuration.
        assert_eq!(scan.skipped, 0);
        assert_eq!(scan.checked, 6);
        assert!(scan.min_ratio >= LEMMA_CONSTANT);
        let scan = phi_psi_ratio_scan(3, 3).unwrap_err();
        assert!(matches!(scan, crate::Error::Domain(_)));
        assert!(phi_psi_ratio_scan(2, 10).is_err());
    }

    #[test]
    fn ratio_for_five_nodes() {
        let gaps = GapTriple::new(1, 2, 2).unwrap();
        let ratio = phi(&gaps) / psi(&gaps.to_config().to_doubled());
        // Φ = 17/125 and Ψ = 3 - 2cos(π/5) - 4cos(2π/5) by direct evaluation.
        let psi_by_hand = 3.0 - 2.0 * (PI / 5.0).cos() - 4.0 * (2.0 * PI / 5.0).cos();
        assert!((ratio - (17.0 / 125.0) / psi_by_hand).abs() < 1e-12);
        assert!(ratio >= LEMMA_CONSTANT);
    }

    #[test]
    fn fg_examples() {
        assert!((f_aux(2.0 / 3.0) - 27.0 / 8.0).abs() < 1e-14);
        assert!((g_aux(2.0 / 3.0) - 3.0 * 3f64.sqrt() / 4.0).abs() < 1e-14);
        assert!((g_aux(1e-9) - PI).abs() < 1e-9);
        assert!((f_aux(1e-9) - PI * PI / 2.0).abs() < 1e-9);
        let check = fg_range_check(1000).unwrap();
        assert!(check.pass, "{check:?}");
        assert!(fg_range_check(999).is_err());
    }
}
