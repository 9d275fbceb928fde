//! Dense Gaussian elimination over `f64` and exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Field operations needed by the level solver.
pub(crate) trait Scalar: Clone + Send + Sync + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    /// `count / 2^log2_den`.
    fn dyadic(count: u64, log2_den: u32) -> Self;
    /// Pivot preference; larger is better, `0` means unusable.
    fn pivot_weight(&self) -> f64;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    /// `self -= a * b`
    fn sub_mul_assign(&mut self, a: &Self, b: &Self);
}

/// Pivots smaller than this are treated as zero in floating point.
const FLOAT_PIVOT_FLOOR: f64 = 1e-13;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn dyadic(count: u64, log2_den: u32) -> Self {
        count as f64 / (1u64 << log2_den) as f64
    }
    fn pivot_weight(&self) -> f64 {
        let w = self.abs();
        if w < FLOAT_PIVOT_FLOOR {
            0.0
        } else {
            w
        }
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn dyadic(count: u64, log2_den: u32) -> Self {
        BigRational::new(BigInt::from(count), BigInt::one() << log2_den)
    }
    fn pivot_weight(&self) -> f64 {
        // Any nonzero pivot is exact; prefer the first one found.
        if Zero::is_zero(self) {
            0.0
        } else {
            1.0
        }
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
}

/// Solves `a · x = b` in place. Returns `None` when `a` is singular.
pub(crate) fn solve_dense<F: Scalar>(mut a: Vec<Vec<F>>, mut b: Vec<F>) -> Option<Vec<F>> {
    let n = b.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    for col in 0..n {
        let (pivot, weight) = (col..n)
            .map(|r| (r, a[r][col].pivot_weight()))
            .fold((col, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if weight == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);

        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        let support: Vec<usize> = (col + 1..n).filter(|&j| !pivot_row[j].is_zero()).collect();
        let (b_upper, b_lower) = b.split_at_mut(col + 1);
        let b_pivot = &b_upper[col];
        for (row, rhs) in lower.iter_mut().zip(b_lower.iter_mut()) {
            if row[col].is_zero() {
                continue;
            }
            let factor = row[col].div(&pivot_row[col]);
            for &j in &support {
                row[j].sub_mul_assign(&factor, &pivot_row[j]);
            }
            row[col] = F::zero();
            if !b_pivot.is_zero() {
                rhs.sub_mul_assign(&factor, b_pivot);
            }
        }
    }

    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let mut acc = b[i].clone();
        for j in i + 1..n {
            if !a[i][j].is_zero() {
                acc.sub_mul_assign(&a[i][j], &x[j]);
            }
        }
        x[i] = acc.div(&a[i][i]);
    }
    Some(x)
}
