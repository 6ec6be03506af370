//! Log-space binomials and exact multiplicities.

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// Table of `ln k!` for `k = 0..=n`.
///
/// Entries are kept as unevaluated sums `hi + lo` so that differences of
/// large log-factorials (around 6000 at `n = 1024`) keep close to full
/// relative precision.
#[derive(Debug, Clone)]
pub struct LnFactorial {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl LnFactorial {
    pub fn new(n: usize) -> Self {
        let mut hi = Vec::with_capacity(n + 1);
        let mut lo = Vec::with_capacity(n + 1);
        hi.push(0.0);
        lo.push(0.0);
        let (mut acc, mut carry) = (0.0f64, 0.0f64);
        for k in 1..=n {
            let (s, e) = two_sum(acc, (k as f64).ln());
            let (s, e2) = two_sum(s, carry + e);
            acc = s;
            carry = e2;
            hi.push(acc);
            lo.push(carry);
        }
        Self { hi, lo }
    }

    pub fn max(&self) -> usize {
        self.hi.len() - 1
    }

    #[inline]
    pub fn ln_factorial(&self, k: usize) -> f64 {
        self.hi[k] + self.lo[k]
    }

    /// `ln C(n, k)`; `-inf` when `k > n`.
    #[inline]
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        if k > n {
            return f64::NEG_INFINITY;
        }
        let (s1, e1) = two_sum(self.hi[n], -self.hi[k]);
        let (s2, e2) = two_sum(s1, -self.hi[n - k]);
        s2 + (e1 + e2 + (self.lo[n] - self.lo[k] - self.lo[n - k]))
    }
}

/// Exact binomial coefficient.
pub fn binomial_exact(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `C(n, k)` as an `f64` for small arguments (exact below 2^53).
pub fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// `ln(exp(a) + exp(b))` without overflow.
#[inline]
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `k * ln(x)` with the convention `0 * ln 0 = 0`.
#[inline]
pub fn ln_pow(ln_x: f64, k: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * ln_x
    }
}
