//! Factorials, binomials and associated Laguerre polynomials.
//!
//! Every gamma value that appears in the Morse model has an integer
//! argument, so log-factorials cover all of them.

pub use statrs::function::factorial::{ln_binomial, ln_factorial};

/// `ln Γ(n)` for integer `n >= 1`.
pub fn ln_gamma_int(n: u64) -> f64 {
    debug_assert!(n >= 1);
    ln_factorial(n - 1)
}

/// Binomial coefficient evaluated through log-factorials and rounded.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    ln_binomial(n, k).exp().round()
}

/// Associated Laguerre polynomial `L_n^alpha(x)` by the upward recurrence in
/// the degree.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}
