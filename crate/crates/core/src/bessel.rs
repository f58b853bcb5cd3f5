//! Bessel functions of the first kind and their positive zeros.
//!
//! Values come from Miller's backward recurrence normalised by the identity
//! `J_0^2 + 2 sum_k J_k^2 = 1`, which is accurate to a few ulps of 1 over the
//! whole supported range. The ascending series and the Hankel asymptotic
//! expansion in [`reference`] are kept as independent cross-checks.

use crate::error::{Result, SpecflowError};

/// Largest order accepted by the public evaluators.
pub const MAX_ORDER: usize = 12;
/// Largest argument accepted by [`bessel_j`].
pub const MAX_ARG: f64 = 200.0;
/// Largest zero index accepted by [`bessel_zero`].
pub const MAX_ZERO_INDEX: usize = 50;

const SCAN_STEP: f64 = 0.1;
const BISECT_WIDTH: f64 = 1e-13;
const RESCALE_AT: f64 = 1e250;

/// `J_n(x)` for `n <= 12`, `0 <= x <= 200`.
pub fn bessel_j(n: usize, x: f64) -> Result<f64> {
    if n > MAX_ORDER || !(0.0..=MAX_ARG).contains(&x) {
        return Err(SpecflowError::OutOfRange(format!(
            "J_{n}({x}) outside n <= {MAX_ORDER}, 0 <= x <= {MAX_ARG}"
        )));
    }
    Ok(j_single(n, x))
}

/// The `m`-th positive zero of `J_n` for `n <= 12`, `1 <= m <= 50`.
pub fn bessel_zero(n: usize, m: usize) -> Result<f64> {
    if n > MAX_ORDER || m == 0 || m > MAX_ZERO_INDEX {
        return Err(SpecflowError::OutOfRange(format!(
            "zero {m} of J_{n} outside n <= {MAX_ORDER}, 1 <= m <= {MAX_ZERO_INDEX}"
        )));
    }
    // consecutive zeros are at least ~3 apart and j_{n,1} < n + 2 n^{1/3} + 3
    let limit = scan_start(n) + n as f64 + 2.0 * (n as f64).cbrt() + 4.0 * (m as f64 + 2.0);
    let mut found = 0;
    let mut result = None;
    scan_zeros(n, limit, |lo, hi| {
        found += 1;
        if found == m {
            result = Some((lo, hi));
            false
        } else {
            true
        }
    });
    match result {
        Some((lo, hi)) => Ok(refine_zero(n, lo, hi)),
        None => Err(SpecflowError::BracketFailure { n, m, limit }),
    }
}

/// All orders `J_0 .. J_{nmax}` at `x >= 0` in one recurrence pass.
pub(crate) fn j_all(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let reach = (nmax as f64).max(x);
    let start = (reach + 25.0 + 6.0 * reach.sqrt()).ceil() as usize;
    let start = start + start % 2;

    let mut next = 0.0f64; // J_{k+1}
    let mut cur = 1e-30f64; // J_k, k = start
    let mut sum_sq = 0.0f64;
    let mut even_sum = 0.0f64; // J_0 + 2 sum_{k even >= 2} J_k, sign only
    for k in (1..=start).rev() {
        if k <= nmax {
            out[k] = cur;
        }
        sum_sq += 2.0 * cur * cur;
        if k % 2 == 0 {
            even_sum += 2.0 * cur;
        }
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > RESCALE_AT {
            let f = 1.0 / RESCALE_AT;
            cur *= f;
            next *= f;
            sum_sq *= f * f;
            even_sum *= f;
            for v in out.iter_mut() {
                *v *= f;
            }
        }
    }
    out[0] = cur;
    sum_sq += cur * cur;
    even_sum += cur;
    let norm = sum_sq.sqrt() * even_sum.signum();
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

pub(crate) fn j_single(n: usize, x: f64) -> f64 {
    j_all(n, x)[n]
}

/// `J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2`, with `J_0' = -J_1`.
pub(crate) fn j_derivative(n: usize, x: f64) -> f64 {
    let v = j_all(n + 1, x);
    if n == 0 {
        -v[1]
    } else {
        0.5 * (v[n - 1] - v[n + 1])
    }
}

fn scan_start(n: usize) -> f64 {
    n.max(1) as f64 * 0.5
}

/// Walk a 0.1 grid from `max(n,1)/2` to `limit`, reporting each sign-change
/// bracket. The callback returns `false` to stop.
fn scan_zeros(n: usize, limit: f64, mut on_bracket: impl FnMut(f64, f64) -> bool) {
    let start = scan_start(n);
    let mut i = 0usize;
    let mut x_prev = start;
    let mut f_prev = j_single(n, x_prev);
    loop {
        i += 1;
        let x = start + i as f64 * SCAN_STEP;
        if x > limit {
            return;
        }
        let f = j_single(n, x);
        if f == 0.0 {
            // keep the previous sign; only possible through underflow far below the first zero
            continue;
        }
        if f_prev != 0.0 && f_prev.signum() != f.signum() && !on_bracket(x_prev, x) {
            return;
        }
        x_prev = x;
        f_prev = f;
    }
}

/// Bisection to `1e-13`, then one Newton step kept only if it lowers the residual.
pub(crate) fn refine_zero(n: usize, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = j_single(n, lo);
    while hi - lo > BISECT_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = j_single(n, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x0 = 0.5 * (lo + hi);
    let f0 = j_single(n, x0);
    let d = j_derivative(n, x0);
    if d != 0.0 {
        let x1 = x0 - f0 / d;
        if (x1 - x0).abs() < 1e-9 && j_single(n, x1).abs() < f0.abs() {
            return x1;
        }
    }
    x0
}

/// All positive zeros of `J_n` strictly below `limit`, ascending. No range cap;
/// used by the disc spectrum generator.
pub(crate) fn zeros_below(n: usize, limit: f64) -> Vec<f64> {
    let mut brackets = Vec::new();
    scan_zeros(n, limit + SCAN_STEP, |lo, hi| {
        brackets.push((lo, hi));
        true
    });
    brackets
        .into_iter()
        .map(|(lo, hi)| refine_zero(n, lo, hi))
        .filter(|&z| z < limit)
        .collect()
}

/// Independent evaluators used to validate the recurrence.
pub mod reference {
    /// Ascending power series `sum (-1)^k (x/2)^{2k+n} / (k! (k+n)!)`, summed
    /// until terms fall below `1e-18` of the running magnitude. Reliable for `x <= 12`.
    pub fn series_j(n: usize, x: f64) -> f64 {
        let half = 0.5 * x;
        let mut term = 1.0;
        for i in 1..=n {
            term *= half / i as f64;
        }
        let mut sum = term;
        let q = -half * half;
        let mut k = 0usize;
        loop {
            k += 1;
            term *= q / (k as f64 * (k + n) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) && k > 2 {
                break;
            }
            if k > 500 {
                break;
            }
        }
        sum
    }

    /// Hankel large-argument expansion with `terms` correction terms in each of P and Q.
    pub fn asymptotic_j(n: usize, x: f64, terms: usize) -> f64 {
        let mu = 4.0 * (n as f64) * (n as f64);
        let mut p = 1.0;
        let mut q = 0.0;
        let mut t = 1.0;
        // a_k(n) / (8x)^k with a_k = prod_{i=1..k} (mu - (2i-1)^2) / k!
        for k in 1..=(2 * terms) {
            let odd = (2 * k - 1) as f64;
            t *= (mu - odd * odd) / (k as f64 * 8.0 * x);
            match k % 4 {
                1 => q += t,
                2 => p -= t,
                3 => q -= t,
                _ => p += t,
            }
        }
        let chi = x - (0.5 * n as f64 + 0.25) * std::f64::consts::PI;
        (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}
