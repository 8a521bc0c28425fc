//! Standard normal distribution function and its logarithmic tails.
//!
//! `normal_cdf` is built on `erfc`, which keeps full relative accuracy in the
//! lower tail until the result underflows (x ≈ -38.5). Below that point the
//! value is saturated at the smallest positive subnormal so the function stays
//! strictly positive and monotone. Callers that care about the size of deep
//! tail probabilities must use [`log_normal_cdf`], which never leaves log space.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// ln √(2π)
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this point the log tail switches to the Mills-ratio continued fraction.
const CONTINUED_FRACTION_CUTOFF: f64 = -20.0;
const CONTINUED_FRACTION_DEPTH: u32 = 64;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Φ(x), the N(0,1) distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let value = 0.5 * libm::erfc(-x * FRAC_1_SQRT_2);
    if value > 0.0 {
        value
    } else {
        // Smallest positive subnormal.
        f64::from_bits(1)
    }
}

/// Upper tail 1 - Φ(x) = Φ(-x).
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

/// ln Φ(x), accurate in both tails.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x < CONTINUED_FRACTION_CUTOFF {
        let t = -x;
        -0.5 * t * t - LN_SQRT_2PI + mills_ratio(t).ln()
    } else if x <= 0.0 {
        (0.5 * libm::erfc(-x * FRAC_1_SQRT_2)).ln()
    } else {
        (-0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln_1p()
    }
}

/// ln(1 - Φ(x)) = ln Φ(-x).
pub fn log_normal_sf(x: f64) -> f64 {
    log_normal_cdf(-x)
}

/// Mills ratio Φ(-t)/φ(t) for large positive t, by backward evaluation of
/// the continued fraction 1/(t + 1/(t + 2/(t + 3/(t + ...)))).
fn mills_ratio(t: f64) -> f64 {
    let mut tail = t;
    for k in (1..=CONTINUED_FRACTION_DEPTH).rev() {
        tail = t + f64::from(k) / tail;
    }
    1.0 / tail
}

/// P(a < Z < b) for Z ~ N(0,1); the bounds may be infinite.
pub fn normal_interval(a: f64, b: f64) -> f64 {
    if !(a < b) {
        return 0.0;
    }
    if a >= 0.0 {
        upper(a) - upper(b)
    } else if b <= 0.0 {
        lower(b) - lower(a)
    } else {
        1.0 - lower(a) - upper(b)
    }
}

/// ln P(a < Z < b) for Z ~ N(0,1), computed without leaving log space in the
/// tails.
pub fn log_normal_interval(a: f64, b: f64) -> f64 {
    if !(a < b) {
        return f64::NEG_INFINITY;
    }
    if a >= 0.0 {
        let la = log_normal_sf(a);
        let lb = log_normal_sf(b);
        la + log1m_exp(lb - la)
    } else if b <= 0.0 {
        let lb = log_normal_cdf(b);
        let la = log_normal_cdf(a);
        lb + log1m_exp(la - lb)
    } else {
        (-(lower(a) + upper(b))).ln_1p()
    }
}

fn lower(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
    }
}

fn upper(x: f64) -> f64 {
    if x == f64::INFINITY {
        0.0
    } else {
        0.5 * libm::erfc(x * FRAC_1_SQRT_2)
    }
}

/// ln(1 - e^x) for x ≤ 0.
pub fn log1m_exp(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        0.0
    } else if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// ln Σ e^{x_i}, with the empty sum mapped to -∞.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}
