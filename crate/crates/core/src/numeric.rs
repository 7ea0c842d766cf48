//! Small numeric kernels shared by the discrete and Gaussian paths.

use libm::erfc;
use std::f64::consts::{PI, SQRT_2};

/// `log(sum_k exp(xs[k]))`, returning `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// `log(sum_k w[k] * exp(xs[k]))` for non-negative weights. Zero weights drop out.
pub fn weighted_log_sum_exp(weights: &[f64], xs: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), xs.len());
    let mut max = f64::NEG_INFINITY;
    for (w, x) in weights.iter().zip(xs) {
        if *w > 0.0 && *x > max {
            max = *x;
        }
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = weights
        .iter()
        .zip(xs)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, x)| w * (x - max).exp())
        .sum();
    max + sum.ln()
}

/// `log(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

// Past this point erfc underflows toward subnormals; the asymptotic series
// is accurate to ~1e-13 relative from here on.
const LOG_SURVIVAL_ASYMPTOTIC: f64 = 30.0;

/// `log(1 - Phi(z))`, accurate in the far upper tail.
pub fn log_normal_survival(z: f64) -> f64 {
    if z < LOG_SURVIVAL_ASYMPTOTIC {
        (0.5 * erfc(z / SQRT_2)).ln()
    } else {
        // Mills ratio: Q(z) = phi(z)/z * (1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8 - 945/z^10)
        let z2 = z * z;
        let inv = 1.0 / z2;
        let series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv * (1.0 - 9.0 * inv))));
        -0.5 * z2 - (z * (2.0 * PI).sqrt()).ln() + series.ln()
    }
}

/// `log Phi(z)`.
pub fn log_normal_cdf(z: f64) -> f64 {
    log_normal_survival(-z)
}

/// Largest element with its index; ties keep the first occurrence. NaN is never selected.
pub fn argmax(xs: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &x) in xs.iter().enumerate() {
        if x.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if x <= b => {}
            _ => best = Some((k, x)),
        }
    }
    best
}
