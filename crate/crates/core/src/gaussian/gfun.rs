use crate::error::{PdpError, Result};
use crate::numeric::{log_add_exp, log_normal_cdf, log_normal_survival};

fn check_b(b: f64) -> Result<()> {
    if b.is_finite() && b > 0.0 {
        Ok(())
    } else {
        Err(PdpError::InvalidParameter(format!("G needs b > 0, got {b}")))
    }
}

/// `log G(x; b)` with `G(x; b) = e^x (1 - Phi(x/b + b)) + e^{-x} Phi(x/b - b)`.
///
/// Both terms are combined in log space, so neither `e^{|x|}` nor the tiny
/// normal tail is ever formed.
pub fn log_g(x: f64, b: f64) -> Result<f64> {
    check_b(b)?;
    if !x.is_finite() {
        return Err(PdpError::InvalidParameter(format!("G needs a finite argument, got {x}")));
    }
    Ok(log_add_exp(x + log_normal_survival(x / b + b), -x + log_normal_cdf(x / b - b)))
}

pub fn g_function(x: f64, b: f64) -> Result<f64> {
    log_g(x, b).map(f64::exp)
}

/// Log-odds of the slope of `log G`: with `s = d log G / dx`,
/// returns `log((1 + s) / (1 - s))`, i.e. the log ratio of the two terms of `G`
/// (the density terms of the derivative cancel).
///
/// Finite exactly when `|s| < 1`, and stays resolvable where `s` itself
/// rounds to `±1`.
pub fn log_g_slope_odds(x: f64, b: f64) -> Result<f64> {
    check_b(b)?;
    if !x.is_finite() {
        return Err(PdpError::InvalidParameter(format!("G needs a finite argument, got {x}")));
    }
    Ok(2.0 * x + log_normal_survival(x / b + b) - log_normal_cdf(x / b - b))
}

/// `d log G / dx`, in `(-1, 1)`.
pub fn log_g_slope(x: f64, b: f64) -> Result<f64> {
    log_g_slope_odds(x, b).map(|d| (0.5 * d).tanh())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::normal_cdf;

    #[test]
    fn value_at_zero() {
        for b in [0.1, 1.0, 3.0] {
            let g = g_function(0.0, b).unwrap();
            assert!((g - 2.0 * normal_cdf(-b)).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_direct_form_in_safe_range() {
        for &(x, b) in &[(0.5f64, 1.0f64), (-2.0, 0.7), (3.0, 2.0), (-0.1, 0.2)] {
            let direct = x.exp() * (1.0 - normal_cdf(x / b + b)) + (-x).exp() * normal_cdf(x / b - b);
            let g = g_function(x, b).unwrap();
            assert!((g - direct).abs() <= 1e-12 * direct, "{x} {b}");
        }
    }

    #[test]
    fn tail_slopes() {
        let h = 1e-4;
        let slope = |x: f64| (log_g(x + h, 1.0).unwrap() - log_g(x - h, 1.0).unwrap()) / (2.0 * h);
        assert!((slope(-20.0) - 1.0).abs() < 1e-6);
        assert!((slope(20.0) + 1.0).abs() < 1e-6);
        assert!(log_g(1e4, 1.0).unwrap().is_finite());
        assert!(log_g(-1e4, 1.0).unwrap().is_finite());
    }

    #[test]
    fn analytic_slope_matches_differences() {
        let h = 1e-5;
        for &(x, b) in &[(0.0f64, 1.0f64), (2.0, 0.3), (-1.5, 4.0), (10.0, 10.0)] {
            let fd = (log_g(x + h, b).unwrap() - log_g(x - h, b).unwrap()) / (2.0 * h);
            assert!((fd - log_g_slope(x, b).unwrap()).abs() < 1e-7, "{x} {b}");
        }
        assert!(log_g_slope_odds(-30.0, 0.1).unwrap().is_finite());
    }

    #[test]
    fn rejects_bad_b() {
        assert!(g_function(0.0, 0.0).is_err());
        assert!(g_function(0.0, -1.0).is_err());
    }
}
