use crate::error::{PdpError, Result};
use crate::gaussian::{conditional_gaussian, log_g, GaussianModel};

pub const DEFAULT_GRID_POINTS: usize = 20_001;

/// Leakage of `A(i, K)` under the Gaussian model by scanning output values.
///
/// The output density given `x_i` is `(1/2lambda) e^{sigma0^2/2lambda^2} G(t/lambda; sigma0/lambda)`
/// with `t = r - x_i - mu0(x_i)`. The two hypotheses `x_i` and `x_i + M`
/// differ only by a shift of `t`, which is obtained here by conditioning
/// twice, not from the closed-form coefficient.
pub fn pdp_numeric_gaussian(model: &GaussianModel, i: usize, k: &[usize], grid_points: usize) -> Result<f64> {
    if grid_points < 2 {
        return Err(PdpError::InvalidParameter("grid needs at least two points".into()));
    }
    if i >= model.n() {
        return Err(PdpError::IndexOutOfRange { index: i, n: model.n() });
    }
    let mut known: Vec<usize> = k.iter().copied().filter(|&t| t != i).collect();
    known.push(i);
    known.sort_unstable();
    known.dedup();
    let lambda = model.lambda();
    let m = model.range();
    let base: Vec<f64> = known.iter().map(|&t| model.mu()[t]).collect();
    let moved: Vec<f64> = known.iter().zip(&base).map(|(&t, &v)| if t == i { v + m } else { v }).collect();
    let (mean0, cov) = conditional_gaussian(model, &known, &base)?;
    let (mean1, _) = conditional_gaussian(model, &known, &moved)?;
    // location of the output under each hypothesis: x_i + mu0
    let loc0 = model.mu()[i] + mean0.sum();
    let loc1 = model.mu()[i] + m + mean1.sum();
    let delta = loc1 - loc0;
    let sigma0 = cov.sum().max(0.0).sqrt();
    let b = sigma0 / lambda;
    if b < 1e-9 {
        // pure Laplace: sup_t (|t - delta| - |t|) / lambda
        return Ok(delta.abs() / lambda);
    }
    let half = 12.0 * sigma0 + 2.0 * sigma0 * sigma0 / lambda + 40.0 * lambda + delta.abs();
    let lo = delta.min(0.0) - half;
    let hi = delta.max(0.0) + half;
    let step = (hi - lo) / (grid_points - 1) as f64;
    let mut best = 0.0f64;
    for s in 0..grid_points {
        let t = lo + step * s as f64;
        let v = log_g(t / lambda, b)? - log_g((t - delta) / lambda, b)?;
        best = best.max(v.abs());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::leakage_gaussian;

    #[test]
    fn identity_gives_laplace_value() {
        let m = GaussianModel::new(vec![0.0; 3], (0..3).map(|r| (0..3).map(|c| f64::from(u8::from(r == c))).collect()).collect(), 1.0, 1.0)
            .unwrap();
        let v = pdp_numeric_gaussian(&m, 0, &[], DEFAULT_GRID_POINTS).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bivariate_half() {
        let m = GaussianModel::new(vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.5, 1.0]], 1.0, 1.0).unwrap();
        let v = pdp_numeric_gaussian(&m, 0, &[], DEFAULT_GRID_POINTS).unwrap();
        assert!((v - 1.5).abs() < 1e-3);
        assert!((v - leakage_gaussian(&m, 0, &[]).unwrap()).abs() < 1e-3);
        let strong = pdp_numeric_gaussian(&m, 0, &[1], DEFAULT_GRID_POINTS).unwrap();
        assert!((strong - 1.0).abs() < 1e-9);
    }
}
