//! Browser bindings for the interactive leakage page in `www/`.
//!
//! Each exported function returns a JSON string. The `*_json` functions hold
//! the logic and are plain Rust so they can be tested natively.

use pdp_core::gaussian::{leakage_gaussian, max_leakage_gaussian, DEFAULT_GAUSSIAN_CAP};
use pdp_core::oracle::pdp_exact_discrete;
use pdp_core::synth::{covariance_range, gen_covariance, gen_whg_edges};
use pdp_core::whg::{full_space_search, search_source, GammaMode, SearchKind};
use pdp_core::{AdversaryNode, GaussianModel, JointDistribution, PdpError, QuerySpec, SearchOptions};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest graph the page will search in full.
pub const MAX_DEMO_TUPLES: usize = 12;

fn err(e: PdpError) -> String {
    e.to_string()
}

/// Weakest-adversary leakage of a bivariate Gaussian against the correlation,
/// with the per-layer maxima of an equicorrelated model of `n` tuples at each point.
pub fn gaussian_curve_json(n: usize, range: f64, lambda: f64, points: usize) -> Result<String, String> {
    if !(2..=10).contains(&n) {
        return Err(format!("n must be in 2..=10, got {n}"));
    }
    if points < 2 {
        return Err("need at least two points".into());
    }
    let (lo, hi) = covariance_range(n);
    let mut rho = Vec::with_capacity(points);
    let mut weakest = Vec::with_capacity(points);
    let mut layers = Vec::with_capacity(points);
    for k in 0..points {
        // stay strictly inside the feasible interval
        let t = (k as f64 + 0.5) / points as f64;
        let c = lo.max(-1.0) + t * (hi - lo.max(-1.0));
        let bi = GaussianModel::new_semidefinite(vec![0.0; 2], vec![vec![1.0, c], vec![c, 1.0]], range, lambda)
            .map_err(err)?;
        let m = GaussianModel::new(vec![0.0; n], gen_covariance(n, c).map_err(err)?, range, lambda).map_err(err)?;
        rho.push(c);
        weakest.push(leakage_gaussian(&bi, 0, &[]).map_err(err)?);
        layers.push(max_leakage_gaussian(&m, DEFAULT_GAUSSIAN_CAP).map_err(err)?.layer_max);
    }
    Ok(json!({"rho": rho, "bivariate": weakest, "layer_max": layers}).to_string())
}

/// Leakage of a 2 x 2 table `[[p00, p01], [p10, p11]]` with domains `{0, 1}`
/// and `{0, high}`: graph values for both increment modes and the exact value.
pub fn pair_leakage_json(cells: [f64; 4], high: f64, lambda: f64) -> Result<String, String> {
    let total: f64 = cells.iter().sum();
    if cells.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || total <= 0.0 {
        return Err("cell weights must be non-negative with a positive sum".into());
    }
    if !(high.is_finite() && high > 0.0) {
        return Err(format!("upper value of the second tuple must be positive, got {high}"));
    }
    let d = JointDistribution::new(vec![vec![0.0, 1.0], vec![0.0, high]], cells.iter().map(|p| p / total).collect())
        .map_err(err)?;
    let q = QuerySpec::sum(2);
    let mut rows = Vec::new();
    for (i, k) in [(0usize, vec![1usize]), (0, vec![]), (1, vec![0]), (1, vec![])] {
        let node = AdversaryNode::new(i, &k);
        let mut chain = Vec::new();
        for gamma in [GammaMode::LowerTail, GammaMode::BothTails] {
            let opts = SearchOptions { gamma, ..SearchOptions::default() };
            let (g, _) = full_space_search(&d, &q, lambda, &opts).map_err(err)?;
            chain.push(g.leakage_of(&node).unwrap_or(f64::NAN));
        }
        let exact = pdp_exact_discrete(&d, &q, lambda, i, &k).map_err(err)?.leakage;
        rows.push(json!({"node": node.to_string(), "lower_tail": chain[0], "both_tails": chain[1], "exact": exact}));
    }
    Ok(json!({"rows": rows}).to_string())
}

/// Per-layer maxima of full and fast search over a synthetic graph.
pub fn synthetic_profile_json(n: usize, aver_corr: f64, seed: u64, alpha: f64) -> Result<String, String> {
    if !(2..=MAX_DEMO_TUPLES).contains(&n) {
        return Err(format!("n must be in 2..={MAX_DEMO_TUPLES}, got {n}"));
    }
    let g = gen_whg_edges(n, aver_corr, seed, alpha).map_err(err)?;
    let opts = SearchOptions::default();
    let full = search_source(&g, SearchKind::Full, &opts).map_err(err)?.1;
    let fast = search_source(&g, SearchKind::Fast, &opts).map_err(err)?.1;
    Ok(json!({
        "full": full.layer_max,
        "fast": fast.layer_max,
        "full_leakage": full.leakage,
        "fast_leakage": fast.leakage,
        "full_nodes": full.node_count,
        "fast_nodes": fast.node_count,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn gaussian_curve(n: usize, range: f64, lambda: f64, points: usize) -> Result<String, JsError> {
    gaussian_curve_json(n, range, lambda, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn pair_leakage(p00: f64, p01: f64, p10: f64, p11: f64, high: f64, lambda: f64) -> Result<String, JsError> {
    pair_leakage_json([p00, p01, p10, p11], high, lambda).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn synthetic_profile(n: usize, aver_corr: f64, seed: u32, alpha: f64) -> Result<String, JsError> {
    synthetic_profile_json(n, aver_corr, u64::from(seed), alpha).map_err(|e| JsError::new(&e))
}
