//! Edge and node rules of the weighted hierarchical graph.
//!
//! Forgetting tuple `j` moves an adversary from `(i, K)` to its ancestor
//! `(i, K \ {j})`. The change in leakage is driven by how strongly `x_i`
//! shifts the conditional distribution of `x_j`:
//!
//! ```text
//! IC(x_im, x_in) = log  sum_xj Pr(x_j | x_im, x_K') e^{-x_j/lambda}
//!                     / sum_xj Pr(x_j | x_in, x_K') e^{-x_j/lambda}
//! ```
//!
//! and the ancestor's leakage is `|l_child + IC|` for the increment that
//! maximizes it.

use serde::{Deserialize, Serialize};

use super::node::AdversaryNode;
use crate::discrete::{local_sensitivity, Assignment, JointDistribution, QuerySpec};
use crate::error::{PdpError, Result};
use crate::numeric::weighted_log_sum_exp;

/// Which output tail an increment is taken from.
///
/// `LowerTail` is the `r -> -inf` increment above. `BothTails` also admits
/// the mirrored `r -> +inf` increment, `log E[e^{x_j/lambda} | x_in] / E[e^{x_j/lambda} | x_im]`,
/// which is where the output log-ratio peaks when the larger attacked value
/// spreads `x_j` upward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMode {
    #[default]
    LowerTail,
    BothTails,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(PdpError::InvalidParameter(format!("lambda must be positive, got {lambda}")))
    }
}

fn with_attack(prior: &Assignment, i: usize, value: usize) -> Assignment {
    let mut g = prior.clone();
    g.insert(i, value);
    g
}

fn log_tilted_mean(probs: &[f64], domain: &[f64], scale: f64) -> f64 {
    let xs: Vec<f64> = domain.iter().map(|x| scale * x).collect();
    weighted_log_sum_exp(probs, &xs)
}

/// Increment of correlation of `x_i` on `x_j` for the value pair `(m, n)`
/// (domain positions), conditioned on the known values `prior`.
pub fn ic_pair(
    dist: &JointDistribution,
    i: usize,
    j: usize,
    prior: &Assignment,
    m: usize,
    n: usize,
    lambda: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    let dj = dist.domain(j).to_vec();
    let pm = dist.conditional(&[j], &with_attack(prior, i, m))?;
    let pn = dist.conditional(&[j], &with_attack(prior, i, n))?;
    Ok(log_tilted_mean(&pm.probs, &dj, -1.0 / lambda) - log_tilted_mean(&pn.probs, &dj, -1.0 / lambda))
}

/// Upper-tail counterpart of [`ic_pair`]; see [`GammaMode::BothTails`].
pub fn ic_pair_upper(
    dist: &JointDistribution,
    i: usize,
    j: usize,
    prior: &Assignment,
    m: usize,
    n: usize,
    lambda: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    let dj = dist.domain(j).to_vec();
    let pm = dist.conditional(&[j], &with_attack(prior, i, m))?;
    let pn = dist.conditional(&[j], &with_attack(prior, i, n))?;
    Ok(log_tilted_mean(&pn.probs, &dj, 1.0 / lambda) - log_tilted_mean(&pm.probs, &dj, 1.0 / lambda))
}

/// All increments over ordered value pairs `m < n` of `x_i`.
pub fn gamma_set(
    dist: &JointDistribution,
    i: usize,
    j: usize,
    prior: &Assignment,
    lambda: f64,
) -> Result<Vec<f64>> {
    let s = dist.domain(i).len();
    let mut out = Vec::with_capacity(s * s.saturating_sub(1) / 2);
    for m in 0..s {
        for n in m + 1..s {
            out.push(ic_pair(dist, i, j, prior, m, n, lambda)?);
        }
    }
    Ok(out)
}

/// The increment `gamma` maximizing `|l_child + gamma|`; ties go to the larger `gamma`.
pub fn edge_value(l_child: f64, gammas: &[f64]) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &g in gammas {
        let v = (l_child + g).abs();
        match best {
            Some((bv, bg)) if v < bv || (v == bv && g <= bg) => {}
            _ => best = Some((v, g)),
        }
    }
    best.map(|(_, g)| g).ok_or(PdpError::EmptyGamma)
}

/// Leakage of the ancestor reached over an edge with increment `ic`.
pub fn ancestor_leakage(l_child: f64, ic: f64) -> f64 {
    (l_child + ic).abs()
}

/// Increment ratio `IC / (LS_j / lambda)`, in `[-1, 1]`.
pub fn ir_value(ic: f64, ls_j: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if ls_j <= 0.0 {
        return Err(PdpError::ZeroSensitivity);
    }
    Ok(ic / (ls_j / lambda))
}

/// Leakage of the strongest adversaries, `LS_i / lambda`. Does not depend on
/// the probabilities, only on the domains.
pub fn first_layer(dist: &JointDistribution, query: &QuerySpec, lambda: f64) -> Result<Vec<(AdversaryNode, f64)>> {
    check_lambda(lambda)?;
    (0..dist.n())
        .map(|i| Ok((AdversaryNode::strongest(dist.n(), i), local_sensitivity(dist, query, i)? / lambda)))
        .collect()
}

/// Chain rule along one path: fold [`ancestor_leakage`] over the increments.
pub fn chain_rule_path(start: f64, ics: &[f64]) -> f64 {
    ics.iter().fold(start, |l, &ic| ancestor_leakage(l, ic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::fixtures::*;

    fn none() -> Assignment {
        Assignment::new()
    }

    // log[(0.6 + 0.4/e) / (0.4 + 0.6/e)], evaluated by hand from table (a)
    const IC_A: f64 = 0.185_375_903_250_729_47;

    #[test]
    fn ic_pair_table_a() {
        let e = (-1f64).exp();
        let expected = ((0.6 + 0.4 * e) / (0.4 + 0.6 * e)).ln();
        assert!((expected - IC_A).abs() < 1e-15);
        let ic = ic_pair(&table_a(), 0, 1, &none(), 0, 1, 1.0).unwrap();
        assert!((ic - IC_A).abs() < 1e-14);
        let swapped = ic_pair(&table_a(), 0, 1, &none(), 1, 0, 1.0).unwrap();
        assert!((swapped + IC_A).abs() < 1e-14);
        assert!((ic_pair(&table_b(), 0, 1, &none(), 0, 1, 1.0).unwrap() + IC_A).abs() < 1e-14);
    }

    #[test]
    fn ic_pair_independent_is_zero() {
        let ind = JointDistribution::product(
            vec![vec![0.0, 1.0, 2.0], vec![0.0, 3.0]],
            &[vec![0.2, 0.3, 0.5], vec![0.6, 0.4]],
        )
        .unwrap();
        for g in gamma_set(&ind, 0, 1, &none(), 0.7).unwrap() {
            assert!(g.abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_set_sizes() {
        assert_eq!(gamma_set(&table_a(), 0, 1, &none(), 1.0).unwrap().len(), 1);
        let tri = JointDistribution::new(vec![vec![0.0, 1.0, 2.0], vec![0.0, 1.0]], vec![1.0 / 6.0; 6]).unwrap();
        assert_eq!(gamma_set(&tri, 0, 1, &none(), 1.0).unwrap().len(), 3);
        let g = gamma_set(&table_a(), 0, 1, &none(), 1.0).unwrap();
        assert!((g[0] - IC_A).abs() < 1e-14);
    }

    #[test]
    fn gamma_set_propagates_impossible_condition() {
        let d3 = JointDistribution::new(
            vec![vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]],
            vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5],
        )
        .unwrap();
        let prior: Assignment = [(2, 0)].into_iter().collect();
        assert!(matches!(gamma_set(&d3, 0, 1, &prior, 1.0), Err(PdpError::ImpossibleCondition)));
    }

    #[test]
    fn edge_value_rules() {
        assert_eq!(edge_value(3.0, &[0.19]).unwrap(), 0.19);
        assert_eq!(edge_value(1.0, &[-0.5, 0.3]).unwrap(), 0.3);
        assert_eq!(edge_value(0.1, &[-0.9, 0.5]).unwrap(), -0.9);
        assert_eq!(edge_value(0.0, &[-0.4, 0.4]).unwrap(), 0.4);
        assert!(matches!(edge_value(1.0, &[]), Err(PdpError::EmptyGamma)));
    }

    #[test]
    fn ancestor_and_chain() {
        assert!((ancestor_leakage(1.0, 0.19) - 1.19).abs() < 1e-15);
        assert!((ancestor_leakage(1.0, -0.18) - 0.82).abs() < 1e-15);
        assert_eq!(ancestor_leakage(0.5, -0.5), 0.0);
        assert_eq!(chain_rule_path(1.0, &[]), 1.0);
        assert!((chain_rule_path(1.0, &[0.19]) - 1.19).abs() < 1e-15);
        // every increment saturated: the sum of local sensitivities
        assert!((chain_rule_path(1.0, &[2.0, 0.5, 1.5]) - 5.0).abs() < 1e-15);
        assert!((chain_rule_path(1.0, &[-1.5, 0.25]) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ir_examples() {
        assert_eq!(ir_value(0.0, 1.0, 1.0).unwrap(), 0.0);
        let ic = ic_pair(&table_a(), 0, 1, &none(), 0, 1, 1.0).unwrap();
        assert!((ir_value(ic, 1.0, 1.0).unwrap() - IC_A).abs() < 1e-14);
        let ic_c = ic_pair(&table_c(), 0, 1, &none(), 0, 1, 1.0).unwrap();
        assert!((ir_value(ic_c, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        let ic_d = ic_pair(&table_d(), 0, 1, &none(), 0, 1, 1.0).unwrap();
        assert!((ir_value(ic_d, 5.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(ir_value(0.1, 0.0, 1.0), Err(PdpError::ZeroSensitivity)));
    }

    #[test]
    fn upper_tail_matches_hand_value() {
        // counterexample table: x1=0 forces x2=0, x1=1 leaves x2 uniform
        let d = table([[0.5, 0.0], [0.25, 0.25]], [0.0, 1.0]);
        let lo = ic_pair(&d, 0, 1, &none(), 0, 1, 1.0).unwrap();
        let hi = ic_pair_upper(&d, 0, 1, &none(), 0, 1, 1.0).unwrap();
        let e = 1f64.exp();
        assert!((lo - (1.0 / (0.5 + 0.5 / e)).ln()).abs() < 1e-14);
        assert!((hi - (0.5 + 0.5 * e).ln()).abs() < 1e-14);
    }

    #[test]
    fn first_layer_values() {
        let sum = QuerySpec::sum(2);
        let fl = first_layer(&table_a(), &sum, 1.0).unwrap();
        assert_eq!(fl.iter().map(|x| x.1).collect::<Vec<_>>(), vec![1.0, 1.0]);
        let half = first_layer(&table_a(), &sum, 2.0).unwrap();
        assert_eq!(half[0].1, 0.5);
        let d = first_layer(&table_d(), &sum, 1.0).unwrap();
        assert_eq!(d[1], (AdversaryNode::strongest(2, 1), 5.0));
    }
}
