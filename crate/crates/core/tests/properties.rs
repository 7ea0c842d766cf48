use nalgebra::SymmetricEigen;
use pdp_core::discrete::{
    global_sensitivity, local_sensitivity, Assignment, CorrSign, JointDistribution, QuerySpec,
};
use pdp_core::gaussian::{conditional_gaussian, leakage_gaussian, log_g_slope_odds, GaussianModel};
use pdp_core::oracle::{bayesian_gain, pdp_exact_discrete, pdp_log_ratio, pdp_numeric_gaussian};
use pdp_core::synth::{covariance_range, gen_covariance, gen_discrete_corr, gen_whg_edges};
use pdp_core::whg::{
    fast_search, first_layer, full_space_search, gamma_set, ic_pair, search_source, SearchKind,
    SearchOptions, SyntheticWhg,
};
use proptest::prelude::*;

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / s).collect()
}

/// Sorted distinct values from a small integer grid.
fn domain(size: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::sample::subsequence((0..7).map(f64::from).collect::<Vec<_>>(), size)
}

fn distribution(n: std::ops::RangeInclusive<usize>, max_domain: usize) -> impl Strategy<Value = JointDistribution> {
    proptest::collection::vec(2..=max_domain, n)
        .prop_flat_map(|sizes| {
            let cells: usize = sizes.iter().product();
            (
                sizes.into_iter().map(domain).collect::<Vec<_>>(),
                proptest::collection::vec(0.02f64..1.0, cells),
            )
        })
        .prop_map(|(domains, raw)| JointDistribution::new(domains, normalized(raw)).unwrap())
}

fn binary_pair() -> impl Strategy<Value = JointDistribution> {
    proptest::collection::vec(0.01f64..1.0, 4)
        .prop_map(|raw| JointDistribution::new(vec![vec![0.0, 1.0], vec![0.0, 1.0]], normalized(raw)).unwrap())
}

fn spd(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(-1.0f64..1.0, n * n).prop_map(move |b| {
        (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| (0..n).map(|t| b[r * n + t] * b[c * n + t]).sum::<f64>() + if r == c { 0.25 } else { 0.0 })
                    .collect()
            })
            .collect()
    })
}

fn subset_of(n: usize, i: usize, mask: u32) -> Vec<usize> {
    (0..n).filter(|&t| t != i && mask & (1 << t) != 0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conditional_times_marginal_rebuilds_joint(d in distribution(2..=3, 3)) {
        // p(x0, rest) = p(rest | x0) p(x0)
        let m = d.marginal(&[0]).unwrap();
        let rest: Vec<usize> = (1..d.n()).collect();
        for a in 0..d.domain(0).len() {
            let given: Assignment = [(0, a)].into();
            let c = d.conditional(&rest, &given).unwrap();
            let mut idx = vec![0usize; d.n()];
            idx[0] = a;
            let sizes: Vec<usize> = rest.iter().map(|&t| d.domain(t).len()).collect();
            let mut pos = vec![0usize; rest.len()];
            loop {
                for (k, &t) in rest.iter().enumerate() {
                    idx[t] = pos[k];
                }
                prop_assert!((c.prob(&pos) * m.probs()[a] - d.cell(&idx)).abs() < 1e-10);
                let mut k = pos.len();
                loop {
                    if k == 0 { break; }
                    k -= 1;
                    pos[k] += 1;
                    if pos[k] < sizes[k] { break; }
                    pos[k] = 0;
                }
                if pos.iter().all(|&v| v == 0) { break; }
            }
        }
    }

    #[test]
    fn pearson_is_a_correlation(d in distribution(2..=3, 3)) {
        let r = d.pearson_corr(0, 1, &Assignment::new()).unwrap();
        prop_assert!((-1.0..=1.0).contains(&r));
    }

    #[test]
    fn corr_sign_matches_pearson(d in binary_pair()) {
        let r = d.pearson_corr(0, 1, &Assignment::new()).unwrap();
        let s = d.corr_sign_2x2(0, 1, &Assignment::new()).unwrap();
        prop_assert_eq!(s, CorrSign::of(r, 1e-12));
        prop_assert_eq!(d.corr_sign_2x2(1, 0, &Assignment::new()).unwrap(), s);
    }

    #[test]
    fn linear_transform_keeps_mass_and_sign_rule(
        d in distribution(2..=3, 3),
        a0 in prop_oneof![-3.0f64..-0.5, 0.5f64..3.0],
        a1 in prop_oneof![-3.0f64..-0.5, 0.5f64..3.0],
    ) {
        let mut coef = vec![1.0; d.n()];
        coef[0] = a0;
        coef[1] = a1;
        let t = d.transform_linear_query(&QuerySpec::new(coef).unwrap()).unwrap();
        prop_assert!((t.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let before = d.pearson_corr(0, 1, &Assignment::new()).unwrap();
        let after = t.pearson_corr(0, 1, &Assignment::new()).unwrap();
        prop_assert!((after - (a0 * a1).signum() * before).abs() < 1e-9);
    }

    #[test]
    fn ic_is_antisymmetric_and_bounded(d in distribution(2..=3, 3), lambda in 0.2f64..3.0) {
        let q = QuerySpec::sum(d.n());
        let ls1 = local_sensitivity(&d, &q, 1).unwrap();
        let given = Assignment::new();
        for m in 0..d.domain(0).len() {
            for n in 0..d.domain(0).len() {
                let g = ic_pair(&d, 0, 1, &given, m, n, lambda).unwrap();
                let h = ic_pair(&d, 0, 1, &given, n, m, lambda).unwrap();
                prop_assert!((g + h).abs() < 1e-12);
                prop_assert!(g.abs() <= ls1 / lambda + 1e-12);
            }
        }
    }

    #[test]
    fn first_layer_ignores_probabilities(d in distribution(2..=4, 3), lambda in 0.2f64..3.0) {
        let q = QuerySpec::sum(d.n());
        let flat = JointDistribution::new(d.domains().to_vec(), vec![1.0 / d.probs().len() as f64; d.probs().len()]).unwrap();
        prop_assert_eq!(first_layer(&d, &q, lambda).unwrap(), first_layer(&flat, &q, lambda).unwrap());
    }

    #[test]
    fn nodes_respect_sensitivity_bounds(d in distribution(2..=4, 3), lambda in 0.3f64..3.0) {
        let q = QuerySpec::sum(d.n());
        let n = d.n();
        let ls: Vec<f64> = (0..n).map(|t| local_sensitivity(&d, &q, t).unwrap()).collect();
        let gs = global_sensitivity(&d, &q).unwrap();
        let (g, _) = full_space_search(&d, &q, lambda, &SearchOptions::default()).unwrap();
        for &(node, l) in g.nodes() {
            let free: Vec<usize> = (0..n).filter(|&t| !node.knows(t)).collect();
            prop_assert!(l <= free.iter().map(|&t| ls[t]).sum::<f64>() / lambda + 1e-9);
            prop_assert!(l <= free.len() as f64 * gs / lambda + 1e-9);
        }
    }

    #[test]
    fn fast_never_below_full(d in distribution(3..=5, 2)) {
        let q = QuerySpec::sum(d.n());
        let full = full_space_search(&d, &q, 1.0, &SearchOptions::default()).unwrap().1;
        let fast = fast_search(&d, &q, 1.0, &SearchOptions::default()).unwrap().1;
        prop_assert!(fast.leakage >= full.leakage - 1e-12);
    }

    #[test]
    fn search_is_thread_count_independent(d in distribution(3..=4, 3)) {
        let q = QuerySpec::sum(d.n());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let one = pool.install(|| full_space_search(&d, &q, 1.0, &SearchOptions::default()).unwrap().0);
        let many = full_space_search(&d, &q, 1.0, &SearchOptions::default()).unwrap().0;
        prop_assert_eq!(one, many);
    }

    #[test]
    fn oracle_below_group_bound(d in distribution(2..=4, 3), lambda in 0.3f64..3.0, i in 0usize..4, mask in 0u32..16) {
        let n = d.n();
        let i = i % n;
        let k = subset_of(n, i, mask);
        let q = QuerySpec::sum(n);
        let gs = global_sensitivity(&d, &q).unwrap();
        let o = pdp_exact_discrete(&d, &q, lambda, i, &k).unwrap();
        prop_assert!(o.leakage <= (n - k.len()) as f64 * gs / lambda + 1e-9);
    }

    #[test]
    fn oracle_ignores_prior_under_independence(d in distribution(2..=4, 3), lambda in 0.3f64..3.0) {
        let n = d.n();
        let marginals: Vec<Vec<f64>> = (0..n).map(|t| d.marginal(&[t]).unwrap().probs().to_vec()).collect();
        let p = JointDistribution::product(d.domains().to_vec(), &marginals).unwrap();
        let q = QuerySpec::sum(n);
        for i in 0..n {
            let base = pdp_exact_discrete(&p, &q, lambda, i, &[]).unwrap().leakage;
            for mask in 0u32..1 << n {
                let l = pdp_exact_discrete(&p, &q, lambda, i, &subset_of(n, i, mask)).unwrap().leakage;
                prop_assert!((l - base).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dense_outputs_never_beat_kinks(d in distribution(2..=3, 3), lambda in 0.3f64..2.0, known in any::<bool>()) {
        let q = QuerySpec::sum(d.n());
        let k: Vec<usize> = if known { vec![1] } else { vec![] };
        let sup = pdp_exact_discrete(&d, &q, lambda, 0, &k).unwrap().leakage;
        let contexts: Vec<Assignment> = if known {
            (0..d.domain(1).len()).map(|v| [(1, v)].into()).collect()
        } else {
            vec![Assignment::new()]
        };
        let hi: f64 = d.domains().iter().map(|dom| dom[dom.len() - 1]).sum();
        for given in &contexts {
            for a in 0..d.domain(0).len() {
                for b in 0..d.domain(0).len() {
                    for step in 0..=400 {
                        let r = -5.0 + (hi + 10.0) * f64::from(step) / 400.0;
                        let v = pdp_log_ratio(&d, &q, lambda, 0, given, (a, b), r).unwrap();
                        prop_assert!(v.abs() <= sup + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn bayesian_gain_is_the_log_ratio(d in distribution(2..=3, 3), lambda in 0.3f64..2.0, r in -3.0f64..12.0) {
        let q = QuerySpec::sum(d.n());
        let given: Assignment = [(1, 0)].into();
        let a = pdp_log_ratio(&d, &q, lambda, 0, &given, (0, 1), r).unwrap();
        let b = bayesian_gain(&d, &q, lambda, 0, &given, (0, 1), r).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gaussian_leakage_ignores_mean(s in spd(4), mu in proptest::collection::vec(-5.0f64..5.0, 4), i in 0usize..4, mask in 0u32..16) {
        let k = subset_of(4, i, mask);
        let a = GaussianModel::new(vec![0.0; 4], s.clone(), 1.5, 0.7).unwrap();
        let b = a.with_mu(mu).unwrap();
        prop_assert!((leakage_gaussian(&a, i, &k).unwrap() - leakage_gaussian(&b, i, &k).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn strongest_gaussian_adversary(s in spd(4), range in 0.1f64..5.0, lambda in 0.1f64..5.0, i in 0usize..4) {
        let m = GaussianModel::new(vec![0.0; 4], s, range, lambda).unwrap();
        let k: Vec<usize> = (0..4).filter(|&t| t != i).collect();
        prop_assert!((leakage_gaussian(&m, i, &k).unwrap() - range / lambda).abs() < 1e-12);
    }

    #[test]
    fn diagonal_covariance_ignores_prior(diag in proptest::collection::vec(0.1f64..4.0, 4), i in 0usize..4, mask in 0u32..16) {
        let s: Vec<Vec<f64>> = (0..4).map(|r| (0..4).map(|c| if r == c { diag[r] } else { 0.0 }).collect()).collect();
        let m = GaussianModel::new(vec![0.0; 4], s, 2.0, 1.0).unwrap();
        prop_assert!((leakage_gaussian(&m, i, &subset_of(4, i, mask)).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_numeric(s in spd(3), i in 0usize..3, mask in 0u32..8, lambda in 0.5f64..2.0) {
        let k = subset_of(3, i, mask);
        let m = GaussianModel::new(vec![0.0; 3], s, 1.0, lambda).unwrap();
        let closed = leakage_gaussian(&m, i, &k).unwrap();
        let numeric = pdp_numeric_gaussian(&m, i, &k, 4001).unwrap();
        prop_assert!((closed - numeric).abs() < 1e-3, "{} vs {}", closed, numeric);
    }

    #[test]
    fn g_slope_decreases_inside_unit_band(x in -30.0f64..30.0, b in prop_oneof![Just(0.1f64), Just(1.0), Just(10.0)]) {
        let here = log_g_slope_odds(x, b).unwrap();
        let next = log_g_slope_odds(x + 0.05, b).unwrap();
        prop_assert!(here.is_finite() && next < here);
    }

    #[test]
    fn conditional_covariance_is_psd(s in spd(4), vals in proptest::collection::vec(-3.0f64..3.0, 2)) {
        let m = GaussianModel::new(vec![0.0; 4], s, 1.0, 1.0).unwrap();
        let (_, cov) = conditional_gaussian(&m, &[1, 3], &vals).unwrap();
        let e = SymmetricEigen::new(cov).eigenvalues;
        prop_assert!(e.iter().all(|&v| v >= -1e-9));
    }

    #[test]
    fn whg_generator_is_deterministic_and_bounded(n in 2usize..7, c in -1.0f64..1.0, seed in any::<u64>()) {
        let a = gen_whg_edges(n, c, seed, 2.0).unwrap();
        let b = gen_whg_edges(n, c, seed, 2.0).unwrap();
        let edges = a.materialize();
        prop_assert_eq!(&edges, &b.materialize());
        prop_assert!(edges.iter().all(|e| e.2.abs() <= 1.0 && e.2 * c >= 0.0));
    }

    #[test]
    fn generated_covariance_is_accepted(n in 2usize..8, t in 0.01f64..0.99) {
        let (lo, hi) = covariance_range(n);
        let c = lo + t * (hi - lo);
        let s = gen_covariance(n, c).unwrap();
        prop_assert!(GaussianModel::new(vec![0.0; n], s, 1.0, 1.0).is_ok());
    }

    #[test]
    fn discrete_generator_is_deterministic(n in 2usize..4, target in 0.0f64..0.9, seed in any::<u64>()) {
        let a = gen_discrete_corr(n, target, 2, seed).unwrap();
        let b = gen_discrete_corr(n, target, 2, seed).unwrap();
        prop_assert_eq!(a.0, b.0);
    }
}

#[test]
fn group_privacy_growth_from_constant_edges() {
    // every increment at GS / lambda: linear growth, one per forgotten tuple
    let g = SyntheticWhg::constant(6, 1.0, 1.0).unwrap();
    let (_, r) = search_source(&g, SearchKind::Full, &SearchOptions::default()).unwrap();
    for (k, &m) in r.layer_max.iter().enumerate() {
        assert_eq!(m, (k + 1) as f64);
    }
}

#[test]
fn multi_valued_gamma_has_a_positive_image_when_correlated() {
    // positively correlated 3 x 2 table
    let d = JointDistribution::new(
        vec![vec![0.0, 1.0, 2.0], vec![0.0, 1.0]],
        vec![0.25, 0.05, 0.15, 0.15, 0.05, 0.35],
    )
    .unwrap();
    assert!(d.pearson_corr(0, 1, &Assignment::new()).unwrap() > 0.0);
    let g = gamma_set(&d, 0, 1, &Assignment::new(), 1.0).unwrap();
    let ls = local_sensitivity(&d, &QuerySpec::sum(2), 1).unwrap();
    assert!(g.iter().any(|&v| v > 0.0 && v <= ls));

    let marginals = vec![vec![0.3, 0.3, 0.4], vec![0.5, 0.5]];
    let p = JointDistribution::product(d.domains().to_vec(), &marginals).unwrap();
    assert!(gamma_set(&p, 0, 1, &Assignment::new(), 1.0).unwrap().iter().all(|v| v.abs() < 1e-12));
}
