mod common;

use mcompare::bounds::{self, comparison_factor, delta_sweep, half_e, TheoremId};
use mcompare::flows::{self, FlowPath};
use mcompare::generators;
use mcompare::mixing;
use mcompare::spectral;
use mcompare::{Chain, Flow};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

fn reversible_pair() -> impl Strategy<Value = (Chain, Chain)> {
    (3usize..=8, any::<u64>()).prop_map(|(n, seed)| generators::random_reversible_pair(n, seed).unwrap())
}

fn nonreversible() -> impl Strategy<Value = Chain> {
    (3usize..=8, any::<u64>()).prop_map(|(n, seed)| generators::random_nonreversible(n, seed).unwrap())
}

fn any_chain() -> impl Strategy<Value = Chain> {
    prop_oneof![reversible_pair().prop_map(|(a, _)| a), nonreversible()]
}

/// Row-normalized random matrix with a directed ring and one self-loop, so
/// the chain is ergodic.
fn raw_chain() -> impl Strategy<Value = Chain> {
    (3usize..=7)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(prop::option::weighted(0.6, 0.01f64..1.0), n * n)))
        .prop_map(|(n, cells)| {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let mut row: Vec<f64> = (0..n).map(|j| cells[i * n + j].unwrap_or(0.0)).collect();
                    row[(i + 1) % n] += 0.5;
                    if i == 0 {
                        row[0] += 0.1;
                    }
                    let total: f64 = row.iter().sum();
                    row.iter().map(|v| v / total).collect()
                })
                .collect();
            Chain::from_rows("raw", &rows).unwrap()
        })
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Prefixes every path that does not already use its source's self-loop
/// with two traversals of it; parity and validity are preserved.
fn detour(flow: &Flow) -> Flow {
    flow.map_paths(|path| {
        let s = path.source();
        if path.edge_count(s, s) == 0 {
            let mut states = vec![s, s];
            states.extend_from_slice(&path.states);
            FlowPath::new(states, path.mass)
        } else {
            path.clone()
        }
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn chain_invariants(chain in raw_chain()) {
        let pi_p = chain.p().left_mul_vec(chain.pi());
        prop_assert!(max_abs(&pi_p, chain.pi()) <= 1e-10);
        for i in 0..chain.n() {
            prop_assert!((chain.p().row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        let back = chain.time_reversal().unwrap().time_reversal().unwrap();
        prop_assert!(back.p().max_abs_diff(chain.p()) <= 1e-12);
        let lazy = chain.lazy();
        prop_assert!(max_abs(lazy.pi(), chain.pi()) <= 1e-12);
        prop_assert!(lazy.classify().aperiodic);
        prop_assert!(chain.reversibilize().unwrap().classify().reversible);
    }

    #[test]
    fn reversibilization_preserves_forms(chain in any_chain(), seed in any::<u64>()) {
        let hat = chain.reversibilize().unwrap();
        let mut rng = common::rng(seed);
        for _ in 0..100 {
            let phi = common::random_phi(&mut rng, chain.n());
            let e = spectral::dirichlet_form(&chain, &phi).unwrap();
            let f = spectral::f_form(&chain, &phi).unwrap();
            prop_assert!((spectral::dirichlet_form(&hat, &phi).unwrap() - e).abs() <= 1e-10);
            prop_assert!((spectral::f_form(&hat, &phi).unwrap() - f).abs() <= 1e-10);
            prop_assert!((common::dirichlet(&chain, &phi) - e).abs() <= 1e-10);
        }
    }

    #[test]
    fn rayleigh_quotients_bound_poincare_constants(chain in any_chain(), seed in any::<u64>()) {
        let lambdas = spectral::lambda_constants(&chain).unwrap();
        let mut rng = common::rng(seed);
        for _ in 0..200 {
            let phi = common::random_phi(&mut rng, chain.n());
            let var = spectral::variance(chain.pi(), &phi).unwrap();
            prop_assert!((var - common::pairwise_variance(chain.pi(), &phi)).abs() <= 1e-10 * var.max(1.0));
            let e = spectral::dirichlet_form(&chain, &phi).unwrap();
            let f = spectral::f_form(&chain, &phi).unwrap();
            prop_assert!(e / var >= lambdas.lambda1 - 1e-9);
            prop_assert!(f / var >= lambdas.lambda_n1 - 1e-9);
        }
    }

    #[test]
    fn cheeger_sandwich(chain in any_chain()) {
        let lambda = spectral::lambda_constants(&chain).unwrap().lambda1;
        let phi = spectral::conductance(&chain).unwrap().phi;
        prop_assert!((phi - common::conductance_by_cuts(&chain)).abs() <= 1e-12);
        prop_assert!(lambda <= phi + 1e-12);
        prop_assert!(lambda >= phi * phi / 8.0 - 1e-12);
    }

    #[test]
    fn reconstruction_matches_powers((chain, _) in reversible_pair()) {
        let summary = spectral::eigendecompose(&chain).unwrap();
        for (t, direct) in common::powers(chain.p(), 20).iter().enumerate() {
            prop_assert!(spectral::reconstruct_power(&summary, chain.pi(), t as u32).max_abs_diff(direct) <= 1e-9);
        }
    }

    #[test]
    fn discrete_mixing_matches_powers(chain in raw_chain(), eps in 0.01f64..0.5) {
        for x in 0..chain.n() {
            let t = mixing::discrete_mixing_time(&chain, x, eps).unwrap();
            let oracle = common::mixing_time_by_powers(&chain, x, eps, 100_000).unwrap();
            prop_assert_eq!(t.time.as_f64() as u64, oracle);
        }
    }

    #[test]
    fn submultiplicativity(chain in any_chain()) {
        let d = mixing::d_profile(&chain, 100).unwrap();
        for s in 1..=50 {
            for t in 1..=50 {
                prop_assert!(d[s + t - 1] <= 2.0 * d[s - 1] * d[t - 1] + 1e-12);
            }
        }
    }

    #[test]
    fn exponential_is_stochastic_and_matches_uniformization(chain in any_chain()) {
        let q = chain.rate_matrix();
        for t in [0.1, 1.0, 10.0] {
            let k = mixing::matrix_exponential(&q, t).unwrap();
            for i in 0..chain.n() {
                prop_assert!((k.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                prop_assert!(k.row(i).iter().all(|&v| v >= -1e-12));
            }
            prop_assert!(k.max_abs_diff(&common::uniformized_exp(chain.p(), t)) <= 1e-10);
        }
    }

    #[test]
    fn continuous_mixing_is_first_crossing(chain in any_chain(), eps in 0.05f64..0.45) {
        let result = mixing::continuous_mixing_time(&chain, mixing::Start::State(0), eps).unwrap();
        let t = result.time.as_f64();
        let dist = |s: f64| {
            let k = common::uniformized_exp(chain.p(), s);
            common::tv_half_l1(k.row(0), chain.pi())
        };
        prop_assert!(dist(t) <= eps + 1e-9);
        if t > 1e-3 {
            prop_assert!(dist(t * (1.0 - 1e-4) - 1e-6) > eps - 1e-9);
        }
    }

    #[test]
    fn flows_compare_forms((base, target) in reversible_pair(), seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for odd in [false, true] {
            let flow = flows::build_canonical_flow(&base, &target, odd).unwrap();
            let validation = flows::validate_flow(&flow).unwrap();
            prop_assert!(validation.valid);
            if odd {
                prop_assert!(flow.paths().iter().all(|p| p.len() % 2 == 1));
            }
            let a = flows::edge_congestion(&flow).unwrap().max;
            prop_assert!((a - common::congestion_by_paths(&flow)).abs() <= 1e-9 * a.max(1.0));
            for _ in 0..100 {
                let phi = common::random_phi(&mut rng, base.n());
                prop_assert!(common::dirichlet(&target, &phi) <= a * common::dirichlet(&base, &phi) + 1e-9);
                if odd {
                    prop_assert!(common::f_form(&target, &phi) <= a * common::f_form(&base, &phi) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn spreading_bound((base, target) in (3usize..=5, any::<u64>())
        .prop_map(|(n, s)| generators::random_reversible_pair(n, s).unwrap()))
    {
        let flow = flows::build_canonical_flow(&base, &target, false).unwrap();
        let state = flows::state_congestion(&flow).unwrap();
        let spread = flows::spread_flow(&flow).unwrap();
        prop_assert!(flows::validate_flow(&spread).unwrap().valid);
        prop_assert!(flows::edge_congestion(&spread).unwrap().max <= 8.0 * state.kappa * state.max + 1e-9);
    }

    #[test]
    fn detours_never_tighten_the_comparison_bound((base, target) in reversible_pair()) {
        let flow = flows::build_canonical_flow(&base, &target, true).unwrap();
        let longer = detour(&flow);
        prop_assert!(flows::validate_flow(&longer).unwrap().odd);
        let bound = |f: &Flow| {
            bounds::comparison_reversible(&base, &target, f, 0, 0.25, half_e())
                .unwrap()
                .into_iter()
                .find(|e| e.theorem == TheoremId::T8)
                .and_then(|e| e.bound)
                .unwrap()
        };
        prop_assert!(bound(&longer) >= bound(&flow) - 1e-12);
    }

    #[test]
    fn delta_sweep_reports_the_minimum((base, target) in reversible_pair()) {
        let flow = flows::build_canonical_flow(&base, &target, true).unwrap();
        let entries = bounds::comparison_reversible_with_sweep(&base, &target, &flow, 0, 0.1, half_e(), true).unwrap();
        let sweep = entries.iter().find(|e| e.theorem == TheoremId::T8Sweep).unwrap();
        let a = flows::edge_congestion(&flow).unwrap().max;
        let log_term = (1.0 / (0.1 * base.pi()[0])).ln();
        let candidates: Vec<f64> = delta_sweep()
            .iter()
            .map(|&d| {
                let t = mixing::discrete_mixing_time_all(&target, d).unwrap().time.as_f64();
                comparison_factor(a, t, d) * log_term
            })
            .collect();
        prop_assert!(candidates.iter().all(|c| c.is_finite()));
        let min = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!((sweep.bound.unwrap() - min).abs() <= 1e-12 * min);
        prop_assert!(sweep.holds);
    }

    #[test]
    fn t10_matches_t8_for_nonnegative_spectra((base, target) in reversible_pair()) {
        let (base, target) = (base.lazy(), target.lazy());
        let flow = flows::build_canonical_flow(&base, &target, true).unwrap();
        let entries = bounds::comparison_reversible(&base, &target, &flow, 0, 0.25, 0.1).unwrap();
        let find = |id| entries.iter().find(|e| e.theorem == id).unwrap().clone();
        let (t8, t10) = (find(TheoremId::T8), find(TheoremId::T10));
        prop_assert!(t10.applicable);
        prop_assert_eq!(t8.bound, t10.bound);
    }

    #[test]
    fn reports_hold_on_random_chains(chain in raw_chain(), eps in 0.01f64..0.3) {
        let report = bounds::full_report(&chain, None, bounds::ReportOptions { eps, ..Default::default() }).unwrap();
        let violations: Vec<_> = report.violations().map(|e| e.theorem.label()).collect();
        prop_assert!(violations.is_empty(), "{:?}", violations);
    }
}
