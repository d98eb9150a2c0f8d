use bnf_core::schedule::{normalized_degree, Family};
use bnf_core::{check_convergence_chain, majorant_recursion, ConstantsSchedule};
use proptest::prelude::*;

/// `S_j` straight from the definition, quadratic in `m`.
fn recursion_by_definition(p: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = Vec::with_capacity(p.len());
    for (j, &pj) in p.iter().enumerate() {
        let tail: f64 = (1..=j).map(|i| 0.25f64.powi(i as i32) * s[j - i]).sum();
        s.push(pj + tail);
    }
    s
}

fn suite() -> impl Strategy<Value = (f64, Vec<f64>)> {
    (1e-9f64..10.0, prop::collection::vec(0.0f64..=1.0, 1..200))
        .prop_map(|(eps, u)| (eps, u.into_iter().map(|x| x * eps).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn recursion_is_bounded_by_twice_epsilon((eps, p) in suite()) {
        let s = majorant_recursion(&p, eps).unwrap();
        prop_assert!(s.iter().all(|&x| x <= 2.0 * eps));
        for j in 1..s.len() {
            prop_assert!(s[j] <= (p[j] + s[j - 1] / 2.0) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn linear_evaluation_matches_definition((eps, p) in suite()) {
        let fast = majorant_recursion(&p, eps).unwrap();
        let slow = recursion_by_definition(&p);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-13 * eps);
        }
    }

    #[test]
    fn constants_follow_closed_forms(dim in 1usize..=8, rho0 in 0.01f64..=1.0, horizon in 1usize..=62) {
        let s = ConstantsSchedule::build(dim, rho0, horizon).unwrap();
        let kappa = dim as i32 + 6;
        prop_assert_eq!(s.kappa, kappa);
        prop_assert_eq!(s.b, 2f64.powi(-(kappa + 3)));
        prop_assert_eq!(s.delta[0], rho0 * s.b / 8.0);
        for n in 0..=horizon {
            prop_assert_eq!(s.m[n], (1usize << n) + 1);
            prop_assert_eq!(normalized_degree(n), s.m[n]);
            prop_assert!(s.rho[n] > 0.0 && s.delta[n] > 0.0);
        }
        // Σ_{k ≤ H} δ_k + δ_H = 2δ_0 for a halving sequence
        let total: f64 = s.delta.iter().sum::<f64>() + s.delta[horizon];
        prop_assert!((total - 2.0 * s.delta[0]).abs() <= 1e-15 * 2.0 * s.delta[0]);
    }

    /// `ρ_∞ ≥ (ρ_H − 6δ_H)(2b)^{2^{−H}}` from the tails `Σ_{n≥H} 3δ_n` and `Π_{n≥H} q_n`.
    #[test]
    fn limit_radius_is_bracketed(dim in 1usize..=8, rho0 in 0.01f64..=1.0, horizon in 5usize..=62) {
        let s = ConstantsSchedule::build(dim, rho0, horizon).unwrap();
        prop_assert!(s.rho.windows(2).all(|w| w[1] <= w[0]));
        let h = horizon;
        let lower = (s.rho[h] - 6.0 * s.delta[h]) * (2.0 * s.b).powf(2f64.powi(-(h as i32)));
        prop_assert!(s.b * rho0 < lower && s.rho[h] < rho0);
    }

    #[test]
    fn ledger_passes_within_paper_range(dim in 1usize..=6, rho0 in 0.05f64..=1.0, horizon in 1usize..=40) {
        let s = ConstantsSchedule::build(dim, rho0, horizon).unwrap();
        let ledger = check_convergence_chain(&s);
        prop_assert!(ledger.all_pass());
        for f in Family::ALL {
            prop_assert_eq!(ledger.family(f).count(), horizon);
        }
    }
}
