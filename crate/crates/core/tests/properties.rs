//! Property tests for the algebraic invariants: conservation and
//! commutativity in the state machine, level-set preservation and sandwich
//! purity in the market module, and the closed-form reductions of the
//! analytics pipeline.

use proptest::prelude::*;
use std::sync::Arc;

use chainq_core::analytics::{
    escape_mass_closed_form, transition_prob, transition_prob_closed_form, EmpiricalQueueInputs,
};
use chainq_core::cfmm::{apply_order, memoryless_sandwich_payoff, CfmmState, Cpmm, MarketOrder};
use chainq_core::orderflow::{geometric_reserve_moments, reserve_moments_wald, OrderSizeLaw};
use chainq_core::state::{apply_translation, BalancedTranslation, TokenBalanceState};

fn cpmm_state(reserve: f64) -> CfmmState {
    let level = reserve * reserve;
    CfmmState::new(reserve, Arc::new(Cpmm::new(level).unwrap())).unwrap()
}

proptest! {
    // Translations that keep every balance strictly positive commute: the
    // final state does not depend on the application order.
    #[test]
    fn translations_commute_when_balances_stay_positive(
        amounts in prop::collection::vec((0u8..4, 0u8..4, 0.0f64..1.0), 1..8),
        rotation in 0usize..8,
    ) {
        let addresses = ["a0", "a1", "a2", "a3"];
        let mut state = TokenBalanceState::new();
        for a in addresses {
            state = state.with_balance(a, "T", 1000.0);
        }
        let translations: Vec<BalancedTranslation> = amounts
            .iter()
            .filter(|(from, to, _)| from != to)
            .map(|(from, to, amt)| {
                BalancedTranslation::new()
                    .with_delta(addresses[*from as usize], "T", -amt)
                    .with_delta(addresses[*to as usize], "T", *amt)
            })
            .collect();
        prop_assume!(!translations.is_empty());

        let apply_all = |order: &[BalancedTranslation]| {
            let mut s = state.clone();
            for t in order {
                s = apply_translation(&s, t).unwrap();
            }
            s
        };
        let forward = apply_all(&translations);
        let mut rotated = translations.clone();
        rotated.rotate_left(rotation % translations.len());
        let shuffled = apply_all(&rotated);
        for a in addresses {
            prop_assert!((forward.balance(a, "T") - shuffled.balance(a, "T")).abs() < 1e-9);
        }
    }

    // Per-token supply never changes, on either branch of the case split.
    #[test]
    fn supply_invariant_under_any_translation_sequence(
        amounts in prop::collection::vec((0u8..3, 0u8..3, 0.0f64..50.0), 1..12),
    ) {
        let addresses = ["x", "y", "z"];
        let mut state = TokenBalanceState::new()
            .with_balance("x", "T", 30.0)
            .with_balance("y", "T", 5.0);
        let supply = state.total_supply("T");
        for (from, to, amt) in amounts {
            if from == to {
                continue;
            }
            let t = BalancedTranslation::new()
                .with_delta(addresses[from as usize], "T", -amt)
                .with_delta(addresses[to as usize], "T", amt);
            state = apply_translation(&state, &t).unwrap();
            prop_assert!((state.total_supply("T") - supply).abs() < 1e-9);
            prop_assert!(addresses.iter().all(|a| state.balance(a, "T") >= 0.0));
        }
    }

    // Any stream of feasible orders stays on the invariant level set.
    #[test]
    fn order_streams_preserve_the_level_set(
        sizes in prop::collection::vec(-5.0f64..5.0, 1..40),
    ) {
        let mut state = cpmm_state(100.0);
        let level = state.level();
        for s in sizes {
            if s == 0.0 {
                continue;
            }
            if let Ok(next) = apply_order(&state, &MarketOrder { signed_amount: s }) {
                state = next;
            }
            let f = state.rule().invariant(state.reserve_a, state.reserve_b);
            prop_assert!((f - level).abs() <= 1e-9 * level);
        }
    }

    // Strict convexity makes every memoryless sandwich strictly profitable,
    // with an exactly zero numeraire coordinate.
    #[test]
    fn cpmm_sandwiches_are_pure_profit(
        reserve in 20.0f64..500.0,
        tau0 in 0.01f64..20.0,
        eps in 0.01f64..20.0,
    ) {
        let state = cpmm_state(reserve);
        let (da, db) = memoryless_sandwich_payoff(&state, tau0, eps);
        prop_assert_eq!(da, 0.0);
        prop_assert!(db > 0.0);
    }

    // The memoryless sandwich leaves the pool exactly where the victim alone
    // would have: neutrality to 1e-12 relative.
    #[test]
    fn memoryless_sandwich_is_state_neutral(
        reserve in 20.0f64..500.0,
        tau0 in 0.01f64..10.0,
        eps in 0.01f64..10.0,
    ) {
        let state = cpmm_state(reserve);
        let victim = MarketOrder::new(tau0).unwrap();
        let plain = apply_order(&state, &victim).unwrap();
        let front = MarketOrder::new(eps).unwrap();
        let back = MarketOrder::new(-eps).unwrap();
        let wrapped = apply_order(
            &apply_order(&apply_order(&state, &front).unwrap(), &victim).unwrap(),
            &back,
        )
        .unwrap();
        prop_assert!((wrapped.reserve_a - plain.reserve_a).abs() <= 1e-12 * plain.reserve_a);
        prop_assert!((wrapped.reserve_b - plain.reserve_b).abs() <= 1e-12 * plain.reserve_b);
    }

    // Lemma route versus closed form on random geometric inputs.
    #[test]
    fn transition_row_reduces_to_closed_form(
        p in 0.01f64..0.99,
        q in 0.01f64..0.99,
        beta in 1usize..=8,
    ) {
        let inputs = EmpiricalQueueInputs::geometric(p, q, beta).unwrap();
        let mut escape = 0.0;
        for k in 0..beta {
            let lemma = transition_prob(&inputs, k).unwrap();
            let closed = transition_prob_closed_form(p, q, k);
            prop_assert!((lemma - closed).abs() <= 1e-9);
            escape += lemma;
        }
        prop_assert!((escape - escape_mass_closed_form(p, q, beta)).abs() <= 1e-9);
    }

    // The geometric specialisation agrees with the general Wald identities.
    #[test]
    fn geometric_moments_specialise_wald(p in 0.0f64..0.95, l in 0.1f64..10.0) {
        let law = OrderSizeLaw::UniformSymmetric { l };
        let e_k = p / (1.0 - p);
        let var_k = p / ((1.0 - p) * (1.0 - p));
        let (shift, var) = reserve_moments_wald(e_k, var_k, &law);
        let (mean, var2) = geometric_reserve_moments(p, &law, 42.0);
        prop_assert!((mean - (42.0 + shift)).abs() < 1e-9);
        prop_assert!((var - var2).abs() < 1e-9);
    }
}
