mod common;

use common::*;
use proptest::prelude::*;
use switchcert::{lift_distribution, path_lift, step_lift, LabelWord, SwitchedSystem};

fn random_lift_system(seed: u64) -> SwitchedSystem {
    random_system(seed, 4, 3, 2, false)
}

#[test]
fn path_lift_degree_two_of_h() {
    let lift = path_lift(&h_system(), 2).unwrap();
    assert_eq!(lift.system.graph().node_count(), 8);
    assert_eq!(lift.system.graph().edges().len(), 16);
    let xi = h_graph().invariant_measure().unwrap();
    let pushed = lift_distribution(&lift, &xi).unwrap();
    let stationary = lift.system.graph().invariant_measure().unwrap();
    for (x, y) in pushed.weights().iter().zip(stationary.weights()) {
        assert!((x - y).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn step_lift_transition_is_power(seed in any::<u64>(), k in 1usize..=3) {
        let sys = random_lift_system(seed);
        let p = sys.graph().exact_transition_matrix().unwrap();
        let lifted = step_lift(&sys, k).unwrap();
        prop_assert_eq!(lifted.system.graph().exact_transition_matrix().unwrap(), rational_pow(&p, k));
    }

    #[test]
    fn step_lift_preserves_word_measures(seed in any::<u64>(), k in 1usize..=3, words in 1usize..=2) {
        let sys = random_lift_system(seed);
        let g = sys.graph();
        let xi = random_distribution(&mut rng(seed ^ 1), g);
        let lifted = step_lift(&sys, k).unwrap();
        for w in LabelWord::all(g.alphabet(), words * k) {
            let lw = lifted.lift_word(&w).unwrap();
            prop_assert_eq!(lw.len(), words);
            let lhs = lifted.system.graph().cylinder_measure(&xi, &lw);
            prop_assert!((lhs - g.cylinder_measure(&xi, &w)).abs() < 1e-12);
        }
    }

    #[test]
    fn step_lift_matrices_are_word_products(seed in any::<u64>(), k in 1usize..=3) {
        let sys = random_lift_system(seed);
        let lifted = step_lift(&sys, k).unwrap();
        for label in 1..=lifted.system.graph().alphabet() {
            let w = lifted.word_of(label);
            prop_assert!((lifted.system.matrix(label) - sys.word_product(w)).amax() < 1e-12);
        }
    }

    #[test]
    fn lifts_stay_strongly_connected(seed in any::<u64>(), k in 1usize..=3, r in 1usize..=2) {
        let sys = random_lift_system(seed);
        prop_assert!(path_lift(&sys, r).unwrap().system.graph().is_strongly_connected());
        // A step lift of a periodic graph can split into classes; the lift
        // restricted to any class is still usable, so only check when the
        // graph has a self-loop (aperiodic).
        let g = sys.graph();
        if g.edges().iter().any(|e| e.from == e.to) {
            prop_assert!(step_lift(&sys, k).unwrap().system.graph().is_strongly_connected());
        }
    }

    #[test]
    fn path_lift_measure_identity(seed in any::<u64>(), r in 1usize..=2, len in 0usize..=4) {
        let sys = random_lift_system(seed);
        let g = sys.graph();
        let xi = random_distribution(&mut rng(seed ^ 2), g);
        let lift = path_lift(&sys, r).unwrap();
        let xi_r = lift_distribution(&lift, &xi).unwrap();
        for w in LabelWord::all(g.alphabet(), len) {
            let lhs = lift.system.graph().cylinder_measure(&xi_r, &w);
            let rhs = g.shift_preimage_measure(&xi, &w, r).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn lifted_invariant_measure_is_pushforward(seed in any::<u64>(), r in 1usize..=2) {
        let sys = random_lift_system(seed);
        let xi = sys.graph().invariant_measure().unwrap();
        let lift = path_lift(&sys, r).unwrap();
        let pushed = lift_distribution(&lift, &xi).unwrap();
        let stationary = lift.system.graph().invariant_measure().unwrap();
        for (x, y) in pushed.weights().iter().zip(stationary.weights()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn path_lifts_compose(seed in any::<u64>()) {
        // (G_1)_1 and G_2 are isomorphic: same size and the same multiset of
        // (label, probability) edges, and the same lifted measures.
        let sys = random_lift_system(seed);
        let twice = path_lift(&path_lift(&sys, 1).unwrap().system, 1).unwrap();
        let direct = path_lift(&sys, 2).unwrap();
        let (a, b) = (twice.system.graph(), direct.system.graph());
        prop_assert_eq!(a.node_count(), b.node_count());
        let key = |g: &switchcert::StochasticGraph| {
            let mut v: Vec<(u32, String)> = g.edges().iter().map(|e| (e.label, e.prob.to_string())).collect();
            v.sort();
            v
        };
        prop_assert_eq!(key(a), key(b));
        let xa = a.invariant_measure().unwrap();
        let xb = b.invariant_measure().unwrap();
        for w in LabelWord::all(sys.graph().alphabet(), 3) {
            prop_assert!((a.cylinder_measure(&xa, &w) - b.cylinder_measure(&xb, &w)).abs() < 1e-12);
        }
    }
}
