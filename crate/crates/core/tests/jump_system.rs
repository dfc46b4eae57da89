mod common;

use common::*;
use proptest::prelude::*;
use switchcert::{spectral_radius, LabelWord, Matrix};

#[test]
fn h_comparison_radii() {
    let sys = h_system();
    let xi = sys.graph().invariant_measure().unwrap();
    let b = sys.averaged_matrix(&xi);
    let expect = Matrix::from_row_slice(2, 2, &[19.0 / 22.0, 3.0 / 11.0, 4.0 / 55.0, 19.0 / 22.0]);
    assert!((b - expect).amax() < 1e-15);
    // ρ(B) = 19/22 + √(12/605)
    let rho = 19.0 / 22.0 + (12.0f64 / 605.0).sqrt();
    assert!((spectral_radius(&sys.averaged_matrix(&xi)).unwrap() - rho).abs() < 1e-12);
    assert!(sys.mean_square_operator_radius().unwrap() > 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn word_products_concatenate(seed in any::<u64>(), a in 0usize..4, b in 0usize..4) {
        let sys = random_system(seed, 3, 3, 3, false);
        let mut r = rng(seed);
        let m = sys.graph().alphabet();
        let pick = |r: &mut rand_chacha::ChaCha8Rng, n: usize| {
            use rand::Rng;
            LabelWord::from_oldest_first((0..n).map(|_| r.gen_range(1..=m)).collect())
        };
        let first = pick(&mut r, a);
        let later = pick(&mut r, b);
        let joined = sys.word_product(&first.then(&later));
        let split = sys.word_product(&later) * sys.word_product(&first);
        prop_assert!((joined - split).amax() < 1e-12);
    }

    #[test]
    fn mean_square_radius_is_similarity_invariant(seed in any::<u64>()) {
        let sys = random_system(seed, 3, 2, 2, false);
        let t = Matrix::from_row_slice(2, 2, &[1.0, 0.3, -0.2, 0.8]);
        let ti = t.clone().try_inverse().unwrap();
        let similar = switchcert::SwitchedSystem::new(
            sys.graph().clone(),
            sys.matrices().iter().map(|a| &t * a * &ti).collect(),
        ).unwrap();
        let x = sys.mean_square_operator_radius().unwrap();
        let y = similar.mean_square_operator_radius().unwrap();
        prop_assert!((x - y).abs() < 1e-8 * x.max(1.0));
    }

    #[test]
    fn spectral_radius_matches_eigenvalues(seed in any::<u64>(), n in 1usize..=5) {
        let m = random_matrices(&mut rng(seed), 1, n, false, 1.0).remove(0);
        let rho = spectral_radius(&m).unwrap();
        // ρ(A) = lim ‖A^k‖^{1/k}; Gelfand at k = 512 with renormalization.
        let mut p = m.clone();
        let mut log = 0.0;
        for _ in 0..9 {
            p = &p * &p;
            let s = p.norm();
            if s == 0.0 { break; }
            p /= s;
            log = 2.0 * log + s.ln();
        }
        let gelfand = (log / 512.0).exp();
        prop_assert!((rho - gelfand).abs() < 0.02 * rho.max(1e-3), "{} vs {}", rho, gelfand);
    }
}

#[test]
fn mean_square_radius_on_periodic_graph() {
    // Regression: a two-cycle gives an operator with ±λ eigenvalue pairs.
    let sys = random_system(7833447364674878061, 3, 2, 2, false);
    let x = sys.mean_square_operator_radius().unwrap();
    let a = sys.matrix(1);
    let aa = (a * a).transpose();
    let expected = switchcert::spectral_radius(&aa.kronecker(&aa)).unwrap().sqrt().sqrt();
    assert!((x - expected).abs() < 1e-10, "{x} vs {expected}");
}
