use num_complex::Complex64;
use proptest::prelude::*;
use rjcf::census::{classify, count_real_schur};
use rjcf::jordan::{closed_form_commutant_dim, codim_orbit, realize, CodimMethod, JordanStructure};
use rjcf::linalg::orthogonal_factor;
use rjcf::perturbation::{perturb, PerturbationPlan, DEFAULT_M_GRID};
use rjcf::rng::{gaussian_matrix, NormalStream};
use rjcf::schur::{eigenvalues, real_schur, spectrum_distance, DEFAULT_MAX_SWEEPS};
use rjcf::Matrix;

fn randn(n: usize, seed: u64, stream: u64) -> Matrix {
    gaussian_matrix(n, &mut NormalStream::new(seed, stream))
}

fn random_orthogonal(n: usize, seed: u64) -> Matrix {
    orthogonal_factor(&randn(n, seed, u64::MAX)).unwrap()
}

#[test]
fn backward_stability_on_10x10() {
    for i in 0..1000 {
        let a = randn(10, 77, i);
        let f = real_schur(&a, DEFAULT_MAX_SWEEPS).unwrap();
        assert!(f.reconstruction_residual(&a).unwrap() / a.frobenius_norm() <= 1e-12 * 10.0);
    }
}

#[test]
fn generic_bundles_fill_the_gaussian_ensemble() {
    for n in 4..=10 {
        let boundary = (0..10_000u64)
            .filter(|&i| classify(&randn(n, 4242, i)).unwrap().boundary)
            .count();
        assert!(
            (boundary as f64) < 1e-3 * 10_000.0,
            "n={n}: {boundary} boundary cases"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn real_count_has_the_parity_of_n(n in 1usize..16, seed in any::<u64>()) {
        let k = count_real_schur(&randn(n, seed, 0)).unwrap();
        prop_assert_eq!(k % 2, n % 2);
    }

    #[test]
    fn classification_is_similarity_invariant(n in 2usize..12, seed in any::<u64>()) {
        let a = randn(n, seed, 0);
        let p = random_orthogonal(n, seed);
        let b = p.transpose().matmul(&a).unwrap().matmul(&p).unwrap();
        let (ca, cb) = (classify(&a).unwrap(), classify(&b).unwrap());
        if !ca.boundary && !cb.boundary {
            prop_assert_eq!(ca.signature, cb.signature);
        }
        let d = spectrum_distance(&eigenvalues(&a).unwrap(), &eigenvalues(&b).unwrap());
        prop_assert!(d <= 1e-8, "distance {}", d);
    }

    #[test]
    fn real_count_is_transpose_invariant(n in 1usize..12, seed in any::<u64>()) {
        let a = randn(n, seed, 0);
        if !classify(&a).unwrap().boundary {
            prop_assert_eq!(count_real_schur(&a).unwrap(), count_real_schur(&a.transpose()).unwrap());
        }
    }

    #[test]
    fn trace_and_determinant_consistency(n in 1usize..14, seed in any::<u64>()) {
        let a = randn(n, seed, 0);
        let ev = eigenvalues(&a).unwrap();
        let re_sum: f64 = ev.iter().map(|e| e.re).sum();
        prop_assert!((re_sum - a.trace()).abs() <= 1e-10 * a.frobenius_norm());
        let prod = ev.iter().fold(Complex64::new(1.0, 0.0), |p, e| p * e);
        prop_assert!(prod.im.abs() <= 1e-8 * prod.norm().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn conjugate_pairs_are_exact(n in 2usize..14, seed in any::<u64>()) {
        let f = real_schur(&randn(n, seed, 0), DEFAULT_MAX_SWEEPS).unwrap();
        let ev = f.eigenvalues();
        let mut pos = 0;
        for &b in f.block_sizes() {
            if b == 2 {
                prop_assert_eq!(ev[pos], ev[pos + 1].conj());
            }
            pos += b;
        }
    }

    #[test]
    fn oracle_agrees_with_closed_form(seed in any::<u64>()) {
        let js = JordanStructure::random(9, seed);
        prop_assert_eq!(codim_orbit(&js, CodimMethod::Oracle).unwrap(), closed_form_commutant_dim(&js));
    }

    #[test]
    fn orbit_codim_is_at_least_n(seed in any::<u64>()) {
        // the commutant always contains the polynomials in A
        let js = JordanStructure::random(12, seed);
        prop_assert!(closed_form_commutant_dim(&js) >= js.dim());
    }

    #[test]
    fn perturbation_keeps_real_eigenvalues(seed in any::<u64>()) {
        let js = JordanStructure::random(8, seed);
        let plan = PerturbationPlan::new(js.clone(), None, DEFAULT_M_GRID.to_vec()).unwrap();
        for &m in plan.m_values() {
            let k = count_real_schur(&perturb(&plan, m).unwrap()).unwrap();
            prop_assert!(k >= js.dim() - 2 * js.pair_dim());
        }
    }

    #[test]
    fn realization_real_count_matches_structure(seed in any::<u64>()) {
        let js = JordanStructure::random(8, seed);
        let a = realize(&js).unwrap();
        // exact block-diagonal input with no repeated eigenvalue across blocks
        if js.reals.iter().all(|g| g.sizes.len() == 1 && g.sizes[0] == 1)
            && js.pairs.iter().all(|g| g.sizes.len() == 1 && g.sizes[0] == 1)
        {
            prop_assert_eq!(count_real_schur(&a).unwrap(), js.real_dim());
        }
    }
}
