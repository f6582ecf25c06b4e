mod common;

use common::random_generic;
use nahm_core::basis::relative_difference;
use nahm_core::basis_direct::solve_basis_direct;
use nahm_core::basis_lagrange::solve_all_lagrange;
use nahm_core::inner_product::pairing_at;
use nahm_core::linalg::{eigenvalues, multiset_distance};
use nahm_core::nahm::{frame, lax_at, nahm_residuals, Solver};
use nahm_core::spectral::Spectral;
use nahm_core::Quad;
use num_complex::Complex64;
use proptest::prelude::*;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn basis_satisfies_matching_conditions(n in 2usize..5, seed in 0u64..10_000, s in 0.2f64..4.0) {
        let sp = Spectral::<Quad>::new(&random_generic(n, seed, 0.4)).unwrap();
        let b = solve_basis_direct(&sp, s).unwrap();
        prop_assert!(b.matching_residual(&sp) < 1e-20, "{}", b.matching_residual(&sp));
        prop_assert!(b.pattern_residual() < 1e-25);
    }

    #[test]
    fn solvers_agree(n in 2usize..5, seed in 0u64..10_000, s in 0.2f64..5.0) {
        let sp = Spectral::<Quad>::new(&random_generic(n, seed, 0.4)).unwrap();
        let a = solve_basis_direct(&sp, s).unwrap();
        let b = solve_all_lagrange(&sp, s).unwrap();
        prop_assert!(relative_difference(&a, &b) < 1e-8);
    }

    #[test]
    fn pairing_is_hermitian(n in 2usize..5, seed in 0u64..10_000, s in 0.2f64..3.0, re in -0.6f64..0.6, im in -0.6f64..0.6) {
        let sp = Spectral::<f64>::new(&random_generic(n, seed, 0.4)).unwrap();
        let b = solve_basis_direct(&Spectral::<Quad>::new(&sp.config()).unwrap(), s).unwrap().to_f64();
        let z = Complex64::new(re, im);
        prop_assume!(sp.nearest_double_point(z).map_or(true, |(_, _, d)| d > 1e-3));
        for i in 0..n {
            for j in 0..n {
                let pij = pairing_at(&sp, &b.rows[i], &b.rows[j], z).unwrap();
                let pji = pairing_at(&sp, &b.rows[j], &b.rows[i], z).unwrap();
                prop_assert!((pij - pji.conj()).norm() <= 1e-9 * pij.norm().max(1.0));
            }
        }
    }

    #[test]
    fn lax_matrix_is_isospectral(n in 2usize..5, seed in 0u64..10_000, s in 0.3f64..4.0, re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let sp = Spectral::<Quad>::new(&random_generic(n, seed, 0.4)).unwrap();
        let z = Complex64::new(re, im);
        prop_assume!(sp.nearest_double_point(sp.zeta(z)).map_or(true, |(_, _, d)| d > 1e-3));
        let fr = frame(&sp, s, Solver::Direct).unwrap();
        let l = lax_at(&sp, &fr, z, false).unwrap().l.to_f64();
        let spf = sp.to_f64();
        let want: Vec<Complex64> = (0..n).map(|j| spf.p(j, z)).collect();
        let scale = want.iter().map(|v| v.norm()).fold(1.0, f64::max);
        prop_assert!(multiset_distance(&eigenvalues(&l), &want) <= 1e-8 * scale);
    }
}

proptest! {
    #![proptest_config(cases(8))]

    #[test]
    fn central_difference_is_second_order(n in 2usize..4, seed in 0u64..10_000, s in 0.5f64..3.0) {
        let sp = Spectral::<Quad>::new(&random_generic(n, seed, 0.5)).unwrap();
        let h = 1e-3;
        let r1 = nahm_residuals(&sp, s, h, Solver::Direct).unwrap().into_iter().fold(0.0, f64::max);
        let r2 = nahm_residuals(&sp, s, h / 2.0, Solver::Direct).unwrap().into_iter().fold(0.0, f64::max);
        prop_assume!(r1 > 1e-20);
        let ratio = r1 / r2;
        prop_assert!((3.5..=4.5).contains(&ratio), "ratio {}", ratio);
    }
}
