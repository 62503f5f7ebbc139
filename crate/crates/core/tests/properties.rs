mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use common::{commuting_family, random_lambda, random_tuple, rng};
use qjae::eigenbasis::{diagonal_estimates, rotate_basis};
use qjae::linalg::{random_orthogonal, random_symmetric, sorted_symmetric_eigen};
use qjae::mor::{
    build_gram_tuple, generate_commuting_pair, random_x0, reduce, simulate_full, simulate_reduced,
};
use qjae::quadps::stacked_residual;
use qjae::{
    build_l, build_m, build_q, mu_quadratic, residual, symmetrize, truncated_joint_eigenbasis, EigenbasisOptions,
    Kernel, LambdaPoint, PartialIsometry, Selector, SymmetricTuple,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetrize_is_idempotent(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rand::Rng::random_range(&mut r, -5.0..5.0));
        let once = symmetrize(&a);
        prop_assert_eq!(symmetrize(&once), once.clone());
        prop_assert_eq!(once.clone(), once.transpose());
    }

    #[test]
    fn stored_tuples_are_bitwise_symmetric(seed in any::<u64>(), n in 1usize..10, d in 1usize..4) {
        let mut r = rng(seed);
        let noisy: Vec<DMatrix<f64>> = (0..d)
            .map(|_| {
                let mut m = random_symmetric(n, &mut r);
                for j in 0..n {
                    for i in (j + 1)..n {
                        m[(i, j)] += 1e-14 * rand::Rng::random_range(&mut r, -1.0..1.0);
                    }
                }
                m
            })
            .collect();
        let t = SymmetricTuple::new(noisy).unwrap();
        for m in t.matrices() {
            prop_assert_eq!(m.clone(), m.transpose());
        }
    }

    #[test]
    fn stacked_gram_equals_q(seed in any::<u64>(), n in 1usize..12, d in 1usize..5) {
        let mut r = rng(seed);
        let t = random_tuple(n, d, &mut r);
        let lambda = LambdaPoint::new(random_lambda(d, 3.0, &mut r));
        let m = build_m(&t, &lambda).unwrap();
        let q = build_q(&t, &lambda).unwrap();
        let diff = (m.tr_mul(&m) - &q).amax();
        prop_assert!(diff <= 1e-10 * (1.0 + q.amax()));
        prop_assert_eq!(build_l(&t, &lambda).unwrap(), q);
    }

    #[test]
    fn kernels_agree(seed in any::<u64>(), n in 1usize..=32, d in 1usize..=4) {
        let mut r = rng(seed);
        let t = random_tuple(n, d, &mut r);
        let lambda = LambdaPoint::new(random_lambda(d, 4.0, &mut r));
        let svd = mu_quadratic(&t, &lambda, Kernel::StackedSvd).unwrap().mu;
        let eig = mu_quadratic(&t, &lambda, Kernel::SquaredEig).unwrap().mu;
        prop_assert!((svd - eig).abs() <= 1e-7 * (1.0 + svd));
    }

    #[test]
    fn mu_result_invariants(seed in any::<u64>(), n in 1usize..12, d in 1usize..4) {
        let mut r = rng(seed);
        let t = random_tuple(n, d, &mut r);
        let lambda = LambdaPoint::new(random_lambda(d, 3.0, &mut r));
        let q = build_q(&t, &lambda).unwrap();
        for kernel in [Kernel::StackedSvd, Kernel::SquaredEig] {
            let m = mu_quadratic(&t, &lambda, kernel).unwrap();
            prop_assert!(m.mu >= 0.0);
            prop_assert!((m.witness.norm() - 1.0).abs() <= 1e-12);
            let first = m.witness.iter().find(|x| **x != 0.0).copied().unwrap();
            prop_assert!(first > 0.0);
            let rayleigh = m.witness.dot(&(&q * &m.witness));
            prop_assert!((m.mu * m.mu - rayleigh).abs() <= 1e-8 * (1.0 + rayleigh.abs()));
            let res = stacked_residual(&t, &lambda, &m.witness).unwrap();
            prop_assert!((res - m.mu).abs() <= 1e-7 * (1.0 + m.mu));
        }
    }

    #[test]
    fn mu_is_one_lipschitz(seed in any::<u64>(), n in 1usize..=16, d in 1usize..=4, step in 1e-4f64..2.0) {
        let mut r = rng(seed);
        let t = random_tuple(n, d, &mut r);
        let a = random_lambda(d, 4.0, &mut r);
        let b: Vec<f64> = a.iter().map(|x| x + step * rand::Rng::random_range(&mut r, -1.0..1.0)).collect();
        let (a, b) = (LambdaPoint::new(a), LambdaPoint::new(b));
        let ma = mu_quadratic(&t, &a, Kernel::default()).unwrap().mu;
        let mb = mu_quadratic(&t, &b, Kernel::default()).unwrap().mu;
        prop_assert!((ma - mb).abs() <= a.distance(&b) + 1e-9);
    }

    #[test]
    fn translation_covariance(seed in any::<u64>(), n in 1usize..10, d in 1usize..4) {
        let mut r = rng(seed);
        let t = random_tuple(n, d, &mut r);
        let lambda = random_lambda(d, 2.0, &mut r);
        let delta = random_lambda(d, 2.0, &mut r);
        let moved: Vec<f64> = lambda.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let shifted = SymmetricTuple::new(
            t.matrices().iter().zip(&delta).map(|(x, s)| x - DMatrix::identity(n, n) * *s).collect(),
        )
        .unwrap();
        let lhs = build_q(&t, &LambdaPoint::new(moved)).unwrap();
        let rhs = build_q(&shifted, &LambdaPoint::new(lambda)).unwrap();
        prop_assert!((lhs - rhs).amax() <= 1e-10 * (1.0 + t.matrices().iter().map(|m| m.amax()).fold(0.0, f64::max)).powi(2));
    }

    #[test]
    fn diagonal_lambdas_minimize_residual(seed in any::<u64>(), n in 2usize..10, d in 1usize..4) {
        let mut r = rng(seed);
        let t = random_tuple(n, d, &mut r);
        let k = 1 + (seed as usize) % n;
        let v = PartialIsometry::new(random_orthogonal(n, &mut r).columns(0, k).into_owned()).unwrap();
        let best = diagonal_estimates(&t, &v);
        let base = residual(&t, &v, &best).unwrap();
        for _ in 0..10 {
            let perturbed: Vec<Vec<f64>> = best
                .iter()
                .map(|row| row.iter().map(|x| x + rand::Rng::random_range(&mut r, -0.5..0.5)).collect())
                .collect();
            prop_assert!(residual(&t, &v, &perturbed).unwrap() >= base - 1e-12 * (1.0 + base));
        }
    }

    #[test]
    fn columns_never_beat_mu(seed in any::<u64>(), n in 2usize..12, d in 1usize..4) {
        let mut r = rng(seed);
        let t = random_tuple(n, d, &mut r);
        let k = 1 + (seed as usize) % n;
        let res = truncated_joint_eigenbasis(
            &t,
            &LambdaPoint::new(random_lambda(d, 2.0, &mut r)),
            &EigenbasisOptions::new(k, 1e-8, Selector::Smallest),
        )
        .unwrap();
        let v = res.v.matrix();
        let mut total = 0.0;
        for i in 0..k {
            let at = LambdaPoint::new((0..d).map(|j| res.lambdas[j][i]).collect());
            let col: DVector<f64> = v.column(i).into_owned();
            let err = stacked_residual(&t, &at, &col).unwrap();
            total += err * err;
            let mu = mu_quadratic(&t, &at, Kernel::StackedSvd).unwrap().mu;
            prop_assert!(err >= mu - 1e-8);
        }
        prop_assert!((total - res.residual_sq).abs() <= 1e-10 * (1.0 + total));
        prop_assert!(res.v.orthonormality_error() <= 1e-12);
        for j in 0..d {
            let c = v.tr_mul(&(t.get(j) * v));
            for i in 0..k {
                prop_assert!((c[(i, i)] - res.lambdas[j][i]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn single_matrix_pipeline_reproduces_eigenpairs(seed in any::<u64>(), n in 2usize..14) {
        let mut r = rng(seed);
        let x = random_symmetric(n, &mut r);
        let t = SymmetricTuple::new(vec![x.clone()]).unwrap();
        let oracle = sorted_symmetric_eigen(&x).unwrap();
        let res = truncated_joint_eigenbasis(
            &t,
            &LambdaPoint::zeros(1),
            &EigenbasisOptions::new(n, 1e-10, Selector::Smallest),
        )
        .unwrap();
        let mut got = res.lambdas[0].clone();
        got.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(oracle.values.iter()) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
        for i in 0..n {
            let v = res.v.matrix().column(i);
            prop_assert!((&x * v - v * res.lambdas[0][i]).norm() <= 1e-8);
        }
    }

    #[test]
    fn rotating_the_start_basis_leaves_residual_unchanged(seed in any::<u64>(), k in 2usize..7) {
        let mut r = rng(seed);
        let n = k + 3;
        let fam = commuting_family(n, 3, 0.1, &mut r);
        let t = SymmetricTuple::new(fam.matrices).unwrap();
        let lambda = LambdaPoint::zeros(3);
        let eig = sorted_symmetric_eigen(&build_l(&t, &lambda).unwrap()).unwrap();
        let v0 = eig.vectors.columns(0, k).into_owned();
        let q = random_orthogonal(k, &mut r);
        let eval = |start: &DMatrix<f64>| {
            let (v, _) = rotate_basis(&t, &lambda, start, 1e-10, 64).unwrap();
            let v = PartialIsometry::new(v).unwrap();
            residual(&t, &v, &diagonal_estimates(&t, &v)).unwrap()
        };
        let a = eval(&v0);
        let b = eval(&(&v0 * q));
        prop_assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn two_column_rotation_invariance_for_general_tuples(seed in any::<u64>(), n in 3usize..10, d in 1usize..4) {
        // With k = 2 one Jacobi rotation reaches the global optimum.
        let mut r = rng(seed);
        let t = random_tuple(n, d, &mut r);
        let lambda = LambdaPoint::new(random_lambda(d, 1.0, &mut r));
        let eig = sorted_symmetric_eigen(&build_l(&t, &lambda).unwrap()).unwrap();
        let v0 = eig.vectors.columns(0, 2).into_owned();
        let q = random_orthogonal(2, &mut r);
        let eval = |start: &DMatrix<f64>| {
            let (v, _) = rotate_basis(&t, &lambda, start, 1e-10, 64).unwrap();
            let v = PartialIsometry::new(v).unwrap();
            residual(&t, &v, &diagonal_estimates(&t, &v)).unwrap()
        };
        let a = eval(&v0);
        let b = eval(&(&v0 * q));
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
    }

    #[test]
    fn gram_matrices_commute(seed in any::<u64>(), n in 2usize..30) {
        let g = generate_commuting_pair(n, 1 + (seed as usize) % n, seed, 0.2).unwrap();
        let t = build_gram_tuple(&g.pair).unwrap();
        let scale = t.matrices().iter().map(|m| m.norm()).fold(0.0, f64::max).powi(2);
        for i in 0..3 {
            for j in (i + 1)..3 {
                let c = t.get(i) * t.get(j) - t.get(j) * t.get(i);
                prop_assert!(c.norm() <= 1e-8 * (1.0 + scale));
            }
        }
        prop_assert!(sorted_symmetric_eigen(t.get(0)).unwrap().values[0] >= -1e-12);
    }

    #[test]
    fn identity_reduction_reproduces_full_simulation(seed in any::<u64>(), n in 2usize..20) {
        let g = generate_commuting_pair(n, 1 + (seed as usize) % n, seed, 0.5).unwrap();
        let x0 = random_x0(n, seed);
        let full = simulate_full(&g.pair, &x0, 40).unwrap();
        let m = reduce(&g.pair, &PartialIsometry::identity(n)).unwrap();
        let rom = simulate_reduced(&m, &x0, 40).unwrap();
        for (a, b) in full.y1.iter().zip(&rom.y1).chain(full.y2.iter().zip(&rom.y2)) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn output_decays_with_spectral_radius(seed in any::<u64>(), n in 2usize..20) {
        let g = generate_commuting_pair(n, 1 + (seed as usize) % n, seed, 0.5).unwrap();
        let rho = g.pair.spectral_radius_a1();
        let x0 = random_x0(n, seed) * 3.0;
        let y = simulate_full(&g.pair, &x0, 200).unwrap();
        prop_assert!(y.y1[200].abs() <= rho.powi(200) * x0.norm() + 1e-12);
    }

    #[test]
    fn dominant_subspace_reduction_is_exact(seed in 0u64..1000, k in 1usize..5) {
        let n = 30;
        let g = generate_commuting_pair(n, k, seed, 0.1).unwrap();
        let t = build_gram_tuple(&g.pair).unwrap();
        let res = truncated_joint_eigenbasis(&t, &LambdaPoint::zeros(3), &EigenbasisOptions::new(k, 1e-5, Selector::Largest)).unwrap();
        let m = reduce(&g.pair, &res.v).unwrap();
        let x0 = g.dominant_x0();
        let full = simulate_full(&g.pair, &x0, 100).unwrap();
        let rom = simulate_reduced(&m, &x0, 100).unwrap();
        let report = qjae::mor::compare_outputs(&full, &rom).unwrap();
        prop_assert!(report.max_rel() <= 1e-6, "{:?}", report);
        prop_assert!(report.y1.rms <= report.y1.max_abs && report.y2.rms <= report.y2.max_abs);
    }

    #[test]
    fn matrix_market_round_trip(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..6) {
        let mut r = rng(seed);
        let m = DMatrix::from_fn(rows, cols, |_, _| rand::Rng::random_range(&mut r, -1e6..1e6) / 7.0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.mtx");
        qjae::mtx::write_array(&p, &m).unwrap();
        prop_assert_eq!(qjae::mtx::read_matrix(&p).unwrap(), m);
    }
}
