//! Worked examples per operation, checked against independent oracles.

mod common;

use nalgebra::{DMatrix, DVector};

use common::{commuting_family, match_columns, random_tuple, rng};
use qjae::linalg::sorted_symmetric_eigen;
use qjae::mor::{generate_commuting_pair, simulate_full};
use qjae::{
    build_l, build_q, in_pseudospectrum, mu_quadratic, residual, truncated_joint_eigenbasis, EigenbasisOptions,
    Kernel, LambdaPoint, PartialIsometry, Selector, SymmetricTuple,
};

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(v))
}

#[test]
fn build_l_is_build_q_bitwise() {
    let mut r = rng(77);
    for i in 0..20 {
        let t = random_tuple(2 + i % 7, 1 + i % 4, &mut r);
        let lambda = LambdaPoint::new(common::random_lambda(t.d(), 3.0, &mut r));
        assert_eq!(build_l(&t, &lambda).unwrap(), build_q(&t, &lambda).unwrap());
    }
}

#[test]
fn single_matrix_mu_is_distance_to_nearest_eigenvalue() {
    // Oracle: μ = min_i |eig_i(X) − λ| from the eigenvalues of X itself.
    let mut r = rng(12);
    for _ in 0..30 {
        let t = random_tuple(9, 1, &mut r);
        let lambda = common::random_lambda(1, 4.0, &mut r);
        let eigs = sorted_symmetric_eigen(t.get(0)).unwrap();
        let expected = eigs.values.iter().map(|e| (e - lambda[0]).abs()).fold(f64::INFINITY, f64::min);
        for kernel in [Kernel::StackedSvd, Kernel::SquaredEig] {
            let got = mu_quadratic(&t, &LambdaPoint::new(lambda.clone()), kernel).unwrap().mu;
            assert!((got - expected).abs() < 1e-10, "{kernel:?}: {got} vs {expected}");
        }
    }
}

#[test]
fn commuting_tuple_joint_eigenvalues_are_in_every_pseudospectrum() {
    let mut r = rng(5);
    let fam = commuting_family(6, 3, 0.1, &mut r);
    let t = SymmetricTuple::new(fam.matrices.clone()).unwrap();
    for i in 0..6 {
        let at = LambdaPoint::new((0..3).map(|j| fam.diags[j][i]).collect());
        assert!(in_pseudospectrum(&t, &at, 1e-6, Kernel::StackedSvd).unwrap());
        assert!(mu_quadratic(&t, &at, Kernel::StackedSvd).unwrap().mu < 1e-12);
    }
}

#[test]
fn eigenbasis_diag_123() {
    let t = SymmetricTuple::new(vec![diag(&[1.0, 2.0, 3.0])]).unwrap();
    let res = truncated_joint_eigenbasis(
        &t,
        &LambdaPoint::zeros(1),
        &EigenbasisOptions::new(2, 1e-5, Selector::Smallest),
    )
    .unwrap();
    // span(V) = span{e1, e2}
    let proj = res.v.matrix() * res.v.matrix().transpose();
    assert!((proj - diag(&[1.0, 1.0, 0.0])).amax() < 1e-14);
    assert!((res.lambdas[0][0] - 1.0).abs() < 1e-14 && (res.lambdas[0][1] - 2.0).abs() < 1e-14);
    assert!(res.residual_sq <= 1e-20);
}

#[test]
fn eigenbasis_commuting_full_rank_recovers_joint_spectrum() {
    let mut r = rng(31);
    let n = 10;
    let fam = commuting_family(n, 3, 0.1, &mut r);
    let t = SymmetricTuple::new(fam.matrices.clone()).unwrap();
    let res = truncated_joint_eigenbasis(
        &t,
        &LambdaPoint::zeros(3),
        &EigenbasisOptions::new(n, 1e-10, Selector::Smallest),
    )
    .unwrap();
    let scale = fam.matrices.iter().map(common::sym_norm2).fold(0.0, f64::max);
    assert!(res.residual_sq <= 1e-16 * (n * 3) as f64 * scale * scale);
    for (i, (m, overlap)) in match_columns(&fam.q, res.v.matrix()).into_iter().enumerate() {
        assert!((overlap - 1.0).abs() < 1e-8);
        for j in 0..3 {
            assert!((res.lambdas[j][i] - fam.diags[j][m]).abs() < 1e-8);
        }
    }
    // Columns ordered by ascending Rayleigh quotient of L.
    let l = build_l(&t, &LambdaPoint::zeros(3)).unwrap();
    let v = res.v.matrix();
    let rq: Vec<f64> = (0..n).map(|i| v.column(i).dot(&(&l * v.column(i)))).collect();
    assert!(rq.windows(2).all(|w| w[0] <= w[1] + 1e-12));
}

#[test]
fn residual_diagonal_choice_beats_scalar_grid() {
    let mut r = rng(8);
    let t = random_tuple(6, 2, &mut r);
    let q = qjae::linalg::random_orthogonal(6, &mut r);
    let v = PartialIsometry::new(q.columns(0, 3).into_owned()).unwrap();
    let best = qjae::eigenbasis::diagonal_estimates(&t, &v);
    let base = residual(&t, &v, &best).unwrap();
    for j in 0..2 {
        for i in 0..3 {
            for step in -20..=20 {
                let mut trial = best.clone();
                trial[j][i] += step as f64 * 0.05;
                assert!(residual(&t, &v, &trial).unwrap() >= base - 1e-12);
            }
        }
    }
}

#[test]
fn residual_of_exact_joint_eigenvectors_is_zero() {
    let t = SymmetricTuple::new(vec![diag(&[1.0, 2.0, 3.0]), diag(&[4.0, -1.0, 0.5])]).unwrap();
    let v = PartialIsometry::new(DMatrix::identity(3, 3)).unwrap();
    let lambdas = vec![vec![1.0, 2.0, 3.0], vec![4.0, -1.0, 0.5]];
    assert!(residual(&t, &v, &lambdas).unwrap() <= 1e-18);
}

#[test]
fn generator_tail_at_paper_scale() {
    let g = generate_commuting_pair(400, 6, 0, 0.1).unwrap();
    let mut mags: Vec<f64> = sorted_symmetric_eigen(&g.pair.a1).unwrap().values.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    assert!(mags[..6].iter().all(|&m| m >= 0.9 - 1e-12));
    assert!(mags[6..].iter().all(|&m| m <= 0.1 + 1e-12));
}

#[test]
fn stable_pair_output_bound_after_200_steps() {
    let g = generate_commuting_pair(50, 5, 42, 0.3).unwrap();
    let rho = sorted_symmetric_eigen(&g.pair.a1).unwrap().values.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let x0 = qjae::mor::random_x0(50, 42);
    let y = simulate_full(&g.pair, &x0, 200).unwrap();
    assert!(y.y1[200].abs() <= rho.powi(200) * x0.norm() + 1e-12);
}
