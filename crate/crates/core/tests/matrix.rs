use cp_bures::matrix::{herm_eig, is_psd, op_norm, psd_sqrt, svd, CMat, C64};
use cp_bures::random::{random_hermitian, random_matrix, random_unitary, seeded};
use cp_bures::Error;
use proptest::prelude::*;

fn residual(a: &CMat, b: &CMat) -> f64 {
    (a - b).max_abs()
}

#[test]
fn eigenvalues_of_small_examples() {
    let e = herm_eig(&CMat::identity(2)).unwrap();
    assert_eq!(e.values, vec![1.0, 1.0]);

    let e = herm_eig(&CMat::from_real(&[&[1.0, -1.0], &[-1.0, 1.0]])).unwrap();
    assert!(e.values[0].abs() < 1e-14);
    assert!((e.values[1] - 2.0).abs() < 1e-14);

    // Pauli Y
    let y = CMat::from_complex(&[&[(0.0, 0.0), (0.0, 1.0)], &[(0.0, -1.0), (0.0, 0.0)]]);
    let e = herm_eig(&y).unwrap();
    assert!((e.values[0] + 1.0).abs() < 1e-14);
    assert!((e.values[1] - 1.0).abs() < 1e-14);
}

#[test]
fn eig_rejects_bad_input() {
    let m = CMat::from_real(&[&[1.0, 2.0], &[0.0, 1.0]]);
    assert!(matches!(herm_eig(&m), Err(Error::NonHermitian(_))));
    assert!(matches!(herm_eig(&CMat::zeros(2, 3)), Err(Error::NonSquare(2, 3))));
}

#[test]
fn eigenvector_phase_convention() {
    let mut rng = seeded(4);
    let h = random_hermitian(&mut rng, 5);
    let e = herm_eig(&h).unwrap();
    for k in 0..5 {
        let col = e.vectors.column(k);
        let big = col.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        assert!(big.im.abs() < 1e-14 && big.re > 0.0);
    }
}

#[test]
fn operator_norm_examples() {
    assert_eq!(op_norm(&CMat::zeros(3, 2)), 0.0);
    let mut rng = seeded(9);
    let u = random_unitary(&mut rng, 4);
    assert!((op_norm(&u) - 1.0).abs() < 1e-12);
    assert!((op_norm(&CMat::from_real(&[&[1.0, -1.0], &[-1.0, 1.0]])) - 2.0).abs() < 1e-14);
    // rectangular: a single row has norm equal to its Euclidean length
    assert!((op_norm(&CMat::from_real(&[&[3.0, 4.0]])) - 5.0).abs() < 1e-14);
}

#[test]
fn psd_test_examples() {
    assert!(is_psd(&CMat::identity(3), 1e-10).unwrap());
    assert!(!is_psd(&CMat::identity(3).scale_re(-1.0), 1e-10).unwrap());
    assert!(is_psd(&CMat::from_real(&[&[1.0, -1.0], &[-1.0, 1.0]]), 1e-10).unwrap());
}

#[test]
fn square_root_examples() {
    assert!(residual(&psd_sqrt(&CMat::identity(2)).unwrap(), &CMat::identity(2)) < 1e-15);
    let r = psd_sqrt(&CMat::identity(2).scale_re(4.0)).unwrap();
    assert!(residual(&r, &CMat::identity(2).scale_re(2.0)) < 1e-14);

    // [[2,1],[1,2]] = Q diag(1,3) Q^T with Q = [[1,1],[-1,1]]/sqrt2
    let r = psd_sqrt(&CMat::from_real(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
    let (a, b) = (0.5 * (1.0 + 3f64.sqrt()), 0.5 * (3f64.sqrt() - 1.0));
    assert!(residual(&r, &CMat::from_real(&[&[a, b], &[b, a]])) < 1e-14);

    match psd_sqrt(&CMat::diag_real(&[1.0, -0.5])) {
        Err(Error::NotPsd(v)) => assert!((v + 0.5).abs() < 1e-14),
        other => panic!("expected NotPsd, got {other:?}"),
    }
    // tiny negative eigenvalues are clamped
    assert!(psd_sqrt(&CMat::diag_real(&[1.0, -1e-12])).is_ok());
}

#[test]
fn svd_of_rectangular_matrix() {
    let mut rng = seeded(10);
    let a = random_matrix(&mut rng, 3, 5);
    let s = svd(&a);
    assert_eq!(s.values.len(), 3);
    assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
    let recon = s.u.matmul(&CMat::diag_real(&s.values)).matmul(&s.v.adjoint());
    assert!(residual(&recon, &a) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eig_reconstruction(seed in any::<u64>(), n in 1usize..=16) {
        let mut rng = seeded(seed);
        let h = random_hermitian(&mut rng, n);
        let e = herm_eig(&h).unwrap();
        let scale = op_norm(&h).max(1.0);
        let u = &e.vectors;
        let recon = u.matmul(&CMat::diag_real(&e.values)).matmul(&u.adjoint());
        prop_assert!(residual(&recon, &h) <= 1e-10 * scale);
        prop_assert!(residual(&u.adjoint_mul(u), &CMat::identity(n)) <= 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn norm_is_unitarily_invariant(seed in any::<u64>(), r in 1usize..=6, c in 1usize..=6) {
        let mut rng = seeded(seed);
        let m = random_matrix(&mut rng, r, c);
        let u = random_unitary(&mut rng, r);
        let v = random_unitary(&mut rng, c);
        let a = op_norm(&m);
        let b = op_norm(&u.matmul(&m).matmul(&v));
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        // Frobenius sandwich
        prop_assert!(a <= m.frobenius_norm() + 1e-12);
        prop_assert!(m.frobenius_norm() <= a * (r.min(c) as f64).sqrt() + 1e-12);
    }

    #[test]
    fn square_root_squares_back(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = seeded(seed);
        let a = random_matrix(&mut rng, n, n);
        let h = a.adjoint_mul(&a);
        let r = psd_sqrt(&h).unwrap();
        prop_assert!(residual(&r.matmul(&r), &h) <= 1e-9 * op_norm(&h).max(1.0));
        prop_assert!(r.hermiticity_residual() <= 1e-12);
        prop_assert!(is_psd(&r, 1e-10).unwrap());
    }

    #[test]
    fn unit_vectors_scale_norm(x in -10.0f64..10.0, y in -10.0f64..10.0) {
        let z = C64::new(x, y);
        let m = CMat::identity(3).scale(z);
        prop_assert!((op_norm(&m) - z.norm()).abs() <= 1e-12 * z.norm().max(1.0));
    }
}
