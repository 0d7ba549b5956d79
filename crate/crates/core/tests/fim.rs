use jtsape::array::UlaGeometry;
use jtsape::fim::{
    crb, det_crb, fim_blocks, fim_oracle, fisher_matrix, simulate_echo, FisherMatrix, TargetSet,
};
use jtsape::linalg::hermitian_eigen;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn fisher(r: &DMatrix<Complex64>, t: &TargetSet, n: usize, sigma2: f64) -> FisherMatrix {
    let g = UlaGeometry::half_wavelength(n).unwrap();
    fisher_matrix(&fim_blocks(r, t, &g, &g).unwrap(), sigma2).unwrap()
}

fn vector(n: usize) -> impl Strategy<Value = DVector<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| DVector::from_iterator(v.len(), v.into_iter().map(|(a, b)| c(a, b))))
}

/// Random PSD matrix of rank up to 3.
fn psd(n: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec(vector(n), 1..=3).prop_map(move |vs| {
        vs.iter().fold(DMatrix::zeros(n, n), |acc, v| acc + v * v.adjoint())
    })
}

fn scenario() -> impl Strategy<Value = (usize, TargetSet)> {
    (
        prop::sample::select(vec![2usize, 4, 8, 12]),
        -1.3f64..1.3,
        0.1f64..10.0,
        0.0f64..std::f64::consts::TAU,
    )
        .prop_map(|(n, th, m, ph)| (n, TargetSet::single(th, Complex64::from_polar(m, ph))))
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn identity_covariance_block() {
    for n in [2, 5, 12] {
        let g = UlaGeometry::half_wavelength(n).unwrap();
        let t = TargetSet::single(0.4, c(0.3, -0.2));
        let b = fim_blocks(&DMatrix::identity(n, n), &t, &g, &g).unwrap();
        assert!((b.f22[(0, 0)] - c((n * n) as f64, 0.0)).norm() < 1e-9);
    }
}

#[test]
fn beta_derivatives_do_not_depend_on_step() {
    let n = 6;
    let g = UlaGeometry::half_wavelength(n).unwrap();
    let w = DVector::from_fn(n, |k, _| Complex64::from_polar(1.0, 0.7 * k as f64));
    let t = TargetSet::single(0.3, c(1.5, 0.5));
    let a = fim_oracle(&w, &t, &g, &g, 1.0, 1e-3);
    let b = fim_oracle(&w, &t, &g, &g, 1.0, 1e-6);
    for i in 1..3 {
        for j in 1..3 {
            assert!((a.matrix()[(i, j)] - b.matrix()[(i, j)]).abs() < 1e-12);
        }
    }
}

#[test]
fn echo_sample_mean_converges() {
    let n = 4;
    let g = UlaGeometry::half_wavelength(n).unwrap();
    let w = DVector::from_element(n, c(0.5, 0.0));
    let (theta, beta, sigma2) = (0.2, c(1.0, -0.5), 0.8);
    let clean = simulate_echo(&w, theta, beta, &g, &g, 0.0, 0);
    let trials = 100_000u64;
    let mut sum = DVector::zeros(n);
    for s in 0..trials {
        sum += simulate_echo(&w, theta, beta, &g, &g, sigma2, s);
    }
    let mean = sum / c(trials as f64, 0.0);
    // Each part of the noise has variance σ²/2.
    let bound = 5.0 * (sigma2 / 2.0).sqrt() / (trials as f64).sqrt();
    for (m, e) in mean.iter().zip(clean.iter()) {
        assert!((m.re - e.re).abs() < bound && (m.im - e.im).abs() < bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_in_covariance(((n, t), a, b) in scenario().prop_flat_map(|(n, t)| (Just((n, t)), psd(n), psd(n)))) {
        let sum = fisher(&(&a + &b), &t, n, 1.0);
        let parts = fisher(&a, &t, n, 1.0).matrix() + fisher(&b, &t, n, 1.0).matrix();
        prop_assert!(rel(sum.matrix(), &parts) < 1e-10);
    }

    #[test]
    fn symmetric_and_psd(((n, t), r) in scenario().prop_flat_map(|(n, t)| (Just((n, t)), psd(n)))) {
        let f = fisher(&r, &t, n, 0.5);
        let m = f.matrix();
        prop_assert!((m - m.transpose()).amax() <= 1e-10 * m.amax().max(1.0));
        let ev = SymmetricEigen::new(m.clone()).eigenvalues;
        prop_assert!(ev.min() >= -1e-8 * m.trace());
    }

    #[test]
    fn general_covariance_through_rank_one_oracles(((n, t), r) in scenario().prop_flat_map(|(n, t)| (Just((n, t)), psd(n)))) {
        let g = UlaGeometry::half_wavelength(n).unwrap();
        let (vals, vecs) = hermitian_eigen(&r);
        let mut acc = DMatrix::<f64>::zeros(3, 3);
        for (k, &l) in vals.iter().enumerate() {
            if l > 0.0 {
                let w = vecs.column(k) * c(l.sqrt(), 0.0);
                acc += fim_oracle(&w, &t, &g, &g, 1.0, 1e-5).matrix();
            }
        }
        prop_assert!(rel(fisher(&r, &t, n, 1.0).matrix(), &acc) < 1e-6);
    }

    #[test]
    fn more_power_never_hurts(((n, t), a, b) in scenario().prop_flat_map(|(n, t)| (Just((n, t)), psd(n), psd(n)))) {
        // Shifted by 0.1 I so that both bounds exist.
        let r1 = &a + DMatrix::identity(n, n) * c(0.1, 0.0);
        let r2 = &r1 + &b;
        let d1 = det_crb(&fisher(&r1, &t, n, 1.0)).unwrap();
        let d2 = det_crb(&fisher(&r2, &t, n, 1.0)).unwrap();
        prop_assert!(d2 <= d1 * (1.0 + 1e-9));
    }

    #[test]
    fn det_paths_agree_and_scale(((n, t), r) in scenario().prop_flat_map(|(n, t)| (Just((n, t)), psd(n))), s in 0.1f64..10.0) {
        let r = r + DMatrix::identity(n, n) * c(0.05, 0.0);
        let f = fisher(&r, &t, n, 1.0);
        let d = det_crb(&f).unwrap();
        let via_inverse = crb(&f).unwrap().matrix().determinant();
        prop_assert!((d - via_inverse).abs() <= 1e-9 * d.abs());
        let scaled = det_crb(&fisher(&(&r * c(s, 0.0)), &t, n, 1.0)).unwrap();
        prop_assert!((scaled - d * s.powi(-3)).abs() <= 1e-9 * scaled.abs());
    }
}
