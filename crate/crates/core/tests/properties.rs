use nalgebra::DMatrix;
use proptest::prelude::*;

use rpls::baselines::{self, FitOptions};
use rpls::datagen::{self, OutlierSpec, StreamRng};
use rpls::eval::nmse;
use rpls::linalg::{
    column_means, inner, procrustes_orthonormal, shrink, singular_value_threshold, soft_threshold,
    subtract_row, svd,
};
use rpls::DenseMatrix;

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0..10.0f64, r * c)
            .prop_map(move |v| DMatrix::from_row_slice(r, c, &v))
    })
}

fn grid_minimizer(k: f64, eps: f64) -> f64 {
    let objective = |z: f64| eps * z.abs() + 0.5 * (z - k).powi(2);
    let (mut lo, mut hi) = (-k.abs() - 1.0, k.abs() + 1.0);
    for _ in 0..6 {
        let step = (hi - lo) / 2000.0;
        let best = (0..=2000)
            .map(|i| lo + step * i as f64)
            .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
            .unwrap();
        lo = best - step;
        hi = best + step;
    }
    0.5 * (lo + hi)
}

fn frob(a: &DenseMatrix) -> f64 {
    a.norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn soft_threshold_contracts_and_keeps_sign(k in matrix(6, 6), eps in 0.0..5.0f64) {
        let z = soft_threshold(&k, eps).unwrap();
        for (zi, ki) in z.iter().zip(k.iter()) {
            prop_assert!(zi.abs() <= ki.abs());
            prop_assert!(*zi == 0.0 || zi.signum() == ki.signum());
        }
    }

    #[test]
    fn soft_threshold_minimizes_its_objective(k in matrix(3, 3), eps in 0.0..5.0f64) {
        let z = soft_threshold(&k, eps).unwrap();
        for (zi, ki) in z.iter().zip(k.iter()) {
            prop_assert!((zi - grid_minimizer(*ki, eps)).abs() < 1e-6);
        }
    }

    #[test]
    fn shrink_is_odd(v in -10.0..10.0f64, eps in 0.0..5.0f64) {
        prop_assert_eq!(shrink(-v, eps), -shrink(v, eps));
    }

    #[test]
    fn svt_shifts_every_singular_value(a in matrix(12, 9), tau in 0.0..8.0f64) {
        let before = svd(&a).unwrap().s;
        let after = svd(&singular_value_threshold(&a, tau).unwrap()).unwrap().s;
        for (s0, s1) in before.iter().zip(after.iter()) {
            prop_assert!((s1 - (s0 - tau).max(0.0)).abs() < 1e-8 * (1.0 + s0));
        }
        let nuclear: f64 = after.iter().sum();
        let expected: f64 = before.iter().map(|s| (s - tau).max(0.0)).sum();
        prop_assert!((nuclear - expected).abs() < 1e-8 * (1.0 + expected));
        prop_assert!(nuclear <= before.iter().sum::<f64>() + 1e-8);
        let rank = before.iter().filter(|s| **s > 1e-12 * before[0].max(1.0)).count();
        if before.iter().take(rank).all(|s| *s >= tau) {
            prop_assert!((nuclear - (before.iter().sum::<f64>() - tau * rank as f64)).abs() < 1e-8 * (1.0 + nuclear));
        }
    }

    #[test]
    fn svd_reconstructs(a in matrix(10, 10)) {
        let f = svd(&a).unwrap();
        prop_assert!(frob(&(f.reconstruct() - &a)) <= 1e-10 * (1.0 + frob(&a)));
        let k = f.s.len();
        prop_assert!(frob(&(f.u.transpose() * &f.u - DMatrix::identity(k, k))) < 1e-10);
        prop_assert!(frob(&(f.v.transpose() * &f.v - DMatrix::identity(k, k))) < 1e-10);
    }

    #[test]
    fn procrustes_beats_random_orthonormal(seed in any::<u64>(), n in 3..9usize, k in 1..4usize) {
        let k = k.min(n);
        let mut rng = StreamRng::new(seed);
        let d = rng.normal_matrix(n, k);
        let q = procrustes_orthonormal(&d).unwrap();
        prop_assert!(frob(&(q.transpose() * &q - DMatrix::identity(k, k))) < 1e-10);
        let best = inner(&d, &q);
        for _ in 0..50 {
            let r = procrustes_orthonormal(&rng.normal_matrix(n, k)).unwrap();
            prop_assert!(best >= inner(&d, &r) - 1e-12);
        }
    }

    #[test]
    fn kernels_are_bitwise_deterministic(a in matrix(8, 8), tau in 0.0..3.0f64) {
        prop_assert_eq!(singular_value_threshold(&a, tau).unwrap(), singular_value_threshold(&a, tau).unwrap());
        let tall = if a.nrows() >= a.ncols() { a.clone() } else { a.transpose() };
        prop_assert_eq!(procrustes_orthonormal(&tall).unwrap(), procrustes_orthonormal(&tall).unwrap());
    }

    #[test]
    fn nmse_is_scale_free(y in matrix(8, 3), noise in matrix(8, 3), c in prop::sample::select(vec![-3.5, -0.1, 0.25, 2.0, 1e3])) {
        prop_assume!(y.norm() > 1e-6);
        let noise = DMatrix::from_fn(y.nrows(), y.ncols(), |i, j| noise[(i % noise.nrows(), j % noise.ncols())]);
        let est = &y + noise;
        let base = nmse(&y, &est).unwrap();
        let scaled = nmse(&(&y * c), &(&est * c)).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-12 * (1.0 + base));
    }

    #[test]
    fn linear_predictions_are_affine(seed in any::<u64>(), a in 0.0..1.0f64) {
        let mut rng = StreamRng::new(seed);
        let x = rng.normal_matrix(30, 5);
        let y = rng.normal_matrix(30, 2);
        let model = baselines::fit_mlr(&x, &y).unwrap();
        let x1 = rng.normal_matrix(1, 5);
        let x2 = rng.normal_matrix(1, 5);
        let mixed = baselines::predict(&model, &(&x1 * a + &x2 * (1.0 - a))).unwrap();
        let expected = baselines::predict(&model, &x1).unwrap() * a + baselines::predict(&model, &x2).unwrap() * (1.0 - a);
        prop_assert!(frob(&(mixed - expected)) < 1e-10);
    }

    #[test]
    fn mlr_residual_is_orthogonal_to_predictors(seed in any::<u64>(), scale in any::<bool>()) {
        let mut rng = StreamRng::new(seed);
        let x = rng.normal_matrix(25, 6);
        let y = rng.normal_matrix(25, 3);
        let model = baselines::fit_mlr_with(&x, &y, &FitOptions { scale }).unwrap();
        let xc = subtract_row(&x, &column_means(&x));
        let yc = subtract_row(&y, &column_means(&y));
        let resid = &yc - &xc * &model.theta;
        prop_assert!(frob(&(xc.transpose() * resid)) < 1e-8 * frob(&xc) * frob(&yc));
    }

    #[test]
    fn injection_masks_index_exactly_the_changes(seed in any::<u64>(), low_tail in any::<bool>()) {
        let mut rng = StreamRng::new(seed);
        let x = rng.normal_matrix(40, 6);
        let y = rng.normal_matrix(40, 2) + DMatrix::from_element(40, 2, 5.0);
        let spec = if low_tail { OutlierSpec::low_tail(seed) } else { OutlierSpec::sparse(seed) };
        let c = datagen::inject(&x, &y, &spec).unwrap();
        prop_assert_eq!(c.x.shape(), x.shape());
        prop_assert_eq!(c.y.shape(), y.shape());
        for (orig, new, mask) in [(&x, &c.x, &c.x_mask), (&y, &c.y, &c.y_mask)] {
            for i in 0..orig.nrows() {
                for j in 0..orig.ncols() {
                    prop_assert_eq!(mask.get(i, j), orig[(i, j)] != new[(i, j)]);
                }
            }
        }
        prop_assert_eq!(datagen::inject(&x, &y, &spec).unwrap(), c);
    }
}
