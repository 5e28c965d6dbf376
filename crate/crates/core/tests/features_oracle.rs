//! Moving mean against a naive oracle; PCA reconstruction, orthonormality and
//! linearity on random data.

mod common;

use aic_core::features::{moving_mean, PcaModel};
use aic_core::rng::seeded;
use common::naive_moving_mean;
use proptest::prelude::*;
use rand::Rng as _;

pub const PCA_TOL: f64 = 1e-9;

fn random_rows(rng: &mut aic_core::rng::Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0..30.0)).collect()).collect()
}

#[test]
fn moving_mean_equals_naive_oracle_on_1000_signals() {
    let mut rng = seeded(3);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..40.0)).collect();
        assert_eq!(moving_mean(&x), naive_moving_mean(&x));
    }
}

#[test]
fn full_rank_reconstruction_and_orthonormality() {
    let mut rng = seeded(5);
    let rows = random_rows(&mut rng, 120, 80);
    let pca = PcaModel::fit(&rows, 80).unwrap();
    let mut worst: f64 = 0.0;
    for r in &rows {
        let back = pca.reconstruct(&pca.transform(r).unwrap()).unwrap();
        for (a, b) in back.iter().zip(r) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst <= PCA_TOL, "reconstruction error {worst}");
    for i in 0..80 {
        for j in 0..80 {
            let dot: f64 = pca.component(i).iter().zip(pca.component(j)).map(|(a, b)| a * b).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((dot - expected).abs() <= PCA_TOL);
        }
    }
    assert!(pca.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    let ratios = pca.explained_variance_ratio();
    assert!(ratios.iter().sum::<f64>() <= 1.0 + 1e-12);
    assert!(ratios.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn transform_is_affine() {
    let mut rng = seeded(8);
    let rows = random_rows(&mut rng, 60, 80);
    let pca = PcaModel::fit(&rows, 20).unwrap();
    for _ in 0..50 {
        let u: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..30.0)).collect();
        let v: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..30.0)).collect();
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let mix: Vec<f64> = (0..80)
            .map(|i| a * u[i] + b * v[i] - (a + b - 1.0) * pca.mean[i])
            .collect();
        let lhs = pca.transform(&mix).unwrap();
        let (tu, tv) = (pca.transform(&u).unwrap(), pca.transform(&v).unwrap());
        for i in 0..20 {
            assert!((lhs[i] - (a * tu[i] + b * tv[i])).abs() <= PCA_TOL);
        }
    }
}

proptest! {
    #[test]
    fn moving_mean_is_monotone(x in prop::collection::vec(0.0f64..50.0, 80), bump in prop::collection::vec(0.0f64..5.0, 80)) {
        let y: Vec<f64> = x.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let (fx, fy) = (moving_mean(&x), moving_mean(&y));
        prop_assert_eq!(fx.len(), 80);
        for (a, b) in fx.iter().zip(&fy) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn pca_is_deterministic(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let rows = random_rows(&mut rng, 12, 80);
        prop_assert_eq!(PcaModel::fit(&rows, 5).unwrap(), PcaModel::fit(&rows, 5).unwrap());
    }
}
