#![allow(dead_code)]

pub mod panel;
pub mod pins;
pub mod props;

use nalgebra::DMatrix;
use proptest::prelude::*;

/// Points of the open simplex with weights spread over several orders of
/// magnitude.
pub fn simplex(min_n: usize, max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    (min_n..=max_n).prop_flat_map(|n| prop::collection::vec(-4.0f64..0.0, n)).prop_map(|logs| {
        let raw: Vec<f64> = logs.iter().map(|l| 10f64.powf(*l)).collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|x| x / s).collect()
    })
}

/// Simplex points with every weight above `phi` (returned alongside).
pub fn simplex_above_floor(min_n: usize, max_n: usize) -> impl Strategy<Value = (Vec<f64>, f64)> {
    (simplex(min_n, max_n), 0.05f64..0.95).prop_map(|(w, frac)| {
        let n = w.len() as f64;
        let phi = frac / n;
        (w.iter().map(|x| phi + (1.0 - n * phi) * x).collect(), phi * (1.0 - 1e-9))
    })
}

/// Random PSD matrix `LL'` with entries of `L` in `[-0.5, 0.5]`.
pub fn psd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-0.5f64..0.5, n * n).prop_map(move |v| {
        let l = DMatrix::from_vec(n, n, v);
        &l * l.transpose()
    })
}

pub fn simplex_and_psd(min_n: usize, max_n: usize) -> impl Strategy<Value = (Vec<f64>, DMatrix<f64>)> {
    simplex(min_n, max_n).prop_flat_map(|w| {
        let n = w.len();
        (Just(w), psd(n))
    })
}

pub fn assert_on_simplex(w: &[f64]) {
    assert!(w.iter().all(|x| *x >= 0.0 && x.is_finite()), "{w:?}");
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12, "{w:?}");
}
