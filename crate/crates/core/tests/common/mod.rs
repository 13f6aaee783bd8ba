#![allow(dead_code)]

use climcredit_core::economy::{EconomyParams, ReturnsToScale};
use climcredit_core::linalg::{Matrix, Vector};
use climcredit_core::transition::{IntensityCurve, IntensitySet};
use climcredit_core::valuation::{Firm, YearlyAmount};
use climcredit_core::var_process::VarParams;

pub fn econ3() -> EconomyParams {
    EconomyParams::new(
        Vector::from_vec(vec![0.25, 0.3, 0.2]),
        Matrix::from_row_slice(3, 3, &[0.3, 0.1, 0.2, 0.2, 0.4, 0.1, 0.25, 0.2, 0.5]),
        1.0,
        ReturnsToScale::Renormalize,
    )
    .unwrap()
}

pub fn var3(epsilon: f64) -> VarParams {
    VarParams::new(
        Vector::from_vec(vec![0.004, 0.006, 0.002]),
        Matrix::from_row_slice(3, 3, &[0.3, 0.1, 0.0, -0.1, 0.2, 0.05, 0.0, 0.1, -0.2]),
        Matrix::from_row_slice(3, 3, &[1.0e-4, 2.0e-5, 0.0, 2.0e-5, 1.5e-4, 1.0e-5, 0.0, 1.0e-5, 8.0e-5]),
        epsilon,
    )
    .unwrap()
}

/// Decaying intensities with `τδ ≪ 1` for prices up to a few hundred euros.
pub fn intensities3() -> IntensitySet {
    let c = |y0: f64, g0: f64| IntensityCurve::new(y0, g0, 0.05, i64::MAX).unwrap();
    IntensitySet::new(
        vec![c(4e-4, -0.03), c(1.5e-4, -0.02), c(5e-5, -0.01)],
        (0..3).map(|_| (0..3).map(|_| c(1e-4, -0.02)).collect()).collect(),
        vec![c(2e-4, -0.02), c(1e-4, -0.02), c(5e-5, -0.02)],
    )
    .unwrap()
}

pub fn firm(id: &str, group: usize, a: Vec<f64>, sigma_b: f64, b_ratio: f64) -> Firm {
    Firm {
        id: id.into(),
        group,
        a: Vector::from_vec(a),
        sigma_b,
        f0: 1.0,
        b_ratio,
        ead: YearlyAmount::constant(1.0e6),
        lgd: YearlyAmount::constant(0.45),
    }
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Sample covariance of `xs[k]·ys[k]` pairs with the standard error of the estimate.
pub fn cov_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let (mx, _) = mean_se(xs);
    let (my, _) = mean_se(ys);
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    mean_se(&prods)
}
