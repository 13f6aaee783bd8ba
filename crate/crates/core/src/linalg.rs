//! Small dense linear-algebra helpers on top of nalgebra.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Maximum absolute column sum.
pub fn norm1(a: &Matrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of `a` together with its 1-norm condition number.
///
/// Returns `None` for the inverse when LU fails outright.
pub fn inverse_with_condition(a: &Matrix) -> (Option<Matrix>, f64) {
    match a.clone().try_inverse() {
        Some(inv) => {
            let c = norm1(a) * norm1(&inv);
            (Some(inv), if c.is_finite() { c } else { f64::INFINITY })
        }
        None => (None, f64::INFINITY),
    }
}

/// Inverse of `a`, rejecting matrices whose condition exceeds `limit`.
pub fn checked_inverse(a: &Matrix, limit: f64, what: &str) -> Result<Matrix> {
    let (inv, cond) = inverse_with_condition(a);
    match inv {
        Some(m) if cond <= limit => Ok(m),
        _ => Err(Error::SingularSystem {
            what: what.into(),
            condition: cond,
        }),
    }
}

/// Kronecker product.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    Matrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-major vectorisation.
pub fn vec_of(a: &Matrix) -> Vector {
    Vector::from_column_slice(a.as_slice())
}

pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Matrix {
    Matrix::from_column_slice(rows, cols, v.as_slice())
}

pub fn symmetrize(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

pub fn max_asymmetry(a: &Matrix) -> f64 {
    (a - a.transpose()).amax()
}

/// Square-root factor `L` with `L Lᵀ = sigma`.
///
/// Cholesky first; positive semidefinite matrices fall back to a symmetric
/// eigen square root with eigenvalues above `-tol` clipped to zero.
pub fn psd_factor(sigma: &Matrix, tol: f64) -> Result<Matrix> {
    if sigma.nrows() != sigma.ncols() {
        return Err(Error::Dimension(format!(
            "covariance must be square, got {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let s = symmetrize(sigma);
    if let Some(ch) = Cholesky::new(s.clone()) {
        return Ok(ch.l());
    }
    let eig = SymmetricEigen::new(s);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::CholeskyFailure { min_eigenvalue: min });
    }
    let d = Matrix::from_diagonal(&eig.eigenvalues.map(|x| libm::sqrt(x.max(0.0))));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Eigenvalues `(re, im)` sorted by decreasing modulus.
pub fn eigenvalues(a: &Matrix) -> Vec<(f64, f64)> {
    let mut ev: Vec<(f64, f64)> = a
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect();
    ev.sort_by(|x, y| modulus(*y).total_cmp(&modulus(*x)).then(y.0.total_cmp(&x.0)));
    ev
}

pub fn modulus(z: (f64, f64)) -> f64 {
    libm::hypot(z.0, z.1)
}

pub fn spectral_radius(a: &Matrix) -> f64 {
    eigenvalues(a).first().map(|&z| modulus(z)).unwrap_or(0.0)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_symmetric_eigenvalue(a: &Matrix) -> f64 {
    SymmetricEigen::new(symmetrize(a))
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Spectral (operator 2-) norm.
pub fn operator_norm(a: &Matrix) -> f64 {
    libm::sqrt(max_symmetric_eigenvalue(&(a.transpose() * a)).max(0.0))
}

/// `out = m * x` for a row-major free loop on raw slices.
#[inline]
pub fn matvec(m: &Matrix, x: &[f64], out: &mut [f64]) {
    let n = m.nrows();
    for o in out.iter_mut() {
        *o = 0.0;
    }
    for (j, &xj) in x.iter().enumerate() {
        let col = &m.as_slice()[j * n..(j + 1) * n];
        for (o, &c) in out.iter_mut().zip(col) {
            *o += c * xj;
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_vec_identity() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = Matrix::from_row_slice(2, 2, &[0.5, -1.0, 2.0, 0.0]);
        let x = Matrix::from_row_slice(2, 2, &[1.0, -2.0, 0.3, 0.7]);
        let lhs = vec_of(&(&a * &x * b.transpose()));
        let rhs = kron(&b, &a) * vec_of(&x);
        assert!((lhs - rhs).amax() < 1e-14);
    }

    #[test]
    fn psd_factor_handles_singular() {
        let s = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let l = psd_factor(&s, 1e-10).unwrap();
        assert!((&l * l.transpose() - s).amax() < 1e-12);
        let bad = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(psd_factor(&bad, 1e-10), Err(Error::CholeskyFailure { .. })));
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let a = Matrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, -0.8]);
        assert!((operator_norm(&a) - 0.8).abs() < 1e-14);
    }
}
