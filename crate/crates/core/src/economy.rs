//! Closed-form multisector equilibrium with log utility.
//!
//! Elasticity matrices are stored with rows indexing the input sector `j` and
//! columns the producing sector `i`: `lambda[(j, i)] = λ^{ji}`. The linear
//! equilibrium algebra runs on the transpose `L = λᵀ`, whose row `i` collects
//! the inputs of sector `i`, so that `(I − L)·log C = 𝒜 + v`.

use alloc::format;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::transition::EmissionsCostRate;
use crate::var_process::StationaryMoments;

/// Condition-number ceiling for the equilibrium solves.
pub const EQUILIBRIUM_CONDITION_LIMIT: f64 = 1e10;
/// Smallest admissible input elasticity.
pub const MIN_ELASTICITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnsToScale {
    /// Rescale each column of λ so that `ψ^i + Σ_j λ^{ji} = 1`.
    Renormalize,
    /// Keep λ as given.
    KeepRaw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomyParams {
    pub psi: Vector,
    /// `λ^{ji}` at `(j, i)`, after any renormalisation.
    pub lambda: Matrix,
    pub phi: f64,
    /// Whether `ψ^i + Σ_j λ^{ji} = 1` holds within 1e-9 for every sector.
    pub constant_returns: bool,
    /// `(I − λᵀ)⁻¹`.
    inv_leontief: Matrix,
}

impl EconomyParams {
    pub fn new(psi: Vector, lambda: Matrix, phi: f64, returns: ReturnsToScale) -> Result<Self> {
        let n = psi.len();
        if n == 0 || lambda.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "psi has {} entries but lambda is {:?}",
                n,
                lambda.shape()
            )));
        }
        if psi.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameter("labour elasticities must be positive".into()));
        }
        if lambda.iter().any(|x| !(*x >= MIN_ELASTICITY && x.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "input elasticities must be at least {MIN_ELASTICITY}"
            )));
        }
        if !(phi >= 0.0 && phi.is_finite()) {
            return Err(Error::InvalidParameter(format!("inverse Frisch elasticity {phi} must be >= 0")));
        }
        let mut lambda = lambda;
        if returns == ReturnsToScale::Renormalize {
            for i in 0..n {
                if psi[i] >= 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "labour elasticity of sector {i} leaves no room for inputs"
                    )));
                }
                let s: f64 = lambda.column(i).sum();
                let f = (1.0 - psi[i]) / s;
                lambda.column_mut(i).scale_mut(f);
            }
        }
        let constant_returns = (0..n).all(|i| (psi[i] + lambda.column(i).sum() - 1.0).abs() <= 1e-9);
        let a = Matrix::identity(n, n) - lambda.transpose();
        let (inv, cond) = linalg::inverse_with_condition(&a);
        let inv_leontief = match inv {
            Some(m) if cond <= EQUILIBRIUM_CONDITION_LIMIT => m,
            _ => return Err(Error::SingularEquilibrium { condition: cond }),
        };
        Ok(Self {
            psi,
            lambda,
            phi,
            constant_returns,
            inv_leontief,
        })
    }

    pub fn dim(&self) -> usize {
        self.psi.len()
    }

    /// `(I − λᵀ)⁻¹`, the map from shifted productivity to log consumption.
    pub fn inv_leontief(&self) -> &Matrix {
        &self.inv_leontief
    }

    /// Θ-loadings `𝔞` from output-growth loadings `ã` (`𝔞 = ã(I − λᵀ)⁻¹` as row vectors).
    pub fn theta_loading(&self, a_tilde: &Vector) -> Vector {
        self.inv_leontief.transpose() * a_tilde
    }
}

/// Cost-adjusted coefficients at one emissions cost rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCoefficients {
    pub psi_d: Vector,
    /// `Λ^{ji}` at `(j, i)`.
    pub lambda_d: Matrix,
    pub e_ratio: Vector,
    pub v: Vector,
    pub frak_v: Vector,
}

fn check_dims(econ: &EconomyParams, d: &EmissionsCostRate) -> Result<()> {
    if d.dim() != econ.dim() {
        return Err(Error::Dimension(format!(
            "cost rate has {} sectors, economy has {}",
            d.dim(),
            econ.dim()
        )));
    }
    d.validate()
}

/// `Ψ^i = ψ^i(1 − τ^iδ)/(1 + κ^iδ)`.
pub fn psi_coeffs(econ: &EconomyParams, d: &EmissionsCostRate) -> Result<Vector> {
    check_dims(econ, d)?;
    Ok(Vector::from_fn(econ.dim(), |i, _| {
        econ.psi[i] * (1.0 - d.tau_d[i]) / (1.0 + d.kappa_d[i])
    }))
}

/// `Λ^{ji} = λ^{ji}(1 − τ^iδ)/(1 + ζ^{ji}δ)·(1 + κ^jδ)/(1 + κ^iδ)`.
pub fn lambda_coeffs(econ: &EconomyParams, d: &EmissionsCostRate) -> Result<Matrix> {
    check_dims(econ, d)?;
    Ok(Matrix::from_fn(econ.dim(), econ.dim(), |j, i| {
        econ.lambda[(j, i)] * (1.0 - d.tau_d[i]) / (1.0 + d.zeta_d[(j, i)]) * (1.0 + d.kappa_d[j])
            / (1.0 + d.kappa_d[i])
    }))
}

/// `𝔢` solving `𝔢^i = 1 + Σ_j Λ^{ij}𝔢^j`.
pub fn output_consumption_ratio(lambda_d: &Matrix) -> Result<Vector> {
    let n = lambda_d.nrows();
    if linalg::spectral_radius(lambda_d) >= 1.0 {
        return Err(Error::SingularEquilibrium {
            condition: f64::INFINITY,
        });
    }
    let a = Matrix::identity(n, n) - lambda_d;
    let (inv, cond) = linalg::inverse_with_condition(&a);
    match inv {
        Some(m) if cond <= EQUILIBRIUM_CONDITION_LIMIT => Ok(m * Vector::from_element(n, 1.0)),
        _ => Err(Error::SingularEquilibrium { condition: cond }),
    }
}

/// All coefficients at `d`.
pub fn coefficients(econ: &EconomyParams, d: &EmissionsCostRate) -> Result<EquilibriumCoefficients> {
    let psi_d = psi_coeffs(econ, d)?;
    let lambda_d = lambda_coeffs(econ, d)?;
    let e_ratio = output_consumption_ratio(&lambda_d)?;
    let n = econ.dim();
    let k = 1.0 + econ.phi;
    let v = Vector::from_fn(n, |i, _| {
        let mut s = -econ.phi * econ.psi[i] / k * libm::log(e_ratio[i]) + econ.psi[i] / k * libm::log(psi_d[i]);
        for j in 0..n {
            s += econ.lambda[(j, i)] * libm::log(lambda_d[(j, i)]);
        }
        s
    });
    let log_e = e_ratio.map(libm::log);
    let frak_v = &v + &log_e - econ.lambda.transpose() * &log_e;
    Ok(EquilibriumCoefficients {
        psi_d,
        lambda_d,
        e_ratio,
        v,
        frak_v,
    })
}

pub fn consumption_cost_shift(econ: &EconomyParams, d: &EmissionsCostRate) -> Result<Vector> {
    Ok(coefficients(econ, d)?.v)
}

pub fn output_cost_shift(econ: &EconomyParams, d: &EmissionsCostRate) -> Result<Vector> {
    Ok(coefficients(econ, d)?.frak_v)
}

/// `(log C, log Y)` for log productivity `a`.
pub fn log_consumption(
    econ: &EconomyParams,
    coeffs: &EquilibriumCoefficients,
    a: &Vector,
) -> Result<(Vector, Vector)> {
    if a.len() != econ.dim() {
        return Err(Error::Dimension("productivity does not match sector count".into()));
    }
    let log_c = econ.inv_leontief() * (a + &coeffs.v);
    let log_y = &log_c + coeffs.e_ratio.map(libm::log);
    Ok((log_c, log_y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthLaw {
    pub m_c: Vector,
    pub m_y: Vector,
    pub sigma_hat: Matrix,
}

/// Gaussian law of consumption and output log-growth between two dates.
pub fn growth_law(
    econ: &EconomyParams,
    moments: &StationaryMoments,
    epsilon: f64,
    now: &EquilibriumCoefficients,
    prev: &EquilibriumCoefficients,
) -> Result<GrowthLaw> {
    if moments.mu_bar.len() != econ.dim() {
        return Err(Error::Dimension("VAR and economy dimensions differ".into()));
    }
    let l = econ.inv_leontief();
    let sigma_hat = linalg::symmetrize(&(l * &moments.sigma_bar * l.transpose() * (epsilon * epsilon)));
    Ok(GrowthLaw {
        m_c: l * (&moments.mu_bar + (&now.v - &prev.v)),
        m_y: l * (&moments.mu_bar + (&now.frak_v - &prev.frak_v)),
        sigma_hat,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResidual {
    /// `(Y^i − C^i − Σ_j Z^{ij}) / Y^i`.
    pub goods: Vector,
    /// `(Y^i − e^{𝒜^i}(N^i)^{ψ^i}Π_j(Z^{ji})^{λ^{ji}}) / Y^i`.
    pub production: Vector,
    pub labour: Vector,
    /// `Z^{ji}` at `(j, i)`.
    pub z: Matrix,
}

impl EquilibriumResidual {
    pub fn max_abs(&self) -> f64 {
        self.goods.amax().max(self.production.amax())
    }
}

/// Residuals of the raw market-clearing and production equations at `(C, Y)`,
/// with intermediate demands and labour rebuilt from the first-order conditions.
pub fn equilibrium_residual(
    econ: &EconomyParams,
    d: &EmissionsCostRate,
    a: &Vector,
    c: &Vector,
    y: &Vector,
) -> Result<EquilibriumResidual> {
    let n = econ.dim();
    if a.len() != n || c.len() != n || y.len() != n {
        return Err(Error::Dimension("state vectors do not match sector count".into()));
    }
    if c.iter().chain(y.iter()).any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::DomainError("consumption and output must be positive".into()));
    }
    let psi_d = psi_coeffs(econ, d)?;
    let lambda_d = lambda_coeffs(econ, d)?;
    let z = Matrix::from_fn(n, n, |j, i| lambda_d[(j, i)] * c[j] * y[i] / c[i]);
    let labour = Vector::from_fn(n, |i, _| libm::pow(psi_d[i] * y[i] / c[i], 1.0 / (1.0 + econ.phi)));
    let goods = Vector::from_fn(n, |i, _| {
        let demand: f64 = (0..n).map(|j| z[(i, j)]).sum();
        (y[i] - c[i] - demand) / y[i]
    });
    let production = Vector::from_fn(n, |i, _| {
        let mut log_f = a[i] + econ.psi[i] * libm::log(labour[i]);
        for j in 0..n {
            log_f += econ.lambda[(j, i)] * libm::log(z[(j, i)]);
        }
        -libm::expm1(log_f - libm::log(y[i]))
    });
    Ok(EquilibriumResidual {
        goods,
        production,
        labour,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn scalar_econ() -> EconomyParams {
        EconomyParams::new(
            Vector::from_element(1, 0.5),
            Matrix::from_element(1, 1, 0.5),
            1.0,
            ReturnsToScale::KeepRaw,
        )
        .unwrap()
    }

    #[test]
    fn scalar_worked_example() {
        let econ = scalar_econ();
        let c = coefficients(&econ, &EmissionsCostRate::zero(1)).unwrap();
        let ln2 = core::f64::consts::LN_2;
        assert!((c.e_ratio[0] - 2.0).abs() < 1e-15);
        assert!((c.v[0] + ln2).abs() < 1e-15);
        assert!((c.frak_v[0] + 0.5 * ln2).abs() < 1e-15);
    }

    #[test]
    fn psi_hand_value() {
        let econ = EconomyParams::new(
            Vector::from_element(1, 0.2),
            Matrix::from_element(1, 1, 0.8),
            1.0,
            ReturnsToScale::KeepRaw,
        )
        .unwrap();
        let d = EmissionsCostRate {
            tau_d: Vector::from_element(1, 0.5),
            zeta_d: Matrix::zeros(1, 1),
            kappa_d: Vector::from_element(1, 0.25),
        };
        assert!((psi_coeffs(&econ, &d).unwrap()[0] - 0.08).abs() < 1e-16);
    }

    #[test]
    fn renormalization_enforces_constant_returns() {
        let econ = EconomyParams::new(
            Vector::from_vec(vec![0.2, 0.3]),
            Matrix::from_row_slice(2, 2, &[0.3, 0.1, 0.2, 0.2]),
            1.0,
            ReturnsToScale::Renormalize,
        )
        .unwrap();
        assert!(econ.constant_returns);
        assert!((econ.lambda[(0, 0)] / econ.lambda[(1, 0)] - 1.5).abs() < 1e-14);
        assert!(EconomyParams::new(
            Vector::from_element(1, 0.5),
            Matrix::from_element(1, 1, 1e-13),
            1.0,
            ReturnsToScale::KeepRaw
        )
        .is_err());
    }

    #[test]
    fn perturbed_consumption_breaks_goods_clearing() {
        let econ = EconomyParams::new(
            Vector::from_vec(vec![0.2, 0.3]),
            Matrix::from_row_slice(2, 2, &[0.3, 0.1, 0.5, 0.6]),
            1.0,
            ReturnsToScale::KeepRaw,
        )
        .unwrap();
        let d = EmissionsCostRate::zero(2);
        let k = coefficients(&econ, &d).unwrap();
        let a = Vector::from_vec(vec![0.1, -0.3]);
        let (lc, ly) = log_consumption(&econ, &k, &a).unwrap();
        let (c, y) = (lc.map(libm::exp), ly.map(libm::exp));
        assert!(equilibrium_residual(&econ, &d, &a, &c, &y).unwrap().max_abs() < 1e-12);
        let mut c2 = c.clone();
        c2[0] *= 1.1;
        assert!(equilibrium_residual(&econ, &d, &a, &c2, &y).unwrap().goods[0].abs() > 1e-3);
    }

    #[test]
    fn no_inputs_labour() {
        let econ = EconomyParams::new(
            Vector::from_vec(vec![0.2, 0.7]),
            Matrix::from_element(2, 2, 1e-12),
            1.0,
            ReturnsToScale::KeepRaw,
        )
        .unwrap();
        let c = Vector::from_vec(vec![1.3, 0.4]);
        let r = equilibrium_residual(&econ, &EmissionsCostRate::zero(2), &Vector::zeros(2), &c, &c).unwrap();
        assert!((r.labour[0] - libm::sqrt(0.2)).abs() < 1e-15);
        assert!((r.labour[1] - libm::sqrt(0.7)).abs() < 1e-15);
    }
}
