//! Firm cash flows, the discounted-cash-flow value proxy `𝒱` and its
//! conditional log-normal laws.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::economy::{self, EconomyParams, EquilibriumCoefficients};
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::transition::{EmissionsCostRate, IntensitySet, TransitionScenario};
use crate::var_process::{PathSimulator, ProductivityState, StationaryMoments, SumLaw, ThetaInit, VarParams};

/// Deterministic per-year amount, extended flat beyond its last entry.
#[derive(Debug, Clone, PartialEq)]
pub struct YearlyAmount(pub Vec<f64>);

impl YearlyAmount {
    pub fn constant(x: f64) -> Self {
        Self(vec![x])
    }

    pub fn at(&self, t: usize) -> f64 {
        self.0[t.min(self.0.len() - 1)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Firm {
    pub id: String,
    /// Sector group index.
    pub group: usize,
    /// Loadings `𝔞` on productivity growth `Θ`.
    pub a: Vector,
    pub sigma_b: f64,
    pub f0: f64,
    /// Default barrier over initial cash flow, `𝔅/F₀`.
    pub b_ratio: f64,
    pub ead: YearlyAmount,
    pub lgd: YearlyAmount,
}

impl Firm {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("firm {}: {what}", self.id)));
        if self.a.len() != dim {
            return Err(Error::Dimension(format!(
                "firm {} has {} loadings, economy has {} sectors",
                self.id,
                self.a.len(),
                dim
            )));
        }
        if self.a.iter().any(|x| !x.is_finite()) {
            return bad("non-finite loading");
        }
        if !(self.sigma_b > 0.0 && self.sigma_b.is_finite()) {
            return bad("sigma_b must be positive");
        }
        if !(self.f0 > 0.0 && self.f0.is_finite()) {
            return bad("F0 must be positive");
        }
        if !(self.b_ratio > 0.0 && self.b_ratio.is_finite()) {
            return bad("barrier ratio must be positive");
        }
        if self.ead.0.is_empty() || self.ead.0.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return bad("EAD must be positive");
        }
        if self.lgd.0.is_empty() || self.lgd.0.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
            return bad("LGD must lie in (0, 1]");
        }
        Ok(())
    }

    pub fn exposure(&self, t: usize) -> f64 {
        self.ead.at(t) * self.lgd.at(t)
    }

    /// `ϱ = ½σ_b² + 𝔞μ̄ − r`.
    pub fn varrho(&self, mu_bar: &Vector, r: f64) -> f64 {
        0.5 * self.sigma_b * self.sigma_b + self.a.dot(mu_bar) - r
    }
}

/// Equilibrium coefficients along a scenario for model years `0..=t_star`,
/// frozen afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct CostPath {
    pub t_circ: usize,
    pub t_star: usize,
    pub coeffs: Vec<EquilibriumCoefficients>,
}

impl CostPath {
    pub fn new(econ: &EconomyParams, scenario: &TransitionScenario) -> Result<Self> {
        Self::from_prices(econ, &scenario.intensities, scenario.t_circ(), &scenario.prices())
    }

    /// `prices[t]` is the carbon price in model year `t`; the last entry is `t_star`.
    pub fn from_prices(
        econ: &EconomyParams,
        intensities: &IntensitySet,
        t_circ: usize,
        prices: &[f64],
    ) -> Result<Self> {
        if prices.is_empty() {
            return Err(Error::InvalidParameter("empty price path".into()));
        }
        let coeffs = prices
            .iter()
            .enumerate()
            .map(|(t, &p)| {
                let d = crate::transition::emissions_cost_rate(p, intensities, t as i64)?;
                economy::coefficients(econ, &d)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            t_circ,
            t_star: prices.len() - 1,
            coeffs,
        })
    }

    /// A path with the same cost rate at every date.
    pub fn constant(econ: &EconomyParams, d: &EmissionsCostRate) -> Result<Self> {
        Ok(Self {
            t_circ: 0,
            t_star: 0,
            coeffs: vec![economy::coefficients(econ, d)?],
        })
    }

    pub fn at(&self, t: usize) -> &EquilibriumCoefficients {
        &self.coeffs[t.min(self.t_star)]
    }

    pub fn frak_v(&self, t: usize) -> &Vector {
        &self.at(t).frak_v
    }
}

/// `R_t = Σ_{s≥0} e^{ϱs}e^{𝔞𝔳(𝔡_{t+s})}`.
///
/// Beyond `t_star` the tail is geometric; before it the head is summed term by
/// term, which also covers intensities that keep moving before `t_circ`.
pub fn r_factor(firm: &Firm, path: &CostPath, varrho: f64, t: usize) -> Result<f64> {
    if !(varrho < 0.0) {
        return Err(Error::NotSummable { varrho });
    }
    let tail = |k: usize| libm::exp(firm.a.dot(path.frak_v(path.t_star)) + varrho * k as f64) / -libm::expm1(varrho);
    if t >= path.t_star {
        return Ok(tail(0));
    }
    let head: f64 = (0..=path.t_star - t)
        .map(|s| libm::exp(varrho * s as f64 + firm.a.dot(path.frak_v(t + s))))
        .sum();
    Ok(head + tail(path.t_star - t + 1))
}

/// Per-firm quantities reused across dates and paths.
#[derive(Debug, Clone, PartialEq)]
pub struct FirmCurve {
    pub varrho: f64,
    /// `𝔞𝔳(𝔡₀)`.
    pub a_v0: f64,
    /// `log R_t` for `t = 0..=t_star`.
    pub log_r: Vec<f64>,
}

impl FirmCurve {
    pub fn new(firm: &Firm, path: &CostPath, mu_bar: &Vector, r: f64) -> Result<Self> {
        let varrho = firm.varrho(mu_bar, r);
        let log_r = (0..=path.t_star)
            .map(|t| r_factor(firm, path, varrho, t).map(libm::log))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            varrho,
            a_v0: firm.a.dot(path.frak_v(0)),
            log_r,
        })
    }

    pub fn log_r(&self, t: usize) -> f64 {
        self.log_r[t.min(self.log_r.len() - 1)]
    }

    /// `𝔪 = 𝔞(A°_t − 𝔳(𝔡₀)) + log R_t`.
    pub fn frak_m(&self, firm: &Firm, t: usize, a_circ: &[f64]) -> f64 {
        linalg::dot(firm.a.as_slice(), a_circ) - self.a_v0 + self.log_r(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueLaw {
    pub mean_log: f64,
    pub var_log: f64,
}

/// `𝒱_t = F₀·R_t·exp(𝔞(A°_t − 𝔳(𝔡₀)))·exp(W_t)`.
pub fn firm_value_proxy(firm: &Firm, curve: &FirmCurve, state: &ProductivityState, w: f64) -> Result<f64> {
    if !(curve.varrho < 0.0) {
        return Err(Error::NotSummable { varrho: curve.varrho });
    }
    Ok(firm.f0 * libm::exp(curve.frak_m(firm, state.t, state.a_circ.as_slice()) + w))
}

/// Law of `log 𝒱_t` given the systemic history up to `t`.
pub fn value_cond_law(firm: &Firm, curve: &FirmCurve, t: usize, a_circ: &[f64]) -> Result<ValueLaw> {
    if !(curve.varrho < 0.0) {
        return Err(Error::NotSummable { varrho: curve.varrho });
    }
    Ok(ValueLaw {
        mean_log: libm::log(firm.f0) + curve.frak_m(firm, t, a_circ),
        var_log: t as f64 * firm.sigma_b * firm.sigma_b,
    })
}

/// Forward-law coefficients of one firm for a fixed horizon `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCoefs {
    pub horizon: usize,
    /// `𝔞ΓΥ_{T−1}` as a row.
    pub theta_row: Vec<f64>,
    /// `𝔞(Σ_{u=1}^{T} Υ_{u−1})μ`.
    pub drift: f64,
    /// `ε²Σ_u (𝔞Υ_{T−u})Σ(𝔞Υ_{T−u})ᵀ`.
    pub systemic_var: f64,
}

impl ForwardCoefs {
    pub fn new(firm: &Firm, law: &SumLaw) -> Self {
        Self {
            horizon: law.horizon,
            theta_row: (law.theta_coef.transpose() * &firm.a).as_slice().to_vec(),
            drift: firm.a.dot(&law.drift),
            systemic_var: (firm.a.transpose() * &law.cov * &firm.a)[(0, 0)].max(0.0),
        }
    }

    /// `𝒦`: mean of `log 𝒱_{t+T} − log F₀` given `(A°_t, Θ_t)`.
    pub fn mean(&self, firm: &Firm, curve: &FirmCurve, t: usize, a_circ: &[f64], theta: &[f64]) -> f64 {
        linalg::dot(firm.a.as_slice(), a_circ) - curve.a_v0
            + curve.log_r(t + self.horizon)
            + linalg::dot(&self.theta_row, theta)
            + self.drift
    }

    /// Idiosyncratic part `σ_b²(t+T)` of `ℒ`.
    pub fn idiosyncratic_var(&self, firm: &Firm, t: usize) -> f64 {
        firm.sigma_b * firm.sigma_b * (t + self.horizon) as f64
    }

    /// `ℒ`.
    pub fn var(&self, firm: &Firm, t: usize) -> f64 {
        self.idiosyncratic_var(firm, t) + self.systemic_var
    }
}

/// Law of `log 𝒱_{t+T}` given the systemic history up to `t`.
pub fn value_forward_law(
    firm: &Firm,
    curve: &FirmCurve,
    params: &VarParams,
    t: usize,
    horizon: usize,
    a_circ: &[f64],
    theta: &[f64],
) -> Result<ValueLaw> {
    if !(curve.varrho < 0.0) {
        return Err(Error::NotSummable { varrho: curve.varrho });
    }
    let fc = ForwardCoefs::new(firm, &SumLaw::new(params, horizon)?);
    Ok(ValueLaw {
        mean_log: libm::log(firm.f0) + fc.mean(firm, curve, t, a_circ, theta),
        var_log: fc.var(firm, t),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellPosednessReport {
    /// `None` when `|Γ| ≥ 1`, where the bound is not available.
    pub rho: Option<f64>,
    pub gamma_norm: f64,
    pub spectral_radius: f64,
    pub varrho: Vec<f64>,
    pub r: f64,
    /// Every `ϱ_n < 0`.
    pub proxy_pass: bool,
    /// `ρ < r`, when `ρ` exists.
    pub value_pass: Option<bool>,
}

impl WellPosednessReport {
    pub fn pass(&self) -> bool {
        self.proxy_pass && self.value_pass.unwrap_or(true)
    }
}

pub fn check_well_posed(firms: &[Firm], params: &VarParams, moments: &StationaryMoments, r: f64) -> WellPosednessReport {
    let gamma_norm = linalg::operator_norm(&params.gamma);
    let spectral_radius = linalg::spectral_radius(&params.gamma);
    let sqrt_sigma2 = linalg::max_symmetric_eigenvalue(&params.sigma).max(0.0);
    let varrho: Vec<f64> = firms.iter().map(|f| f.varrho(&moments.mu_bar, r)).collect();
    let rho = if gamma_norm < 1.0 && !firms.is_empty() {
        let e2 = params.epsilon * params.epsilon;
        Some(
            firms
                .iter()
                .map(|f| {
                    f.a.dot(&moments.mu_bar)
                        + 0.5 * f.sigma_b * f.sigma_b
                        + 0.5 * e2 * f.a.norm_squared() * sqrt_sigma2 / ((1.0 - gamma_norm) * (1.0 - gamma_norm))
                })
                .fold(f64::NEG_INFINITY, f64::max),
        )
    } else {
        None
    };
    WellPosednessReport {
        rho,
        gamma_norm,
        spectral_radius,
        proxy_pass: varrho.iter().all(|v| *v < 0.0),
        value_pass: rho.map(|x| x < r),
        varrho,
        r,
    }
}

/// Smallest `K` with `e^{rate·K} < 1e-12`, capped at 5000.
pub fn truncation_horizon(rate: f64) -> usize {
    if !(rate < 0.0) {
        return 5000;
    }
    let k = libm::ceil(libm::log(1e-12) / rate);
    (k as usize).clamp(1, 5000)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub terms: usize,
}

/// Monte Carlo estimate of `V_t/F_t = Σ_{s=0}^{K} e^{−rs}E_t[F_{t+s}/F_t]`.
///
/// Cash flows follow `F_{s+1} = F_s·exp(𝔞(Θ_{s+1} + Δ𝔳) + 𝔟_{s+1})` along
/// simulated continuations of `Θ` from `state`; the idiosyncratic factor
/// `E[e^{Σ𝔟}] = e^{½σ_b²s}` is applied in closed form.
#[allow(clippy::too_many_arguments)]
pub fn firm_value_mc_oracle(
    firm: &Firm,
    path: &CostPath,
    params: &VarParams,
    moments: &StationaryMoments,
    r: f64,
    state: &ProductivityState,
    k_trunc: Option<usize>,
    paths: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    let report = check_well_posed(core::slice::from_ref(firm), params, moments, r);
    let rho = match report.rho {
        Some(rho) if rho < r => rho,
        Some(rho) => return Err(Error::NotSummable { varrho: rho - r }),
        None => {
            return Err(Error::InvalidParameter(
                "operator norm of Gamma is at least 1; no summability bound".into(),
            ))
        }
    };
    let varrho = report.varrho[0];
    let k = k_trunc.unwrap_or_else(|| truncation_horizon(varrho.max(rho - r)));
    let n = params.dim();
    let sim = PathSimulator::new(params, &ThetaInit::Fixed(state.theta.clone()))?;
    let av_t = firm.a.dot(path.frak_v(state.t));
    let weights: Vec<f64> = (0..=k)
        .map(|s| {
            libm::exp(
                (0.5 * firm.sigma_b * firm.sigma_b - r) * s as f64 + firm.a.dot(path.frak_v(state.t + s)) - av_t,
            )
        })
        .collect();
    let mut th = vec![0.0; (k + 1) * n];
    let mut ac = vec![0.0; (k + 1) * n];
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for m in 0..paths {
        sim.simulate_into(seed, m as u64, &mut th, &mut ac);
        let mut v = 0.0;
        for (s, w) in weights.iter().enumerate() {
            v += w * libm::exp(linalg::dot(firm.a.as_slice(), &ac[s * n..(s + 1) * n]));
        }
        sum += v;
        sum2 += v * v;
    }
    let mf = paths as f64;
    let mean = sum / mf;
    let var = if paths > 1 { (sum2 - mf * mean * mean).max(0.0) / (mf - 1.0) } else { 0.0 };
    Ok(OracleEstimate {
        mean,
        stderr: libm::sqrt(var / mf),
        terms: k + 1,
    })
}

/// `𝒱_t/F_t = e^{−𝔞𝔳(𝔡_t)}R_t`, the quantity the oracle approximates.
pub fn proxy_ratio(firm: &Firm, path: &CostPath, curve: &FirmCurve, t: usize) -> f64 {
    libm::exp(curve.log_r(t) - firm.a.dot(path.frak_v(t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::ReturnsToScale;
    use crate::linalg::Matrix;

    fn firm(a: Vector, sigma_b: f64) -> Firm {
        Firm {
            id: "f".into(),
            group: 0,
            a,
            sigma_b,
            f0: 2.0,
            b_ratio: 1.0,
            ead: YearlyAmount::constant(1.0),
            lgd: YearlyAmount::constant(0.5),
        }
    }

    #[test]
    fn varrho_hand_value() {
        let f = firm(Vector::zeros(1), 0.1);
        assert!((f.varrho(&Vector::from_element(1, 0.3), 0.05) + 0.045).abs() < 1e-16);
    }

    #[test]
    fn zero_loading_value_ignores_scenario() {
        let econ = EconomyParams::new(
            Vector::from_element(1, 0.4),
            Matrix::from_element(1, 1, 0.6),
            1.0,
            ReturnsToScale::KeepRaw,
        )
        .unwrap();
        let path = CostPath::constant(&econ, &EmissionsCostRate::zero(1)).unwrap();
        let f = firm(Vector::zeros(1), 0.1);
        let curve = FirmCurve::new(&f, &path, &Vector::zeros(1), 0.05).unwrap();
        let state = ProductivityState {
            t: 3,
            theta: Vector::zeros(1),
            a_circ: Vector::from_element(1, 0.7),
        };
        let v = firm_value_proxy(&f, &curve, &state, 0.2).unwrap();
        let expect = 2.0 * libm::exp(0.2) / (1.0 - libm::exp(0.005 - 0.05));
        assert!((v / expect - 1.0).abs() < 1e-14);
    }

    #[test]
    fn not_summable_rejected() {
        let f = firm(Vector::from_element(1, 1.0), 0.1);
        let econ = EconomyParams::new(
            Vector::from_element(1, 0.4),
            Matrix::from_element(1, 1, 0.6),
            1.0,
            ReturnsToScale::KeepRaw,
        )
        .unwrap();
        let path = CostPath::constant(&econ, &EmissionsCostRate::zero(1)).unwrap();
        assert!(matches!(
            FirmCurve::new(&f, &path, &Vector::from_element(1, 0.01), 0.0),
            Err(Error::NotSummable { .. })
        ));
    }

    #[test]
    fn truncation_horizon_hits_tolerance() {
        let k = truncation_horizon(-0.05);
        assert!(libm::exp(-0.05 * k as f64) < 1e-12);
        assert!(libm::exp(-0.05 * (k - 1) as f64) >= 1e-12);
        assert_eq!(truncation_horizon(-1e-9), 5000);
    }
}
