//! Gaussian VAR(1) productivity growth `Θ_t = μ + ΓΘ_{t-1} + εE_t` and its
//! cumulative sum `A°_t`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::rng;

/// Eigenvalue modulus at or above which Γ counts as non-stationary.
pub const STATIONARITY_MARGIN: f64 = 1e-9;
/// Condition-number ceiling for the stationary-moment systems.
pub const MOMENT_CONDITION_LIMIT: f64 = 1e12;
/// Eigenvalue clip tolerance when factoring a semidefinite covariance.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct VarParams {
    pub mu: Vector,
    pub gamma: Matrix,
    pub sigma: Matrix,
    pub epsilon: f64,
}

impl VarParams {
    /// Checks shapes, symmetry and semidefiniteness of Σ and `ε ∈ [0, 1]`.
    ///
    /// Stationarity is not required here; see [`check_stationary`].
    pub fn new(mu: Vector, gamma: Matrix, sigma: Matrix, epsilon: f64) -> Result<Self> {
        let n = mu.len();
        if n == 0 || gamma.shape() != (n, n) || sigma.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "mu has {} entries, gamma is {:?}, sigma is {:?}",
                n,
                gamma.shape(),
                sigma.shape()
            )));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside [0, 1]")));
        }
        if mu.iter().chain(gamma.iter()).chain(sigma.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite VAR coefficient".into()));
        }
        let scale = sigma.amax().max(1.0);
        if linalg::max_asymmetry(&sigma) > 1e-12 * scale {
            return Err(Error::InvalidParameter("sigma is not symmetric".into()));
        }
        linalg::psd_factor(&sigma, PSD_TOLERANCE * scale)?;
        Ok(Self { mu, gamma, sigma, epsilon })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.mu.clone(), self.gamma.clone(), self.sigma.clone(), epsilon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    /// Eigenvalues of Γ as `(re, im)`, by decreasing modulus.
    pub eigenvalues: Vec<(f64, f64)>,
    pub moduli: Vec<f64>,
    pub spectral_radius: f64,
    pub stationary: bool,
}

pub fn check_stationary(gamma: &Matrix) -> StationarityReport {
    let eigenvalues = linalg::eigenvalues(gamma);
    let moduli: Vec<f64> = eigenvalues.iter().map(|&z| linalg::modulus(z)).collect();
    let spectral_radius = moduli.first().copied().unwrap_or(0.0);
    StationarityReport {
        eigenvalues,
        moduli,
        spectral_radius,
        stationary: spectral_radius < 1.0 - STATIONARITY_MARGIN,
    }
}

/// Mean `μ̄` and covariance `Σ̄` of the stationary law, without the `ε²` factor.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryMoments {
    pub mu_bar: Vector,
    pub sigma_bar: Matrix,
}

pub fn stationary_moments(params: &VarParams) -> Result<StationaryMoments> {
    let n = params.dim();
    let report = check_stationary(&params.gamma);
    if !report.stationary {
        return Err(Error::NonStationary {
            spectral_radius: report.spectral_radius,
        });
    }
    let a = Matrix::identity(n, n) - &params.gamma;
    let mu_bar = linalg::checked_inverse(&a, MOMENT_CONDITION_LIMIT, "I - Gamma")? * &params.mu;
    let k = Matrix::identity(n * n, n * n) - linalg::kron(&params.gamma, &params.gamma);
    let kinv = linalg::checked_inverse(&k, MOMENT_CONDITION_LIMIT, "I - Gamma (x) Gamma")?;
    let sigma_bar = linalg::symmetrize(&linalg::unvec(&(kinv * linalg::vec_of(&params.sigma)), n, n));
    Ok(StationaryMoments { mu_bar, sigma_bar })
}

/// `Υ_k = Σ_{v=0}^{k} Γ^v`.
pub fn upsilon(gamma: &Matrix, k: usize) -> Matrix {
    let n = gamma.nrows();
    let id = Matrix::identity(n, n);
    let mut u = id.clone();
    for _ in 0..k {
        u = &id + gamma * u;
    }
    u
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLaw {
    pub mean: Vector,
    pub cov: Matrix,
}

/// Coefficients of the law of `Σ_{u=1}^{T} Θ_{t+u}` given `Θ_t = θ`:
/// mean `theta_coef·θ + drift`, covariance `cov`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumLaw {
    pub horizon: usize,
    pub theta_coef: Matrix,
    pub drift: Vector,
    pub cov: Matrix,
}

impl SumLaw {
    pub fn new(params: &VarParams, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        let n = params.dim();
        let mut ups = Vec::with_capacity(horizon);
        ups.push(Matrix::identity(n, n));
        for k in 1..horizon {
            let next = Matrix::identity(n, n) + &params.gamma * &ups[k - 1];
            ups.push(next);
        }
        let theta_coef = &params.gamma * &ups[horizon - 1];
        let mut acc = Matrix::zeros(n, n);
        let mut cov = Matrix::zeros(n, n);
        for u in ups.iter() {
            acc += u;
            cov += u * &params.sigma * u.transpose();
        }
        let eps2 = params.epsilon * params.epsilon;
        Ok(Self {
            horizon,
            theta_coef,
            drift: acc * &params.mu,
            cov: linalg::symmetrize(&(cov * eps2)),
        })
    }

    pub fn mean(&self, theta: &[f64]) -> Vector {
        let mut out = self.drift.clone();
        let mut tmp = vec![0.0; out.len()];
        linalg::matvec(&self.theta_coef, theta, &mut tmp);
        for (o, t) in out.iter_mut().zip(tmp) {
            *o += t;
        }
        out
    }

    pub fn law(&self, theta: &[f64]) -> GaussianLaw {
        GaussianLaw {
            mean: self.mean(theta),
            cov: self.cov.clone(),
        }
    }
}

pub fn conditional_sum_law(params: &VarParams, theta: &Vector, horizon: usize) -> Result<GaussianLaw> {
    if theta.len() != params.dim() {
        return Err(Error::Dimension("theta does not match VAR dimension".into()));
    }
    Ok(SumLaw::new(params, horizon)?.law(theta.as_slice()))
}

/// Productivity growth `Θ_t` and its running sum `A°_t` at model time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductivityState {
    pub t: usize,
    pub theta: Vector,
    pub a_circ: Vector,
}

/// Initial state of simulated paths.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaInit {
    /// `Θ_0 ~ N(μ̄, ε²Σ̄)`.
    Stationary,
    Fixed(Vector),
}

/// Per-path simulator shared by sequential and parallel drivers.
#[derive(Debug, Clone)]
pub struct PathSimulator {
    params: VarParams,
    factor: Matrix,
    init_mean: Vector,
    init_factor: Option<Matrix>,
}

impl PathSimulator {
    pub fn new(params: &VarParams, init: &ThetaInit) -> Result<Self> {
        let n = params.dim();
        let scale = params.sigma.amax().max(1.0);
        let factor = linalg::psd_factor(&params.sigma, PSD_TOLERANCE * scale)? * params.epsilon;
        let (init_mean, init_factor) = match init {
            ThetaInit::Stationary => {
                let m = stationary_moments(params)?;
                let s = m.sigma_bar.amax().max(1.0);
                let f = linalg::psd_factor(&m.sigma_bar, PSD_TOLERANCE * s)? * params.epsilon;
                (m.mu_bar, Some(f))
            }
            ThetaInit::Fixed(theta) => {
                if theta.len() != n {
                    return Err(Error::Dimension("initial theta does not match VAR dimension".into()));
                }
                (theta.clone(), None)
            }
        };
        Ok(Self {
            params: params.clone(),
            factor,
            init_mean,
            init_factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Writes `Θ_0..Θ_H` and `A°_0..A°_H` of path `index` into the two slices,
    /// each of length `(H + 1)·I`.
    pub fn simulate_into(&self, seed: u64, index: u64, theta: &mut [f64], a_circ: &mut [f64]) {
        let n = self.dim();
        let steps = theta.len() / n;
        let mut rng = rng::substream(seed, rng::STREAM_SYSTEMIC + index);
        let mut z = vec![0.0; n];
        let mut shock = vec![0.0; n];
        let mut prop = vec![0.0; n];
        theta[..n].copy_from_slice(self.init_mean.as_slice());
        if let Some(f) = &self.init_factor {
            rng::fill_normal(&mut rng, &mut z);
            linalg::matvec(f, &z, &mut shock);
            for (t, s) in theta[..n].iter_mut().zip(&shock) {
                *t += s;
            }
        }
        for a in a_circ[..n].iter_mut() {
            *a = 0.0;
        }
        for t in 1..steps {
            rng::fill_normal(&mut rng, &mut z);
            linalg::matvec(&self.factor, &z, &mut shock);
            let (prev, cur) = theta.split_at_mut(t * n);
            linalg::matvec(&self.params.gamma, &prev[(t - 1) * n..], &mut prop);
            for i in 0..n {
                cur[i] = self.params.mu[i] + prop[i] + shock[i];
            }
            for i in 0..n {
                a_circ[t * n + i] = a_circ[(t - 1) * n + i] + cur[i];
            }
        }
    }
}

/// Simulated `(Θ_t, A°_t)` for `t = 0..=horizon` on `paths` paths, stored flat
/// as `[path][t][sector]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub dim: usize,
    pub horizon: usize,
    pub paths: usize,
    pub seed: u64,
    pub theta: Vec<f64>,
    pub a_circ: Vec<f64>,
}

impl PathEnsemble {
    pub fn zeros(dim: usize, horizon: usize, paths: usize, seed: u64) -> Self {
        let len = dim * (horizon + 1) * paths;
        Self {
            dim,
            horizon,
            paths,
            seed,
            theta: vec![0.0; len],
            a_circ: vec![0.0; len],
        }
    }

    pub fn stride(&self) -> usize {
        self.dim * (self.horizon + 1)
    }

    pub fn theta(&self, path: usize, t: usize) -> &[f64] {
        let o = path * self.stride() + t * self.dim;
        &self.theta[o..o + self.dim]
    }

    pub fn a_circ(&self, path: usize, t: usize) -> &[f64] {
        let o = path * self.stride() + t * self.dim;
        &self.a_circ[o..o + self.dim]
    }

    pub fn state(&self, path: usize, t: usize) -> ProductivityState {
        ProductivityState {
            t,
            theta: Vector::from_column_slice(self.theta(path, t)),
            a_circ: Vector::from_column_slice(self.a_circ(path, t)),
        }
    }
}

pub fn simulate_paths(
    params: &VarParams,
    init: &ThetaInit,
    horizon: usize,
    paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    let sim = PathSimulator::new(params, init)?;
    let mut ens = PathEnsemble::zeros(params.dim(), horizon, paths, seed);
    let stride = ens.stride();
    for (m, (th, ac)) in ens
        .theta
        .chunks_mut(stride)
        .zip(ens.a_circ.chunks_mut(stride))
        .enumerate()
    {
        sim.simulate_into(seed, m as u64, th, ac);
    }
    Ok(ens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(mu: f64, g: f64, s: f64, eps: f64) -> VarParams {
        VarParams::new(
            Vector::from_element(1, mu),
            Matrix::from_element(1, 1, g),
            Matrix::from_element(1, 1, s),
            eps,
        )
        .unwrap()
    }

    #[test]
    fn scalar_moments() {
        let m = stationary_moments(&scalar(0.01, 0.5, 1e-4, 1.0)).unwrap();
        assert!((m.mu_bar[0] - 0.02).abs() < 1e-15);
        assert!((m.sigma_bar[(0, 0)] - 1e-4 / 0.75).abs() < 1e-18);
    }

    #[test]
    fn identity_is_non_stationary() {
        let p = VarParams::new(
            Vector::zeros(2),
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            1.0,
        )
        .unwrap();
        assert!(!check_stationary(&p.gamma).stationary);
        assert!(matches!(stationary_moments(&p), Err(Error::NonStationary { .. })));
    }

    #[test]
    fn upsilon_recursion_matches_power_sum() {
        let g = Matrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.5]);
        let mut sum = Matrix::zeros(2, 2);
        let mut p = Matrix::identity(2, 2);
        for _ in 0..=6 {
            sum += &p;
            p = &p * &g;
        }
        assert!((upsilon(&g, 6) - sum).amax() < 1e-15);
    }

    #[test]
    fn zero_gamma_sum_law() {
        let p = VarParams::new(
            Vector::from_vec(vec![0.1, -0.2]),
            Matrix::zeros(2, 2),
            Matrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]),
            0.5,
        )
        .unwrap();
        let law = conditional_sum_law(&p, &Vector::from_vec(vec![3.0, 4.0]), 5).unwrap();
        assert!((law.mean - &p.mu * 5.0).amax() < 1e-15);
        assert!((law.cov - &p.sigma * (0.25 * 5.0)).amax() < 1e-15);
    }

    #[test]
    fn zero_noise_paths_are_deterministic() {
        let p = scalar(0.01, 0.5, 1e-4, 0.0);
        let ens = simulate_paths(&p, &ThetaInit::Fixed(Vector::from_element(1, 0.3)), 4, 3, 9).unwrap();
        let mut th = 0.3;
        let mut a = 0.0;
        for t in 1..=4 {
            th = 0.01 + 0.5 * th;
            a += th;
            for m in 0..3 {
                assert_eq!(ens.theta(m, t)[0], th);
                assert_eq!(ens.a_circ(m, t)[0], a);
            }
        }
    }

    #[test]
    fn paths_do_not_depend_on_batch() {
        let p = scalar(0.01, 0.5, 1e-4, 1.0);
        let all = simulate_paths(&p, &ThetaInit::Stationary, 5, 10, 7).unwrap();
        let sim = PathSimulator::new(&p, &ThetaInit::Stationary).unwrap();
        let mut th = vec![0.0; 6];
        let mut ac = vec![0.0; 6];
        sim.simulate_into(7, 8, &mut th, &mut ac);
        for t in 0..=5 {
            assert_eq!(th[t], all.theta(8, t)[0]);
            assert_eq!(ac[t], all.a_circ(8, t)[0]);
        }
    }
}
