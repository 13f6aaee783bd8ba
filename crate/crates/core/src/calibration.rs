//! Parameter estimation from historical panels: carbon intensities and their
//! decay curves, production elasticities, the productivity VAR, factor
//! loadings and default barriers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::economy::EconomyParams;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::normal;
use crate::transition::{EmissionsCostRate, IntensityCurve};
use crate::valuation::{CostPath, Firm, FirmCurve, ForwardCoefs, YearlyAmount};
use crate::var_process::{
    self, PathEnsemble, StationarityReport, StationaryMoments, SumLaw, ThetaInit, VarParams,
};

/// Observed sector series in euros, indexed `[year][sector]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorPanel {
    pub years: Vec<i32>,
    pub output_value: Vec<Vec<f64>>,
    pub consumption_value: Vec<Vec<f64>>,
    pub labor_hours: Vec<Vec<f64>>,
    pub compensation: Vec<Vec<f64>>,
    /// `flows[y][(j, i)]`: euro payments of sector `i` to input `j`.
    pub flows: Vec<Matrix>,
}

impl SectorPanel {
    pub fn dim(&self) -> usize {
        self.output_value.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let (ny, n) = (self.years.len(), self.dim());
        if ny == 0 || n == 0 {
            return Err(Error::Dimension("sector panel is empty".into()));
        }
        for (name, s) in [
            ("output", &self.output_value),
            ("consumption", &self.consumption_value),
            ("labor", &self.labor_hours),
            ("compensation", &self.compensation),
        ] {
            if s.len() != ny || s.iter().any(|r| r.len() != n) {
                return Err(Error::Dimension(format!("{name} series is not years x sectors")));
            }
        }
        if self.flows.len() != ny || self.flows.iter().any(|f| f.shape() != (n, n)) {
            return Err(Error::Dimension("flow matrices are not years x (I x I)".into()));
        }
        Ok(())
    }

    /// Log output growth `Δ^Y_t` from price-deflated values, i.e. from
    /// `output_value / price`; pass unit prices for volume series.
    pub fn output_growth(&self, prices: Option<&[Vec<f64>]>) -> Vec<Vector> {
        let n = self.dim();
        let vol = |y: usize, i: usize| {
            let p = prices.map(|p| p[y][i]).unwrap_or(1.0);
            self.output_value[y][i] / p
        };
        (1..self.years.len())
            .map(|y| Vector::from_fn(n, |i, _| libm::log(vol(y, i)) - libm::log(vol(y - 1, i))))
            .collect()
    }
}

/// Emissions in tons, indexed `[year][sector]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionsPanel {
    pub years: Vec<i32>,
    pub firm: Vec<Vec<f64>>,
    pub household: Vec<Vec<f64>>,
    /// `intermediary[y][(j, i)]`: emissions of sector `i` through input `j`.
    pub intermediary: Vec<Matrix>,
}

/// Realized intensities in tons per euro.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedIntensities {
    pub years: Vec<i32>,
    pub tau: Vec<Vector>,
    pub kappa: Vec<Vector>,
    pub zeta: Vec<Matrix>,
}

impl RealizedIntensities {
    pub fn dim(&self) -> usize {
        self.tau.first().map(|v| v.len()).unwrap_or(0)
    }

    pub fn tau_series(&self, i: usize) -> Vec<f64> {
        self.tau.iter().map(|v| v[i]).collect()
    }

    pub fn kappa_series(&self, i: usize) -> Vec<f64> {
        self.kappa.iter().map(|v| v[i]).collect()
    }

    pub fn zeta_series(&self, j: usize, i: usize) -> Vec<f64> {
        self.zeta.iter().map(|m| m[(j, i)]).collect()
    }
}

fn ratio(num: f64, den: f64, what: &str, year: i32, sector: &str) -> Result<f64> {
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator(format!("{what} in year {year}, sector {sector}")));
    }
    Ok(num / den)
}

/// `τ = E^F/(YP)`, `κ = E^H/(PC)`, `ζ^{ji} = E^{ji}/(P^jZ^{ji})` on the years
/// present in both panels.
pub fn intensity_from_flows(emissions: &EmissionsPanel, panel: &SectorPanel) -> Result<RealizedIntensities> {
    panel.validate()?;
    let n = panel.dim();
    let mut out = RealizedIntensities {
        years: Vec::new(),
        tau: Vec::new(),
        kappa: Vec::new(),
        zeta: Vec::new(),
    };
    for (ye, &year) in emissions.years.iter().enumerate() {
        let Some(yp) = panel.years.iter().position(|&y| y == year) else {
            continue;
        };
        if emissions.firm[ye].len() != n || emissions.household[ye].len() != n || emissions.intermediary[ye].shape() != (n, n) {
            return Err(Error::Dimension(format!("emissions for {year} do not cover {n} sectors")));
        }
        let mut tau = Vector::zeros(n);
        let mut kappa = Vector::zeros(n);
        let mut zeta = Matrix::zeros(n, n);
        for i in 0..n {
            let s = format!("{i}");
            tau[i] = ratio(emissions.firm[ye][i], panel.output_value[yp][i], "output value", year, &s)?;
            kappa[i] = ratio(emissions.household[ye][i], panel.consumption_value[yp][i], "consumption value", year, &s)?;
            for j in 0..n {
                zeta[(j, i)] = ratio(
                    emissions.intermediary[ye][(j, i)],
                    panel.flows[yp][(j, i)],
                    "intermediary flow",
                    year,
                    &format!("{j}->{i}"),
                )?;
            }
        }
        out.years.push(year);
        out.tau.push(tau);
        out.kappa.push(kappa);
        out.zeta.push(zeta);
    }
    if out.years.is_empty() {
        return Err(Error::Dimension("emissions and sector panels share no year".into()));
    }
    Ok(out)
}

/// Allocates per-sector indirect emissions of `i` across inputs `j` in
/// proportion to the euro flows `j → i`.
pub fn split_indirect_emissions(indirect: &[f64], flows: &Matrix) -> Result<Matrix> {
    let n = indirect.len();
    if flows.shape() != (n, n) {
        return Err(Error::Dimension("flows must be I x I".into()));
    }
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        let total: f64 = flows.column(i).sum();
        if indirect[i] == 0.0 {
            continue;
        }
        if !(total > 0.0) {
            return Err(Error::ZeroDenominator(format!("sector {i} has no intermediary inputs")));
        }
        for j in 0..n {
            out[(j, i)] = indirect[i] * flows[(j, i)] / total;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFlag {
    Ok,
    /// Growth changed sign; the fit used `|g_t|`.
    NonMonotone,
    /// All growth rates vanish; a constant curve was returned.
    DegenerateFlat,
    /// The decay rate came out nonpositive and was floored.
    ThetaFloored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveFit {
    pub y0: f64,
    pub g0: f64,
    pub theta: f64,
    pub flag: CurveFlag,
}

impl CurveFit {
    pub fn curve(&self, t_star: i64) -> Result<IntensityCurve> {
        IntensityCurve::new(self.y0, self.g0, self.theta, t_star)
    }
}

pub const MIN_DECAY: f64 = 1e-10;

/// Fits `y_t = y0·exp(g0(1 − e^{−θt})/θ)` to a series observed at `t = 0, 1, …`.
pub fn fit_intensity_curve(series: &[f64]) -> Result<CurveFit> {
    if series.len() < 4 {
        return Err(Error::TooShort {
            got: series.len(),
            need: 4,
        });
    }
    if series.iter().any(|y| !(*y > 0.0 && y.is_finite())) {
        return Err(Error::DomainError("intensity series must be positive".into()));
    }
    let g: Vec<f64> = series.windows(2).map(|w| libm::log(w[1]) - libm::log(w[0])).collect();
    if g.iter().all(|x| x.abs() < 1e-12) {
        return Ok(CurveFit {
            y0: series.iter().sum::<f64>() / series.len() as f64,
            g0: 0.0,
            theta: 1.0,
            flag: CurveFlag::DegenerateFlat,
        });
    }
    let mut flag = if g.iter().all(|&x| x > 0.0) || g.iter().all(|&x| x < 0.0) {
        CurveFlag::Ok
    } else {
        CurveFlag::NonMonotone
    };
    let pts: Vec<(f64, f64)> = g
        .iter()
        .enumerate()
        .filter(|(_, x)| x.abs() >= 1e-12)
        .map(|(k, x)| ((k + 1) as f64, libm::log(x.abs())))
        .collect();
    let (slope, intercept) = if pts.len() >= 2 {
        simple_ols(&pts)
    } else {
        (0.0, pts[0].1)
    };
    let mut theta = -slope;
    if theta < MIN_DECAY {
        theta = MIN_DECAY;
        if flag == CurveFlag::Ok {
            flag = CurveFlag::ThetaFloored;
        }
    }
    let sign = if g.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let g0 = sign * libm::exp(intercept) * theta / libm::expm1(theta);
    let f = |t: f64| libm::exp(-g0 * libm::expm1(-theta * t) / theta);
    let (mut num, mut den) = (0.0, 0.0);
    for (t, y) in series.iter().enumerate() {
        let ft = f(t as f64);
        num += y * ft;
        den += ft * ft;
    }
    Ok(CurveFit {
        y0: num / den,
        g0,
        theta,
        flag,
    })
}

fn simple_ols(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticityFit {
    pub psi: Vector,
    /// Storage `lambda[(j, i)]`, input `j` into sector `i`.
    pub lambda: Matrix,
    /// `ψ^i + Σ_j λ^{ji}` per sector.
    pub coverage: Vector,
}

pub fn estimate_elasticities(panel: &SectorPanel) -> Result<ElasticityFit> {
    panel.validate()?;
    let n = panel.dim();
    let ny = panel.years.len() as f64;
    let mut psi = Vector::zeros(n);
    let mut lambda = Matrix::zeros(n, n);
    for (y, &year) in panel.years.iter().enumerate() {
        for i in 0..n {
            let out = panel.output_value[y][i];
            let s = format!("{i}");
            psi[i] += ratio(panel.compensation[y][i], out, "output value", year, &s)? / ny;
            for j in 0..n {
                lambda[(j, i)] += ratio(panel.flows[y][(j, i)], out, "output value", year, &s)? / ny;
            }
        }
    }
    let coverage = Vector::from_fn(n, |i, _| psi[i] + lambda.column(i).sum());
    Ok(ElasticityFit { psi, lambda, coverage })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarFit {
    pub params: VarParams,
    pub stationarity: StationarityReport,
    /// Productivity growth series `Θ̂_t`.
    pub theta_hat: Vec<Vector>,
    /// Standard errors of `Γ̂` entries.
    pub gamma_se: Matrix,
    pub mu_se: Vector,
}

/// `Θ̂_t = (I − λᵀ)Δ^Y_t` under zero carbon price, then equation-by-equation
/// OLS with intercept. `ε` is fixed at 1. Nonstationarity is reported, not fatal.
pub fn estimate_var(delta_y: &[Vector], lambda: &Matrix) -> Result<VarFit> {
    let n = lambda.nrows();
    let a = Matrix::identity(n, n) - lambda.transpose();
    let theta_hat: Vec<Vector> = delta_y.iter().map(|d| &a * d).collect();
    if theta_hat.iter().any(|v| v.len() != n) {
        return Err(Error::Dimension("growth vectors do not match lambda".into()));
    }
    let obs = theta_hat.len().saturating_sub(1);
    if obs < n + 2 {
        return Err(Error::TooShort { got: obs, need: n + 2 });
    }
    let x = Matrix::from_fn(obs, n + 1, |r, c| if c == 0 { 1.0 } else { theta_hat[r][c - 1] });
    let y = Matrix::from_fn(obs, n, |r, c| theta_hat[r + 1][c]);
    let xtx = x.transpose() * &x;
    let xtx_inv = linalg::checked_inverse(&xtx, 1e14, "VAR design").map_err(|_| Error::RankDeficient {
        rank: x.clone().rank(1e-12),
        need: n + 1,
    })?;
    let beta = &xtx_inv * x.transpose() * &y;
    let resid = &y - &x * &beta;
    let mut sigma = linalg::symmetrize(&(resid.transpose() * &resid / (obs as f64 - 1.0)));
    for i in 0..n {
        sigma[(i, i)] = sigma[(i, i)].max(0.0);
    }
    let mu = Vector::from_fn(n, |i, _| beta[(0, i)]);
    let gamma = Matrix::from_fn(n, n, |i, j| beta[(j + 1, i)]);
    let gamma_se = Matrix::from_fn(n, n, |i, j| libm::sqrt(sigma[(i, i)] * xtx_inv[(j + 1, j + 1)]));
    let mu_se = Vector::from_fn(n, |i, _| libm::sqrt(sigma[(i, i)] * xtx_inv[(0, 0)]));
    let stationarity = var_process::check_stationary(&gamma);
    let params = VarParams::new(mu, gamma, sigma, 1.0)?;
    Ok(VarFit {
        params,
        stationarity,
        theta_hat,
        gamma_se,
        mu_se,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadingFit {
    /// Loadings on output growth `Δ^Y`.
    pub a_tilde: Vector,
    pub a_se: Vector,
    pub sigma_b: f64,
}

impl LoadingFit {
    /// Loadings on productivity growth, as used by valuation.
    pub fn theta_loading(&self, econ: &EconomyParams) -> Vector {
        econ.theta_loading(&self.a_tilde)
    }
}

pub const LOADING_CONDITION_LIMIT: f64 = 1e10;

/// Regresses group-summed log cash-flow growth on `Δ^Y` without intercept:
/// `Σ_{n∈g} ω_t^n = #g·ã·Δ_t + √#g·σ_b·u_t`.
pub fn fit_factor_loadings(group_growth: &[f64], regressors: &[Vector], group_size: usize) -> Result<LoadingFit> {
    let n = regressors.first().map(|v| v.len()).unwrap_or(0);
    let obs = group_growth.len();
    if regressors.len() != obs || regressors.iter().any(|v| v.len() != n) || n == 0 {
        return Err(Error::Dimension("growth panel and regressors disagree".into()));
    }
    if group_size == 0 {
        return Err(Error::InvalidParameter("empty group".into()));
    }
    if obs < n + 2 {
        return Err(Error::TooShort { got: obs, need: n + 2 });
    }
    let x = Matrix::from_fn(obs, n, |r, c| regressors[r][c]);
    let sv = x.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 0.0) || smax / smin > LOADING_CONDITION_LIMIT {
        return Err(Error::RankDeficient {
            rank: sv.iter().filter(|&&s| s > smax * 1e-10).count(),
            need: n,
        });
    }
    let y = Vector::from_column_slice(group_growth);
    let xtx_inv = (x.transpose() * &x)
        .try_inverse()
        .ok_or(Error::RankDeficient { rank: 0, need: n })?;
    let beta = &xtx_inv * x.transpose() * &y;
    let resid = &y - &x * &beta;
    let s2 = resid.norm_squared() / (obs - n) as f64;
    let g = group_size as f64;
    Ok(LoadingFit {
        a_tilde: &beta / g,
        a_se: Vector::from_fn(n, |i, _| libm::sqrt(s2 * xtx_inv[(i, i)]) / g),
        sigma_b: libm::sqrt(s2 / g),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierFlag {
    Interior,
    /// No defaults observed; the lower bracket end is returned.
    NoDefaults,
    /// Every rated firm defaulted, or the likelihood peaks at the upper end.
    AtUpperBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierFit {
    pub b_ratio: f64,
    pub log_b: f64,
    pub log_likelihood: f64,
    pub flag: BarrierFlag,
    /// Pre-scan grid `(log B, ℒ)`.
    pub grid: Vec<(f64, f64)>,
}

pub const MLE_GRID: usize = 64;
const PD_CLAMP: f64 = 1e-12;

/// Log-likelihood of the yearly default counts as a function of `log B`,
/// integrated over a frozen path ensemble at zero carbon price.
#[derive(Debug, Clone)]
pub struct BarrierLikelihood {
    rated: Vec<u64>,
    defaulted: Vec<u64>,
    /// `𝒦` per `[year][path]`.
    k: Vec<Vec<f64>>,
    /// `√ℒ` per year.
    scale: Vec<f64>,
    log_binom: Vec<f64>,
}

impl BarrierLikelihood {
    /// `rated[t]`, `defaulted[t]` are counts for history year `t = 0, 1, …`,
    /// measured from the first history year. `a` and `sigma_b` are the group's
    /// Θ-loadings and volatility.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rated: &[u64],
        defaulted: &[u64],
        a: &Vector,
        sigma_b: f64,
        econ: &EconomyParams,
        params: &VarParams,
        moments: &StationaryMoments,
        r: f64,
        paths: usize,
        seed: u64,
    ) -> Result<Self> {
        if rated.len() != defaulted.len() || rated.is_empty() {
            return Err(Error::Dimension("rated and defaulted counts must align".into()));
        }
        if rated.iter().zip(defaulted).any(|(r, d)| d > r) {
            return Err(Error::InvalidParameter("more defaults than rated firms".into()));
        }
        if rated.iter().all(|&r| r == 0) {
            return Err(Error::InvalidParameter("no rated firms in the history".into()));
        }
        let n = params.dim();
        let firm = Firm {
            id: "group".into(),
            group: 0,
            a: a.clone(),
            sigma_b,
            f0: 1.0,
            b_ratio: 1.0,
            ead: YearlyAmount::constant(1.0),
            lgd: YearlyAmount::constant(1.0),
        };
        firm.validate(n)?;
        let path = CostPath::constant(econ, &EmissionsCostRate::zero(n))?;
        let curve = FirmCurve::new(&firm, &path, &moments.mu_bar, r)?;
        let fc = ForwardCoefs::new(&firm, &SumLaw::new(params, 1)?);
        let years = rated.len();
        let ens: PathEnsemble = var_process::simulate_paths(params, &ThetaInit::Stationary, years - 1, paths, seed)?;
        let k = (0..years)
            .map(|t| (0..paths).map(|m| fc.mean(&firm, &curve, t, ens.a_circ(m, t), ens.theta(m, t))).collect())
            .collect();
        let scale = (0..years).map(|t| libm::sqrt(fc.var(&firm, t))).collect();
        let log_binom = rated
            .iter()
            .zip(defaulted)
            .map(|(&r, &d)| {
                libm::lgamma(r as f64 + 1.0) - libm::lgamma(d as f64 + 1.0) - libm::lgamma((r - d) as f64 + 1.0)
            })
            .collect();
        Ok(Self {
            rated: rated.to_vec(),
            defaulted: defaulted.to_vec(),
            k,
            scale,
            log_binom,
        })
    }

    pub fn value(&self, log_b: f64) -> f64 {
        let mut total = 0.0;
        let mut terms = vec![0.0; self.k.first().map(|v| v.len()).unwrap_or(0)];
        for (t, ks) in self.k.iter().enumerate() {
            let (r, d) = (self.rated[t] as f64, self.defaulted[t] as f64);
            if self.rated[t] == 0 {
                continue;
            }
            for (term, &k) in terms.iter_mut().zip(ks) {
                let p = normal::cdf((log_b - k) / self.scale[t]).clamp(PD_CLAMP, 1.0 - PD_CLAMP);
                *term = d * libm::log(p) + (r - d) * libm::log1p(-p);
            }
            let mx = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = terms.iter().map(|x| libm::exp(x - mx)).sum();
            total += self.log_binom[t] + mx + libm::log(s / terms.len() as f64);
        }
        total
    }

    /// Bracket for `log B` spanning the path spread of `𝒦` by eight volatilities.
    pub fn bracket(&self) -> (f64, f64) {
        let smax = self.scale.iter().copied().fold(0.0, f64::max);
        let kmin = self.k.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let kmax = self.k.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        (kmin - 8.0 * smax, kmax + 8.0 * smax)
    }

    pub fn maximize(&self) -> Result<BarrierFit> {
        let (lo, hi) = self.bracket();
        let step = (hi - lo) / (MLE_GRID - 1) as f64;
        let grid: Vec<(f64, f64)> = (0..MLE_GRID)
            .map(|k| {
                let x = lo + step * k as f64;
                (x, self.value(x))
            })
            .collect();
        let fit = |log_b: f64, flag| BarrierFit {
            b_ratio: libm::exp(log_b),
            log_b,
            log_likelihood: self.value(log_b),
            flag,
            grid: grid.clone(),
        };
        if self.defaulted.iter().all(|&d| d == 0) {
            return Ok(fit(lo, BarrierFlag::NoDefaults));
        }
        if self.rated.iter().zip(&self.defaulted).all(|(r, d)| r == d) {
            return Ok(fit(hi, BarrierFlag::AtUpperBound));
        }
        let best = grid
            .iter()
            .enumerate()
            .fold(0, |b, (k, g)| if g.1 > grid[b].1 { k } else { b });
        if best == 0 {
            return Err(Error::BracketFailure);
        }
        if best == MLE_GRID - 1 {
            return Ok(fit(hi, BarrierFlag::AtUpperBound));
        }
        let x = golden_max(|x| self.value(x), grid[best - 1].0, grid[best + 1].0, 1e-10);
        Ok(fit(x, BarrierFlag::Interior))
    }
}

/// Golden-section maximizer of a unimodal function on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Barrier ratio of one group by maximum likelihood.
#[allow(clippy::too_many_arguments)]
pub fn fit_barrier_mle(
    rated: &[u64],
    defaulted: &[u64],
    a: &Vector,
    sigma_b: f64,
    econ: &EconomyParams,
    params: &VarParams,
    moments: &StationaryMoments,
    r: f64,
    paths: usize,
    seed: u64,
) -> Result<BarrierFit> {
    BarrierLikelihood::new(rated, defaulted, a, sigma_b, econ, params, moments, r, paths, seed)?.maximize()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intensity_arithmetic() {
        let panel = SectorPanel {
            years: vec![2020],
            output_value: vec![vec![1e9]],
            consumption_value: vec![vec![5e8]],
            labor_hours: vec![vec![1.0]],
            compensation: vec![vec![1e8]],
            flows: vec![Matrix::from_element(1, 1, 2e8)],
        };
        let em = EmissionsPanel {
            years: vec![2020],
            firm: vec![vec![1e6]],
            household: vec![vec![0.0]],
            intermediary: vec![Matrix::from_element(1, 1, 2e5)],
        };
        let r = intensity_from_flows(&em, &panel).unwrap();
        assert!((r.tau[0][0] - 1e-3).abs() < 1e-18);
        assert_eq!(r.kappa[0][0], 0.0);
        assert!((r.zeta[0][(0, 0)] - 1e-3).abs() < 1e-18);
        let mut bad = panel.clone();
        bad.consumption_value[0][0] = 0.0;
        assert!(matches!(intensity_from_flows(&em, &bad), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn curve_round_trip() {
        let c = IntensityCurve::new(0.07, -0.039, 0.037, i64::MAX).unwrap();
        let ys: Vec<f64> = (0..14).map(|t| c.value(t)).collect();
        let f = fit_intensity_curve(&ys).unwrap();
        assert_eq!(f.flag, CurveFlag::Ok);
        assert!((f.y0 / 0.07 - 1.0).abs() < 1e-6);
        assert!((f.g0 / -0.039 - 1.0).abs() < 1e-6);
        assert!((f.theta / 0.037 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn flat_curve() {
        let f = fit_intensity_curve(&[2.0; 6]).unwrap();
        assert_eq!(f.flag, CurveFlag::DegenerateFlat);
        assert_eq!(f.y0, 2.0);
        assert!(matches!(fit_intensity_curve(&[1.0, 2.0, 3.0]), Err(Error::TooShort { .. })));
    }

    #[test]
    fn pure_exponential_limit() {
        let ys: Vec<f64> = (0..14).map(|t| 0.5 * libm::exp(-0.03 * t as f64)).collect();
        let f = fit_intensity_curve(&ys).unwrap();
        assert!(f.theta < 1e-6);
        assert!((f.g0 / -0.03 - 1.0).abs() < 0.05);
    }

    #[test]
    fn indirect_split_is_proportional() {
        let flows = Matrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 1.0]);
        let z = split_indirect_emissions(&[8.0, 4.0], &flows).unwrap();
        assert_eq!(z[(0, 0)], 2.0);
        assert_eq!(z[(1, 0)], 6.0);
        assert_eq!(z[(0, 1)], 3.0);
        assert_eq!(z[(1, 1)], 1.0);
    }

    #[test]
    fn golden_section_finds_peak() {
        let x = golden_max(|x| -(x - 0.3) * (x - 0.3), -2.0, 5.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
    }
}
