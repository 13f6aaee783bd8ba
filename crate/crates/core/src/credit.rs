//! Portfolio credit risk: conditional PD, EL and one-year UL in closed form,
//! Monte Carlo estimators over systemic paths, and carbon-price sensitivities.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::economy::EconomyParams;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::normal;
use crate::transition::IntensitySet;
use crate::valuation::{CostPath, Firm, FirmCurve, ForwardCoefs};
use crate::var_process::{PathEnsemble, StationaryMoments, SumLaw, VarParams};

/// `∫Φ(a + bx)φ(x)dx = Φ(a/√(1+b²))`.
pub fn gauss_affine_integral(a: f64, b: f64) -> f64 {
    normal::cdf(a / libm::sqrt(1.0 + b * b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    pub firms: Vec<Firm>,
    /// Firm indices of each group; the first entry is the representative.
    pub groups: Vec<Vec<usize>>,
    /// Firms of a group share loadings, volatility and barrier ratio.
    pub one_risk_class: bool,
}

impl Portfolio {
    pub fn new(firms: Vec<Firm>, n_groups: usize, one_risk_class: bool) -> Result<Self> {
        if firms.is_empty() {
            return Err(Error::InvalidParameter("portfolio has no firms".into()));
        }
        let mut groups = vec![Vec::new(); n_groups];
        for (k, f) in firms.iter().enumerate() {
            groups
                .get_mut(f.group)
                .ok_or_else(|| Error::InvalidParameter(format!("firm {} has unknown group {}", f.id, f.group)))?
                .push(k);
        }
        if one_risk_class {
            for g in groups.iter() {
                if let Some((&rep, rest)) = g.split_first() {
                    let r = &firms[rep];
                    for &k in rest {
                        let f = &firms[k];
                        if f.a != r.a || f.sigma_b != r.sigma_b || f.b_ratio != r.b_ratio {
                            return Err(Error::InvalidParameter(format!(
                                "firm {} differs from its group representative {}",
                                f.id, r.id
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self {
            firms,
            groups,
            one_risk_class,
        })
    }

    pub fn group_exposure(&self, g: usize, t: usize) -> f64 {
        self.groups[g].iter().map(|&k| self.firms[k].exposure(t)).sum()
    }

    pub fn total_exposure(&self, t: usize) -> f64 {
        self.firms.iter().map(|f| f.exposure(t)).sum()
    }
}

/// Portfolio bound to one scenario path, VAR law and discount rate.
#[derive(Debug, Clone)]
pub struct RiskModel {
    pub portfolio: Portfolio,
    pub curves: Vec<FirmCurve>,
    pub forward: Vec<ForwardCoefs>,
    pub epsilon: f64,
    pub sigma: crate::linalg::Matrix,
}

impl RiskModel {
    pub fn new(
        portfolio: &Portfolio,
        path: &CostPath,
        params: &VarParams,
        moments: &StationaryMoments,
        r: f64,
        horizon: usize,
    ) -> Result<Self> {
        let law = SumLaw::new(params, horizon)?;
        let mut curves = Vec::with_capacity(portfolio.firms.len());
        let mut forward = Vec::with_capacity(portfolio.firms.len());
        for f in portfolio.firms.iter() {
            f.validate(params.dim())?;
            curves.push(FirmCurve::new(f, path, &moments.mu_bar, r)?);
            forward.push(ForwardCoefs::new(f, &law));
        }
        Ok(Self {
            portfolio: portfolio.clone(),
            curves,
            forward,
            epsilon: params.epsilon,
            sigma: params.sigma.clone(),
        })
    }

    pub fn horizon(&self) -> usize {
        self.forward.first().map(|f| f.horizon).unwrap_or(1)
    }

    /// `PD = Φ((log B − 𝒦)/√ℒ)` of firm `n` for default by `t+T`.
    pub fn pd(&self, n: usize, t: usize, a_circ: &[f64], theta: &[f64]) -> f64 {
        let f = &self.portfolio.firms[n];
        let fc = &self.forward[n];
        let k = fc.mean(f, &self.curves[n], t, a_circ, theta);
        normal::cdf((libm::log(f.b_ratio) - k) / libm::sqrt(fc.var(f, t)))
    }

    /// `Σ EAD·LGD·PD` over the firms of `members`.
    pub fn expected_loss_of(&self, members: &[usize], t: usize, a_circ: &[f64], theta: &[f64]) -> f64 {
        let h = self.horizon();
        members
            .iter()
            .map(|&n| self.portfolio.firms[n].exposure(t + h) * self.pd(n, t, a_circ, theta))
            .sum()
    }

    pub fn expected_loss(&self, t: usize, a_circ: &[f64], theta: &[f64]) -> f64 {
        let all: Vec<usize> = (0..self.portfolio.firms.len()).collect();
        self.expected_loss_of(&all, t, a_circ, theta)
    }

    /// One-risk-class group EL as group exposure times the representative PD.
    pub fn group_expected_loss(&self, g: usize, t: usize, a_circ: &[f64], theta: &[f64]) -> Result<f64> {
        let rep = self.representative(g)?;
        Ok(self.portfolio.group_exposure(g, t + self.horizon()) * self.pd(rep, t, a_circ, theta))
    }

    fn representative(&self, g: usize) -> Result<usize> {
        if !self.portfolio.one_risk_class {
            return Err(Error::InvalidParameter("group closed forms need one risk class per group".into()));
        }
        self.portfolio
            .groups
            .get(g)
            .and_then(|m| m.first().copied())
            .ok_or_else(|| Error::InvalidParameter(format!("group {g} is empty")))
    }

    /// Group loss at confidence `level` over the next year: the `level`-quantile
    /// of `Σ EAD·LGD·Φ((log B − 𝔪_{t+1})/(σ_b√(t+1)))` given the state at `t`.
    pub fn value_at_risk_one_year(
        &self,
        g: usize,
        t: usize,
        level: f64,
        a_circ: &[f64],
        theta: &[f64],
    ) -> Result<f64> {
        if self.horizon() != 1 {
            return Err(Error::InvalidParameter("one-year measures need horizon 1".into()));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidParameter(format!("confidence level {level} outside (0, 1)")));
        }
        let rep = self.representative(g)?;
        let f = &self.portfolio.firms[rep];
        let fc = &self.forward[rep];
        let k = fc.mean(f, &self.curves[rep], t, a_circ, theta);
        let s = libm::sqrt(fc.systemic_var);
        let z = (s * normal::inv_cdf(level) + libm::log(f.b_ratio) - k) / libm::sqrt(fc.idiosyncratic_var(f, t));
        Ok(self.portfolio.group_exposure(g, t + 1) * normal::cdf(z))
    }

    /// `UL = VaR_α − EL` for a one-risk-class group.
    pub fn unexpected_loss_one_year(
        &self,
        g: usize,
        t: usize,
        alpha: f64,
        a_circ: &[f64],
        theta: &[f64],
    ) -> Result<f64> {
        let var = self.value_at_risk_one_year(g, t, alpha, a_circ, theta)?;
        let rep = self.representative(g)?;
        Ok(var - self.portfolio.group_exposure(g, t + 1) * self.pd(rep, t, a_circ, theta))
    }

    /// Granular conditional loss `Σ EAD_t·LGD_t·Φ((log B − 𝔪_t)/(σ_b√t))` of
    /// `members`; at `t = 0` the indicator `𝔪_0 ≤ log B` is used.
    pub fn conditional_loss_of(&self, members: &[usize], t: usize, a_circ: &[f64]) -> f64 {
        members
            .iter()
            .map(|&n| {
                let f = &self.portfolio.firms[n];
                let gap = libm::log(f.b_ratio) - self.curves[n].frak_m(f, t, a_circ);
                let p = if t == 0 {
                    if gap >= 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    normal::cdf(gap / (f.sigma_b * libm::sqrt(t as f64)))
                };
                f.exposure(t) * p
            })
            .sum()
    }

    pub fn conditional_loss(&self, t: usize, a_circ: &[f64]) -> f64 {
        let all: Vec<usize> = (0..self.portfolio.firms.len()).collect();
        self.conditional_loss_of(&all, t, a_circ)
    }

    /// PDs of every firm at each of `years` along path `m`, written as
    /// `out[year_index·N + n]`.
    pub fn path_pds(&self, ens: &PathEnsemble, m: usize, years: &[usize], out: &mut [f64]) {
        let nf = self.portfolio.firms.len();
        for (yi, &t) in years.iter().enumerate() {
            let (ac, th) = (ens.a_circ(m, t), ens.theta(m, t));
            for n in 0..nf {
                out[yi * nf + n] = self.pd(n, t, ac, th);
            }
        }
    }
}

/// Monte Carlo settings for risk estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskConfig {
    pub paths: usize,
    pub alpha: f64,
    pub horizon: usize,
    pub seed: u64,
    pub theta_fd: f64,
    pub direction: Direction,
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self {
            paths: 5000,
            alpha: 0.99,
            horizon: 1,
            seed: 0,
            theta_fd: 0.01,
            direction: Direction::AllOnes,
        }
    }
}

impl RiskConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.paths < 100 {
            return Err(Error::InvalidParameter(format!("need at least 100 paths, got {}", self.paths)));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if !(self.theta_fd > 0.0 && self.theta_fd.is_finite()) {
            return Err(Error::InvalidParameter("finite-difference step must be positive".into()));
        }
        check_tail(self.paths, self.alpha)
    }
}

/// Direction `𝔘` of a carbon-price bump, over model years `0..=t_star`.
#[derive(Debug, Clone, PartialEq)]
pub enum Direction {
    AllOnes,
    /// Unit vector at one model year.
    UnitAt(usize),
    /// Ones from a model year onwards; `FromDate(1)` leaves the reference
    /// price that normalizes `F₀` untouched.
    FromDate(usize),
    /// `𝔘_t = δ_t`, so the bump is proportional to the price itself.
    Proportional,
    Custom(Vec<f64>),
}

impl Direction {
    pub fn vector(&self, prices: &[f64]) -> Result<Vec<f64>> {
        let n = prices.len();
        let u = match self {
            Direction::AllOnes => vec![1.0; n],
            Direction::UnitAt(t) => {
                if *t >= n {
                    return Err(Error::InvalidParameter(format!("bump date {t} beyond the transition end")));
                }
                let mut u = vec![0.0; n];
                u[*t] = 1.0;
                u
            }
            Direction::FromDate(t) => {
                if *t >= n {
                    return Err(Error::InvalidParameter(format!("bump date {t} beyond the transition end")));
                }
                (0..n).map(|k| if k >= *t { 1.0 } else { 0.0 }).collect()
            }
            Direction::Proportional => prices.to_vec(),
            Direction::Custom(v) => {
                if v.len() != n {
                    return Err(Error::Dimension(format!("direction has {} dates, expected {n}", v.len())));
                }
                v.clone()
            }
        };
        if u.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameter("bump direction must be nonnegative".into()));
        }
        Ok(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GroupKey {
    Group(usize),
    Total,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskRecord {
    /// Model year.
    pub t: usize,
    pub group: GroupKey,
    pub exposure: f64,
    pub pd: f64,
    pub pd_se: f64,
    pub el: f64,
    pub el_se: f64,
    pub el_pct: f64,
    pub ul: f64,
    pub ul_se: f64,
    pub ul_pct: f64,
    pub es: f64,
}

/// Per-path PDs `[path][year][firm]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdCube {
    pub paths: usize,
    pub years: Vec<usize>,
    pub firms: usize,
    pub data: Vec<f64>,
}

impl PdCube {
    pub fn stride(&self) -> usize {
        self.years.len() * self.firms
    }

    pub fn get(&self, m: usize, yi: usize, n: usize) -> f64 {
        self.data[m * self.stride() + yi * self.firms + n]
    }
}

pub fn pd_cube(model: &RiskModel, ens: &PathEnsemble, years: &[usize]) -> Result<PdCube> {
    check_years(model, ens, years)?;
    let nf = model.portfolio.firms.len();
    let mut data = vec![0.0; ens.paths * years.len() * nf];
    for (m, chunk) in data.chunks_mut(years.len() * nf).enumerate() {
        model.path_pds(ens, m, years, chunk);
    }
    Ok(PdCube {
        paths: ens.paths,
        years: years.to_vec(),
        firms: nf,
        data,
    })
}

pub fn check_years(model: &RiskModel, ens: &PathEnsemble, years: &[usize]) -> Result<()> {
    if ens.dim != model.sigma.nrows() {
        return Err(Error::Dimension("ensemble and model dimensions differ".into()));
    }
    if let Some(&t) = years.iter().find(|&&t| t > ens.horizon) {
        return Err(Error::InvalidParameter(format!("year {t} beyond simulated horizon {}", ens.horizon)));
    }
    Ok(())
}

/// Index of the type-1 empirical `alpha`-quantile in a sorted sample of size `m`.
pub fn quantile_index(alpha: f64, m: usize) -> usize {
    let k = libm::ceil(alpha * m as f64 - 1e-9) as usize;
    k.clamp(1, m) - 1
}

/// Mean and standard error, accumulated around the first sample so that a
/// constant sample returns itself with zero error.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let x0 = xs[0];
    let (s, s2) = xs.iter().fold((0.0, 0.0), |(s, s2), x| (s + (x - x0), s2 + (x - x0) * (x - x0)));
    let mean = x0 + s / m;
    let var = if xs.len() > 1 { ((s2 - s * s / m) / (m - 1.0)).max(0.0) } else { 0.0 };
    (mean, libm::sqrt(var / m))
}

/// Tail sizes below this make the empirical quantile unreliable.
pub const MIN_TAIL: f64 = 5.0;

fn check_tail(paths: usize, alpha: f64) -> Result<()> {
    let tail = paths as f64 * (1.0 - alpha);
    if tail < MIN_TAIL - 1e-9 {
        return Err(Error::QuantileUndefined { tail });
    }
    Ok(())
}

fn sort(xs: &mut [f64]) {
    xs.sort_by(|a, b| a.total_cmp(b));
}

/// PD, EL, UL and ES estimates per year and group (plus the total), reduced
/// in fixed path order.
pub fn summarize(model: &RiskModel, cube: &PdCube, alpha: f64) -> Result<Vec<RiskRecord>> {
    check_tail(cube.paths, alpha)?;
    let h = model.horizon();
    let p = &model.portfolio;
    let mut keys: Vec<(GroupKey, Vec<usize>)> = p
        .groups
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(g, m)| (GroupKey::Group(g), m.clone()))
        .collect();
    keys.push((GroupKey::Total, (0..p.firms.len()).collect()));
    let q = quantile_index(alpha, cube.paths);
    let band = 1.96 * libm::sqrt(cube.paths as f64 * alpha * (1.0 - alpha));
    let lo = quantile_index(alpha - band / cube.paths as f64, cube.paths);
    let hi = quantile_index((alpha + band / cube.paths as f64).min(1.0), cube.paths);
    let mut out = Vec::new();
    let mut pd_path = vec![0.0; cube.paths];
    let mut loss_path = vec![0.0; cube.paths];
    let mut firm_path = vec![0.0; cube.paths];
    for (yi, &t) in cube.years.iter().enumerate() {
        let pd_hat: Vec<f64> = (0..cube.firms)
            .map(|n| {
                for (m, x) in firm_path.iter_mut().enumerate() {
                    *x = cube.get(m, yi, n);
                }
                mean_se(&firm_path).0
            })
            .collect();
        for (key, members) in keys.iter() {
            let exposure: f64 = members.iter().map(|&n| p.firms[n].exposure(t + h)).sum();
            for m in 0..cube.paths {
                let mut pd = 0.0;
                let mut loss = 0.0;
                for &n in members {
                    let x = cube.get(m, yi, n);
                    pd += x;
                    loss += p.firms[n].exposure(t + h) * x;
                }
                pd_path[m] = pd / members.len() as f64;
                loss_path[m] = loss;
            }
            let (pd, pd_se) = mean_se(&pd_path);
            let el: f64 = members.iter().map(|&n| p.firms[n].exposure(t + h) * pd_hat[n]).sum();
            let (_, el_se) = mean_se(&loss_path);
            sort(&mut loss_path);
            let var = loss_path[q];
            let es = mean_se(&loss_path[q..]).0;
            let ul = var - el;
            out.push(RiskRecord {
                t,
                group: *key,
                exposure,
                pd,
                pd_se,
                el,
                el_se,
                el_pct: el / exposure,
                ul,
                ul_se: (loss_path[hi] - loss_path[lo]) / (2.0 * 1.96),
                ul_pct: ul / exposure,
                es,
            });
        }
    }
    Ok(out)
}

pub fn mc_risk_estimates(model: &RiskModel, ens: &PathEnsemble, years: &[usize], alpha: f64) -> Result<Vec<RiskRecord>> {
    summarize(model, &pd_cube(model, ens, years)?, alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRecord {
    pub t: usize,
    pub group: GroupKey,
    pub gamma_el: f64,
    pub gamma_el_se: f64,
    pub gamma_ul: f64,
}

/// Finite-difference sensitivities from base and bumped estimates computed on
/// the same paths.
pub fn sensitivity_summary(
    model: &RiskModel,
    base: &PdCube,
    bumped: &PdCube,
    alpha: f64,
    theta_fd: f64,
) -> Result<Vec<SensitivityRecord>> {
    let b = summarize(model, base, alpha)?;
    let u = summarize(model, bumped, alpha)?;
    let h = model.horizon();
    let p = &model.portfolio;
    let mut diff = vec![0.0; base.paths];
    Ok(b
        .iter()
        .zip(u.iter())
        .map(|(rb, ru)| {
            let yi = base.years.iter().position(|&t| t == rb.t).unwrap_or(0);
            let members: Vec<usize> = match rb.group {
                GroupKey::Group(g) => p.groups[g].clone(),
                GroupKey::Total => (0..p.firms.len()).collect(),
            };
            for (m, d) in diff.iter_mut().enumerate() {
                *d = members
                    .iter()
                    .map(|&n| p.firms[n].exposure(rb.t + h) * (bumped.get(m, yi, n) - base.get(m, yi, n)))
                    .sum();
            }
            let (_, se) = mean_se(&diff);
            SensitivityRecord {
                t: rb.t,
                group: rb.group,
                gamma_el: (ru.el - rb.el) / theta_fd,
                gamma_el_se: se / theta_fd,
                gamma_ul: (ru.ul - rb.ul) / theta_fd,
            }
        })
        .collect())
}

/// Cost path after bumping `prices` by `theta_fd·𝔘` through the same intensities.
pub fn bumped_path(
    econ: &EconomyParams,
    intensities: &IntensitySet,
    t_circ: usize,
    prices: &[f64],
    direction: &Direction,
    theta_fd: f64,
) -> Result<CostPath> {
    let u = direction.vector(prices)?;
    let bumped: Vec<f64> = prices.iter().zip(&u).map(|(p, d)| p + theta_fd * d).collect();
    CostPath::from_prices(econ, intensities, t_circ, &bumped)
}

/// Sequential driver: builds base and bumped models on one ensemble and
/// returns their sensitivities.
#[allow(clippy::too_many_arguments)]
pub fn loss_sensitivity(
    portfolio: &Portfolio,
    econ: &EconomyParams,
    intensities: &IntensitySet,
    t_circ: usize,
    prices: &[f64],
    params: &VarParams,
    moments: &StationaryMoments,
    r: f64,
    ens: &PathEnsemble,
    years: &[usize],
    config: &RiskConfig,
) -> Result<Vec<SensitivityRecord>> {
    let base_path = CostPath::from_prices(econ, intensities, t_circ, prices)?;
    let bump_path = bumped_path(econ, intensities, t_circ, prices, &config.direction, config.theta_fd)?;
    let base = RiskModel::new(portfolio, &base_path, params, moments, r, config.horizon)?;
    let bump = RiskModel::new(portfolio, &bump_path, params, moments, r, config.horizon)?;
    let cb = pd_cube(&base, ens, years)?;
    let cu = pd_cube(&bump, ens, years)?;
    sensitivity_summary(&base, &cb, &cu, config.alpha, config.theta_fd)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRecord {
    pub t: usize,
    pub sector: usize,
    pub mean: f64,
    pub se: f64,
}

/// Mean sectoral output growth `Δ^Y_t = (I−λᵀ)⁻¹(Θ_t + 𝔳_t − 𝔳_{t−1})` across paths.
pub fn output_growth_estimates(
    econ: &EconomyParams,
    path: &CostPath,
    ens: &PathEnsemble,
    years: &[usize],
) -> Result<Vec<GrowthRecord>> {
    let n = econ.dim();
    if ens.dim != n {
        return Err(Error::Dimension("ensemble and economy dimensions differ".into()));
    }
    let l = econ.inv_leontief();
    let mut out = Vec::new();
    let mut samples = vec![vec![0.0; ens.paths]; n];
    for &t in years.iter().filter(|&&t| t >= 1 && t <= ens.horizon) {
        let shift = path.frak_v(t) - path.frak_v(t - 1);
        for m in 0..ens.paths {
            let x = Vector::from_column_slice(ens.theta(m, t)) + &shift;
            let dy = l * x;
            for i in 0..n {
                samples[i][m] = dy[i];
            }
        }
        for (i, s) in samples.iter().enumerate() {
            let (mean, se) = mean_se(s);
            out.push(GrowthRecord { t, sector: i, mean, se });
        }
    }
    Ok(out)
}
