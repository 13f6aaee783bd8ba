//! Carbon-price schedules, carbon-intensity curves and the emissions cost
//! rate `𝔡_t = (τ_tδ_t, ζ_tδ_t, κ_tδ_t)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub enum PricePath {
    /// `δ_{t∘}(1+η)^{t−t∘}` on `[t∘, t⋆]`.
    Geometric { eta: f64 },
    /// One price per calendar year of `[t∘, t⋆]`.
    Explicit(Vec<f64>),
}

/// Deterministic carbon price in euro per ton, indexed by calendar year.
#[derive(Debug, Clone, PartialEq)]
pub struct CarbonPriceSchedule {
    pub delta0: f64,
    pub t_circ: i32,
    pub t_star: i32,
    pub path: PricePath,
}

impl CarbonPriceSchedule {
    pub fn geometric(delta0: f64, t_circ: i32, t_star: i32, eta: f64) -> Result<Self> {
        let s = Self {
            delta0,
            t_circ,
            t_star,
            path: PricePath::Geometric { eta },
        };
        s.validate()?;
        Ok(s)
    }

    /// `prices` must list every year of `[t_circ, t_star]` exactly once.
    pub fn explicit(delta0: f64, t_circ: i32, t_star: i32, prices: &[(i32, f64)]) -> Result<Self> {
        if t_star <= t_circ {
            return Err(Error::InvalidParameter(format!("t_star {t_star} must exceed t_circ {t_circ}")));
        }
        let n = (t_star - t_circ + 1) as usize;
        let mut vals: Vec<Option<f64>> = alloc::vec![None; n];
        for &(year, v) in prices {
            if year < t_circ || year > t_star {
                return Err(Error::InvalidParameter(format!("price year {year} outside [{t_circ}, {t_star}]")));
            }
            let slot = &mut vals[(year - t_circ) as usize];
            if slot.is_some() {
                return Err(Error::InvalidParameter(format!("duplicate price for year {year}")));
            }
            *slot = Some(v);
        }
        let mut out = Vec::with_capacity(n);
        for (k, v) in vals.into_iter().enumerate() {
            out.push(v.ok_or_else(|| {
                Error::InvalidParameter(format!("missing price for year {}", t_circ + k as i32))
            })?);
        }
        let s = Self {
            delta0,
            t_circ,
            t_star,
            path: PricePath::Explicit(out),
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.t_star <= self.t_circ {
            return Err(Error::InvalidParameter(format!(
                "t_star {} must exceed t_circ {}",
                self.t_star, self.t_circ
            )));
        }
        if !(self.delta0 >= 0.0 && self.delta0.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta0 {} must be finite and >= 0", self.delta0)));
        }
        match &self.path {
            PricePath::Geometric { eta } => {
                if !(*eta >= -1.0 && eta.is_finite()) {
                    return Err(Error::InvalidParameter(format!("eta {eta} must be >= -1")));
                }
            }
            PricePath::Explicit(p) => {
                if p.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                    return Err(Error::InvalidParameter("explicit prices must be finite and >= 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Price in calendar year `year`.
    pub fn price(&self, year: i32) -> f64 {
        if year < self.t_circ {
            return self.delta0;
        }
        let k = (year.min(self.t_star) - self.t_circ) as usize;
        match &self.path {
            PricePath::Geometric { eta } => self.delta0 * libm::pow(1.0 + eta, k as f64),
            PricePath::Explicit(p) => p[k],
        }
    }
}

/// Convenience wrapper for [`CarbonPriceSchedule::price`].
pub fn carbon_price(schedule: &CarbonPriceSchedule, year: i32) -> f64 {
    schedule.price(year)
}

/// `y_t = y0·exp(g0(1−e^{−θt})/θ)` for model time `t`, frozen from `t_star` on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityCurve {
    pub y0: f64,
    pub g0: f64,
    pub theta: f64,
    pub t_star: i64,
}

impl IntensityCurve {
    pub fn new(y0: f64, g0: f64, theta: f64, t_star: i64) -> Result<Self> {
        if !(y0 >= 0.0 && y0.is_finite()) {
            return Err(Error::InvalidParameter(format!("intensity y0 {y0} must be finite and >= 0")));
        }
        if !(theta > 0.0 && theta.is_finite()) || !g0.is_finite() {
            return Err(Error::InvalidParameter(format!("intensity decay theta {theta} must be > 0")));
        }
        Ok(Self { y0, g0, theta, t_star })
    }

    pub fn constant(y0: f64) -> Self {
        Self {
            y0,
            g0: 0.0,
            theta: 1.0,
            t_star: 0,
        }
    }

    fn raw(&self, t: f64) -> f64 {
        self.y0 * libm::exp(-self.g0 * libm::expm1(-self.theta * t) / self.theta)
    }

    pub fn value(&self, t: i64) -> f64 {
        self.raw(t.min(self.t_star) as f64)
    }

    /// Same curve with time origin moved to `shift` (so `rebased(s).value(t) = value(t+s)`
    /// before the freeze date).
    pub fn rebased(&self, shift: i64) -> Self {
        Self {
            y0: self.raw(shift as f64),
            g0: self.g0 * libm::exp(-self.theta * shift as f64),
            theta: self.theta,
            t_star: self.t_star.saturating_sub(shift),
        }
    }

    pub fn with_freeze(mut self, t_star: i64) -> Self {
        self.t_star = t_star;
        self
    }
}

pub fn intensity(curve: &IntensityCurve, t: i64) -> f64 {
    curve.value(t)
}

/// Production (`tau`), intermediary (`zeta[j][i]`, input `j` into sector `i`)
/// and household (`kappa`) intensity curves.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySet {
    pub tau: Vec<IntensityCurve>,
    pub zeta: Vec<Vec<IntensityCurve>>,
    pub kappa: Vec<IntensityCurve>,
}

impl IntensitySet {
    pub fn new(
        tau: Vec<IntensityCurve>,
        zeta: Vec<Vec<IntensityCurve>>,
        kappa: Vec<IntensityCurve>,
    ) -> Result<Self> {
        let n = tau.len();
        if n == 0 || kappa.len() != n || zeta.len() != n || zeta.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("intensity families must be I, IxI and I".into()));
        }
        Ok(Self { tau, zeta, kappa })
    }

    pub fn zero(n: usize) -> Self {
        let z = IntensityCurve::constant(0.0);
        Self {
            tau: alloc::vec![z; n],
            zeta: alloc::vec![alloc::vec![z; n]; n],
            kappa: alloc::vec![z; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.tau.len()
    }

    fn map(&self, f: impl Fn(&IntensityCurve) -> IntensityCurve) -> Self {
        Self {
            tau: self.tau.iter().map(&f).collect(),
            zeta: self.zeta.iter().map(|r| r.iter().map(&f).collect()).collect(),
            kappa: self.kappa.iter().map(&f).collect(),
        }
    }

    pub fn rebased(&self, shift: i64) -> Self {
        self.map(|c| c.rebased(shift))
    }

    pub fn with_freeze(&self, t_star: i64) -> Self {
        self.map(|c| c.with_freeze(t_star))
    }
}

/// `𝔡 = (τδ, ζδ, κδ)`; `zeta_d[(j, i)]` is input `j` into sector `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionsCostRate {
    pub tau_d: Vector,
    pub zeta_d: Matrix,
    pub kappa_d: Vector,
}

impl EmissionsCostRate {
    pub fn zero(n: usize) -> Self {
        Self {
            tau_d: Vector::zeros(n),
            zeta_d: Matrix::zeros(n, n),
            kappa_d: Vector::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.tau_d.len()
    }

    /// Rejects negative entries and production costs of at least the revenue.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.kappa_d.len() != n || self.zeta_d.shape() != (n, n) {
            return Err(Error::Dimension("emissions cost rate families must be I, IxI and I".into()));
        }
        if self
            .tau_d
            .iter()
            .chain(self.zeta_d.iter())
            .chain(self.kappa_d.iter())
            .any(|x| !(*x >= 0.0 && x.is_finite()))
        {
            return Err(Error::InvalidParameter("emissions cost rates must be finite and >= 0".into()));
        }
        if let Some((i, &v)) = self.tau_d.iter().enumerate().find(|(_, v)| **v >= 1.0) {
            return Err(Error::PriceDominance { sector: i, value: v });
        }
        Ok(())
    }
}

/// Emissions cost rate for price `delta` and model time `t`.
pub fn emissions_cost_rate(delta: f64, intensities: &IntensitySet, t: i64) -> Result<EmissionsCostRate> {
    let n = intensities.dim();
    let d = EmissionsCostRate {
        tau_d: Vector::from_fn(n, |i, _| delta * intensities.tau[i].value(t)),
        zeta_d: Matrix::from_fn(n, n, |j, i| delta * intensities.zeta[j][i].value(t)),
        kappa_d: Vector::from_fn(n, |i, _| delta * intensities.kappa[i].value(t)),
    };
    d.validate()?;
    Ok(d)
}

/// A price schedule with its intensity curves on the model clock
/// `t = year − t_ref`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionScenario {
    pub name: String,
    pub schedule: CarbonPriceSchedule,
    /// Curves with time origin `t_ref` and freeze at `t_star − t_ref`.
    pub intensities: IntensitySet,
    pub t_ref: i32,
}

impl TransitionScenario {
    /// `intensities` are given on a clock with origin `origin_year`; they are
    /// rebased to `t_ref` and frozen at the schedule's `t_star`.
    pub fn new(
        name: impl Into<String>,
        schedule: CarbonPriceSchedule,
        intensities: &IntensitySet,
        origin_year: i32,
        t_ref: i32,
    ) -> Result<Self> {
        if t_ref > schedule.t_circ {
            return Err(Error::InvalidParameter(format!(
                "reference year {t_ref} is after the transition start {}",
                schedule.t_circ
            )));
        }
        let freeze = (schedule.t_star - t_ref) as i64;
        let intensities = intensities
            .with_freeze(i64::MAX)
            .rebased((t_ref - origin_year) as i64)
            .with_freeze(freeze);
        Ok(Self {
            name: name.into(),
            schedule,
            intensities,
            t_ref,
        })
    }

    pub fn dim(&self) -> usize {
        self.intensities.dim()
    }

    pub fn t_circ(&self) -> usize {
        (self.schedule.t_circ - self.t_ref) as usize
    }

    pub fn t_star(&self) -> usize {
        (self.schedule.t_star - self.t_ref) as usize
    }

    pub fn year(&self, t: usize) -> i32 {
        self.t_ref + t as i32
    }

    pub fn price(&self, t: usize) -> f64 {
        self.schedule.price(self.year(t))
    }

    /// Prices for model years `0..=t_star`.
    pub fn prices(&self) -> Vec<f64> {
        (0..=self.t_star()).map(|t| self.price(t)).collect()
    }

    pub fn cost_rate(&self, t: usize) -> Result<EmissionsCostRate> {
        emissions_cost_rate(self.price(t), &self.intensities, t as i64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceCheck {
    pub max_product: f64,
    /// Model year attaining `max_product`.
    pub worst_t: usize,
    pub pass: bool,
}

/// Checks `δ_t · max_i τ^i_0 < 1` for `t ∈ [0, t_star]`.
pub fn validate_price_vs_output(scenario: &TransitionScenario) -> PriceCheck {
    let tau0 = scenario
        .intensities
        .tau
        .iter()
        .map(|c| c.value(0))
        .fold(0.0, f64::max);
    let mut best = (0.0, 0);
    for t in 0..=scenario.t_star() {
        let p = scenario.price(t) * tau0;
        if p > best.0 {
            best = (p, t);
        }
    }
    PriceCheck {
        max_product: best.0,
        worst_t: best.1,
        pass: best.0 < 1.0,
    }
}
