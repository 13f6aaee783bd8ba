//! Synthetic four-sector dataset.
//!
//! Parameters follow published French figures: labour and input
//! elasticities, the productivity VAR, carbon-intensity curves scaled to the
//! average cost rates observed under a 39.05 €/t price, the four price
//! templates and a 16-firm portfolio. Every series is generated from the
//! model itself, so calibration on the fixture recovers the generating
//! parameters up to sampling noise.

use std::path::{Path, PathBuf};

use climcredit_core::calibration::{EmissionsPanel, SectorPanel};
use climcredit_core::credit::{Portfolio, RiskModel};
use climcredit_core::economy::{EconomyParams, ReturnsToScale};
use climcredit_core::linalg::{Matrix, Vector};
use climcredit_core::normal;
use climcredit_core::rng;
use climcredit_core::transition::{EmissionsCostRate, IntensityCurve, IntensitySet};
use climcredit_core::valuation::{CostPath, Firm, YearlyAmount};
use climcredit_core::var_process::{self, ThetaInit, VarParams};
use rand_distr::{Binomial, Distribution};

use crate::config::{DataFiles, MleSettings, PriceSpec, RiskSettings, RunConfig, ScenarioConfig};
use crate::io::{self, CashFlows, DefaultHistory, PortfolioEntry, SectorData};

pub const SECTORS: [&str; 4] = ["Very High", "High", "Low", "Very Low"];

pub const PSI: [f64; 4] = [0.183, 0.215, 0.161, 0.331];

/// Row = input sector, column = purchasing sector.
pub const LAMBDA: [[f64; 4]; 4] = [
    [0.273, 0.028, 0.266, 0.052],
    [0.130, 0.304, 0.061, 0.043],
    [0.064, 0.129, 0.242, 0.033],
    [0.157, 0.159, 0.143, 0.312],
];

pub const MU: [f64; 4] = [2.649e-3, 3.826e-3, -4.691e-3, 4.288e-3];

pub const GAMMA: [[f64; 4]; 4] = [
    [-0.191, -0.061, 0.108, -0.005],
    [0.017, 0.404, 0.282, -0.067],
    [0.302, 0.190, -0.552, 0.290],
    [0.177, 0.021, 0.623, 0.539],
];

/// Published eigenvalues of `GAMMA`, rounded to three decimals.
pub const GAMMA_EIGENVALUES: [f64; 4] = [-0.790, -0.145, 0.692, 0.443];

pub const SIGMA: [[f64; 4]; 4] = [
    [0.329e-3, 0.020e-3, 0.011e-3, 0.082e-3],
    [0.020e-3, 0.134e-3, 0.013e-3, 0.030e-3],
    [0.011e-3, 0.013e-3, 0.071e-3, -0.012e-3],
    [0.082e-3, 0.030e-3, -0.012e-3, 0.066e-3],
];

/// Intensity curve given as the cost rate in percent at the reference price,
/// the initial growth `g0` and the decay `θ` in percent.
#[derive(Debug, Clone, Copy)]
struct CurveSpec(f64, f64, f64);

const REFERENCE_PRICE: f64 = 39.05;

const TAU: [CurveSpec; 4] = [
    CurveSpec(1.483, -0.013, 0.001),
    CurveSpec(0.644, -0.049, 0.001),
    CurveSpec(0.169, -0.039, 3.7),
    CurveSpec(0.058, -0.028, 0.001),
];

const KAPPA: [CurveSpec; 4] = [
    CurveSpec(0.007, -0.026, 0.001),
    CurveSpec(2.233, -0.040, 0.001),
    CurveSpec(0.007, -0.026, 0.001),
    CurveSpec(0.007, -0.026, 0.001),
];

/// Row = input sector, column = purchasing sector.
const ZETA: [[CurveSpec; 4]; 4] = [
    [
        CurveSpec(0.255, -0.043, 1.5),
        CurveSpec(0.088, -0.045, 0.001),
        CurveSpec(0.095, -0.065, 0.001),
        CurveSpec(0.032, -0.042, 3.6),
    ],
    [
        CurveSpec(0.031, -0.049, 0.001),
        CurveSpec(0.347, -0.046, 1.1),
        CurveSpec(0.122, -0.081, 0.001),
        CurveSpec(0.047, -0.030, 0.001),
    ],
    [
        CurveSpec(0.117, -0.055, 11.1),
        CurveSpec(0.022, -0.079, 0.001),
        CurveSpec(0.151, -0.065, 0.3),
        CurveSpec(0.014, -0.018, 0.001),
    ],
    [
        CurveSpec(0.078, -0.052, 0.1),
        CurveSpec(0.061, -0.05, 2.1),
        CurveSpec(0.077, -0.088, 0.001),
        CurveSpec(0.130, -0.034, 0.001),
    ],
];

/// Carbon price template: name, price at the start and at the end of the
/// transition, in euros per ton.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceTemplate {
    pub name: &'static str,
    pub start: f64,
    pub end: f64,
}

/// Ordered from mildest to most severe.
pub const PRICE_TEMPLATES: [PriceTemplate; 4] = [
    PriceTemplate {
        name: "Current Policies",
        start: 39.05,
        end: 39.05,
    },
    PriceTemplate {
        name: "NDCs",
        start: 39.05,
        end: 76.46,
    },
    PriceTemplate {
        name: "Net Zero 2050",
        start: 39.05,
        end: 162.67,
    },
    PriceTemplate {
        name: "Divergent Net Zero",
        start: 96.43,
        end: 395.21,
    },
];

pub const T_CIRC: i32 = 2020;
pub const T_STAR: i32 = 2030;
pub const FIRST_YEAR: i32 = 1978;
pub const LAST_YEAR: i32 = 2021;
pub const FIRST_EMISSIONS_YEAR: i32 = 2008;
pub const DISCOUNT_RATE: f64 = 0.05;

pub const PORTFOLIO_SIGMA_B: [f64; 16] = [
    0.05, 0.05, 0.06, 0.06, 0.06, 0.07, 0.07, 0.07, 0.08, 0.08, 0.08, 0.09, 0.09, 0.09, 0.10, 0.10,
];
pub const PORTFOLIO_B: [f64; 16] = [
    2.95, 2.94, 2.93, 2.92, 3.06, 3.02, 2.98, 2.94, 2.94, 2.93, 2.92, 2.90, 2.99, 2.96, 2.94, 2.92,
];
pub const PORTFOLIO_EAD: f64 = 10.0e6;
pub const PORTFOLIO_LGD: f64 = 0.45;

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureOptions {
    pub seed: u64,
    /// Rated firms per group and history year.
    pub rated: u64,
    /// Firms behind each group's cash-flow series.
    pub cash_flow_group_size: usize,
    /// Default probability of a group firm in the middle of the history.
    pub target_pd: f64,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            rated: 400,
            cash_flow_group_size: 200,
            target_pd: 0.01,
        }
    }
}

/// Parameters the fixture was generated from.
#[derive(Debug, Clone)]
pub struct FixtureTruth {
    pub econ: EconomyParams,
    pub var: VarParams,
    /// Curves on the clock starting at the first emissions year.
    pub intensities: IntensitySet,
    /// Θ-loadings per group.
    pub group_a: Vec<Vector>,
    pub group_sigma_b: Vec<f64>,
    pub group_b_ratio: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub sectors: SectorData,
    pub emissions: EmissionsPanel,
    pub history: DefaultHistory,
    pub portfolio: Vec<PortfolioEntry>,
    pub cash_flows: CashFlows,
    pub truth: FixtureTruth,
}

fn matrix(rows: &[[f64; 4]; 4]) -> Matrix {
    Matrix::from_fn(4, 4, |r, c| rows[r][c])
}

pub fn economy() -> climcredit_core::Result<EconomyParams> {
    EconomyParams::new(Vector::from_row_slice(&PSI), matrix(&LAMBDA), 1.0, ReturnsToScale::Renormalize)
}

pub fn var_params() -> climcredit_core::Result<VarParams> {
    VarParams::new(Vector::from_row_slice(&MU), matrix(&GAMMA), matrix(&SIGMA), 1.0)
}

/// Curve whose value `years_to_ref` after its origin matches its reference cost rate.
fn curve(spec: CurveSpec, years_to_ref: i64) -> climcredit_core::Result<IntensityCurve> {
    let CurveSpec(rate_pct, g0, theta_pct) = spec;
    let unit = IntensityCurve::new(1.0, g0, theta_pct / 100.0, i64::MAX)?;
    let level = rate_pct / 100.0 / REFERENCE_PRICE;
    IntensityCurve::new(level / unit.value(years_to_ref), g0, theta_pct / 100.0, i64::MAX)
}

pub fn intensities() -> climcredit_core::Result<IntensitySet> {
    let k = (T_CIRC - FIRST_EMISSIONS_YEAR) as i64;
    IntensitySet::new(
        TAU.iter().map(|s| curve(*s, k)).collect::<Result<_, _>>()?,
        ZETA.iter()
            .map(|row| row.iter().map(|s| curve(*s, k)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?,
        KAPPA.iter().map(|s| curve(*s, k)).collect::<Result<_, _>>()?,
    )
}

/// The four price templates as geometric paths through their endpoints.
pub fn scenario_pack() -> Vec<ScenarioConfig> {
    let years = (T_STAR - T_CIRC) as f64;
    PRICE_TEMPLATES
        .iter()
        .map(|p| ScenarioConfig {
            name: p.name.to_string(),
            delta0: p.start,
            t_circ: T_CIRC,
            t_star: T_STAR,
            path: PriceSpec::Geometric {
                growth: (p.end / p.start).powf(1.0 / years) - 1.0,
            },
        })
        .collect()
}

/// The 16-firm portfolio. Barrier cells are left blank so that the
/// calibrated group barriers apply.
pub fn portfolio() -> Vec<PortfolioEntry> {
    (0..16)
        .map(|n| PortfolioEntry {
            id: format!("F{:02}", n + 1),
            group: SECTORS[n / 4].to_string(),
            ead: PORTFOLIO_EAD,
            lgd: PORTFOLIO_LGD,
            f0: 1.0,
            sigma_b: Some(PORTFOLIO_SIGMA_B[n]),
            b_ratio: None,
            loading_scale: 1.0,
        })
        .collect()
}

/// Same portfolio with the published barrier ratios filled in literally.
pub fn portfolio_with_published_barriers() -> Vec<PortfolioEntry> {
    portfolio()
        .into_iter()
        .zip(PORTFOLIO_B)
        .map(|(e, b)| PortfolioEntry { b_ratio: Some(b), ..e })
        .collect()
}

fn mean_sigma(g: usize) -> f64 {
    PORTFOLIO_SIGMA_B[4 * g..4 * g + 4].iter().sum::<f64>() / 4.0
}

pub fn generate(opts: &FixtureOptions) -> climcredit_core::Result<Fixture> {
    let econ = economy()?;
    let var = var_params()?;
    let intens = intensities()?;
    let n = 4;
    let years: Vec<i32> = (FIRST_YEAR..=LAST_YEAR).collect();
    let ny = years.len();
    let ens = var_process::simulate_paths(&var, &ThetaInit::Stationary, ny - 1, 1, opts.seed)?;
    let l = econ.inv_leontief().clone();
    let lam = econ.lambda.clone();

    // Nominal values: constant real structure, 2% drift, prices absorb volume.
    let c_base = Vector::from_row_slice(&[45.0e9, 70.0e9, 320.0e9, 610.0e9]);
    let y_base = (Matrix::identity(n, n) - &lam)
        .try_inverse()
        .expect("column sums below one")
        * &c_base;
    let wage = 25.0;
    let mut panel = SectorPanel {
        years: years.clone(),
        output_value: Vec::with_capacity(ny),
        consumption_value: Vec::with_capacity(ny),
        labor_hours: Vec::with_capacity(ny),
        compensation: Vec::with_capacity(ny),
        flows: Vec::with_capacity(ny),
    };
    let mut prices = Vec::with_capacity(ny);
    for (y, &year) in years.iter().enumerate() {
        let drift = (0.02 * (year - FIRST_YEAR) as f64).exp();
        let log_vol = &l * Vector::from_column_slice(ens.a_circ(0, y));
        let out: Vec<f64> = (0..n).map(|i| drift * y_base[i]).collect();
        panel.output_value.push(out.clone());
        panel.consumption_value.push((0..n).map(|i| drift * c_base[i]).collect());
        let comp: Vec<f64> = (0..n).map(|i| econ.psi[i] * out[i]).collect();
        panel.labor_hours.push(comp.iter().map(|c| c / (wage * drift)).collect());
        panel.compensation.push(comp);
        panel.flows.push(Matrix::from_fn(n, n, |j, i| lam[(j, i)] * out[i]));
        prices.push((0..n).map(|i| drift * (-log_vol[i]).exp()).collect::<Vec<f64>>());
    }
    let sectors = SectorData {
        sectors: SECTORS.iter().map(|s| s.to_string()).collect(),
        panel,
        prices: Some(prices),
    };

    let e_years: Vec<i32> = (FIRST_EMISSIONS_YEAR..=LAST_YEAR).collect();
    let mut emissions = EmissionsPanel {
        years: e_years.clone(),
        firm: Vec::new(),
        household: Vec::new(),
        intermediary: Vec::new(),
    };
    for (k, &year) in e_years.iter().enumerate() {
        let y = (year - FIRST_YEAR) as usize;
        let t = k as i64;
        let p = &sectors.panel;
        emissions
            .firm
            .push((0..n).map(|i| intens.tau[i].value(t) * p.output_value[y][i]).collect());
        emissions
            .household
            .push((0..n).map(|i| intens.kappa[i].value(t) * p.consumption_value[y][i]).collect());
        emissions
            .intermediary
            .push(Matrix::from_fn(n, n, |j, i| intens.zeta[j][i].value(t) * p.flows[y][(j, i)]));
    }

    // Cash flows of each group load on sector g only.
    let group_a: Vec<Vector> = (0..n).map(|g| Vector::from_fn(n, |i, _| if i == g { 1.0 } else { 0.0 })).collect();
    let group_sigma_b: Vec<f64> = (0..n).map(mean_sigma).collect();
    let size = opts.cash_flow_group_size;
    let mut cf_rng = rng::substream(opts.seed, rng::STREAM_AUX);
    let mut growth = vec![Vec::with_capacity(ny - 1); n];
    for y in 1..ny {
        let dy = &l * Vector::from_column_slice(ens.theta(0, y));
        for g in 0..n {
            let a_tilde = (Matrix::identity(n, n) - &lam) * &group_a[g];
            let noise = (size as f64).sqrt() * group_sigma_b[g] * rng::normal(&mut cf_rng);
            growth[g].push(size as f64 * a_tilde.dot(&dy) + noise);
        }
    }
    let cash_flows = CashFlows {
        groups: sectors.sectors.clone(),
        years: years[1..].to_vec(),
        growth_sum: growth,
        group_size: vec![size; n],
    };

    // Default history on the same productivity path, clock restarted at the
    // first history year.
    let moments = var_process::stationary_moments(&var)?;
    let zero = CostPath::constant(&econ, &EmissionsCostRate::zero(n))?;
    let firms: Vec<Firm> = (0..n)
        .map(|g| Firm {
            id: SECTORS[g].into(),
            group: g,
            a: group_a[g].clone(),
            sigma_b: group_sigma_b[g],
            f0: 1.0,
            b_ratio: 1.0,
            ead: YearlyAmount::constant(1.0),
            lgd: YearlyAmount::constant(1.0),
        })
        .collect();
    let model = RiskModel::new(&Portfolio::new(firms.clone(), n, false)?, &zero, &var, &moments, DISCOUNT_RATE, 1)?;
    let h_years: Vec<i32> = e_years.clone();
    let h0 = (FIRST_EMISSIONS_YEAR - FIRST_YEAR) as usize;
    let mut hist_theta = Vec::with_capacity(h_years.len());
    let mut hist_acirc = Vec::with_capacity(h_years.len());
    let mut acc = vec![0.0; n];
    for k in 0..h_years.len() {
        let th = ens.theta(0, h0 + k).to_vec();
        if k > 0 {
            for (a, t) in acc.iter_mut().zip(&th) {
                *a += t;
            }
        }
        hist_theta.push(th);
        hist_acirc.push(acc.clone());
    }
    let t_mid = h_years.len() / 2;
    let mean_acirc: Vec<f64> = moments.mu_bar.iter().map(|m| m * t_mid as f64).collect();
    let mut group_b_ratio = Vec::with_capacity(n);
    let mut d_rng = rng::substream(opts.seed, rng::STREAM_AUX + 1);
    let mut defaulted = vec![Vec::with_capacity(h_years.len()); n];
    for g in 0..n {
        let f = &firms[g];
        let fc = &model.forward[g];
        let k_mid = fc.mean(f, &model.curves[g], t_mid, &mean_acirc, moments.mu_bar.as_slice());
        let log_b = k_mid + normal::inv_cdf(opts.target_pd) * fc.var(f, t_mid).sqrt();
        group_b_ratio.push(log_b.exp());
        for t in 0..h_years.len() {
            let k = fc.mean(f, &model.curves[g], t, &hist_acirc[t], &hist_theta[t]);
            let pd = normal::cdf((log_b - k) / fc.var(f, t).sqrt());
            let d = Binomial::new(opts.rated, pd)
                .map(|b| b.sample(&mut d_rng))
                .unwrap_or(0);
            defaulted[g].push(d);
        }
    }
    let history = DefaultHistory {
        groups: sectors.sectors.clone(),
        years: h_years,
        rated: vec![vec![opts.rated; e_years.len()]; n],
        defaulted,
    };

    Ok(Fixture {
        sectors,
        emissions,
        history,
        portfolio: portfolio(),
        cash_flows,
        truth: FixtureTruth {
            econ,
            var,
            intensities: intens,
            group_a,
            group_sigma_b,
            group_b_ratio,
        },
    })
}

pub const FILES: DataFilesNames = DataFilesNames {
    sector_panel: "sector_panel.csv",
    flows: "flows.csv",
    emissions: "emissions.csv",
    intermediary_emissions: "intermediary_emissions.csv",
    default_history: "default_history.csv",
    portfolio: "portfolio.csv",
    cash_flows: "cash_flows.csv",
};

pub struct DataFilesNames {
    pub sector_panel: &'static str,
    pub flows: &'static str,
    pub emissions: &'static str,
    pub intermediary_emissions: &'static str,
    pub default_history: &'static str,
    pub portfolio: &'static str,
    pub cash_flows: &'static str,
}

/// Configuration running the four templates on the fixture, with data paths
/// relative to the config file.
pub fn run_config(out: PathBuf) -> RunConfig {
    RunConfig {
        data: DataFiles {
            sector_panel: FILES.sector_panel.into(),
            flows: FILES.flows.into(),
            emissions: FILES.emissions.into(),
            intermediary_emissions: Some(FILES.intermediary_emissions.into()),
            default_history: FILES.default_history.into(),
            portfolio: FILES.portfolio.into(),
            cash_flows: Some(FILES.cash_flows.into()),
        },
        scenarios: scenario_pack(),
        t_ref: Some(T_CIRC),
        discount_rate: DISCOUNT_RATE,
        renormalize: true,
        one_risk_class: false,
        report_years: (T_STAR - T_CIRC) as usize,
        risk: RiskSettings::default(),
        mle: MleSettings::default(),
        workers: None,
        out,
        formats: crate::config::ReportFormat::all(),
    }
}

impl Fixture {
    /// Writes every data file and `config.json` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        io::write_sector_panel(&dir.join(FILES.sector_panel), &self.sectors)?;
        io::write_flows(&dir.join(FILES.flows), &self.sectors)?;
        io::write_emissions(
            &dir.join(FILES.emissions),
            &dir.join(FILES.intermediary_emissions),
            &self.sectors.sectors,
            &self.emissions,
        )?;
        io::write_default_history(&dir.join(FILES.default_history), &self.history)?;
        io::write_portfolio(&dir.join(FILES.portfolio), &self.portfolio)?;
        io::write_cash_flows(&dir.join(FILES.cash_flows), &self.cash_flows)?;
        let cfg = run_config(PathBuf::from("out"));
        let path = dir.join("config.json");
        let text = serde_json::to_string_pretty(&cfg).map_err(std::io::Error::other)?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
