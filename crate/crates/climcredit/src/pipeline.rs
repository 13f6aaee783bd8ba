//! End-to-end run: ingest, calibrate, build scenarios, check well-posedness,
//! simulate, estimate risk and sensitivities, report.

use std::fmt;
use std::path::PathBuf;

use climcredit_core::calibration::{
    estimate_elasticities, estimate_var, fit_barrier_mle, fit_factor_loadings, fit_intensity_curve, intensity_from_flows,
    CurveFlag, EmissionsPanel,
};
use climcredit_core::credit::{
    bumped_path, output_growth_estimates, sensitivity_summary, summarize, GroupKey, Portfolio, RiskModel,
};
use climcredit_core::economy::{EconomyParams, ReturnsToScale};
use climcredit_core::linalg::Vector;
use climcredit_core::transition::{validate_price_vs_output, IntensitySet, TransitionScenario};
use climcredit_core::valuation::{check_well_posed, CostPath, Firm, YearlyAmount};
use climcredit_core::var_process::{stationary_moments, StationaryMoments, ThetaInit, VarParams};
use climcredit_core::Error as CoreError;

use crate::bundle::{
    rows, sha256_hex, CurveParams, FileHash, GroupParams, IntensityParams, ParameterBundle, Provenance, VarBundle,
};
use crate::config::{ConfigError, RunConfig};
use crate::io::{self, CashFlows, DefaultHistory, IngestError, PortfolioEntry, SectorData, Violations};
use crate::parallel;
use crate::report::{self, ReportRow, RiskReport, RunInfo, WellPosedness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Config,
    Ingest,
    Calibrate,
    Scenario,
    WellPosedness,
    Simulate,
    Risk,
    Sensitivity,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Calibrate => "calibrate",
            Stage::Scenario => "scenario",
            Stage::WellPosedness => "well-posedness",
            Stage::Simulate => "simulate",
            Stage::Risk => "risk",
            Stage::Sensitivity => "sensitivity",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Validation,
    WellPosedness,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: FailureKind,
    pub message: String,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.message)
    }
}

impl std::error::Error for PipelineError {}

impl PipelineError {
    pub fn new(stage: Stage, kind: FailureKind, message: impl Into<String>) -> Self {
        Self {
            stage,
            kind,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            FailureKind::Validation => 2,
            FailureKind::WellPosedness => 3,
            FailureKind::Numeric => 4,
        }
    }

    pub fn core(stage: Stage, context: &str, e: CoreError) -> Self {
        let kind = match e {
            CoreError::Dimension(_)
            | CoreError::InvalidParameter(_)
            | CoreError::ZeroDenominator(_)
            | CoreError::TooShort { .. }
            | CoreError::DomainError(_) => FailureKind::Validation,
            CoreError::NonStationary { .. } | CoreError::NotSummable { .. } | CoreError::PriceDominance { .. } => {
                FailureKind::WellPosedness
            }
            CoreError::SingularSystem { .. }
            | CoreError::CholeskyFailure { .. }
            | CoreError::SingularEquilibrium { .. }
            | CoreError::QuantileUndefined { .. }
            | CoreError::RankDeficient { .. }
            | CoreError::BracketFailure => FailureKind::Numeric,
        };
        Self::new(stage, kind, format!("{context}: {e}"))
    }
}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        Self::new(Stage::Config, FailureKind::Validation, e.to_string())
    }
}

impl From<IngestError> for PipelineError {
    fn from(e: IngestError) -> Self {
        Self::new(Stage::Ingest, FailureKind::Validation, e.to_string())
    }
}

/// Validated inputs with their file hashes.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub sectors: SectorData,
    pub emissions: EmissionsPanel,
    pub history: DefaultHistory,
    pub portfolio: Vec<PortfolioEntry>,
    pub cash_flows: Option<CashFlows>,
    pub files: Vec<FileHash>,
    pub data_hash: String,
}

/// Reads and validates every input file. All violations across all files are
/// reported together.
pub fn ingest(cfg: &RunConfig) -> Result<Inputs, PipelineError> {
    let d = &cfg.data;
    let mut files = Vec::new();
    for (name, path) in d.all() {
        let bytes = std::fs::read(path).map_err(|e| IngestError::Io {
            file: path.display().to_string(),
            source: e,
        })?;
        files.push(FileHash {
            name: name.to_string(),
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest: String = files.iter().map(|f| format!("{}:{}\n", f.name, f.sha256)).collect();
    let data_hash = sha256_hex(manifest.as_bytes());

    let mut v = Violations::default();
    let sectors = io::read_sector_data(&d.sector_panel, &d.flows, &mut v)?;
    let emissions = match &sectors {
        Some(s) => io::read_emissions(&d.emissions, d.intermediary_emissions.as_deref(), s, &mut v)?,
        None => None,
    };
    let history = io::read_default_history(&d.default_history, &mut v)?;
    let portfolio = io::read_portfolio(&d.portfolio, &mut v)?;
    let cash_flows = match &d.cash_flows {
        Some(p) => io::read_cash_flows(p, &mut v)?,
        None => None,
    };
    if !v.is_empty() {
        return Err(IngestError::Invalid(v.0).into());
    }
    let (Some(sectors), Some(emissions), Some(history), Some(portfolio)) = (sectors, emissions, history, portfolio) else {
        return Err(PipelineError::new(Stage::Ingest, FailureKind::Validation, "incomplete inputs"));
    };
    if d.cash_flows.is_some() && cash_flows.is_none() {
        return Err(PipelineError::new(Stage::Ingest, FailureKind::Validation, "cash flows could not be read"));
    }
    Ok(Inputs {
        sectors,
        emissions,
        history,
        portfolio,
        cash_flows,
        files,
        data_hash,
    })
}

/// Calibrated model objects plus the serializable bundle they came from.
#[derive(Debug, Clone)]
pub struct Calibrated {
    pub bundle: ParameterBundle,
    pub hash: String,
    pub econ: EconomyParams,
    pub var: VarParams,
    pub moments: StationaryMoments,
    /// Curves on the clock starting at `bundle.intensities.origin_year`.
    pub intensities: IntensitySet,
    pub portfolio: Portfolio,
}

impl Calibrated {
    pub fn group_names(&self) -> Vec<String> {
        self.bundle.groups.iter().map(|g| g.name.clone()).collect()
    }

    pub fn firm_ids(&self) -> Vec<String> {
        self.portfolio.firms.iter().map(|f| f.id.clone()).collect()
    }
}

fn curve_flag(f: CurveFlag) -> &'static str {
    match f {
        CurveFlag::Ok => "ok",
        CurveFlag::NonMonotone => "non_monotone",
        CurveFlag::DegenerateFlat => "degenerate_flat",
        CurveFlag::ThetaFloored => "theta_floored",
    }
}

fn fit_curve(series: &[f64], what: &str) -> Result<CurveParams, PipelineError> {
    if series.iter().all(|x| *x == 0.0) {
        return Ok(CurveParams {
            y0: 0.0,
            g0: 0.0,
            theta: 1.0,
            flag: "zero".into(),
        });
    }
    let fit = fit_intensity_curve(series).map_err(|e| PipelineError::core(Stage::Calibrate, what, e))?;
    Ok(CurveParams {
        y0: fit.y0,
        g0: fit.g0,
        theta: fit.theta,
        flag: curve_flag(fit.flag).into(),
    })
}

fn calib_err(context: &str) -> impl Fn(CoreError) -> PipelineError + '_ {
    move |e| PipelineError::core(Stage::Calibrate, context, e)
}

/// Fits every parameter and assembles the portfolio.
pub fn calibrate(inputs: &Inputs, cfg: &RunConfig) -> Result<Calibrated, PipelineError> {
    let panel = &inputs.sectors.panel;
    let names = &inputs.sectors.sectors;
    let n = names.len();
    let invalid = |m: String| PipelineError::new(Stage::Calibrate, FailureKind::Validation, m);

    let el = estimate_elasticities(panel).map_err(calib_err("elasticities"))?;
    let returns = if cfg.renormalize {
        ReturnsToScale::Renormalize
    } else {
        ReturnsToScale::KeepRaw
    };
    let econ = EconomyParams::new(el.psi.clone(), el.lambda.clone(), 1.0, returns).map_err(calib_err("economy"))?;

    let delta_y = panel.output_growth(inputs.sectors.prices.as_deref());
    let vf = estimate_var(&delta_y, &econ.lambda).map_err(calib_err("productivity VAR"))?;
    let var = vf.params.clone();

    let realized = intensity_from_flows(&inputs.emissions, panel).map_err(calib_err("carbon intensities"))?;
    let tau = (0..n)
        .map(|i| fit_curve(&realized.tau_series(i), &format!("tau curve of {}", names[i])))
        .collect::<Result<Vec<_>, _>>()?;
    let kappa = (0..n)
        .map(|i| fit_curve(&realized.kappa_series(i), &format!("kappa curve of {}", names[i])))
        .collect::<Result<Vec<_>, _>>()?;
    let zeta = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| fit_curve(&realized.zeta_series(j, i), &format!("zeta curve {} -> {}", names[j], names[i])))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let intensity_params = IntensityParams {
        origin_year: realized.years[0],
        tau,
        zeta,
        kappa,
    };
    let intensities = intensity_params.set().map_err(calib_err("intensity curves"))?;

    // Groups in order of first appearance in the portfolio.
    let mut group_names: Vec<String> = Vec::new();
    for e in &inputs.portfolio {
        if !group_names.contains(&e.group) {
            group_names.push(e.group.clone());
        }
    }
    let moments_result = stationary_moments(&var);
    let mut groups = Vec::with_capacity(group_names.len());
    let mut problems = Vec::new();
    for name in &group_names {
        let members: Vec<&PortfolioEntry> = inputs.portfolio.iter().filter(|e| &e.group == name).collect();
        let cf_index = inputs.cash_flows.as_ref().and_then(|c| c.groups.iter().position(|g| g == name));
        let (a_tilde, a_se, a, sigma_fit) = match (inputs.cash_flows.as_ref(), cf_index) {
            (Some(cf), Some(g)) => {
                let mut regs = Vec::with_capacity(cf.years.len());
                for &year in &cf.years {
                    match panel.years.iter().position(|&y| y == year) {
                        Some(k) if k >= 1 => regs.push(delta_y[k - 1].clone()),
                        _ => {
                            problems.push(format!(
                                "cash flows of group '{name}' in {year} have no output growth in the sector panel"
                            ));
                        }
                    }
                }
                if regs.len() != cf.years.len() {
                    continue;
                }
                let fit = fit_factor_loadings(&cf.growth_sum[g], &regs, cf.group_size[g])
                    .map_err(calib_err("factor loadings"))?;
                let a = fit.theta_loading(&econ);
                (
                    Some(fit.a_tilde.iter().copied().collect::<Vec<_>>()),
                    Some(fit.a_se.iter().copied().collect::<Vec<_>>()),
                    a.iter().copied().collect::<Vec<_>>(),
                    Some(fit.sigma_b),
                )
            }
            _ => (None, None, vec![1.0 / n as f64; n], None),
        };
        let (sigma_b, source) = match sigma_fit {
            Some(s) => (s, "cash_flows"),
            None => {
                let given: Vec<f64> = members.iter().filter_map(|e| e.sigma_b).collect();
                if given.len() != members.len() {
                    problems.push(format!("group '{name}' has no cash flows, so every firm needs sigma_b"));
                    continue;
                }
                (given.iter().sum::<f64>() / given.len() as f64, "portfolio")
            }
        };
        let mut gp = GroupParams {
            name: name.clone(),
            a_tilde,
            a_tilde_se: a_se,
            a,
            sigma_b,
            sigma_b_source: source.into(),
            b_ratio: None,
            barrier_flag: None,
            log_likelihood: None,
        };
        if let Some(h) = inputs.history.group(name) {
            let moments = moments_result.clone().map_err(calib_err("stationary moments"))?;
            let fit = fit_barrier_mle(
                &inputs.history.rated[h],
                &inputs.history.defaulted[h],
                &Vector::from_vec(gp.a.clone()),
                gp.sigma_b,
                &econ,
                &var,
                &moments,
                cfg.discount_rate,
                cfg.mle.paths,
                cfg.mle.seed,
            )
            .map_err(calib_err(&format!("barrier of group '{name}'")))?;
            gp.b_ratio = Some(fit.b_ratio);
            gp.barrier_flag = Some(format!("{:?}", fit.flag).to_lowercase());
            gp.log_likelihood = Some(fit.log_likelihood);
        } else if members.iter().any(|e| e.b_ratio.is_none()) {
            problems.push(format!("group '{name}' has no default history, so every firm needs b_ratio"));
        }
        groups.push(gp);
    }
    if !problems.is_empty() {
        return Err(invalid(problems.join("; ")));
    }
    let moments = moments_result.map_err(|e| PipelineError::core(Stage::Calibrate, "stationary moments", e))?;

    let bundle = ParameterBundle {
        sectors: names.clone(),
        psi: econ.psi.iter().copied().collect(),
        lambda: rows(&econ.lambda),
        renormalized: cfg.renormalize,
        var: VarBundle {
            mu: var.mu.iter().copied().collect(),
            gamma: rows(&var.gamma),
            sigma: rows(&var.sigma),
            epsilon: var.epsilon,
            mu_se: vf.mu_se.iter().copied().collect(),
            gamma_se: rows(&vf.gamma_se),
            eigenvalues: vf.stationarity.eigenvalues.clone(),
            spectral_radius: vf.stationarity.spectral_radius,
            stationary: vf.stationarity.stationary,
            observations: vf.theta_hat.len().saturating_sub(1),
        },
        intensities: intensity_params,
        groups,
        provenance: Provenance {
            data_sha256: inputs.data_hash.clone(),
            files: inputs.files.clone(),
            elasticity_coverage: el.coverage.iter().copied().collect(),
            panel_years: (panel.years[0], *panel.years.last().unwrap_or(&panel.years[0])),
            emission_years: (realized.years[0], *realized.years.last().unwrap_or(&realized.years[0])),
            discount_rate: cfg.discount_rate,
        },
    };
    bundle.check_dims().map_err(invalid)?;
    let portfolio = build_portfolio(&bundle, &inputs.portfolio, cfg.one_risk_class)?;
    Ok(Calibrated {
        hash: bundle.hash(),
        bundle,
        econ,
        var,
        moments,
        intensities,
        portfolio,
    })
}

/// Firms take their group's loadings scaled by `loading_scale`; blank
/// `sigma_b` and `b_ratio` cells take the group values.
pub fn build_portfolio(bundle: &ParameterBundle, entries: &[PortfolioEntry], one_risk_class: bool) -> Result<Portfolio, PipelineError> {
    let invalid = |m: String| PipelineError::new(Stage::Calibrate, FailureKind::Validation, m);
    let mut firms = Vec::with_capacity(entries.len());
    for e in entries {
        let g = bundle
            .groups
            .iter()
            .position(|x| x.name == e.group)
            .ok_or_else(|| invalid(format!("firm '{}' refers to unknown group '{}'", e.id, e.group)))?;
        let gp = &bundle.groups[g];
        let b_ratio = e
            .b_ratio
            .or(gp.b_ratio)
            .ok_or_else(|| invalid(format!("firm '{}' has no barrier ratio", e.id)))?;
        firms.push(Firm {
            id: e.id.clone(),
            group: g,
            a: Vector::from_iterator(gp.a.len(), gp.a.iter().map(|x| x * e.loading_scale)),
            sigma_b: e.sigma_b.unwrap_or(gp.sigma_b),
            f0: e.f0,
            b_ratio,
            ead: YearlyAmount::constant(e.ead),
            lgd: YearlyAmount::constant(e.lgd),
        });
    }
    Portfolio::new(firms, bundle.groups.len(), one_risk_class)
        .map_err(|e| PipelineError::core(Stage::Calibrate, "portfolio", e))
}

pub fn build_scenarios(cal: &Calibrated, cfg: &RunConfig) -> Result<Vec<TransitionScenario>, PipelineError> {
    let Some(t_ref) = cfg.t_ref() else {
        return Ok(Vec::new());
    };
    cfg.scenarios
        .iter()
        .map(|s| {
            let ctx = format!("scenario '{}'", s.name);
            let schedule = s.schedule().map_err(|e| PipelineError::core(Stage::Scenario, &ctx, e))?;
            TransitionScenario::new(
                s.name.clone(),
                schedule,
                &cal.intensities,
                cal.bundle.intensities.origin_year,
                t_ref,
            )
            .map_err(|e| PipelineError::core(Stage::Scenario, &ctx, e))
        })
        .collect()
}

/// Proxy-value summability for every firm, the value-series bound when it
/// applies, and `τδ < 1` along every scenario.
pub fn check_well_posedness(cal: &Calibrated, scenarios: &[TransitionScenario], r: f64) -> WellPosedness {
    let rep = check_well_posed(&cal.portfolio.firms, &cal.var, &cal.moments, r);
    let mut wp = WellPosedness::from_core(&rep, &cal.firm_ids());
    for s in scenarios {
        let pc = validate_price_vs_output(s);
        wp.max_price_cost.push((s.name.clone(), pc.max_product));
        if !pc.pass {
            wp.pass = false;
            wp.failures.push(format!(
                "scenario '{}': tau*delta = {} is not < 1 in year {}",
                s.name,
                pc.max_product,
                s.year(pc.worst_t)
            ));
        }
    }
    wp
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub calibrated: Calibrated,
    pub report: RiskReport,
}

struct RowSink<'a> {
    rows: Vec<ReportRow>,
    scenario: &'a str,
    t_ref: i32,
    seed: u64,
    paths: usize,
    hash: &'a str,
}

impl RowSink<'_> {
    fn push(&mut self, t: usize, group: &str, metric: &str, value: f64, stderr: Option<f64>) {
        self.rows.push(ReportRow {
            scenario: self.scenario.to_string(),
            year: self.t_ref + t as i32,
            group: group.to_string(),
            metric: metric.to_string(),
            value,
            stderr,
            seed: self.seed,
            paths: self.paths,
            bundle_hash: self.hash.to_string(),
        });
    }
}

fn group_label(key: GroupKey, names: &[String]) -> String {
    match key {
        GroupKey::Group(g) => names[g].clone(),
        GroupKey::Total => "total".into(),
    }
}

/// Runs every stage up to and including `until`.
pub fn run_pipeline(cfg: &RunConfig, until: Stage) -> Result<RunOutput, PipelineError> {
    cfg.validate()?;
    let inputs = ingest(cfg)?;
    let cal = calibrate(&inputs, cfg)?;
    let risk_cfg = cfg.risk.to_core();
    let mut report = RiskReport {
        run: RunInfo {
            bundle_hash: cal.hash.clone(),
            seed: risk_cfg.seed,
            paths: risk_cfg.paths,
            alpha: risk_cfg.alpha,
            horizon: risk_cfg.horizon,
            theta_fd: risk_cfg.theta_fd,
            t_ref: cfg.t_ref(),
            scenarios: cfg.scenarios.iter().map(|s| s.name.clone()).collect(),
        },
        well_posedness: None,
        rows: Vec::new(),
    };
    if until <= Stage::Calibrate {
        return Ok(RunOutput { calibrated: cal, report });
    }
    let scenarios = build_scenarios(&cal, cfg)?;
    let wp = check_well_posedness(&cal, &scenarios, cfg.discount_rate);
    let passed = wp.pass;
    let failures = wp.failures.join("; ");
    report.well_posedness = Some(wp);
    if !passed {
        return Err(PipelineError::new(Stage::WellPosedness, FailureKind::WellPosedness, failures));
    }
    if until <= Stage::WellPosedness || scenarios.is_empty() {
        return Ok(RunOutput { calibrated: cal, report });
    }
    let rows = parallel::with_workers(cfg.workers, || simulate_and_measure(&cal, &scenarios, cfg, until))?;
    report.rows = rows;
    Ok(RunOutput { calibrated: cal, report })
}

fn simulate_and_measure(
    cal: &Calibrated,
    scenarios: &[TransitionScenario],
    cfg: &RunConfig,
    until: Stage,
) -> Result<Vec<ReportRow>, PipelineError> {
    let rc = cfg.risk.to_core();
    let years: Vec<usize> = (0..=cfg.report_years).collect();
    let ens = parallel::simulate_paths(&cal.var, &ThetaInit::Stationary, cfg.report_years, rc.paths, rc.seed)
        .map_err(|e| PipelineError::core(Stage::Simulate, "path ensemble", e))?;
    let sectors = &cal.bundle.sectors;
    let groups = cal.group_names();
    let t_ref = cfg.t_ref().unwrap_or(0);
    let mut all = Vec::new();
    for s in scenarios {
        let mut sink = RowSink {
            rows: Vec::new(),
            scenario: &s.name,
            t_ref,
            seed: rc.seed,
            paths: rc.paths,
            hash: &cal.hash,
        };
        let ctx = format!("scenario '{}'", s.name);
        let path = CostPath::new(&cal.econ, s).map_err(|e| PipelineError::core(Stage::Simulate, &ctx, e))?;
        let growth_years: Vec<usize> = years.iter().copied().filter(|&t| t >= 1).collect();
        let growth = output_growth_estimates(&cal.econ, &path, &ens, &growth_years)
            .map_err(|e| PipelineError::core(Stage::Simulate, &ctx, e))?;
        for g in &growth {
            sink.push(g.t, &sectors[g.sector], "output_growth", g.mean, Some(g.se));
        }
        if until >= Stage::Risk {
            let risk_err = |e| PipelineError::core(Stage::Risk, &ctx, e);
            let model = RiskModel::new(&cal.portfolio, &path, &cal.var, &cal.moments, cfg.discount_rate, rc.horizon)
                .map_err(risk_err)?;
            let cube = parallel::pd_cube(&model, &ens, &years).map_err(risk_err)?;
            for r in summarize(&model, &cube, rc.alpha).map_err(risk_err)? {
                let g = group_label(r.group, &groups);
                sink.push(r.t, &g, "pd", r.pd, Some(r.pd_se));
                sink.push(r.t, &g, "el", r.el, Some(r.el_se));
                sink.push(r.t, &g, "el_pct", r.el_pct, Some(r.el_se / r.exposure));
                sink.push(r.t, &g, "ul", r.ul, Some(r.ul_se));
                sink.push(r.t, &g, "ul_pct", r.ul_pct, Some(r.ul_se / r.exposure));
                sink.push(r.t, &g, "es", r.es, None);
            }
            if until >= Stage::Sensitivity {
                let sens_err = |e| PipelineError::core(Stage::Sensitivity, &ctx, e);
                let bpath = bumped_path(&cal.econ, &s.intensities, s.t_circ(), &s.prices(), &rc.direction, rc.theta_fd)
                    .map_err(sens_err)?;
                let bmodel = RiskModel::new(&cal.portfolio, &bpath, &cal.var, &cal.moments, cfg.discount_rate, rc.horizon)
                    .map_err(sens_err)?;
                let bcube = parallel::pd_cube(&bmodel, &ens, &years).map_err(sens_err)?;
                for r in sensitivity_summary(&model, &cube, &bcube, rc.alpha, rc.theta_fd).map_err(sens_err)? {
                    let g = group_label(r.group, &groups);
                    sink.push(r.t, &g, "gamma_el", r.gamma_el, Some(r.gamma_el_se));
                    sink.push(r.t, &g, "gamma_ul", r.gamma_ul, None);
                }
            }
        }
        all.extend(sink.rows);
    }
    Ok(all)
}

/// Writes `bundle.json` (whose SHA-256 is the bundle hash) and the report
/// files into `cfg.out`.
pub fn write_outputs(out: &RunOutput, cfg: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let io_err = |e: std::io::Error| PipelineError::new(Stage::Report, FailureKind::Validation, format!("writing outputs: {e}"));
    std::fs::create_dir_all(&cfg.out).map_err(io_err)?;
    let bpath = cfg.out.join("bundle.json");
    std::fs::write(&bpath, out.calibrated.bundle.to_json()).map_err(io_err)?;
    let mut written = vec![bpath];
    written.extend(report::emit_report(&out.report, &cfg.formats, &cfg.out).map_err(io_err)?);
    Ok(written)
}
