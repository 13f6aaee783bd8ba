use std::path::{Path, PathBuf};

use climcredit::config::{PriceSpec, RunConfig, ScenarioConfig};
use climcredit::fixture::{self, FixtureOptions, FILES};
use climcredit::io::{self, ViolationKind, Violations};
use climcredit::pipeline::{ingest, run_pipeline, write_outputs, PipelineError, Stage};
use climcredit::report::{self, ReportRow};
use climcredit_core::Error as CoreError;

fn write_fixture(dir: &Path) -> PathBuf {
    let fx = fixture::generate(&FixtureOptions::default()).unwrap();
    fx.write(&dir.join("data")).unwrap()
}

fn small_config(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&write_fixture(dir)).unwrap();
    cfg.risk.paths = 1000;
    cfg.mle.paths = 500;
    cfg.out = dir.join("out");
    cfg
}

fn replace_line(path: &Path, from: &str, to: &str) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains(from), "{from} not in {}", path.display());
    std::fs::write(path, text.replacen(from, to, 1)).unwrap();
}

fn total(rows: &[ReportRow], scenario: &str, metric: &str) -> Vec<f64> {
    rows.iter()
        .filter(|r| r.scenario == scenario && r.metric == metric && r.group == "total")
        .map(|r| r.value)
        .collect()
}

#[test]
fn fixture_ingests_with_four_sectors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let inputs = ingest(&cfg).unwrap();
    assert_eq!(inputs.sectors.dim(), 4);
    assert_eq!(inputs.sectors.sectors, fixture::SECTORS.map(String::from).to_vec());
    assert_eq!(inputs.portfolio.len(), 16);
    assert_eq!(inputs.history.groups.len(), 4);
    assert_eq!(inputs.files.len(), 7);
}

#[test]
fn negative_output_names_year_and_sector() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let panel = &cfg.data.sector_panel;
    let text = std::fs::read_to_string(panel).unwrap();
    let line = text.lines().find(|l| l.starts_with("2000,Low,")).unwrap().to_string();
    let mut cells: Vec<&str> = line.split(',').collect();
    cells[2] = "-5";
    replace_line(panel, &line, &cells.join(","));

    let mut v = Violations::default();
    io::read_sector_data(panel, &cfg.data.flows, &mut v).unwrap();
    let cov: Vec<_> = v.0.iter().filter(|x| x.kind == ViolationKind::Coverage).collect();
    assert_eq!(cov.len(), 1, "{:?}", v.0);
    assert!(cov[0].message.contains("2000") && cov[0].message.contains("Low"), "{}", cov[0].message);

    let err = run_pipeline(&cfg, Stage::Calibrate).unwrap_err();
    assert_eq!(err.stage, Stage::Ingest);
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn unknown_unit_and_missing_cell_are_both_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    replace_line(&cfg.data.flows, "value[EUR]", "value[USD]");
    let history = &cfg.data.default_history;
    let text = std::fs::read_to_string(history).unwrap();
    let line = text.lines().find(|l| l.starts_with("2010,High,")).unwrap().to_string();
    replace_line(history, &format!("{line}\n"), "");

    let err = ingest(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.message.contains("unit error"), "{}", err.message);
    assert!(err.message.contains("2010") && err.message.contains("High"), "{}", err.message);
}

#[test]
fn scaled_units_are_converted_to_base_units() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let mut v = Violations::default();
    let before = io::read_sector_data(&cfg.data.sector_panel, &cfg.data.flows, &mut v).unwrap().unwrap();

    let text = std::fs::read_to_string(&cfg.data.flows).unwrap();
    let mut out = String::from("year,input_sector,output_sector,value[MEUR]\n");
    for line in text.lines().skip(1) {
        let mut c: Vec<String> = line.split(',').map(String::from).collect();
        c[3] = format!("{}", c[3].parse::<f64>().unwrap() / 1e6);
        out.push_str(&c.join(","));
        out.push('\n');
    }
    std::fs::write(&cfg.data.flows, out).unwrap();
    let after = io::read_sector_data(&cfg.data.sector_panel, &cfg.data.flows, &mut v).unwrap().unwrap();
    assert!(v.is_empty(), "{:?}", v.0);
    for (a, b) in before.panel.flows.iter().zip(&after.panel.flows) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-9 * x.abs(), "{x} vs {y}");
        }
    }
}

#[test]
fn input_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture::generate(&FixtureOptions::default()).unwrap();
    let data = dir.path().join("data");
    fx.write(&data).unwrap();
    let mut v = Violations::default();
    let sectors = io::read_sector_data(&data.join(FILES.sector_panel), &data.join(FILES.flows), &mut v)
        .unwrap()
        .unwrap();
    let emissions = io::read_emissions(
        &data.join(FILES.emissions),
        Some(&data.join(FILES.intermediary_emissions)),
        &sectors,
        &mut v,
    )
    .unwrap()
    .unwrap();
    let history = io::read_default_history(&data.join(FILES.default_history), &mut v).unwrap().unwrap();
    let portfolio = io::read_portfolio(&data.join(FILES.portfolio), &mut v).unwrap().unwrap();
    let cash = io::read_cash_flows(&data.join(FILES.cash_flows), &mut v).unwrap().unwrap();
    assert!(v.is_empty(), "{:?}", v.0);
    assert_eq!(sectors, fx.sectors);
    assert_eq!(emissions, fx.emissions);
    assert_eq!(history, fx.history);
    assert_eq!(portfolio, fx.portfolio);
    assert_eq!(cash, fx.cash_flows);
}

#[test]
fn report_csv_round_trips_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = run_pipeline(&cfg, Stage::Sensitivity).unwrap();
    assert!(!out.report.rows.is_empty());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    report::write_csv(&a, &out.report.rows).unwrap();
    let back = report::read_csv(&a).unwrap();
    assert_eq!(back, out.report.rows);
    report::write_csv(&b, &back).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn outputs_carry_bundle_hash_and_bands_cover_the_mean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = run_pipeline(&cfg, Stage::Sensitivity).unwrap();
    let written = write_outputs(&out, &cfg).unwrap();
    assert_eq!(written.len(), 1 + 2 + report::PLOT_METRICS.len());

    let bundle = std::fs::read(cfg.out.join("bundle.json")).unwrap();
    assert_eq!(climcredit::bundle::sha256_hex(&bundle), out.calibrated.hash);
    assert!(out.report.rows.iter().all(|r| r.bundle_hash == out.calibrated.hash));

    for m in report::PLOT_METRICS {
        let mut rdr = csv::Reader::from_path(cfg.out.join(format!("plot_{m}.csv"))).unwrap();
        let mut n = 0;
        for rec in rdr.records() {
            let r = rec.unwrap();
            let (mean, lo, hi): (f64, f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap(), r[5].parse().unwrap());
            assert!(lo <= mean && mean <= hi, "{m}: {lo} {mean} {hi}");
            n += 1;
        }
        assert!(n > 0, "empty plot for {m}");
    }
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(cfg.out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["run"]["bundle_hash"], out.calibrated.hash.as_str());
    assert_eq!(json["well_posedness"]["pass"], true);
}

#[test]
fn rising_price_is_riskier_than_flat_price() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    let base = |name: &str, growth: f64| ScenarioConfig {
        name: name.into(),
        delta0: 40.0,
        t_circ: fixture::T_CIRC,
        t_star: fixture::T_STAR,
        path: PriceSpec::Geometric { growth },
    };
    cfg.scenarios = vec![base("flat", 0.0), base("rising", 0.10)];
    let rows = run_pipeline(&cfg, Stage::Risk).unwrap().report.rows;
    for metric in ["pd", "el", "ul"] {
        let flat = total(&rows, "flat", metric);
        let rising = total(&rows, "rising", metric);
        assert_eq!(flat.len(), cfg.report_years + 1);
        // Values look ahead, so the rising path already weighs at t = 0.
        for t in 0..flat.len() {
            assert!(rising[t] >= flat[t], "{metric} year {t}: {} < {}", rising[t], flat[t]);
        }
    }
}

#[test]
fn published_barriers_run_under_every_template() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    io::write_portfolio(&cfg.data.portfolio, &fixture::portfolio_with_published_barriers()).unwrap();
    let out = run_pipeline(&cfg, Stage::Sensitivity).unwrap();
    for s in fixture::PRICE_TEMPLATES {
        let pd = total(&out.report.rows, s.name, "pd");
        assert_eq!(pd.len(), cfg.report_years + 1, "{}", s.name);
        assert!(pd.iter().all(|p| p.is_finite() && (0.0..=1.0).contains(p)));
    }
    assert!(out.calibrated.portfolio.firms.iter().zip(fixture::PORTFOLIO_B).all(|(f, b)| f.b_ratio == b));
}

#[test]
fn empty_scenario_list_writes_schema_valid_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.scenarios.clear();
    let out = run_pipeline(&cfg, Stage::Sensitivity).unwrap();
    assert!(out.report.rows.is_empty());
    write_outputs(&out, &cfg).unwrap();
    assert!(report::read_csv(&cfg.out.join("report.csv")).unwrap().is_empty());
    let plot = std::fs::read_to_string(cfg.out.join("plot_pd.csv")).unwrap();
    assert_eq!(plot.trim_end(), report::PLOT_HEADER.join(","));
}

#[test]
fn unbounded_carbon_cost_fails_well_posedness() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.scenarios = vec![ScenarioConfig {
        name: "extreme".into(),
        delta0: 1.0e5,
        t_circ: fixture::T_CIRC,
        t_star: fixture::T_STAR,
        path: PriceSpec::Geometric { growth: 0.0 },
    }];
    let err = run_pipeline(&cfg, Stage::Risk).unwrap_err();
    assert_eq!(err.stage, Stage::WellPosedness);
    assert_eq!(err.exit_code(), 3);
    assert!(err.message.contains("extreme"), "{}", err.message);
}

#[test]
fn core_errors_map_to_exit_codes() {
    let code = |e| PipelineError::core(Stage::Risk, "x", e).exit_code();
    assert_eq!(code(CoreError::InvalidParameter("p".into())), 2);
    assert_eq!(code(CoreError::TooShort { got: 1, need: 3 }), 2);
    assert_eq!(code(CoreError::NonStationary { spectral_radius: 1.2 }), 3);
    assert_eq!(code(CoreError::NotSummable { varrho: 0.1 }), 3);
    assert_eq!(code(CoreError::SingularEquilibrium { condition: 1e17 }), 4);
    assert_eq!(code(CoreError::QuantileUndefined { tail: 1.0 }), 4);
    assert_eq!(code(CoreError::BracketFailure), 4);
}

#[test]
fn workers_do_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.workers = Some(1);
    let one = run_pipeline(&cfg, Stage::Sensitivity).unwrap().report;
    cfg.workers = Some(4);
    let four = run_pipeline(&cfg, Stage::Sensitivity).unwrap().report;
    assert_eq!(one, four);
}
