mod common;

use climcredit_core::calibration;
use climcredit_core::credit;
use climcredit_core::economy::{self, EconomyParams, ReturnsToScale};
use climcredit_core::linalg::{Matrix, Vector};
use climcredit_core::transition::{
    self, CarbonPriceSchedule, EmissionsCostRate, IntensityCurve, IntensitySet,
};
use climcredit_core::valuation::{self, CostPath, FirmCurve};
use climcredit_core::var_process::{self, ProductivityState};
use proptest::prelude::*;

fn econ_strategy() -> impl Strategy<Value = EconomyParams> {
    (1usize..=5)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(0.05f64..0.6, n),
                proptest::collection::vec(0.01f64..0.5, n * n),
                0.5f64..2.0,
            )
        })
        .prop_map(|(psi, lam, phi)| {
            let n = psi.len();
            EconomyParams::new(
                Vector::from_vec(psi),
                Matrix::from_vec(n, n, lam),
                phi,
                ReturnsToScale::Renormalize,
            )
            .unwrap()
        })
}

fn cost_strategy(n: usize) -> impl Strategy<Value = EmissionsCostRate> {
    (
        proptest::collection::vec(0.0f64..0.9, n),
        proptest::collection::vec(0.0f64..0.9, n * n),
        proptest::collection::vec(0.0f64..2.0, n),
    )
        .prop_map(move |(t, z, k)| EmissionsCostRate {
            tau_d: Vector::from_vec(t),
            zeta_d: Matrix::from_vec(n, n, z),
            kappa_d: Vector::from_vec(k),
        })
}

fn instance() -> impl Strategy<Value = (EconomyParams, EmissionsCostRate, Vector)> {
    econ_strategy().prop_flat_map(|e| {
        let n = e.dim();
        (
            Just(e),
            cost_strategy(n),
            proptest::collection::vec(-1.0f64..1.0, n).prop_map(Vector::from_vec),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_equilibrium_solves_raw_system((econ, d, a) in instance()) {
        let c = economy::coefficients(&econ, &d).unwrap();
        let (log_c, log_y) = economy::log_consumption(&econ, &c, &a).unwrap();
        let res = economy::equilibrium_residual(&econ, &d, &a, &log_c.map(f64::exp), &log_y.map(f64::exp)).unwrap();
        prop_assert!(res.max_abs() <= 1e-9, "residual {}", res.max_abs());
        for i in 0..econ.dim() {
            prop_assert!((log_y[i] - log_c[i] - c.e_ratio[i].ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn output_ratio_is_neumann_limit_and_at_least_one((econ, d, _a) in instance()) {
        let c = economy::coefficients(&econ, &d).unwrap();
        let n = econ.dim();
        let mut term = Vector::from_element(n, 1.0);
        let mut sum = term.clone();
        for _ in 0..2000 {
            term = &c.lambda_d * &term;
            sum += &term;
        }
        prop_assert!((&sum - &c.e_ratio).amax() <= 1e-8 * c.e_ratio.amax());
        prop_assert!(c.e_ratio.iter().all(|x| *x >= 1.0));
    }

    #[test]
    fn costs_shrink_lambda_with_uniform_household_rate((econ, d, _a) in instance(), k in 0.0f64..1.0) {
        let n = econ.dim();
        let d = EmissionsCostRate {
            tau_d: d.tau_d.add_scalar(1e-3),
            zeta_d: d.zeta_d.add_scalar(1e-3),
            kappa_d: Vector::from_element(n, k),
        };
        let lam = economy::lambda_coeffs(&econ, &d).unwrap();
        prop_assert!(lam.iter().zip(econ.lambda.iter()).all(|(x, y)| x < y));
        let zero = EmissionsCostRate::zero(n);
        prop_assert_eq!(economy::lambda_coeffs(&econ, &zero).unwrap(), econ.lambda.clone());
        prop_assert_eq!(economy::psi_coeffs(&econ, &zero).unwrap(), econ.psi.clone());
    }

    #[test]
    fn growth_covariance_ignores_costs((econ, d, _a) in instance(), eps in 0.1f64..1.0) {
        let n = econ.dim();
        let sigma_bar = Matrix::from_fn(n, n, |i, j| if i == j { 2e-4 } else { 5e-5 });
        let m = var_process::StationaryMoments { mu_bar: Vector::from_element(n, 0.01), sigma_bar };
        let c0 = economy::coefficients(&econ, &EmissionsCostRate::zero(n)).unwrap();
        let c1 = economy::coefficients(&econ, &d).unwrap();
        let a = economy::growth_law(&econ, &m, eps, &c1, &c0).unwrap();
        let b = economy::growth_law(&econ, &m, eps, &c0, &c0).unwrap();
        prop_assert_eq!(a.sigma_hat, b.sigma_hat);
        // Constant cost rate: no shift in growth and C, Y grow alike.
        let s = economy::growth_law(&econ, &m, eps, &c1, &c1).unwrap();
        prop_assert!((&s.m_c - &s.m_y).amax() < 1e-15);
        prop_assert!((&s.m_c - &b.m_c).amax() < 1e-15);
    }

    #[test]
    fn price_schedule_is_monotone_and_frozen(d0 in 1.0f64..200.0, eta in 0.0f64..0.3, len in 1i32..20) {
        let s = CarbonPriceSchedule::geometric(d0, 2020, 2020 + len, eta).unwrap();
        let mut prev = 0.0;
        for y in 2010..2050 {
            let p = transition::carbon_price(&s, y);
            prop_assert!(p >= prev);
            prev = p;
            if y <= 2020 { prop_assert_eq!(p, d0); }
            if y >= 2020 + len { prop_assert_eq!(p, transition::carbon_price(&s, 2020 + len)); }
        }
    }

    #[test]
    fn intensity_curves_decay_freeze_and_refit(y0 in 1e-5f64..1e-2, g0 in -0.1f64..-0.005, theta in 0.01f64..0.3, t_star in 5i64..30) {
        let c = IntensityCurve::new(y0, g0, theta, t_star).unwrap();
        prop_assert_eq!(c.value(0), y0);
        for t in 1..=t_star {
            prop_assert!(c.value(t) < c.value(t - 1));
        }
        for t in t_star..t_star + 10 {
            prop_assert_eq!(c.value(t), c.value(t_star));
        }
        let series: Vec<f64> = (0..14).map(|t| IntensityCurve::new(y0, g0, theta, i64::MAX).unwrap().value(t)).collect();
        let fit = calibration::fit_intensity_curve(&series).unwrap();
        prop_assert!((fit.y0 / y0 - 1.0).abs() < 1e-6);
        prop_assert!((fit.g0 / g0 - 1.0).abs() < 1e-6);
        prop_assert!((fit.theta / theta - 1.0).abs() < 1e-6);
        let shifted = c.rebased(3);
        for t in 0..t_star - 3 {
            prop_assert!((shifted.value(t) / c.value(t + 3) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cost_rate_is_price_times_intensity(delta in 0.0f64..300.0, t in 0i64..20) {
        let set = common::intensities3();
        let d = transition::emissions_cost_rate(delta, &set, t).unwrap();
        for i in 0..3 {
            prop_assert_eq!(d.tau_d[i], delta * set.tau[i].value(t));
            prop_assert_eq!(d.kappa_d[i], delta * set.kappa[i].value(t));
            for j in 0..3 {
                prop_assert_eq!(d.zeta_d[(j, i)], delta * set.zeta[j][i].value(t));
            }
        }
    }

    #[test]
    fn gaussian_affine_integral_matches_quadrature(a in -4.0f64..4.0, b in -4.0f64..4.0) {
        let n = 4000;
        let h = 24.0 / n as f64;
        let f = |x: f64| climcredit_core::normal::cdf(a + b * x) * climcredit_core::normal::pdf(x);
        let mut s = f(-12.0) + f(12.0);
        for k in 1..n {
            let x = -12.0 + h * k as f64;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        prop_assert!((s * h / 3.0 - credit::gauss_affine_integral(a, b)).abs() < 1e-10);
    }

    #[test]
    fn log_value_decomposes_and_is_affine_in_productivity(
        a in proptest::collection::vec(0.0f64..1.0, 3),
        w in -0.5f64..0.5,
        t in 0usize..15,
        ac in proptest::collection::vec(-0.2f64..0.2, 3),
        delta in 0.0f64..0.1,
    ) {
        let econ = common::econ3();
        let p = common::var3(1.0);
        let mu_bar = var_process::stationary_moments(&p).unwrap().mu_bar;
        let s = CarbonPriceSchedule::geometric(50.0, 2022, 2028, 0.1).unwrap();
        let scen = transition::TransitionScenario::new("s", s, &common::intensities3(), 2020, 2020).unwrap();
        let path = CostPath::new(&econ, &scen).unwrap();
        let f = common::firm("f", 0, a, 0.08, 2.0);
        let curve = FirmCurve::new(&f, &path, &mu_bar, 0.08).unwrap();
        let state = |x: &[f64]| ProductivityState { t, theta: Vector::zeros(3), a_circ: Vector::from_column_slice(x) };
        let v = valuation::firm_value_proxy(&f, &curve, &state(&ac), w).unwrap();
        prop_assert!(v > 0.0);
        let varrho = f.varrho(&mu_bar, 0.08);
        let r = valuation::r_factor(&f, &path, varrho, t).unwrap();
        let expect = f.f0.ln() + r.ln() - f.a.dot(path.frak_v(0)) + f.a.dot(&Vector::from_column_slice(&ac)) + w;
        prop_assert!((v.ln() - expect).abs() < 1e-12);
        let bumped: Vec<f64> = ac.iter().enumerate().map(|(i, x)| if i == 0 { x + delta } else { *x }).collect();
        let v2 = valuation::firm_value_proxy(&f, &curve, &state(&bumped), w).unwrap();
        prop_assert!((v2.ln() - v.ln() - f.a[0] * delta).abs() < 1e-12);
    }

    #[test]
    fn costlier_scenarios_lower_values(eta in 0.0f64..0.2, extra in 0.01f64..0.2, t in 0usize..12) {
        let econ = common::econ3();
        let p = common::var3(1.0);
        let mu_bar = var_process::stationary_moments(&p).unwrap().mu_bar;
        let mk = |e: f64| {
            let s = CarbonPriceSchedule::geometric(50.0, 2020, 2028, e).unwrap();
            let scen = transition::TransitionScenario::new("s", s, &common::intensities3(), 2020, 2020).unwrap();
            CostPath::new(&econ, &scen).unwrap()
        };
        let (lo, hi) = (mk(eta), mk(eta + extra));
        let f = common::firm("f", 0, vec![0.7, 0.2, 0.1], 0.08, 2.0);
        let a = [0.01, 0.02, -0.01];
        let m_lo = FirmCurve::new(&f, &lo, &mu_bar, 0.08).unwrap().frak_m(&f, t, &a);
        let m_hi = FirmCurve::new(&f, &hi, &mu_bar, 0.08).unwrap().frak_m(&f, t, &a);
        prop_assert!(m_hi <= m_lo);
    }

    #[test]
    fn expected_loss_is_bounded(b in 0.5f64..60.0, t in 0usize..8, ac in proptest::collection::vec(-0.2f64..0.2, 3)) {
        let econ = common::econ3();
        let p = common::var3(1.0);
        let m = var_process::stationary_moments(&p).unwrap();
        let path = CostPath::constant(&econ, &EmissionsCostRate::zero(3)).unwrap();
        let firms = (0..4).map(|k| common::firm(&k.to_string(), k % 2, vec![0.5, 0.3, 0.1], 0.07, b)).collect();
        let pf = credit::Portfolio::new(firms, 2, true).unwrap();
        let model = credit::RiskModel::new(&pf, &path, &p, &m, 0.08, 1).unwrap();
        let th = [0.004, 0.006, 0.002];
        let el = model.expected_loss(t, &ac, &th);
        prop_assert!(el >= 0.0 && el <= pf.total_exposure(t + 1));
        for n in 0..4 {
            let pd = model.pd(n, t, &ac, &th);
            prop_assert!((0.0..=1.0).contains(&pd));
        }
    }
}

#[test]
fn emissions_cost_rate_zero_price_and_unit_price() {
    let set = IntensitySet::new(
        vec![IntensityCurve::constant(0.3); 2],
        vec![vec![IntensityCurve::constant(0.1); 2]; 2],
        vec![IntensityCurve::constant(0.2); 2],
    )
    .unwrap();
    let z = transition::emissions_cost_rate(0.0, &set, 4).unwrap();
    assert_eq!(z, EmissionsCostRate::zero(2));
    let u = transition::emissions_cost_rate(1.0, &set, 4).unwrap();
    assert_eq!(u.tau_d, Vector::from_element(2, 0.3));
    assert_eq!(u.kappa_d, Vector::from_element(2, 0.2));
}
