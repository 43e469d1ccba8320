use ndarray::Array2;
use proptest::prelude::*;

use pqm::analysis::{loop_area_analytic, loop_area_numeric, uniform_derivative, AreaPrediction, Circulation};
use pqm::cli::{preset, ScenarioConfig, PRESET_NAMES};
use pqm::dynamics::{evolve, lindblad_rhs, DensityMatrix, InitialStateSpec, IntegratorConfig};
use pqm::linalg::{self, C64};
use pqm::model::{build_jch, DriveProfile, GaussianPulse, JchParams};
use pqm::ops::{self, HilbertLayout, PolaritonLabel, SiteSpec};

fn small_jch(xi: f64, j: f64, loss: f64) -> pqm::model::ModelInstance {
    let layout = HilbertLayout::two_cavity(2).unwrap();
    let mut p = JchParams::closed_reference().with_uniform_loss(loss);
    p.j = j;
    build_jch(&p, &layout, DriveProfile::Constant { xi }).unwrap()
}

fn random_state(dim: usize, seed: &[f64]) -> DensityMatrix {
    let mut a = Array2::<C64>::zeros((dim, dim));
    for (k, z) in a.iter_mut().enumerate() {
        *z = C64::new(seed[k % seed.len()] * ((k % 7) as f64 - 3.0), seed[(k + 1) % seed.len()] - 0.5);
    }
    let mut rho = linalg::dagger(&a).dot(&a);
    rho[[0, 0]] += C64::new(1e-3, 0.0);
    let tr = linalg::trace(&rho);
    rho.mapv_inplace(|z| z / tr);
    DensityMatrix::new(rho).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn area_flips_under_reversal(ys in prop::collection::vec(-5.0..5.0f64, 4..40)) {
        let n = ys.len();
        let xs: Vec<f64> = (0..n).map(|k| (k as f64 * 0.7).sin() * 3.0).collect();
        let a = loop_area_numeric(&xs, &ys).unwrap();
        let (mut xr, mut yr) = (xs.clone(), ys.clone());
        xr.reverse();
        yr.reverse();
        let b = loop_area_numeric(&xr, &yr).unwrap();
        prop_assert!((a + b).abs() < 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn area_ignores_translation(ys in prop::collection::vec(-5.0..5.0f64, 4..40), dx in -50.0..50.0f64, dy in -50.0..50.0f64) {
        let n = ys.len();
        let xs: Vec<f64> = (0..n).map(|k| (k as f64 * 1.3).cos()).collect();
        let a = loop_area_numeric(&xs, &ys).unwrap();
        let xt: Vec<f64> = xs.iter().map(|x| x + dx).collect();
        let yt: Vec<f64> = ys.iter().map(|y| y + dy).collect();
        let b = loop_area_numeric(&xt, &yt).unwrap();
        prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs() + dx.abs() * dy.abs()));
    }

    #[test]
    fn circulation_follows_area_sign(area in -10.0..10.0f64, eps in 0.0..2.0f64) {
        let c = Circulation::classify(area, eps);
        match c {
            Circulation::Anticlockwise => prop_assert!(area > eps),
            Circulation::Clockwise => prop_assert!(area < -eps),
            Circulation::Degenerate => prop_assert!(area.abs() <= eps),
        }
    }

    #[test]
    fn analytic_area_is_linear_in_eta(t_over_tau in 0.5..1.5f64, eta in -1.0..1.0f64) {
        let tau = 78.54;
        let t_peak = t_over_tau * tau;
        let base = AreaPrediction { xi_i: 10.0, xi_f: 1e3, sigma_w: t_peak / 4.0, t_peak, tau, eta: 1.0 };
        let unit = loop_area_analytic(&base).unwrap();
        let scaled = loop_area_analytic(&AreaPrediction { eta, ..base }).unwrap();
        prop_assert!((scaled - eta * unit).abs() < 1e-9 * (1.0 + unit.abs()));
    }

    #[test]
    fn derivative_exact_on_quadratics(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, h in 0.01..1.0f64) {
        let y: Vec<f64> = (0..30).map(|k| { let t = k as f64 * h; a * t * t + b * t + c }).collect();
        let d = uniform_derivative(&y, h);
        for (k, v) in d.iter().enumerate() {
            let t = k as f64 * h;
            prop_assert!((v - (2.0 * a * t + b)).abs() < 1e-8 * (1.0 + (a * t).abs() + b.abs()) / h.min(1.0));
        }
    }

    #[test]
    fn jc_doublet_matches_dense_diagonalisation(n in 1usize..6, xi in -50.0..50.0f64, g in 0.1..3.0f64, wc in 0.0..20.0f64) {
        let site = SiteSpec { n_max: 6, has_atom: true };
        let h = ops::single_site_jc(site, xi, g, wc).unwrap();
        let e = ops::jc_eigen(n, xi, g, wc).unwrap();
        for label in [PolaritonLabel::plus(n), PolaritonLabel::minus(n)] {
            let v = ops::polariton_state(label, xi, g, site).unwrap();
            let hv = h.apply(&v);
            let energy = if label == PolaritonLabel::plus(n) { e.e_plus } else { e.e_minus };
            let resid = hv.iter().zip(v.iter()).map(|(a, b)| (a - b * energy).norm()).fold(0.0, f64::max);
            prop_assert!(resid < 1e-10 * (1.0 + energy.abs()));
        }
        let mut spectrum = linalg::hermitian_eigenvalues(&h.entries);
        for target in [e.e_plus, e.e_minus] {
            let (k, _) = spectrum.iter().enumerate().min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs())).unwrap();
            prop_assert!((spectrum[k] - target).abs() < 1e-10 * (1.0 + target.abs()));
            spectrum.remove(k);
        }
    }

    #[test]
    fn generator_is_traceless_and_hermiticity_preserving(
        seed in prop::collection::vec(0.0..1.0f64, 5..12),
        xi in 0.0..100.0f64,
        j in 0.0..1.0f64,
        loss in 0.0..0.5f64,
    ) {
        let model = small_jch(xi, j, loss);
        let rho = random_state(model.dim(), &seed);
        let d = lindblad_rhs(&rho, &model, 0.0).unwrap();
        prop_assert!(linalg::trace(&d).norm() < 1e-12 * (1.0 + xi));
        prop_assert!(linalg::hermiticity_error(&d) < 1e-12 * (1.0 + xi));
    }

    #[test]
    fn hermitian_expectations_are_real(seed in prop::collection::vec(0.0..1.0f64, 5..12)) {
        let model = small_jch(10.0, 0.1, 0.0);
        let rho = random_state(model.dim(), &seed);
        let n = model.site_number(0).unwrap();
        prop_assert!(rho.expectation(&n).im.abs() < 1e-13);
        prop_assert!(rho.check_invariants().is_ok());
    }

    #[test]
    fn scenario_round_trip_is_idempotent(t_peak in 20.0..200.0f64, j in 1e-3..1.0f64, loss in 0.0..0.1f64, samples in 10usize..3000) {
        let mut cfg = preset("fig3b").unwrap();
        if let pqm::cli::ModelConfig::Jch(s) = &mut cfg.model {
            s.params.j = j;
            s.params = s.params.clone().with_uniform_loss(loss);
            s.drive = DriveProfile::Gaussian(GaussianPulse::quarter_width(10.0, 1e3, t_peak));
        }
        cfg.integrator.output_samples = samples;
        let text = cfg.to_toml().unwrap();
        let back = ScenarioConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml().unwrap(), text);
    }
}

#[test]
fn every_preset_round_trips() {
    for name in PRESET_NAMES {
        let cfg = preset(name).unwrap();
        cfg.validate().unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), cfg, "{name}");
    }
}

fn short_scenario() -> ScenarioConfig {
    let mut cfg = preset("fig3d").unwrap();
    if let pqm::cli::ModelConfig::Jch(s) = &mut cfg.model {
        s.params.j = 0.2;
        s.drive = DriveProfile::Gaussian(GaussianPulse::quarter_width(1.0, 20.0, 8.0));
    }
    cfg.integrator.output_samples = 200;
    cfg
}

#[test]
fn identical_runs_give_identical_csv() {
    let cfg = short_scenario();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pqm::cli::run(&cfg, a.path()).unwrap();
    pqm::cli::run(&cfg, b.path()).unwrap();
    for file in ["fig3d_trajectory.csv", "fig3d_loop.csv", "fig3d_summary.json"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs between runs");
    }
}

#[test]
fn halving_tolerances_moves_variance_below_1e6() {
    let cfg = short_scenario();
    let model = cfg.validate().unwrap();
    let coarse = evolve(&cfg.initial_state, &model, cfg.duration().unwrap(), &cfg.integrator).unwrap();
    let fine_cfg = IntegratorConfig { rtol: cfg.integrator.rtol / 2.0, atol: cfg.integrator.atol / 2.0, ..cfg.integrator.clone() };
    let fine = evolve(&cfg.initial_state, &model, cfg.duration().unwrap(), &fine_cfg).unwrap();
    for site in 0..2 {
        for (x, y) in coarse.variance(site).iter().zip(fine.variance(site)) {
            assert!((x - y).abs() < 1e-6);
        }
    }
}

#[test]
fn superfluid_state_has_unit_variance_and_mott_none() {
    let model = small_jch(10.0, 0.01, 0.0);
    let eta_mott = pqm::analysis::eta_from_state(&InitialStateSpec::mott(), &model, 0).unwrap();
    let eta_sf = pqm::analysis::eta_from_state(&InitialStateSpec::superfluid(), &model, 0).unwrap();
    assert!((eta_mott - 1.0).abs() < 1e-14);
    assert!((eta_sf + 1.0).abs() < 1e-14);
}
