//! End-to-end acceptance checks on the figure presets. Runs without the test
//! harness so each criterion prints its own line.

use std::process::ExitCode;
use std::time::Instant;

use pqm::analysis::{CircuitSeries, RESISTANCE_CUTOFF};
use pqm::cli::{apply_parameter, compare_models, preset, simulate, ModelPlasticity, Plasticity, RunOutcome, ScenarioConfig};
use pqm::dynamics::{evolve_from, oracle_evolve, IntegratorConfig, Recording};
use pqm::linalg;
use pqm::model::{build_jch, DriveProfile, GaussianPulse, JchParams, ModelKind};
use pqm::ops::{self, HilbertLayout, PolaritonLabel, SiteSpec};

const TAU: f64 = std::f64::consts::PI / (4.0 * 1e-2);

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, detail: String) {
        if !ok {
            self.failures += 1;
        }
        println!("{} criterion {id}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn run(cfg: &ScenarioConfig) -> RunOutcome {
    let start = Instant::now();
    let out = simulate(cfg).unwrap_or_else(|e| panic!("{}: {e}", cfg.name));
    eprintln!("  ran {} in {:.1}s", cfg.name, start.elapsed().as_secs_f64());
    out
}

fn at(base: &str, t_over_tau: f64, init: &str) -> ScenarioConfig {
    let cfg = apply_parameter(&preset(base).unwrap(), "t_over_tau", &t_over_tau.to_string()).unwrap();
    apply_parameter(&cfg, "initial_state", init).unwrap()
}

fn area(o: &RunOutcome) -> f64 {
    o.summary.signed_area_numeric
}

/// Largest `|R₁ + R₂| / max(|R₁|, |R₂|)` where both resistances exist.
/// Samples where `|R|` is below `RESISTANCE_CUTOFF` of its peak sit at zeros
/// of `R` and carry only derivative noise; they are counted, not compared.
fn antisymmetry(a: &CircuitSeries, b: &CircuitSeries) -> (f64, usize, usize) {
    let pairs: Vec<(f64, f64)> = a.r.iter().zip(&b.r).filter_map(|(x, y)| Some(((*x)?, (*y)?))).collect();
    let peak = pairs.iter().fold(0.0_f64, |m, (x, y)| m.max(x.abs()).max(y.abs()));
    let floor = RESISTANCE_CUTOFF * peak;
    let mut worst = 0.0_f64;
    let (mut compared, mut skipped) = (0, 0);
    for (r1, r2) in pairs {
        let scale = r1.abs().max(r2.abs());
        if scale > floor {
            worst = worst.max((r1 + r2).abs() / scale);
            compared += 1;
        } else {
            skipped += 1;
        }
    }
    (worst, compared, skipped)
}

fn invariant_violations(outcomes: &[&RunOutcome]) -> Vec<String> {
    let mut bad = Vec::new();
    for o in outcomes {
        let t = &o.trajectory;
        if let Err(e) = t.check_invariants() {
            bad.push(format!("{}: {e}", o.config.name));
        }
        let closed = match &o.config.model {
            pqm::cli::ModelConfig::Jch(s) => s.params.is_closed(),
            _ => false,
        };
        if closed {
            let drift = (0..t.len())
                .map(|k| (t.sites[0].mean[k] + t.sites[1].mean[k] - (t.sites[0].mean[0] + t.sites[1].mean[0])).abs())
                .fold(0.0, f64::max);
            if drift > 1e-7 {
                bad.push(format!("{}: excitation drift {drift:.2e}", o.config.name));
            }
        }
    }
    bad
}

fn oracle_distance() -> f64 {
    let layout = HilbertLayout::two_cavity(2).unwrap();
    let mut p = JchParams::closed_reference().with_uniform_loss(0.05);
    p.j = 0.3;
    let drive = DriveProfile::Gaussian(GaussianPulse { xi_i: 0.5, xi_f: 2.0, t_peak: 6.0, sigma_w: 1.5 });
    let model = build_jch(&p, &layout, drive).unwrap();
    let rho0 = pqm::dynamics::InitialStateSpec::superfluid().build(&model).unwrap();
    let steps = 100;
    let cfg = IntegratorConfig {
        rtol: 1e-10,
        atol: 1e-12,
        output_samples: steps + 1,
        record: Recording { states: true, ..Recording::default() },
        ..IntegratorConfig::default()
    };
    let traj = evolve_from(rho0.clone(), &model, 10.0, &cfg).unwrap();
    let reference = oracle_evolve(&rho0, &model, 10.0, steps).unwrap();
    let states = traj.states.unwrap();
    reference
        .iter()
        .enumerate()
        .map(|(k, r)| linalg::trace_distance(states[k + 1].entries(), r.entries()))
        .fold(0.0, f64::max)
}

fn jc_eigen_error() -> f64 {
    let site = SiteSpec { n_max: 5, has_atom: true };
    let mut worst = 0.0_f64;
    for &xi in &[-40.0, -1.0, 0.0, 0.3, 10.0, 1e3] {
        for &g in &[0.2, 1.0, 2.5] {
            let h = ops::single_site_jc(site, xi, g, 3.0).unwrap();
            let spectrum = linalg::hermitian_eigenvalues(&h.entries);
            for n in 1..=5 {
                let e = ops::jc_eigen(n, xi, g, 3.0).unwrap();
                for (label, energy) in [(PolaritonLabel::plus(n), e.e_plus), (PolaritonLabel::minus(n), e.e_minus)] {
                    let nearest = spectrum.iter().map(|s| (s - energy).abs()).fold(f64::INFINITY, f64::min);
                    let v = ops::polariton_state(label, xi, g, site).unwrap();
                    let resid = h.apply(&v).iter().zip(v.iter()).map(|(a, b)| (a - b * energy).norm()).fold(0.0, f64::max);
                    worst = worst.max(nearest.max(resid) / (1.0 + energy.abs()));
                }
            }
        }
    }
    worst
}

fn classification(report: &[ModelPlasticity], kind: ModelKind) -> Option<&ModelPlasticity> {
    report.iter().find(|m| m.model == kind)
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut rep = Report { failures: 0 };

    // 1. critical time
    let constant = run(&preset("fig2b").unwrap());
    let tau_emp = constant.summary.tau_empirical.unwrap_or(f64::NAN);
    rep.line("1 (critical time)", (tau_emp - TAU).abs() < 3.0, format!("empirical tau = {tau_emp:.4}, formula {TAU:.4}, tolerance 3"));

    let mott: Vec<(f64, RunOutcome)> =
        [0.90, 0.95, 1.0, 1.05, 1.10].iter().map(|&f| (f, run(&at("fig2a_T095", f, "mott")))).collect();
    let mott_at = |f: f64| &mott.iter().find(|(g, _)| (*g - f).abs() < 1e-12).unwrap().1;

    // 2. loop vanishing
    let (a_tau, a_095) = (area(mott_at(1.0)), area(mott_at(0.95)));
    let ratio = a_tau.abs() / a_095.abs();
    rep.line("2 (loop vanishing)", ratio < 0.05, format!("|A(tau)| / |A(0.95 tau)| = {a_tau:.3} / {a_095:.3} = {ratio:.4} (< 0.05)"));

    // 3. sign law
    let sf_095 = run(&at("fig2a_T095", 0.95, "superfluid"));
    let sf_105 = run(&at("fig2a_T095", 1.05, "superfluid"));
    let a_105 = area(mott_at(1.05));
    let signs_ok = a_095 > 0.0 && a_105 < 0.0 && area(&sf_095) < 0.0 && area(&sf_105) > 0.0;
    rep.line(
        "3 (sign law)",
        signs_ok,
        format!(
            "Mott A(0.95)={a_095:.2} A(1.05)={a_105:.2}; superfluid A(0.95)={:.2} A(1.05)={:.2}",
            area(&sf_095),
            area(&sf_105)
        ),
    );

    // 4. area law
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for f in [0.90, 0.95, 1.05, 1.10] {
        let o = mott_at(f);
        let predicted = o.summary.signed_area_analytic.unwrap();
        let rel = (area(o) - predicted).abs() / predicted.abs();
        worst = worst.max(rel);
        parts.push(format!("{f}: {:.1} vs {predicted:.1}", area(o)));
    }
    rep.line("4 (area law)", worst < 0.25, format!("{} ; worst relative error {worst:.3} (< 0.25)", parts.join(", ")));

    // 5. open system
    let open_mott = run(&preset("fig3b").unwrap());
    let open_sf = run(&preset("fig3d").unwrap());
    let l = &open_mott.hysteresis;
    let loop_kept = l.signed_area.abs() > l.epsilon && l.closure_defect() <= l.epsilon;
    let drop = open_sf.hysteresis.endpoint_gap();
    rep.line(
        "5 (open system)",
        loop_kept && drop < -0.05,
        format!(
            "Mott area {:.2} (eps {:.3}), closure defect {:.2e}; superfluid final - initial = {drop:.4} (< -0.05)",
            l.signed_area,
            l.epsilon,
            l.closure_defect()
        ),
    );

    // 6. plasticity contrast
    let models = [preset("fig3a").unwrap(), preset("fig4a").unwrap(), preset("fig4b").unwrap()];
    let t0 = Instant::now();
    let plastic = compare_models(&models);
    eprintln!("  compared models in {:.1}s", t0.elapsed().as_secs_f64());
    match plastic {
        Ok(report) => {
            let get = |k| classification(&report, k).map(|m| (m.classification, m.areas.len(), m.max_relative_difference));
            let (jch, djc, kerr) = (get(ModelKind::Jch), get(ModelKind::DrivenJc), get(ModelKind::Kerr));
            let ok = matches!(jch, Some((Plasticity::Plastic, n, _)) if n >= 2)
                && matches!(djc, Some((Plasticity::NonPlastic, n, _)) if n >= 2)
                && matches!(kerr, Some((Plasticity::NonPlastic, n, _)) if n >= 2);
            let show = |m: Option<(Plasticity, usize, f64)>| {
                m.map(|(c, n, d)| format!("{c:?} over {n} states (spread {d:.3e})")).unwrap_or_else(|| "missing".into())
            };
            rep.line("6 (plasticity)", ok, format!("JCH {}; driven JC {}; Kerr {}", show(jch), show(djc), show(kerr)));
        }
        Err(e) => rep.line("6 (plasticity)", false, format!("comparison failed: {e}")),
    }

    // 7. circuit analogy
    let circ_mott = run(&preset("fig4d").unwrap());
    let circ_sf = run(&apply_parameter(&preset("fig4d").unwrap(), "initial_state", "superfluid").unwrap());
    let (c1, c2) = (circ_mott.circuit.as_ref().unwrap(), circ_sf.circuit.as_ref().unwrap());
    let v0 = c1.v_r[0].abs().max(c2.v_r[0].abs());
    let pinch = c1.pinch_distance().max(c2.pinch_distance());
    let (anti, defined, skipped) = antisymmetry(c1, c2);
    rep.line(
        "7 (circuit analogy)",
        v0 < 1e-6 && pinch < 1e-2 && anti < 0.01 && defined > 0,
        format!("|V_R(0)| = {v0:.2e}, pinch distance {pinch:.2e}, max |R1 + R2| / |R| = {anti:.2e} over {defined} samples ({skipped} at zeros of R)"),
    );

    // 8. spiral
    let spiral_run = run(&preset("fig4c").unwrap());
    let spiral = spiral_run.summary.spiral.as_ref().unwrap();
    let smallest = spiral.endpoint_steps.iter().map(|d| d.abs()).fold(f64::INFINITY, f64::min);
    rep.line(
        "8 (spiral)",
        spiral.is_spiral() && spiral.segments.len() == 5,
        format!("{} pulses, smallest endpoint step {smallest:.4} vs band {:.2e}", spiral.segments.len(), spiral.epsilon_response),
    );

    // 9. property suite
    let mut all: Vec<&RunOutcome> = mott.iter().map(|(_, o)| o).collect();
    all.extend([&constant, &sf_095, &sf_105, &open_mott, &open_sf, &circ_mott, &circ_sf, &spiral_run]);
    let violations = invariant_violations(&all);
    let oracle = oracle_distance();
    let ehrenfest = [c1, c2]
        .iter()
        .map(|c| c.ehrenfest_residual() / c.max_abs_v())
        .fold(0.0, f64::max);
    let eig = jc_eigen_error();
    let ok = violations.is_empty() && oracle < 1e-6 && ehrenfest < 1e-3 && eig < 1e-10;
    rep.line(
        "9 (properties)",
        ok,
        format!(
            "{} runs checked, violations: [{}]; oracle trace distance {oracle:.2e}; Ehrenfest residual / max|dy/dt| {ehrenfest:.2e}; jc_eigen error {eig:.2e}",
            all.len(),
            violations.join("; ")
        ),
    );

    println!("acceptance: {} of 9 criteria passed in {:.0}s", 9 - rep.failures, start.elapsed().as_secs_f64());
    if rep.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
