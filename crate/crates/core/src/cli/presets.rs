//! Named scenarios reproducing each figure's caption parameters.

use std::f64::consts::PI;

use super::{JchScenario, ModelConfig, ScenarioConfig};
use crate::dynamics::{InitialStateSpec, IntegratorConfig};
use crate::error::{invalid, Result};
use crate::model::{DriveProfile, DrivenJcParams, GaussianPulse, JchParams, KerrParams};
use crate::ops::PolaritonLabel;

pub const PRESET_NAMES: [&str; 12] = [
    "fig2a_T095",
    "fig2a_T100",
    "fig2a_T105",
    "fig2b",
    "fig3a",
    "fig3b",
    "fig3c",
    "fig3d",
    "fig4a",
    "fig4b",
    "fig4c",
    "fig4d",
];

const XI_I: f64 = 10.0;
const XI_F: f64 = 1e3;
const OPEN_LOSS: f64 = 1e-2;

pub fn reference_tau() -> f64 {
    PI / (4.0 * JchParams::closed_reference().j)
}

fn jch(name: &str, params: JchParams, drive: DriveProfile, init: InitialStateSpec) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        model: ModelConfig::Jch(JchScenario { params, n_max: 2, drive }),
        initial_state: init,
        compare_initial_states: vec![InitialStateSpec::mott(), InitialStateSpec::superfluid()],
        duration: None,
        // the default tolerances let the zero eigenvalues of the near-pure
        // closed state drift to about -1.4e-8
        integrator: IntegratorConfig { rtol: 1e-10, atol: 1e-11, ..IntegratorConfig::default() },
        analysis: Default::default(),
    }
}

fn gaussian_at(t_over_tau: f64) -> DriveProfile {
    DriveProfile::Gaussian(GaussianPulse::quarter_width(XI_I, XI_F, t_over_tau * reference_tau()))
}

fn closed() -> JchParams {
    JchParams::closed_reference()
}

fn open() -> JchParams {
    JchParams::closed_reference().with_uniform_loss(OPEN_LOSS)
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let tau = reference_tau();
    let cfg = match name {
        "fig2a_T095" => jch(name, closed(), gaussian_at(0.95), InitialStateSpec::mott()),
        "fig2a_T100" => jch(name, closed(), gaussian_at(1.0), InitialStateSpec::mott()),
        "fig2a_T105" => jch(name, closed(), gaussian_at(1.05), InitialStateSpec::mott()),
        "fig2b" => {
            let mut c = jch(name, closed(), DriveProfile::Constant { xi: XI_F }, InitialStateSpec::mott());
            c.duration = Some(2.0 * tau);
            c
        }
        "fig3a" => jch(name, closed(), gaussian_at(0.95), InitialStateSpec::mott()),
        "fig3b" => jch(name, open(), gaussian_at(0.95), InitialStateSpec::mott()),
        "fig3c" => jch(name, closed(), gaussian_at(0.95), InitialStateSpec::superfluid()),
        "fig3d" => jch(name, open(), gaussian_at(0.95), InitialStateSpec::superfluid()),
        "fig4a" => {
            let t_peak = 0.95 * tau;
            let params = DrivenJcParams {
                delta_a: 0.0,
                delta_c: 0.0,
                delta_1: 0.0,
                omega: 1e-6,
                g: 1.0,
                gamma_c: 0.1,
                gamma_a: 0.1,
                drive: DriveProfile::GaussianAmplitude { i0: 1.0, t_peak, sigma_w: t_peak / 4.0 },
                n_max: DRIVEN_JC_CUTOFF,
                displaced_frame: false,
            };
            ScenarioConfig {
                name: name.to_string(),
                model: ModelConfig::DrivenJc(params),
                initial_state: InitialStateSpec::polariton(PolaritonLabel::ground()),
                compare_initial_states: vec![
                    InitialStateSpec::polariton(PolaritonLabel::ground()),
                    InitialStateSpec::polariton(PolaritonLabel::plus(1)),
                ],
                duration: None,
                // a full eigendecomposition per sample dominates at this size
                integrator: IntegratorConfig { atol: 1e-12, output_samples: 400, ..IntegratorConfig::default() },
                analysis: Default::default(),
            }
        }
        "fig4b" => {
            let (gamma, f0) = (1.0, 1.0);
            let df = 3.0 * f0;
            let params = KerrParams {
                delta: 2.0 * gamma,
                u: 0.1 * gamma,
                gamma,
                drive: DriveProfile::TriangularRamp { f0, df, t_s: 10.0 * df / (gamma * gamma) },
                n_max: 60,
            };
            ScenarioConfig {
                name: name.to_string(),
                model: ModelConfig::Kerr(params),
                initial_state: InitialStateSpec::fock(&[0]),
                compare_initial_states: vec![InitialStateSpec::fock(&[0]), InitialStateSpec::fock(&[2])],
                duration: None,
                integrator: IntegratorConfig::default(),
                analysis: Default::default(),
            }
        }
        "fig4c" => {
            let pulse = GaussianPulse::quarter_width(XI_I, XI_F, 0.95 * tau);
            jch(name, closed(), DriveProfile::pulse_train(pulse, 5), InitialStateSpec::mott())
        }
        "fig4d" => {
            let mut c = jch(name, closed(), gaussian_at(0.95), InitialStateSpec::mott());
            c.integrator.record.circuit = true;
            c
        }
        other => return Err(invalid(format!("unknown preset '{other}' (see `presets list`)"))),
    };
    Ok(cfg)
}

/// Photon cutoff of the driven Jaynes–Cummings preset. The peak mean photon
/// number is about 155; the population at the cutoff stays near 5e-7.
pub const DRIVEN_JC_CUTOFF: usize = 250;
