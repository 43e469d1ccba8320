//! Dormand–Prince 5(4) with the 4th-order continuous extension of Hairer,
//! Nørsett & Wanner, specialised to flat complex state vectors.

use crate::linalg::C64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

pub(crate) enum Failure {
    StepUnderflow { t: f64, h: f64 },
    TooManySteps { t: f64 },
    NonFinite { t: f64 },
    Callback(crate::error::Error),
}

/// Dense-output coefficients of one accepted step.
struct Dense {
    t0: f64,
    h: f64,
    r1: Vec<C64>,
    r2: Vec<C64>,
    r3: Vec<C64>,
    r4: Vec<C64>,
    r5: Vec<C64>,
}

impl Dense {
    fn eval(&self, t: f64, out: &mut [C64]) {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        for i in 0..out.len() {
            out[i] = self.r1[i] + (self.r2[i] + (self.r3[i] + (self.r4[i] + self.r5[i] * th1) * th) * th1) * th;
        }
    }
}

fn error_norm(y0: &[C64], y1: &[C64], err: &[C64], ctl: &StepControl) -> f64 {
    let mut acc = 0.0;
    for i in 0..y0.len() {
        let sc = ctl.atol + ctl.rtol * y0[i].norm().max(y1[i].norm());
        acc += (err[i].re / sc).powi(2) + (err[i].im / sc).powi(2);
    }
    (acc / (2 * y0.len()) as f64).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to the last entry of `outputs`,
/// calling `sink(k, y(outputs[k]))` for every requested output time in
/// increasing order. `outputs[0]` must equal `t0`.
pub(crate) fn integrate<F, S>(
    mut f: F,
    t0: f64,
    y0: &[C64],
    outputs: &[f64],
    ctl: &StepControl,
    mut sink: S,
) -> Result<IntegratorStats, Failure>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    S: FnMut(usize, &[C64]) -> crate::error::Result<()>,
{
    let n = y0.len();
    let t_end = *outputs.last().expect("at least one output time");
    let mut stats = IntegratorStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= t0 {
        sink(next_out, &y).map_err(Failure::Callback)?;
        next_out += 1;
    }
    if next_out == outputs.len() {
        return Ok(stats);
    }

    let zeros = || vec![C64::new(0.0, 0.0); n];
    let (mut k1, mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (zeros(), zeros(), zeros(), zeros(), zeros(), zeros(), zeros());
    let mut ytmp = zeros();
    let mut ynew = zeros();
    let mut err = zeros();
    let mut yout = zeros();

    f(t, &y, &mut k1);
    stats.evaluations += 1;

    let span = t_end - t0;
    let mut h = initial_step(&mut f, t, &y, &k1, ctl, span, &mut ytmp, &mut k2);
    stats.evaluations += 1;
    let mut fac_old: f64 = 1e-4;
    let beta = 0.04;
    let expo = 0.2 - beta * 0.75;

    loop {
        if stats.accepted + stats.rejected > ctl.max_steps {
            return Err(Failure::TooManySteps { t });
        }
        let mut last = false;
        if t + 1.01 * h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Failure::StepUnderflow { t, h });
        }

        for i in 0..n {
            ytmp[i] = y[i] + k1[i] * (h * A21);
        }
        f(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        f(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        f(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        f(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        f(t + h, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
        }
        f(t + h, &ynew, &mut k7);
        stats.evaluations += 6;

        for i in 0..n {
            err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
        let e = error_norm(&y, &ynew, &err, ctl);
        if !e.is_finite() {
            return Err(Failure::NonFinite { t });
        }

        // PI step-size control
        let fac11 = e.powf(expo);
        let mut fac = fac11 / fac_old.powf(beta);
        fac = (fac / 0.9).clamp(1.0 / 10.0, 1.0 / 0.2);
        let h_new = (h / fac).min(ctl.max_step);

        if e <= 1.0 {
            fac_old = e.max(1e-4);
            stats.accepted += 1;
            let t_new = if last { t_end } else { t + h };
            if next_out < outputs.len() && outputs[next_out] <= t_new {
                let mut dense = Dense { t0: t, h, r1: y.clone(), r2: zeros(), r3: zeros(), r4: zeros(), r5: zeros() };
                for i in 0..n {
                    let dy = ynew[i] - y[i];
                    let bspl = k1[i] * h - dy;
                    dense.r2[i] = dy;
                    dense.r3[i] = bspl;
                    dense.r4[i] = dy - k7[i] * h - bspl;
                    dense.r5[i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
                }
                while next_out < outputs.len() && outputs[next_out] <= t_new {
                    let tout = outputs[next_out];
                    if last && next_out == outputs.len() - 1 {
                        yout.copy_from_slice(&ynew);
                    } else {
                        dense.eval(tout, &mut yout);
                    }
                    sink(next_out, &yout).map_err(Failure::Callback)?;
                    next_out += 1;
                }
            }
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;
            if last || next_out == outputs.len() {
                return Ok(stats);
            }
            h = h_new;
        } else {
            stats.rejected += 1;
            h /= (fac11 / 0.9).min(1.0 / 0.2);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &[C64],
    f0: &[C64],
    ctl: &StepControl,
    span: f64,
    ytmp: &mut [C64],
    f1: &mut [C64],
) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y.len();
    let scale = |i: usize| ctl.atol + ctl.rtol * y[i].norm();
    let rms = |v: &[C64]| {
        let s: f64 = (0..n).map(|i| (v[i].norm() / scale(i)).powi(2)).sum();
        (s / n as f64).sqrt()
    };
    let d0 = rms(y);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(ctl.max_step).min(span);
    for i in 0..n {
        ytmp[i] = y[i] + f0[i] * h0;
    }
    f(t + h0, ytmp, f1);
    let diff: Vec<C64> = (0..n).map(|i| f1[i] - f0[i]).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(ctl.max_step).min(span)
}
