//! Dormand–Prince 5(4) integrator with PI step-size control, for fixed-size
//! real state vectors.
//!
//! Steps are shortened to land exactly on requested stop times; the step
//! size proposed by the controller is kept across such truncations.

use crate::{Error, Result};

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

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Step sizes below this abort the integration.
pub const MIN_STEP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub dt_max: f64,
    pub dt_init: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

/// What the observer sees after every accepted step.
pub struct Accepted<'a, const N: usize> {
    pub t: f64,
    pub dt: f64,
    pub y: &'a mut [f64; N],
    /// Index into the stop list when this step ended on a stop time.
    pub stop: Option<usize>,
}

#[inline]
fn lincomb<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for &(c, k) in terms {
        let hc = h * c;
        for i in 0..N {
            out[i] += hc * k[i];
        }
    }
    out
}

/// Integrates `dy/dt = f(t, y)` from `t_start` to the last entry of `stops`.
///
/// `stops` must be strictly increasing and greater than `t_start`. The
/// observer runs after each accepted step and may adjust the state in
/// place; returning an error aborts the integration.
pub fn integrate<const N: usize, F, O>(
    mut f: F,
    t_start: f64,
    y0: [f64; N],
    stops: &[f64],
    ctl: &StepControl,
    mut observer: O,
) -> Result<([f64; N], StepStats)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(Accepted<'_, N>) -> Result<()>,
{
    let mut stats = StepStats::default();
    if stops.is_empty() {
        return Ok((y0, stats));
    }
    let expo = 0.2 - BETA * 0.75;

    let mut t = t_start;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.rhs_evals += 1;
    let mut h = ctl.dt_init.min(ctl.dt_max);
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut next_stop = 0;

    while next_stop < stops.len() {
        let target = stops[next_stop];
        let remaining = target - t;
        // snap to the stop when the remainder is within rounding of h
        let lands = h >= remaining * (1.0 - 1e-12);
        let step = if lands { remaining } else { h };
        if step < MIN_STEP && !lands {
            return Err(Error::StepSizeCollapse { t, dt: step });
        }

        let k2 = f(t + C2 * step, &lincomb(&y, step, &[(A21, &k1)]));
        let k3 = f(t + C3 * step, &lincomb(&y, step, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * step,
            &lincomb(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * step,
            &lincomb(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + step,
            &lincomb(&y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = lincomb(&y, step, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t_new = if lands { target } else { t + step };
        let k7 = f(t_new, &y_new);
        stats.rhs_evals += 6;

        let mut sq = 0.0;
        for i in 0..N {
            let e = step * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = ctl.atol + ctl.rtol * y[i].abs().max(y_new[i].abs());
            sq += (e / sc) * (e / sc);
        }
        let err = (sq / N as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Diverged { t, metric: "local error estimate", value: err });
        }

        let fac11 = err.powf(expo);
        if err <= 1.0 {
            let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = step / fac;
            if lands {
                // a truncated step says nothing about the controller's preferred size
                h_new = h_new.max(h);
            }
            if last_rejected {
                h_new = h_new.min(step);
            }
            fac_old = err.max(1e-4);
            last_rejected = false;
            stats.accepted += 1;

            t = t_new;
            y = y_new;
            // FSAL: k7 was evaluated at the accepted point
            k1 = k7;
            let stop = if lands {
                next_stop += 1;
                Some(next_stop - 1)
            } else {
                None
            };
            observer(Accepted { t, dt: step, y: &mut y, stop })?;
            h = h_new.min(ctl.dt_max);
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h = step / (fac11 / SAFETY).min(1.0 / FAC_MIN);
            if h < MIN_STEP {
                return Err(Error::StepSizeCollapse { t, dt: h });
            }
        }
    }
    Ok((y, stats))
}
