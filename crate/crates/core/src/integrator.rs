//! Adaptive Dormand-Prince 5(4) time stepping with snapshot-aligned steps.

use std::ops::ControlFlow;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Anything the integrator can advance: a flat vector of complex coefficients.
pub trait OdeState: Clone {
    fn values(&self) -> &[Complex64];
    fn values_mut(&mut self) -> &mut [Complex64];
}

impl OdeState for SpectralField {
    fn values(&self) -> &[Complex64] {
        self.coeffs()
    }

    fn values_mut(&mut self) -> &mut [Complex64] {
        self.coeffs_mut()
    }
}

impl OdeState for Vec<Complex64> {
    fn values(&self) -> &[Complex64] {
        self
    }

    fn values_mut(&mut self) -> &mut [Complex64] {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub initial_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub t_end: f64,
    pub snapshot_interval: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            initial_step: 1e-3,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.1,
            t_end: 1.0,
            snapshot_interval: 0.01,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("initial_step", self.initial_step),
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("t_end", self.t_end),
            ("snapshot_interval", self.snapshot_interval),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidSettings(format!("{name} must be positive, got {v}")));
            }
        }
        if self.initial_step > self.max_step {
            return Err(Error::InvalidSettings(format!(
                "initial_step {} exceeds max_step {}",
                self.initial_step, self.max_step
            )));
        }
        Ok(())
    }

    /// Snapshot times `0, Δ, 2Δ, ...` up to `t_end`, computed as `i·Δ` to avoid drift.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let ratio = self.t_end / self.snapshot_interval;
        let mut count = ratio.floor() as usize;
        if (ratio - ratio.round()).abs() < 1e-9 {
            count = ratio.round() as usize;
        }
        (0..=count)
            .map(|i| {
                if i == count && (ratio - ratio.round()).abs() < 1e-9 {
                    self.t_end
                } else {
                    i as f64 * self.snapshot_interval
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub min_step: f64,
    pub max_step: f64,
}

/// Receives snapshots in time order. Returning `Break` stops the run early.
pub trait SnapshotSink<S> {
    fn snapshot(&mut self, t: f64, state: &S) -> ControlFlow<()>;

    /// Called after every accepted step.
    fn step(&mut self, _t: f64, _state: &S) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }
}

impl<S, F: FnMut(f64, &S) -> ControlFlow<()>> SnapshotSink<S> for F {
    fn snapshot(&mut self, t: f64, state: &S) -> ControlFlow<()> {
        self(t, state)
    }
}

/// Sink that ignores everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl<S> SnapshotSink<S> for NullSink {
    fn snapshot(&mut self, _t: f64, _state: &S) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }
}

#[derive(Debug, Clone)]
pub struct Integration<S> {
    pub state: S,
    pub t: f64,
    pub stats: StepStats,
    /// True when a sink stopped the run before `t_end`.
    pub stopped_early: bool,
}

// Dormand-Prince 5(4) tableau.
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

fn combine<S: OdeState>(out: &mut S, base: &S, h: f64, terms: &[(f64, &S)]) {
    let dst = out.values_mut();
    dst.copy_from_slice(base.values());
    for &(a, k) in terms {
        if a == 0.0 {
            continue;
        }
        let ha = h * a;
        dst.iter_mut()
            .zip(k.values())
            .for_each(|(d, s)| *d += s * ha);
    }
}

fn all_finite(values: &[Complex64]) -> bool {
    values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// Integrate `dy/dt = rhs(t, y)` from `t = 0` to `settings.t_end`.
///
/// Steps are shortened to land exactly on every multiple of the snapshot
/// interval; the sink sees the state at each of those times (including 0).
/// The error test is a mixed max norm,
/// `max_i |err_i| / (abs_tol + rel_tol·max(|y_i|, |y_new_i|)) ≤ 1`.
pub fn integrate<S, F, K>(state0: S, mut rhs: F, settings: &IntegratorSettings, sink: &mut K) -> Result<Integration<S>>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
    K: SnapshotSink<S> + ?Sized,
{
    settings.validate()?;
    if !all_finite(state0.values()) {
        return Err(Error::NonFinite { t: 0.0 });
    }
    let times = settings.snapshot_times();
    let t_end = settings.t_end;
    let mut stats = StepStats {
        min_step: f64::INFINITY,
        ..Default::default()
    };

    let mut y = state0;
    let mut t = 0.0;
    let mut next_snap = 0;
    if sink.snapshot(t, &y).is_break() {
        return Ok(Integration { state: y, t, stats, stopped_early: true });
    }
    next_snap += 1;

    let mut k1 = rhs(t, &y);
    stats.rhs_evals += 1;
    let mut h = settings.initial_step.min(settings.max_step);
    let mut tmp = y.clone();
    let mut y_new = y.clone();

    while t < t_end {
        let target = times.get(next_snap).copied().unwrap_or(t_end).min(t_end);
        let remaining = target - t;
        let mut h_try = h.min(settings.max_step);
        let lands = h_try >= remaining * (1.0 - 1e-12);
        if lands {
            h_try = remaining;
        }
        if h_try <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, step: h_try });
        }

        combine(&mut tmp, &y, h_try, &[(A21, &k1)]);
        let k2 = rhs(t + C2 * h_try, &tmp);
        combine(&mut tmp, &y, h_try, &[(A31, &k1), (A32, &k2)]);
        let k3 = rhs(t + C3 * h_try, &tmp);
        combine(&mut tmp, &y, h_try, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = rhs(t + C4 * h_try, &tmp);
        combine(&mut tmp, &y, h_try, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = rhs(t + C5 * h_try, &tmp);
        combine(&mut tmp, &y, h_try, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let k6 = rhs(t + h_try, &tmp);
        combine(&mut y_new, &y, h_try, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let t_new = if lands { target } else { t + h_try };
        let k7 = rhs(t_new, &y_new);
        stats.rhs_evals += 6;

        let mut err: f64 = 0.0;
        let mut finite = true;
        {
            let yv = y.values();
            let yn = y_new.values();
            let (e1, e3, e4, e5, e6, e7) = (k1.values(), k3.values(), k4.values(), k5.values(), k6.values(), k7.values());
            for i in 0..yv.len() {
                let e = (e1[i] * E1 + e3[i] * E3 + e4[i] * E4 + e5[i] * E5 + e6[i] * E6 + e7[i] * E7) * h_try;
                let scale = settings.abs_tol + settings.rel_tol * yv[i].norm().max(yn[i].norm());
                let r = e.norm() / scale;
                if !r.is_finite() {
                    finite = false;
                }
                err = err.max(r);
            }
        }
        if !finite {
            if all_finite(y_new.values()) && all_finite(k7.values()) {
                // error estimate overflowed on a finite state; treat as a rejection
                err = f64::INFINITY;
            } else {
                return Err(Error::NonFinite { t: t + h_try });
            }
        }

        if err <= 1.0 {
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            k1 = k7;
            stats.accepted += 1;
            stats.min_step = stats.min_step.min(h_try);
            stats.max_step = stats.max_step.max(h_try);
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            // a step shortened to hit a snapshot does not shrink the proposal
            let base = if lands { h.max(h_try) } else { h_try };
            h = (base * factor).min(settings.max_step);
            if sink.step(t, &y).is_break() {
                return Ok(Integration { state: y, t, stats, stopped_early: true });
            }
            if lands && next_snap < times.len() {
                next_snap += 1;
                if sink.snapshot(t, &y).is_break() {
                    return Ok(Integration { state: y, t, stats, stopped_early: true });
                }
            }
        } else {
            stats.rejected += 1;
            let factor = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
            } else {
                MIN_FACTOR
            };
            h = h_try * factor;
        }
    }
    if stats.accepted == 0 {
        stats.min_step = 0.0;
    }
    Ok(Integration { state: y, t, stats, stopped_early: false })
}
