//! Blow-up indicators and energy decay analysis.
//!
//! Enstrophy uses the mode-sum convention `Σ_k |k × u_k|²`; the physical-space
//! integral is larger by a constant `(2π)³`.

use crate::error::{Error, Result};
use crate::spectral::{curl, fft_friendly_size, SpectralEngine, SpectralField, WaveGrid};

/// `Σ_k |u_k|²` over the field's band.
pub fn resolved_energy(field: &SpectralField) -> f64 {
    field.energy()
}

/// `Σ_k |i k × u_k|²`.
pub fn enstrophy(field: &SpectralField) -> f64 {
    field
        .grid()
        .wavevectors()
        .map(|(i, k)| {
            let u = field.at_index(i);
            let kf = k.map(|c| c as f64);
            let cross = [
                u[2] * kf[1] - u[1] * kf[2],
                u[0] * kf[2] - u[2] * kf[0],
                u[1] * kf[0] - u[0] * kf[1],
            ];
            cross.iter().map(|c| c.norm_sqr()).sum::<f64>()
        })
        .sum()
}

/// Evaluates `max_x |∇ × u(x)|` on a fixed physical grid, reusing FFT plans.
#[derive(Debug)]
pub struct VorticityMeter {
    engine: SpectralEngine,
}

impl VorticityMeter {
    /// Grid of at least `padded_points` per side, rounded up to an FFT-friendly
    /// multiple of 4 so that quarter-period points are sampled.
    pub fn new(grid: WaveGrid) -> Result<Self> {
        Self::with_points(grid, grid.padded_points())
    }

    pub fn with_points(grid: WaveGrid, min_points: usize) -> Result<Self> {
        let mut l = fft_friendly_size(min_points.max(grid.padded_points()));
        while !l.is_multiple_of(4) {
            l = fft_friendly_size(l + 1);
        }
        let grid = grid.with_padded_points(l)?;
        Ok(Self {
            engine: SpectralEngine::new(grid),
        })
    }

    pub fn points_per_side(&self) -> usize {
        self.engine.grid().padded_points()
    }

    pub fn measure(&mut self, field: &SpectralField) -> Result<f64> {
        let grid = *self.engine.grid();
        if field.grid().half_width() != grid.half_width() {
            return Err(Error::GridMismatch {
                left: field.grid().half_width(),
                right: grid.half_width(),
            });
        }
        let omega = self.engine.to_physical(&curl(field), grid.half_width());
        let max = omega.max_norm();
        self.engine.recycle(omega);
        Ok(max)
    }
}

/// `max_x |∇ × u(x)|` over a physical grid of at least `padded_points³` points.
pub fn max_vorticity(field: &SpectralField) -> f64 {
    VorticityMeter::new(*field.grid())
        .and_then(|mut m| m.measure(field))
        .expect("meter built from the field's own grid")
}

/// Time series of blow-up indicators for one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticSeries {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub enstrophy: Vec<f64>,
    pub max_vorticity: Vec<f64>,
    /// Free-form description of the run that produced the series.
    pub provenance: String,
}

impl DiagnosticSeries {
    pub fn new(provenance: impl Into<String>) -> Self {
        Self {
            provenance: provenance.into(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, t: f64, energy: f64, enstrophy: f64, max_vorticity: f64) {
        self.times.push(t);
        self.energy.push(energy);
        self.enstrophy.push(enstrophy);
        self.max_vorticity.push(max_vorticity);
    }

    /// Append a sample computed from `field`.
    pub fn record(&mut self, t: f64, field: &SpectralField, meter: &mut VorticityMeter) -> Result<()> {
        let w = meter.measure(field)?;
        self.push(t, resolved_energy(field), enstrophy(field), w);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.energy.len() != n || self.enstrophy.len() != n || self.max_vorticity.len() != n {
            return Err(Error::InsufficientData("series columns differ in length".into()));
        }
        let negative = self
            .energy
            .iter()
            .chain(&self.enstrophy)
            .chain(&self.max_vorticity)
            .any(|v| v.is_nan() || *v < 0.0);
        if negative {
            return Err(Error::InsufficientData("series holds a negative or non-finite value".into()));
        }
        Ok(())
    }

    /// First time at which `E < fraction · E(0)`.
    pub fn drain_onset(&self, fraction: f64) -> Option<f64> {
        let e0 = *self.energy.first()?;
        self.times
            .iter()
            .zip(&self.energy)
            .find(|(_, e)| **e < fraction * e0)
            .map(|(t, _)| *t)
    }
}

/// Log-log decay rates over two drained-fraction windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySlopes {
    /// Fit where a fraction in `[0.5, 0.9)` of the initial energy has left.
    pub initial_rate: Option<f64>,
    /// Fit where at least 0.995 of the initial energy has left.
    pub second_rate: Option<f64>,
}

/// Slope of `log E` against `log t` over samples with drained fraction in `[lo, hi)`.
pub fn windowed_slope(series: &DiagnosticSeries, lo: f64, hi: f64) -> Option<f64> {
    let e0 = *series.energy.first()?;
    if e0.is_nan() || e0 <= 0.0 {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .times
        .iter()
        .zip(&series.energy)
        .filter(|(t, e)| {
            let drained = 1.0 - **e / e0;
            **t > 0.0 && **e > 0.0 && lo <= drained && drained < hi
        })
        .map(|(t, e)| (t.ln(), e.ln()))
        .unzip();
    if xs.len() < 2 || xs.iter().all(|x| *x == xs[0]) {
        return None;
    }
    Some(crate::renormalization::linear_fit(&xs, &ys).1)
}

pub fn decay_slopes(series: &DiagnosticSeries) -> DecaySlopes {
    DecaySlopes {
        initial_rate: windowed_slope(series, 0.5, 0.9),
        second_rate: windowed_slope(series, 0.995, f64::INFINITY),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maxima {
    pub max_enstrophy: f64,
    pub enstrophy_time: f64,
    pub max_vorticity: f64,
    pub vorticity_time: f64,
}

fn argmax(times: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (t, v) in times.iter().zip(values) {
        if best.is_none_or(|(_, b)| *v > b) {
            best = Some((*t, *v));
        }
    }
    best
}

/// Peak enstrophy and vorticity with the first times they are attained.
pub fn maxima(series: &DiagnosticSeries) -> Option<Maxima> {
    let (enstrophy_time, max_enstrophy) = argmax(&series.times, &series.enstrophy)?;
    let (vorticity_time, max_vorticity) = argmax(&series.times, &series.max_vorticity)?;
    Some(Maxima {
        max_enstrophy,
        enstrophy_time,
        max_vorticity,
        vorticity_time,
    })
}

/// Maxima of each labelled series (typically labelled by `N`), in input order.
pub fn maxima_summary<'a, K: Copy + 'a>(
    runs: impl IntoIterator<Item = (K, &'a DiagnosticSeries)>,
) -> Vec<(K, Maxima)> {
    runs.into_iter()
        .filter_map(|(k, s)| maxima(s).map(|m| (k, m)))
        .collect()
}
