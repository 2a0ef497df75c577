//! File-based pipeline: truth runs, coefficient fits, scaling regressions,
//! reduced-model runs and decay analysis.
//!
//! Data files carry no timestamps; each output `x` gets a sidecar
//! `x.manifest.toml` recording the run that produced it.

pub mod manifest;
pub mod store;
pub mod tables;

use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use crate::diagnostics::{decay_slopes, maxima, DecaySlopes, DiagnosticSeries, Maxima, VorticityMeter};
use crate::error::{Error, Result};
use crate::integrator::{integrate, SnapshotSink, StepStats};
use crate::renormalization::{fit_coefficients, fit_scaling_laws, CoefficientFit, FluxProbe, TableBuilder, WindowBounds};
use crate::rom::{Ansatz, MarkovOperator, RomOperator, MAX_ORDER};
use crate::spectral::{taylor_green, SpectralField, WaveGrid};

use manifest::{ModelKind, RunManifest};
use store::{TrajectoryReader, TrajectoryWriter};
use tables::{LawRow, RunLabel};

type CoefficientsByN = BTreeMap<usize, Vec<f64>>;

/// Energy growth beyond this multiple of `E(0)` marks a run unstable.
pub const INSTABILITY_FACTOR: f64 = 10.0;

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.toml");
    PathBuf::from(s)
}

fn write_sidecar(path: &Path, manifest: &RunManifest) -> Result<()> {
    std::fs::write(sidecar_path(path), manifest.to_toml())?;
    Ok(())
}

fn expect_model(manifest: &RunManifest, model: ModelKind) -> Result<()> {
    manifest.validate()?;
    if manifest.model != model {
        return Err(Error::InvalidManifest(format!(
            "expected a {model:?} manifest, got {:?}",
            manifest.model
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullRunReport {
    pub initial_energy: f64,
    pub final_energy: f64,
    pub snapshots: u64,
    pub stats: StepStats,
}

/// Markov model of half-width `M` from Taylor-Green, every snapshot written to `out`.
///
/// A non-finite state aborts the run and leaves the file flagged invalid.
pub fn cmd_full_run(manifest: &RunManifest, out: &Path) -> Result<FullRunReport> {
    expect_model(manifest, ModelKind::Full)?;
    let grid = WaveGrid::new(manifest.half_width, None)?;
    let u0 = taylor_green(grid)?;
    let initial_energy = u0.energy();
    let mut model = MarkovOperator::with_truncation(grid, manifest.truncation);
    let mut writer = Some(TrajectoryWriter::create(
        out,
        manifest.half_width,
        manifest.truncation,
        manifest.digest(),
    )?);
    let mut write_error = None;
    let mut sink = |t: f64, u: &SpectralField| match writer.as_mut().expect("open").append(t, u) {
        Ok(()) => ControlFlow::Continue(()),
        Err(e) => {
            write_error = Some(e);
            ControlFlow::Break(())
        }
    };
    let run = integrate(u0, |_, u: &SpectralField| model.rhs(u), &manifest.settings(), &mut sink);
    let writer = writer.take().expect("open");
    let run = match (run, write_error) {
        (Ok(run), None) => run,
        (Ok(_), Some(e)) | (Err(e), _) => {
            writer.abort()?;
            return Err(e);
        }
    };
    let header = writer.finish()?;
    write_sidecar(out, manifest)?;
    Ok(FullRunReport {
        initial_energy,
        final_energy: run.state.energy(),
        snapshots: header.count,
        stats: run.stats,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub fits: Vec<CoefficientFit>,
    /// `(t, ΔE_F)` for every truth snapshot.
    pub flux: Vec<(f64, f64)>,
    pub window: Vec<f64>,
}

/// Fit coefficients of every order in `orders` for every resolution in `ns`
/// over the resolved window of the truth trajectory.
///
/// Writes the coefficient table to `out` and the window to `out.window.csv`.
pub fn cmd_fit(
    truth: &Path,
    ns: &[usize],
    orders: &[usize],
    ansatz: Ansatz,
    bounds: WindowBounds,
    out: &Path,
) -> Result<FitReport> {
    if ns.is_empty() || orders.is_empty() {
        return Err(Error::InvalidConfig("fit needs at least one N and one order".into()));
    }
    if let Some(n) = orders.iter().find(|&&n| n == 0 || n > MAX_ORDER) {
        return Err(Error::InvalidConfig(format!("order {n} must lie in 1..={MAX_ORDER}")));
    }
    let reader = TrajectoryReader::open(truth)?;
    let header = *reader.header();
    let m = header.half_width;
    let n_max = *ns.iter().max().expect("nonempty");
    if m % 2 != 0 || m < 2 * n_max {
        return Err(Error::InvalidTrajectory {
            path: truth.to_path_buf(),
            reason: format!("truth half-width {m} must be even and at least 2·max(N) = {}", 2 * n_max),
        });
    }
    let order = *orders.iter().max().expect("nonempty");
    let mut probe = FluxProbe::new(m, header.truncation)?;
    let mut builder = TableBuilder::new(ns, order, header.truncation)?;
    let mut flux = Vec::new();
    let mut selected = Vec::new();
    for snap in reader {
        let (t, field) = snap?;
        let de = probe.resolved_flux(t, &field)?;
        let keep = bounds.contains(de);
        if keep {
            builder.add(t, &field)?;
        }
        flux.push((t, de));
        selected.push(keep);
    }
    let mut window_path = out.as_os_str().to_owned();
    window_path.push(".window.csv");
    tables::write_window(Path::new(&window_path), &flux, &selected)?;
    if builder.snapshots() == 0 {
        return Err(Error::EmptyWindow);
    }
    let mut orders = orders.to_vec();
    orders.sort_unstable();
    orders.dedup();
    let mut fits = Vec::new();
    for table in builder.finish() {
        for &n in &orders {
            fits.push(fit_coefficients(&table, ansatz, n)?);
        }
    }
    tables::write_coefficients(out, ansatz, &fits)?;
    let window = flux
        .iter()
        .zip(&selected)
        .filter(|(_, &s)| s)
        .map(|(&(t, _), _)| t)
        .collect();
    Ok(FitReport { fits, flux, window })
}

#[derive(Debug)]
pub struct ScalingReport {
    pub laws: Vec<LawRow>,
    /// Models whose coefficients admit no power law, with the reason.
    pub failures: Vec<(usize, Ansatz, Error)>,
}

/// Regress `log|a_i|` on `log N` for every `(n, ansatz)` group of a coefficient table.
pub fn cmd_scaling(coefficients: &Path, out: &Path) -> Result<ScalingReport> {
    let fits = tables::read_coefficients(coefficients)?;
    let mut groups: BTreeMap<(usize, &'static str), (Ansatz, CoefficientsByN)> = BTreeMap::new();
    for f in &fits {
        groups
            .entry((f.order, f.ansatz.as_str()))
            .or_insert_with(|| (f.ansatz, BTreeMap::new()))
            .1
            .insert(f.resolved_half_width, f.coeffs.clone());
    }
    let mut laws = Vec::new();
    let mut failures = Vec::new();
    for ((order, _), (ansatz, by_n)) in groups {
        match fit_scaling_laws(&by_n) {
            Ok(found) => laws.extend(found.into_iter().map(|law| LawRow { order, ansatz, law })),
            Err(e) => failures.push((order, ansatz, e)),
        }
    }
    tables::write_laws(out, &laws)?;
    Ok(ScalingReport { laws, failures })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instability {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct RomRunReport {
    pub series: DiagnosticSeries,
    pub instability: Option<Instability>,
    pub stats: Option<StepStats>,
    pub final_time: f64,
}

struct RomSink {
    series: DiagnosticSeries,
    meter: VorticityMeter,
    threshold: f64,
    instability: Option<Instability>,
    writer: Option<TrajectoryWriter>,
    error: Option<Error>,
}

impl RomSink {
    fn check(&mut self, t: f64, u: &SpectralField) -> ControlFlow<()> {
        let e = u.energy();
        let reason = if !e.is_finite() {
            Some("non-finite energy".to_string())
        } else if e > self.threshold {
            Some(format!("energy {e:e} exceeds {INSTABILITY_FACTOR}·E(0)"))
        } else {
            None
        };
        match reason {
            Some(reason) => {
                self.instability = Some(Instability { t, reason });
                ControlFlow::Break(())
            }
            None => ControlFlow::Continue(()),
        }
    }

    fn fail(&mut self, e: Error) -> ControlFlow<()> {
        self.error = Some(e);
        ControlFlow::Break(())
    }
}

impl SnapshotSink<SpectralField> for RomSink {
    fn snapshot(&mut self, t: f64, u: &SpectralField) -> ControlFlow<()> {
        self.check(t, u)?;
        if let Err(e) = self.series.record(t, u, &mut self.meter) {
            return self.fail(e);
        }
        if let Some(w) = self.writer.as_mut() {
            if let Err(e) = w.append(t, u) {
                return self.fail(e);
            }
        }
        ControlFlow::Continue(())
    }

    fn step(&mut self, t: f64, u: &SpectralField) -> ControlFlow<()> {
        self.check(t, u)
    }
}

/// Reduced model of half-width `N` from Taylor-Green. The diagnostic series goes
/// to `out`; resolved-field snapshots go to `snapshots` when given.
///
/// Blow-up (energy above `10·E(0)`, a non-finite state, or step-size underflow)
/// ends the run early and is reported in the result rather than as an error.
pub fn cmd_rom_run(manifest: &RunManifest, out: &Path, snapshots: Option<&Path>) -> Result<RomRunReport> {
    expect_model(manifest, ModelKind::Rom)?;
    let cfg = manifest.rom_config()?;
    let mut op = RomOperator::with_truncation(cfg.resolved_half_width, manifest.truncation)?;
    let grid = op.compact_grid();
    let u0 = op.project_resolved(&taylor_green(grid)?);
    let e0 = u0.energy();
    let writer = snapshots
        .map(|p| TrajectoryWriter::create(p, grid.half_width(), manifest.truncation, manifest.digest()))
        .transpose()?;
    let mut sink = RomSink {
        series: DiagnosticSeries::new(manifest.to_toml()),
        meter: VorticityMeter::new(grid)?,
        threshold: INSTABILITY_FACTOR * e0,
        instability: None,
        writer,
        error: None,
    };
    let rhs = |t: f64, u: &SpectralField| {
        let w = cfg.weights(t).expect("integration times are non-negative");
        op.compact_rhs(u, &w)
    };
    let run = integrate(u0, rhs, &manifest.settings(), &mut sink);
    if let Some(e) = sink.error.take() {
        if let Some(w) = sink.writer.take() {
            w.abort()?;
        }
        return Err(e);
    }
    let (stats, final_time) = match run {
        Ok(run) => (Some(run.stats), run.t),
        Err(Error::NonFinite { t }) => {
            sink.instability = Some(Instability {
                t,
                reason: "non-finite state".into(),
            });
            (None, t)
        }
        Err(Error::StepUnderflow { t, step }) => {
            sink.instability = Some(Instability {
                t,
                reason: format!("step size underflow (h = {step:e})"),
            });
            (None, t)
        }
        Err(e) => return Err(e),
    };
    if let Some(w) = sink.writer.take() {
        let path = w.path().to_path_buf();
        w.finish()?;
        write_sidecar(&path, manifest)?;
    }
    tables::write_series(out, &sink.series)?;
    write_sidecar(out, manifest)?;
    Ok(RomRunReport {
        series: sink.series,
        instability: sink.instability,
        stats,
        final_time,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeReport {
    pub slopes: Vec<(RunLabel, DecaySlopes)>,
    pub maxima: Vec<(RunLabel, Maxima)>,
}

/// Decay slopes and peak indicators of reduced-model series. Each series must
/// have the sidecar manifest written by [`cmd_rom_run`].
pub fn cmd_analyze(series: &[PathBuf], slopes_out: &Path, maxima_out: &Path) -> Result<AnalyzeReport> {
    let mut slopes = Vec::new();
    let mut peaks = Vec::new();
    for path in series {
        let side = sidecar_path(path);
        let text = std::fs::read_to_string(&side).map_err(|e| Error::InvalidTable {
            path: path.clone(),
            reason: format!("cannot read sidecar {}: {e}", side.display()),
        })?;
        let manifest = RunManifest::from_toml(&text)?;
        let label = RunLabel {
            resolved_half_width: manifest.half_width,
            order: manifest.order,
        };
        let s = tables::read_series(path)?;
        s.validate().map_err(|e| Error::InvalidTable {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        slopes.push((label, decay_slopes(&s)));
        if let Some(m) = maxima(&s) {
            peaks.push((label, m));
        }
    }
    tables::write_slopes(slopes_out, &slopes)?;
    tables::write_maxima(maxima_out, &peaks)?;
    Ok(AnalyzeReport { slopes, maxima: peaks })
}
