use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use mz_euler::integrator::IntegratorSettings;
use mz_euler::pipeline::manifest::RunManifest;
use mz_euler::pipeline::tables::{coefficients_from_laws, read_coefficients, read_laws};
use mz_euler::pipeline::{cmd_analyze, cmd_fit, cmd_full_run, cmd_rom_run, cmd_scaling};
use mz_euler::renormalization::WindowBounds;
use mz_euler::rom::{Ansatz, RomConfig, Truncation};

/// Exit status of a reduced-model run stopped by the instability detector.
const EXIT_UNSTABLE: u8 = 3;

#[derive(Parser)]
#[command(name = "mz-euler", version, about = "Full and renormalized reduced models of 3D Euler flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full Markov model from Taylor-Green and store every snapshot.
    FullRun {
        #[arg(long = "M")]
        m: Option<usize>,
        #[command(flatten)]
        run: RunArgs,
        /// Trajectory file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit renormalization coefficients against a stored truth trajectory.
    Fit {
        /// Truth trajectory written by full-run.
        #[arg(long = "in")]
        input: PathBuf,
        /// Resolutions to fit, comma separated.
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Model orders to fit, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 4])]
        order: Vec<usize>,
        #[arg(long, default_value = "algebraic")]
        ansatz: Ansatz,
        /// Upper bound on |ΔE_F| for snapshots in the resolved window.
        #[arg(long, default_value_t = WindowBounds::default().ceiling)]
        window_ceiling: f64,
        #[arg(long, default_value_t = WindowBounds::default().floor)]
        window_floor: f64,
        /// Coefficient table to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Regress coefficients on resolution to obtain power laws.
    Scaling {
        /// Coefficient table written by fit.
        #[arg(long)]
        coeffs: PathBuf,
        /// Law table to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a renormalized reduced model and record its diagnostics.
    RomRun {
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        ansatz: Option<Ansatz>,
        /// Coefficient table to take the matching row from.
        #[arg(long, conflicts_with_all = ["laws", "coefficients"])]
        coeffs: Option<PathBuf>,
        /// Law table to evaluate at N.
        #[arg(long, conflicts_with = "coefficients")]
        laws: Option<PathBuf>,
        /// Coefficients given directly, comma separated.
        #[arg(long = "a", value_delimiter = ',', allow_negative_numbers = true)]
        coefficients: Option<Vec<f64>>,
        #[command(flatten)]
        run: RunArgs,
        /// Diagnostic series to write.
        #[arg(long)]
        out: PathBuf,
        /// Optional trajectory file for the resolved field.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Decay slopes and peak diagnostics of reduced-model series.
    Analyze {
        /// Series written by rom-run.
        #[arg(long = "in", required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Slope table to write.
        #[arg(long)]
        out: PathBuf,
        /// Maxima table to write.
        #[arg(long)]
        maxima: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Run manifest; flags given alongside it override its entries.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    snap_dt: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    init_step: Option<f64>,
    #[arg(long)]
    max_step: Option<f64>,
    #[arg(long)]
    truncation: Option<Truncation>,
}

impl RunArgs {
    fn load(&self) -> anyhow::Result<Option<RunManifest>> {
        self.manifest
            .as_deref()
            .map(|p| {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                RunManifest::from_toml(&text).with_context(|| format!("parsing {}", p.display()))
            })
            .transpose()
    }

    fn apply(&self, m: &mut RunManifest) {
        let fields = [
            (self.t_end, &mut m.t_end),
            (self.snap_dt, &mut m.snapshot_interval),
            (self.rel_tol, &mut m.rel_tol),
            (self.abs_tol, &mut m.abs_tol),
            (self.init_step, &mut m.initial_step),
            (self.max_step, &mut m.max_step),
        ];
        for (flag, slot) in fields {
            if let Some(v) = flag {
                *slot = v;
            }
        }
        if let Some(t) = self.truncation {
            m.truncation = t;
        }
    }
}

fn rom_settings() -> IntegratorSettings {
    IntegratorSettings {
        snapshot_interval: 0.1,
        max_step: 1.0,
        ..Default::default()
    }
}

fn coefficients_from_table(path: &Path, n: usize, order: usize, ansatz: Ansatz) -> anyhow::Result<Vec<f64>> {
    let fits = read_coefficients(path)?;
    let fit = fits
        .iter()
        .find(|f| f.resolved_half_width == n && f.order == order && f.ansatz == ansatz)
        .with_context(|| format!("{} has no row for N={n}, n={order}, {ansatz}", path.display()))?;
    Ok(fit.coeffs.clone())
}

fn full_run(m: Option<usize>, run: &RunArgs, out: &Path) -> anyhow::Result<ExitCode> {
    let mut manifest = match (run.load()?, m) {
        (Some(mut man), m) => {
            man.half_width = m.unwrap_or(man.half_width);
            man
        }
        (None, Some(m)) => RunManifest::full(m, &IntegratorSettings::default()),
        (None, None) => bail!("full-run needs --M or --manifest"),
    };
    run.apply(&mut manifest);
    let report = cmd_full_run(&manifest, out)?;
    println!("E(0) = {:.17e}", report.initial_energy);
    println!("E({}) = {:.17e}", manifest.t_end, report.final_energy);
    println!(
        "{} snapshots, {} steps ({} rejected)",
        report.snapshots, report.stats.accepted, report.stats.rejected
    );
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn rom_run(
    n: Option<usize>,
    order: Option<usize>,
    ansatz: Option<Ansatz>,
    coeffs: Option<&Path>,
    laws: Option<&Path>,
    direct: Option<Vec<f64>>,
    run: &RunArgs,
    out: &Path,
    snapshots: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let loaded = run.load()?;
    let base = loaded.clone().unwrap_or_else(|| {
        let cfg = RomConfig::new(1, 0, Ansatz::Algebraic, Vec::new()).expect("order 0 needs no coefficients");
        RunManifest::rom(&cfg, &rom_settings())
    });
    let n = n.or(loaded.as_ref().map(|m| m.half_width)).context("rom-run needs --N or --manifest")?;
    let order = order.unwrap_or(base.order);
    let ansatz = ansatz.unwrap_or(base.ansatz);
    let (coefficients, source) = match (coeffs, laws, direct) {
        (Some(p), _, _) => (coefficients_from_table(p, n, order, ansatz)?, Some(p)),
        (_, Some(p), _) => (coefficients_from_laws(&read_laws(p)?, n, order, ansatz)?, Some(p)),
        (_, _, Some(a)) => (a, None),
        (None, None, None) if order == base.order => (base.coefficients.clone(), None),
        (None, None, None) if order == 0 => (Vec::new(), None),
        (None, None, None) => bail!("order {order} needs --coeffs, --laws or --a"),
    };
    let mut manifest = RunManifest {
        half_width: n,
        order,
        ansatz,
        coefficients,
        coefficient_source: source
            .map(|p| p.display().to_string())
            .or(base.coefficient_source.clone()),
        ..base
    };
    run.apply(&mut manifest);
    let report = cmd_rom_run(&manifest, out, snapshots)?;
    let s = &report.series;
    if let (Some(first), Some(last)) = (s.energy.first(), s.energy.last()) {
        println!("E(0) = {first:.17e}");
        println!("E({}) = {last:.17e}", s.times.last().copied().unwrap_or(0.0));
    }
    match report.instability {
        Some(inst) => {
            eprintln!("unstable at t = {}: {}", inst.t, inst.reason);
            Ok(ExitCode::from(EXIT_UNSTABLE))
        }
        None => Ok(ExitCode::SUCCESS),
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::FullRun { m, run, out } => full_run(m, &run, &out),
        Command::Fit {
            input,
            n,
            order,
            ansatz,
            window_ceiling,
            window_floor,
            out,
        } => {
            let bounds = WindowBounds {
                floor: window_floor,
                ceiling: window_ceiling,
            };
            let report = cmd_fit(&input, &n, &order, ansatz, bounds, &out)?;
            let (first, last) = (report.window.first(), report.window.last());
            if let (Some(a), Some(b)) = (first, last) {
                println!("window: {} snapshots in [{a}, {b}]", report.window.len());
            }
            println!("{} fits written to {}", report.fits.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Scaling { coeffs, out } => {
            let report = cmd_scaling(&coeffs, &out)?;
            for row in &report.laws {
                let l = &row.law;
                println!(
                    "n={} {} i={}: beta={:.4} gamma={:.4} r2={:.4}",
                    row.order, row.ansatz, l.index, l.beta, l.gamma, l.r2
                );
            }
            for (order, ansatz, e) in &report.failures {
                eprintln!("n={order} {ansatz}: {e}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::RomRun {
            n,
            order,
            ansatz,
            coeffs,
            laws,
            coefficients,
            run,
            out,
            snapshots,
        } => rom_run(
            n,
            order,
            ansatz,
            coeffs.as_deref(),
            laws.as_deref(),
            coefficients,
            &run,
            &out,
            snapshots.as_deref(),
        ),
        Command::Analyze { input, out, maxima } => {
            let report = cmd_analyze(&input, &out, &maxima)?;
            for (label, s) in &report.slopes {
                println!(
                    "N={} n={}: initial {:?} second {:?}",
                    label.resolved_half_width, label.order, s.initial_rate, s.second_rate
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
