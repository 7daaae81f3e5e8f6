mod parse;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pulse_spectra::eigen::SearchConfig;
use pulse_spectra::fredholm::write_scan_csv;
use pulse_spectra::{
    check_hypotheses, essential_spectrum, evolve_to_stationary, find_point_spectrum, load_pulse, save_pulse, scan,
    sech_pulse, validate_sech, Error, EvolveConfig, KernelForm,
};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pulse-spectra", version, about = "Point spectra of CGLE pulses from Fredholm determinants")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample both branches of the essential spectrum as CSV.
    EssentialSpectrum {
        /// Preset (nlse, fiber-laser), key=value list, or JSON file.
        #[arg(long)]
        params: String,
        #[arg(long, default_value_t = 2.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a stationary pulse as JSON.
    MakePulse {
        #[command(subcommand)]
        kind: PulseKind,
    },
    /// Fredholm determinants along a path in the spectral plane, as CSV.
    ScanDet {
        #[arg(long)]
        pulse: PathBuf,
        /// segment:z0,z1 or ray-to-edge:z0,plus|minus
        #[arg(long)]
        path: String,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Form::Eff)]
        form: Form,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zeros of the regular determinant inside a rectangle, as JSON.
    FindEigs {
        #[arg(long)]
        pulse: PathBuf,
        /// rect:z0,z1 with opposite corners
        #[arg(long)]
        region: String,
        #[arg(long, default_value_t = 2)]
        max_per_cell: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Exit 4 if any cell failed.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the determinant pipeline against the closed-form sech results.
    ValidateSech {
        #[command(flatten)]
        grid: Grid,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PulseKind {
    /// sech(x) for the focusing NLSE.
    Sech {
        #[command(flatten)]
        grid: Grid,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split-step evolution of the CGLE until the profile is stationary.
    Evolve {
        #[arg(long, default_value = "fiber-laser")]
        params: String,
        /// gaussian:A,w or sech:A
        #[arg(long)]
        init: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        grid: Grid,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Grid {
    /// Half-width of the window [-L, L].
    #[arg(long = "L", default_value_t = 7.325)]
    half_width: f64,
    /// Odd number of nodes.
    #[arg(long, default_value_t = 251)]
    n: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Full,
    Eff,
}

impl From<Form> for KernelForm {
    fn from(f: Form) -> Self {
        match f {
            Form::Full => KernelForm::Full4,
            Form::Eff => KernelForm::Eff2,
        }
    }
}

const HYPOTHESIS_FAILED: u8 = 3;
const NUMERICAL_FAILURE: u8 = 4;

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json(out: &Option<PathBuf>, value: &impl serde::Serialize) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn check_grid(g: &Grid) -> Result<()> {
    if g.n < 3 || g.n % 2 == 0 {
        return Err(Error::InvalidNodeCount(g.n).into());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::EssentialSpectrum { params, mu_max, samples, out } => {
            let p = parse::params(&params)?;
            if samples == 0 || !(mu_max > 0.0) {
                bail!("need --samples >= 1 and --mu-max > 0");
            }
            let ess = essential_spectrum(&p, mu_max, samples);
            let mut w = sink(&out)?;
            writeln!(w, "branch,re,im")?;
            for (name, pts) in [("plus", &ess.plus), ("minus", &ess.minus)] {
                for z in pts {
                    writeln!(w, "{name},{},{}", z.re, z.im)?;
                }
            }
        }
        Cmd::MakePulse { kind: PulseKind::Sech { grid, out } } => {
            check_grid(&grid)?;
            let pulse = sech_pulse(grid.half_width, grid.n)?;
            save_pulse(&pulse, &out)?;
            let report = check_hypotheses(&pulse);
            write_json(&None, &serde_json::json!({ "alpha": pulse.alpha_phase, "hypotheses": report }))?;
        }
        Cmd::MakePulse { kind: PulseKind::Evolve { params, init, dt, tmax, tol, grid, out } } => {
            check_grid(&grid)?;
            let p = parse::params(&params)?;
            let mut cfg = EvolveConfig::default();
            if let Some(s) = init {
                cfg.init = parse::init(&s)?;
            }
            if let Some(dt) = dt {
                cfg.dt = dt;
                cfg.check_every = ((1.0 / dt).round() as usize).max(1);
            }
            cfg.t_max = tmax.unwrap_or(cfg.t_max);
            cfg.tol = tol.unwrap_or(cfg.tol);
            let outcome = evolve_to_stationary(&p, &cfg, grid.half_width, grid.n)?;
            save_pulse(&outcome.pulse, &out)?;
            let report = check_hypotheses(&outcome.pulse);
            write_json(
                &None,
                &serde_json::json!({ "alpha": outcome.alpha, "t": outcome.t, "residual": outcome.residual, "hypotheses": report }),
            )?;
            if !report.trace_class {
                return Ok(HYPOTHESIS_FAILED);
            }
        }
        Cmd::ScanDet { pulse, path, samples, form, out } => {
            let path = parse::path(&path)?;
            let pulse = load_pulse(&pulse)?;
            let points = scan(&pulse, &path, samples, form.into());
            write_scan_csv(&points, sink(&out)?)?;
        }
        Cmd::FindEigs { pulse, region, max_per_cell, tol, strict, out } => {
            let (z0, z1) = parse::region(&region)?;
            if max_per_cell == 0 || !(tol > 0.0) {
                bail!("need --max-per-cell >= 1 and --tol > 0");
            }
            let pulse = load_pulse(&pulse)?;
            let config = SearchConfig { max_roots_per_cell: max_per_cell, tol, ..Default::default() };
            let report = find_point_spectrum(&pulse, z0, z1, &config);
            write_json(&out, &report)?;
            if strict && report.has_failures() {
                return Ok(NUMERICAL_FAILURE);
            }
        }
        Cmd::ValidateSech { grid, out } => {
            check_grid(&grid)?;
            let report = validate_sech(grid.n, grid.half_width)?;
            write_json(&out, &report)?;
            if !report.passed() {
                return Ok(NUMERICAL_FAILURE);
            }
        }
    }
    Ok(0)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::NonConvergence { .. }
            | Error::Blowup { .. }
            | Error::Decayed { .. }
            | Error::NonConvergent { .. }
            | Error::Stagnation { .. }
            | Error::MaxIters { .. }
            | Error::Overflow { .. }
            | Error::ZeroOnContour { .. }
            | Error::SingularM,
        ) => NUMERICAL_FAILURE,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var("PULSE_SPECTRA_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
