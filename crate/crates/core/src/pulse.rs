//! Stationary pulses: the NLSE sech solution, split-step evolution of the CGLE
//! to a stationary state, and JSON persistence.

use crate::cgle::{CgleParams, Pulse};
use crate::error::{Error, Result};
use crate::linalg::wrap_angle;
use nalgebra::Vector2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

/// ψ(x) = sech(x) with NLSE parameters (α = −1/2).
pub fn sech_pulse(half_width: f64, n: usize) -> Result<Pulse> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidNodeCount(n));
    }
    let dx = 2.0 * half_width / (n - 1) as f64;
    let psi = (0..n)
        .map(|i| {
            let x = if 2 * i + 1 == n { 0.0 } else { -half_width + i as f64 * dx };
            Vector2::new(1.0 / x.cosh(), 0.0)
        })
        .collect();
    Pulse::new(CgleParams::nlse(), half_width, psi, "sech")
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    /// A·exp(−x²/(2w²))
    Gaussian { amplitude: f64, width: f64 },
    /// A·sech(x)
    Sech { amplitude: f64 },
    /// Samples of an existing pulse with the same grid spacing, zero outside its window.
    Samples(Box<Pulse>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_max: f64,
    pub tol: f64,
    pub check_every: usize,
    pub init: InitialCondition,
    /// Evolution half-window as a multiple of the output half-width L.
    pub window_factor: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            dt: 5e-3,
            t_max: 2e4,
            tol: 1e-10,
            check_every: 200,
            // larger or narrower pulses shed too much energy and fall to ψ = 0 for the fiber-laser preset
            init: InitialCondition::Gaussian { amplitude: 0.3, width: 1.0 },
            window_factor: 2,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.tol > 0.0) || !(self.t_max > self.dt) {
            return Err(Error::InvalidInput("need dt > 0, tol > 0 and t_max > dt".into()));
        }
        if self.check_every == 0 || self.window_factor == 0 {
            return Err(Error::InvalidInput("check_every and window_factor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EvolveOutcome {
    pub pulse: Pulse,
    pub alpha: f64,
    pub t: f64,
    pub residual: f64,
}

/// Strang split-step integrator for the lab-frame CGLE on a periodic grid.
pub struct SplitStep {
    params: CgleParams,
    half_linear: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    dt: f64,
}

const NONLINEAR_SUBSTEPS: usize = 2;

impl SplitStep {
    /// Grid of `len` points with spacing `dx`.
    pub fn new(params: CgleParams, len: usize, dx: f64, dt: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let period = len as f64 * dx;
        let lin = Complex64::new(params.beta, 0.5 * params.d);
        let half_linear = (0..len)
            .map(|j| {
                let m = if j <= len / 2 { j as f64 } else { j as f64 - len as f64 };
                let k = 2.0 * PI * m / period;
                ((params.delta - lin * k * k) * (0.5 * dt)).exp() / len as f64
            })
            .collect();
        let scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
        Self { params, half_linear, fwd, inv, scratch, dt }
    }

    fn linear_half(&mut self, u: &mut [Complex64]) {
        self.fwd.process_with_scratch(u, &mut self.scratch);
        for (z, f) in u.iter_mut().zip(&self.half_linear) {
            *z *= f;
        }
        self.inv.process_with_scratch(u, &mut self.scratch);
    }

    // s' = 2s(εs + μs²), θ' = γs + νs² with RK4
    fn nonlinear(&self, u: &mut [Complex64]) {
        let p = &self.params;
        if p.epsilon == 0.0 && p.mu == 0.0 && p.gamma == 0.0 && p.nu == 0.0 {
            return;
        }
        let h = self.dt / NONLINEAR_SUBSTEPS as f64;
        let rhs = |s: f64| (2.0 * s * (p.epsilon * s + p.mu * s * s), p.gamma * s + p.nu * s * s);
        for z in u.iter_mut() {
            let s0 = z.norm_sqr();
            if s0 == 0.0 {
                continue;
            }
            let mut s = s0;
            let mut theta = 0.0;
            for _ in 0..NONLINEAR_SUBSTEPS {
                let k1 = rhs(s);
                let k2 = rhs(s + 0.5 * h * k1.0);
                let k3 = rhs(s + 0.5 * h * k2.0);
                let k4 = rhs(s + h * k3.0);
                s += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                theta += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
                s = s.max(0.0);
            }
            *z *= Complex64::from_polar((s / s0).sqrt(), theta);
        }
    }

    pub fn step(&mut self, u: &mut [Complex64]) {
        self.linear_half(u);
        self.nonlinear(u);
        self.linear_half(u);
    }
}

/// Below this the field is treated as having collapsed onto the trivial state.
const DECAY_FLOOR: f64 = 1e-6;

fn sup_abs_diff(a: &[Complex64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(z, m)| (z.norm() - m).abs()).fold(0.0, f64::max)
}

/// Evolves the lab-frame CGLE (α = 0) until |ψ| is stationary, measures the phase
/// rate α, and returns the real-at-peak profile cropped to [−L, L] on n nodes.
pub fn evolve_to_stationary(params: &CgleParams, config: &EvolveConfig, half_width: f64, n: usize) -> Result<EvolveOutcome> {
    config.validate()?;
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidNodeCount(n));
    }
    let lab = CgleParams { alpha: 0.0, ..*params };
    lab.validate()?;
    let dx = 2.0 * half_width / (n - 1) as f64;
    let len = config.window_factor * (n - 1);
    let window = config.window_factor as f64 * half_width;
    let centre = len / 2;
    let x = |j: usize| -window + j as f64 * dx;

    let mut u: Vec<Complex64> = match &config.init {
        InitialCondition::Gaussian { amplitude, width } => {
            (0..len).map(|j| Complex64::new(amplitude * (-x(j).powi(2) / (2.0 * width * width)).exp(), 0.0)).collect()
        }
        InitialCondition::Sech { amplitude } => (0..len).map(|j| Complex64::new(amplitude / x(j).cosh(), 0.0)).collect(),
        InitialCondition::Samples(p) => {
            if (p.dx() - dx).abs() > 1e-12 * dx {
                return Err(Error::InvalidInput("initial pulse grid spacing differs from the output grid".into()));
            }
            let mut u = vec![Complex64::new(0.0, 0.0); len];
            let half = (p.n() - 1) / 2;
            for (i, v) in p.psi.iter().enumerate() {
                if let Some(j) = (centre + i).checked_sub(half) {
                    if j < len {
                        u[j] = Complex64::new(v.x, v.y);
                    }
                }
            }
            u
        }
    };

    let mut stepper = SplitStep::new(lab, len, dx, config.dt);
    let mut last: Vec<f64> = u.iter().map(|z| z.norm()).collect();
    let mut steps: u64 = 0;
    let residual = loop {
        for _ in 0..config.check_every {
            stepper.step(&mut u);
        }
        steps += config.check_every as u64;
        let t = steps as f64 * config.dt;
        let max_abs = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(max_abs <= 1e6) {
            return Err(Error::Blowup { t, max_abs });
        }
        if max_abs < DECAY_FLOOR {
            return Err(Error::Decayed { t, max_abs });
        }
        let r = sup_abs_diff(&u, &last);
        if r < config.tol {
            break r;
        }
        if t >= config.t_max {
            return Err(Error::NonConvergence { t, residual: r });
        }
        log::debug!("t = {t:.1}, residual = {r:.3e}");
        last.iter_mut().zip(&u).for_each(|(m, z)| *m = z.norm());
    };

    let peak = (0..len).max_by(|&a, &b| u[a].norm().total_cmp(&u[b].norm())).unwrap_or(centre);
    let mut phase_sum = 0.0;
    const PHASE_STEPS: usize = 100;
    for _ in 0..PHASE_STEPS {
        let before = u[peak];
        stepper.step(&mut u);
        steps += 1;
        phase_sum += wrap_angle((u[peak] / before).arg());
    }
    let alpha = -phase_sum / (PHASE_STEPS as f64 * config.dt);

    let rot = Complex64::from_polar(1.0, -u[peak].arg());
    let offset = centre + len - (n - 1) / 2;
    let psi = (0..n)
        .map(|i| {
            let j = (offset + i) % len;
            let z = u[j] * rot;
            if j == peak {
                Vector2::new(u[j].norm(), 0.0)
            } else {
                Vector2::new(z.re, z.im)
            }
        })
        .collect();
    let out_params = CgleParams { alpha, ..*params };
    let mut pulse = Pulse::new(out_params, half_width, psi, format!("evolved dt={} tol={:e}", config.dt, config.tol))?;
    pulse.alpha_phase = alpha;
    Ok(EvolveOutcome { pulse, alpha, t: steps as f64 * config.dt, residual })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridJson {
    #[serde(rename = "L")]
    l: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct PulseJson {
    params: CgleParams,
    alpha_phase: f64,
    grid: GridJson,
    psi_re: Vec<f64>,
    psi_im: Vec<f64>,
    provenance: String,
}

pub fn pulse_to_json(pulse: &Pulse) -> Result<String> {
    let doc = PulseJson {
        params: pulse.params,
        alpha_phase: pulse.alpha_phase,
        grid: GridJson { l: pulse.half_width, n: pulse.n() },
        psi_re: pulse.psi.iter().map(|p| p.x).collect(),
        psi_im: pulse.psi.iter().map(|p| p.y).collect(),
        provenance: pulse.provenance.clone(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn pulse_from_json(text: &str) -> Result<Pulse> {
    let doc: PulseJson = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let n = doc.grid.n;
    if n < 3 || n % 2 == 0 {
        return Err(Error::Schema(format!("grid.n must be odd and at least 3, got {n}")));
    }
    if doc.psi_re.len() != n || doc.psi_im.len() != n {
        return Err(Error::Schema(format!(
            "psi_re/psi_im lengths {}/{} do not match grid.n = {n}",
            doc.psi_re.len(),
            doc.psi_im.len()
        )));
    }
    let psi = doc.psi_re.iter().zip(&doc.psi_im).map(|(&r, &i)| Vector2::new(r, i)).collect();
    let mut pulse = Pulse::new(doc.params, doc.grid.l, psi, doc.provenance).map_err(|e| Error::Schema(e.to_string()))?;
    pulse.alpha_phase = doc.alpha_phase;
    Ok(pulse)
}

pub fn save_pulse(pulse: &Pulse, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, pulse_to_json(pulse)?)?;
    Ok(())
}

pub fn load_pulse(path: impl AsRef<Path>) -> Result<Pulse> {
    pulse_from_json(&std::fs::read_to_string(path)?)
}
