//! Composite Simpson discretization of the truncated Birman-Schwinger operator,
//! the block-matrix determinants d₁ = det(I + K_Q) and d₂ = e^{−Tr K_Q} d₁,
//! and the truncation and quadrature error bounds.

use crate::asymptotic::EPS_ESS;
use crate::cgle::{dist_to_essential, Branch, CgleParams, Pulse};
use crate::error::{Error, Result};
use crate::kernel::KernelContext;
use crate::linalg::{log_det, wrap_angle, CMatrix};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};

/// Largest |log|d|| for which d is materialized as a complex number.
pub const MAX_LOG_ABS: f64 = 700.0;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    pub half_width: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.n() - 1) as f64
    }

    pub fn integrate(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Uniform composite Simpson rule on [−L, L]: weights Δx/3·(1, 4, 2, 4, …, 2, 4, 1).
pub fn simpson_grid(half_width: f64, n: usize) -> Result<QuadratureGrid> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidNodeCount(n));
    }
    let dx = 2.0 * half_width / (n - 1) as f64;
    let nodes = (0..n).map(|i| -half_width + i as f64 * dx).collect();
    let weights = (0..n)
        .map(|i| {
            let f = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            f * dx / 3.0
        })
        .collect();
    Ok(QuadratureGrid { half_width, nodes, weights })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelForm {
    /// 4×4 blocks, matrix of size 4n.
    Full4,
    /// Nonzero 2×2 block only, matrix of size 2n.
    Eff2,
}

impl KernelForm {
    pub fn block(self) -> usize {
        match self {
            KernelForm::Full4 => 4,
            KernelForm::Eff2 => 2,
        }
    }
}

/// K_Q with block (α, β) = w_β K(x_α, x_β).
pub fn assemble(ctx: &KernelContext, grid: &QuadratureGrid, form: KernelForm) -> Result<CMatrix> {
    let n = ctx.n();
    if grid.n() != n || (grid.half_width - ctx.pulse.half_width).abs() > 1e-12 * grid.half_width {
        return Err(Error::GridMismatch);
    }
    let k = form.block();
    let mut m = CMatrix::zeros(k * n);
    for i in 0..n {
        for j in 0..n {
            let w = grid.weights[j];
            match form {
                KernelForm::Eff2 => {
                    let b = ctx.kernel_effective(i, j);
                    for r in 0..2 {
                        for c in 0..2 {
                            m.set(2 * i + r, 2 * j + c, b[(r, c)] * w);
                        }
                    }
                }
                KernelForm::Full4 => {
                    let b = ctx.kernel_full(i, j);
                    for r in 0..4 {
                        for c in 0..4 {
                            m.set(4 * i + r, 4 * j + c, b[(r, c)] * w);
                        }
                    }
                }
            }
        }
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetResult {
    pub lambda: Complex64,
    /// Absent when |log|d₁|| ≥ 700.
    pub d1: Option<Complex64>,
    pub d2: Option<Complex64>,
    pub trace_q: Complex64,
    pub log_abs_d1: f64,
    pub log_abs_d2: f64,
    pub arg_d1: f64,
    pub arg_d2: f64,
}

impl DetResult {
    pub fn overflowed(&self) -> bool {
        self.d1.is_none() || self.d2.is_none()
    }
}

fn materialize(log_abs: f64, arg: f64) -> Option<Complex64> {
    if log_abs == f64::NEG_INFINITY {
        Some(Complex64::new(0.0, 0.0))
    } else if log_abs.abs() < MAX_LOG_ABS {
        Some(Complex64::from_polar(log_abs.exp(), arg))
    } else {
        None
    }
}

/// d₁ = det(I + K_Q) and d₂ = e^{−Tr K_Q} d₁ in logarithmic form.
pub fn det_p(lambda: Complex64, mut kq: CMatrix) -> DetResult {
    let trace_q = kq.trace();
    kq.add_identity();
    let ld = log_det(kq);
    let log_abs_d1 = ld.log_abs;
    let arg_d1 = ld.arg;
    let log_abs_d2 = log_abs_d1 - trace_q.re;
    let arg_d2 = wrap_angle(arg_d1 - trace_q.im);
    DetResult {
        lambda,
        d1: materialize(log_abs_d1, arg_d1),
        d2: materialize(log_abs_d2, arg_d2),
        trace_q,
        log_abs_d1,
        log_abs_d2,
        arg_d1,
        arg_d2,
    }
}

/// Determinants of the discretized operator for `pulse` at `lambda`.
pub fn determinant(pulse: &Pulse, lambda: Complex64, form: KernelForm) -> Result<DetResult> {
    let ctx = KernelContext::new(pulse, lambda)?;
    let grid = simpson_grid(pulse.half_width, pulse.n())?;
    Ok(det_p(lambda, assemble(&ctx, &grid, form)?))
}

/// Tr K_Q = Σ w_k Tr K(x_k, x_k).
pub fn quadrature_trace(ctx: &KernelContext, grid: &QuadratureGrid) -> Complex64 {
    (0..ctx.n()).map(|i| ctx.diagonal_trace(i) * grid.weights[i]).sum()
}

fn ln_phi_term(n: u32, ln_z: f64) -> f64 {
    let nf = n as f64;
    0.5 * (nf + 2.0) * nf.ln() - libm::lgamma(nf + 1.0) + nf * ln_z
}

/// ln Φ(z) for Φ(z) = Σ_{n≥1} n^{(n+2)/2}/n! zⁿ; −∞ at z = 0.
pub fn ln_phi(z: f64) -> f64 {
    assert!(z >= 0.0, "phi needs z >= 0");
    if z == 0.0 {
        return f64::NEG_INFINITY;
    }
    let ln_z = z.ln();
    // log-sum-exp over terms, stopping once past the peak and negligible
    let mut max_t = f64::NEG_INFINITY;
    let mut terms = Vec::new();
    let mut n = 1u32;
    loop {
        let t = ln_phi_term(n, ln_z);
        terms.push(t);
        if t > max_t {
            max_t = t;
            if max_t > 1e4 {
                return f64::INFINITY;
            }
        } else if t < max_t + (1e-17f64).ln() - (n as f64).ln() {
            break;
        }
        n += 1;
    }
    max_t + terms.iter().map(|t| (t - max_t).exp()).sum::<f64>().ln()
}

/// Φ(z); +∞ when not representable.
pub fn phi(z: f64) -> f64 {
    ln_phi(z).exp()
}

/// Ψ(z) = 1 + (√π/2) z e^{z²/4} [1 + erf(z/2)].
pub fn psi(z: f64) -> f64 {
    1.0 + 0.5 * PI.sqrt() * z * (z * z / 4.0).exp() * (1.0 + libm::erf(z / 2.0))
}

/// e^{−aL} Φ(2Ck/a).
pub fn truncation_bound(c: f64, a: f64, k: usize, half_width: f64) -> f64 {
    (ln_phi(2.0 * c * k as f64 / a) - a * half_width).exp()
}

/// Sup norms of K and its first derivatives off the diagonal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct KernelNorms {
    pub sup: f64,
    pub sup_dx: f64,
    pub sup_dy: f64,
}

impl KernelNorms {
    /// ‖K‖₁ = max(‖K‖, ‖∂ₓK‖, ‖∂_yK‖).
    pub fn norm_r1(&self) -> f64 {
        self.sup.max(self.sup_dx).max(self.sup_dy)
    }
}

fn max_entry(m: &crate::linalg::CMat2) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Samples a 50×50 sub-lattice of node pairs, skipping pairs within one node of the
/// diagonal; derivatives are one-sided differences that stay on the same side.
pub fn estimate_kernel_norms(ctx: &KernelContext) -> KernelNorms {
    let n = ctx.n();
    let dx = ctx.pulse.dx();
    let samples = 50.min(n);
    let idx: Vec<usize> = (0..samples).map(|k| k * (n - 1) / (samples - 1).max(1)).collect();
    let mut out = KernelNorms::default();
    for &i in &idx {
        for &j in &idx {
            if i.abs_diff(j) <= 1 {
                continue;
            }
            let k = ctx.kernel_effective(i, j);
            out.sup = out.sup.max(max_entry(&k));
            // step away from the diagonal so both points share a branch
            let ix = if i > j { (i + 1).min(n - 1) } else { i.saturating_sub(1) };
            let jy = if i > j { j.saturating_sub(1) } else { (j + 1).min(n - 1) };
            if ix != i {
                let d = (ctx.kernel_effective(ix, j) - k) * Complex64::new(1.0 / ((ix as f64 - i as f64) * dx), 0.0);
                out.sup_dx = out.sup_dx.max(max_entry(&d));
            }
            if jy != j {
                let d = (ctx.kernel_effective(i, jy) - k) * Complex64::new(1.0 / ((jy as f64 - j as f64) * dx), 0.0);
                out.sup_dy = out.sup_dy.max(max_entry(&d));
            }
        }
    }
    out
}

/// (2(πe/8)/√(2π)) Φ(4kL‖K‖₁) Δx.
pub fn quadrature_bound(norms: &KernelNorms, half_width: f64, dx: f64, k: usize) -> f64 {
    let pre = 2.0 * (PI * std::f64::consts::E / 8.0) / (2.0 * PI).sqrt();
    pre * dx * phi(4.0 * k as f64 * half_width * norms.norm_r1())
}

/// Parametric path in the spectral plane, t ∈ [0, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Path {
    Segment { from: Complex64, to: Complex64 },
    /// Straight line from `from` to the edge of an essential-spectrum branch.
    RayToEdge { from: Complex64, branch: Branch },
}

impl Path {
    pub fn point(&self, params: &CgleParams, t: f64) -> Complex64 {
        let (a, b) = match *self {
            Path::Segment { from, to } => (from, to),
            Path::RayToEdge { from, branch } => (from, params.edge(branch)),
        };
        a + (b - a) * t
    }

    /// `samples` equally spaced parameter values covering [0, 1].
    pub fn sample(&self, params: &CgleParams, samples: usize) -> Vec<Complex64> {
        (0..samples)
            .map(|k| {
                let t = if samples == 1 { 0.0 } else { k as f64 / (samples - 1) as f64 };
                self.point(params, t)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ScanOutcome {
    Ok(DetResult),
    NearEssential,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub lambda: Complex64,
    pub outcome: ScanOutcome,
}

impl ScanPoint {
    pub fn flag(&self) -> String {
        match &self.outcome {
            ScanOutcome::Ok(r) if r.overflowed() => "overflow".into(),
            ScanOutcome::Ok(_) => "ok".into(),
            ScanOutcome::NearEssential => "near-essential".into(),
            ScanOutcome::Failed(msg) => format!("error: {msg}"),
        }
    }
}

/// Evaluates the determinants along `path`; points too close to the essential
/// spectrum are skipped with a flag. Results are in path order.
pub fn scan(pulse: &Pulse, path: &Path, samples: usize, form: KernelForm) -> Vec<ScanPoint> {
    scan_points(pulse, &path.sample(&pulse.params, samples), form)
}

pub fn scan_points(pulse: &Pulse, lambdas: &[Complex64], form: KernelForm) -> Vec<ScanPoint> {
    lambdas
        .par_iter()
        .map(|&lambda| {
            let outcome = if dist_to_essential(&pulse.params, lambda) <= EPS_ESS {
                ScanOutcome::NearEssential
            } else {
                match determinant(pulse, lambda, form) {
                    Ok(r) => ScanOutcome::Ok(r),
                    Err(Error::TooCloseToEssentialSpectrum { .. }) => ScanOutcome::NearEssential,
                    Err(e) => ScanOutcome::Failed(e.to_string()),
                }
            };
            ScanPoint { lambda, outcome }
        })
        .collect()
}

/// One row of the scan CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub d1_re: Option<f64>,
    pub d1_im: Option<f64>,
    pub d2_re: Option<f64>,
    pub d2_im: Option<f64>,
    pub trace_re: Option<f64>,
    pub trace_im: Option<f64>,
    pub log10_abs_d1: Option<f64>,
    pub log10_abs_d2: Option<f64>,
    pub flag: String,
}

impl From<&ScanPoint> for ScanRow {
    fn from(p: &ScanPoint) -> Self {
        let mut row = ScanRow {
            lambda_re: p.lambda.re,
            lambda_im: p.lambda.im,
            d1_re: None,
            d1_im: None,
            d2_re: None,
            d2_im: None,
            trace_re: None,
            trace_im: None,
            log10_abs_d1: None,
            log10_abs_d2: None,
            flag: p.flag(),
        };
        if let ScanOutcome::Ok(r) = &p.outcome {
            row.d1_re = r.d1.map(|z| z.re);
            row.d1_im = r.d1.map(|z| z.im);
            row.d2_re = r.d2.map(|z| z.re);
            row.d2_im = r.d2.map(|z| z.im);
            row.trace_re = Some(r.trace_q.re);
            row.trace_im = Some(r.trace_q.im);
            row.log10_abs_d1 = Some(r.log_abs_d1 / std::f64::consts::LN_10);
            row.log10_abs_d2 = Some(r.log_abs_d2 / std::f64::consts::LN_10);
        }
        row
    }
}

pub fn write_scan_csv<W: Write>(points: &[ScanPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(ScanRow::from(p))?;
    }
    if points.is_empty() {
        w.write_record([
            "lambda_re", "lambda_im", "d1_re", "d1_im", "d2_re", "d2_im", "trace_re", "trace_im", "log10_abs_d1",
            "log10_abs_d2", "flag",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scan_csv<R: Read>(input: R) -> Result<Vec<ScanRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::sech_pulse;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_panel() {
        let g = simpson_grid(1.0, 3).unwrap();
        assert_eq!(g.weights, vec![1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]);
        assert_abs_diff_eq!(g.integrate(g.nodes.iter().map(|x| x * x)), 2.0 / 3.0, epsilon = 1e-15);
        assert!(matches!(simpson_grid(1.0, 4), Err(Error::InvalidNodeCount(4))));
    }

    #[test]
    fn odd_integrand_and_weight_sum() {
        let g = simpson_grid(7.325, 251).unwrap();
        assert!(g.integrate(g.nodes.iter().map(|x| x.sin())).abs() < 1e-15);
        assert_abs_diff_eq!(g.weights.iter().sum::<f64>(), 2.0 * 7.325, epsilon = 1e-12);
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.0), 0.0);
        assert_abs_diff_eq!(phi(1e-9), 1e-9, epsilon = 1e-17);
        // direct partial sums
        let direct: f64 = (1..200)
            .map(|n: i32| {
                let nf = n as f64;
                (0.5 * (nf + 2.0) * nf.ln() - libm::lgamma(nf + 1.0) + nf * 2f64.ln()).exp()
            })
            .sum();
        assert!((phi(2.0) - direct).abs() < 1e-12 * direct);
        for z in [0.1, 1.0, 2.0] {
            assert!(phi(z) <= z * psi(z * 2f64.sqrt() * std::f64::consts::E));
        }
        assert_eq!(phi(1e6), f64::INFINITY);
    }

    #[test]
    fn truncation_bound_doubling() {
        let (l, a) = (3.0, 0.7);
        let r = truncation_bound(1.0, a, 2, 2.0 * l) / truncation_bound(1.0, a, 2, l);
        assert_abs_diff_eq!(r, (-a * l).exp(), epsilon = 1e-12 * r);
        assert_abs_diff_eq!(truncation_bound(1.0, 1.0, 2, 10.0), (-10.0f64).exp() * phi(4.0), epsilon = 1e-12);
    }

    #[test]
    fn zero_pulse_determinant() {
        let mut p = sech_pulse(5.0, 21).unwrap();
        p.psi.iter_mut().for_each(|v| *v = nalgebra::Vector2::zeros());
        let r = determinant(&p, Complex64::new(0.3, 0.0), KernelForm::Eff2).unwrap();
        assert_eq!(r.d1, Some(Complex64::new(1.0, 0.0)));
        assert_eq!(r.d2, Some(Complex64::new(1.0, 0.0)));
        assert_eq!(r.log_abs_d1, 0.0);
    }

    #[test]
    fn empty_scan() {
        let p = sech_pulse(5.0, 21).unwrap();
        let path = Path::Segment { from: Complex64::new(-1.0, 0.0), to: Complex64::new(1.0, 0.0) };
        assert!(scan(&p, &path, 0, KernelForm::Eff2).is_empty());
    }
}
