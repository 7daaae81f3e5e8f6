//! CGLE coefficients, the potential matrix of the linearization, the essential
//! spectrum, and runtime checks of the trace-class hypotheses.

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use nalgebra::Vector2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Coefficients of
/// ψ_t = (β + iD/2)ψ_xx + δψ + (ε + iγ)|ψ|²ψ + (μ + iν)|ψ|⁴ψ
/// and the phase rate α of the stationary solution e^{−iαt}ψ(x).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgleParams {
    #[serde(rename = "D")]
    pub d: f64,
    pub beta: f64,
    pub gamma: f64,
    pub nu: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub mu: f64,
    pub alpha: f64,
}

impl CgleParams {
    /// Focusing NLSE, whose stationary solution is sech(x) with α = −1/2.
    pub fn nlse() -> Self {
        Self { d: 1.0, beta: 0.0, gamma: 1.0, nu: 0.0, delta: 0.0, epsilon: 0.0, mu: 0.0, alpha: -0.5 }
    }

    /// Fiber-laser regime with a stable pulse whose spectrum has a slowly
    /// decaying oscillatory pair. α must be measured by evolution.
    pub fn fiber_laser() -> Self {
        Self { d: -0.001, beta: 0.08, gamma: 1.0, nu: 10.0, delta: -0.01, epsilon: 1.0, mu: -3.0, alpha: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.d, self.beta, self.gamma, self.nu, self.delta, self.epsilon, self.mu, self.alpha];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("coefficients must be finite".into()));
        }
        if self.d == 0.0 && self.beta == 0.0 {
            return Err(Error::InvalidParams("(D, beta) must not both vanish".into()));
        }
        if self.beta < 0.0 {
            return Err(Error::InvalidParams(format!("beta must be nonnegative, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn det_b(&self) -> f64 {
        self.beta * self.beta + 0.25 * self.d * self.d
    }

    pub fn b(&self) -> Mat2 {
        Mat2::new(self.beta, -0.5 * self.d, 0.5 * self.d, self.beta)
    }

    pub fn b_inv(&self) -> Mat2 {
        Mat2::new(self.beta, 0.5 * self.d, -0.5 * self.d, self.beta) / self.det_b()
    }

    pub fn n0(&self) -> Mat2 {
        Mat2::new(self.delta, -self.alpha, self.alpha, self.delta)
    }

    pub fn n1(&self) -> Mat2 {
        Mat2::new(self.epsilon, -self.gamma, self.gamma, self.epsilon)
    }

    pub fn n2(&self) -> Mat2 {
        Mat2::new(self.mu, -self.nu, self.nu, self.mu)
    }

    /// Edge δ + iα (plus) or δ − iα (minus) of an essential-spectrum branch.
    pub fn edge(&self, branch: Branch) -> Complex64 {
        Complex64::new(self.delta, branch.sign() * self.alpha)
    }

    fn branch_direction(&self, branch: Branch) -> Complex64 {
        -Complex64::new(self.beta, branch.sign() * 0.5 * self.d)
    }
}

/// Returns (B, N₀, N₁, N₂).
pub fn coeff_matrices(params: &CgleParams) -> Result<(Mat2, Mat2, Mat2, Mat2)> {
    if params.d == 0.0 && params.beta == 0.0 {
        return Err(Error::InvalidParams("(D, beta) must not both vanish".into()));
    }
    Ok((params.b(), params.n0(), params.n1(), params.n2()))
}

/// M = N₁|ψ|² + N₂|ψ|⁴ + (2N₁ + 4N₂|ψ|²)ψψᵀ.
pub fn potential_matrix(params: &CgleParams, psi: Vector2<f64>) -> Mat2 {
    let s = psi.norm_squared();
    let n1 = params.n1();
    let n2 = params.n2();
    n1 * s + n2 * (s * s) + (n1 * 2.0 + n2 * (4.0 * s)) * (psi * psi.transpose())
}

/// Closed form of det M in terms of s = |ψ|².
pub fn det_m(params: &CgleParams, s: f64) -> f64 {
    let a = Vector2::new(params.epsilon, params.gamma);
    let b = Vector2::new(params.mu, params.nu);
    let c = a + b * s;
    s * s * (3.0 * c.norm_squared() + 2.0 * s * c.dot(&b))
}

/// Smallest positive root of 3|a|² + 8a·b t + 5|b|²t², if real and positive.
pub fn r_minus(params: &CgleParams) -> Option<f64> {
    let a2 = params.epsilon.powi(2) + params.gamma.powi(2);
    let b2 = params.mu.powi(2) + params.nu.powi(2);
    if a2 == 0.0 || b2 == 0.0 {
        return None;
    }
    let ab = params.epsilon * params.mu + params.gamma * params.nu;
    let disc = 16.0 * ab * ab - 15.0 * a2 * b2;
    if disc < 0.0 {
        return None;
    }
    let r = (-4.0 * ab - disc.sqrt()) / (5.0 * b2);
    (r > 0.0).then_some(r)
}

/// The two half-lines of the essential spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// λ = (δ + iα) − s(β + iD/2), s ≥ 0
    Plus,
    /// λ = (δ − iα) − s(β − iD/2), s ≥ 0
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EssentialSpectrum {
    pub plus: Vec<Complex64>,
    pub minus: Vec<Complex64>,
    pub edge_plus: Complex64,
    pub edge_minus: Complex64,
}

/// Samples both branches at `count` values of the real parameter in [0, mu_max].
pub fn essential_spectrum(params: &CgleParams, mu_max: f64, count: usize) -> EssentialSpectrum {
    let sample = |branch| {
        let e = params.edge(branch);
        let dir = params.branch_direction(branch);
        (0..count)
            .map(|k| {
                if k == 0 {
                    return e;
                }
                let m = mu_max * k as f64 / (count - 1) as f64;
                e + dir * (m * m)
            })
            .collect::<Vec<_>>()
    };
    EssentialSpectrum {
        plus: sample(Branch::Plus),
        minus: sample(Branch::Minus),
        edge_plus: params.edge(Branch::Plus),
        edge_minus: params.edge(Branch::Minus),
    }
}

/// Euclidean distance from λ to the union of the two branches.
pub fn dist_to_essential(params: &CgleParams, lambda: Complex64) -> f64 {
    [Branch::Plus, Branch::Minus]
        .into_iter()
        .map(|br| {
            let e = params.edge(br);
            let d = params.branch_direction(br);
            let w = lambda - e;
            let t = ((w * d.conj()).re / d.norm_sqr()).max(0.0);
            (w - d * t).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Constants of ‖R(x)‖ ≤ C_R e^{−a_R|x|}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c_r: f64,
    pub a_r: f64,
}

/// A stationary profile sampled on x_i = −L + iΔx, i = 0..n−1, Δx = 2L/(n−1).
#[derive(Clone, Debug, PartialEq)]
pub struct Pulse {
    pub params: CgleParams,
    pub half_width: f64,
    pub psi: Vec<Vector2<f64>>,
    /// Phase rate measured from evolution, equal to `params.alpha` otherwise.
    pub alpha_phase: f64,
    pub provenance: String,
    pub decay_fit: Option<DecayFit>,
}

impl Pulse {
    pub fn new(params: CgleParams, half_width: f64, psi: Vec<Vector2<f64>>, provenance: impl Into<String>) -> Result<Self> {
        let n = psi.len();
        if n < 3 || n % 2 == 0 {
            return Err(Error::InvalidNodeCount(n));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidInput(format!("half width must be positive, got {half_width}")));
        }
        if psi.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidInput("pulse samples must be finite".into()));
        }
        params.validate()?;
        Ok(Self { params, half_width, psi, alpha_phase: params.alpha, provenance: provenance.into(), decay_fit: None })
    }

    pub fn n(&self) -> usize {
        self.psi.len()
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.n() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.node(i)).collect()
    }

    pub fn abs_sq(&self, i: usize) -> f64 {
        self.psi[i].norm_squared()
    }

    /// ‖R(x_i)‖_F = ‖B⁻¹M(x_i)‖_F.
    pub fn r_norm(&self, i: usize) -> f64 {
        (self.params.b_inv() * potential_matrix(&self.params, self.psi[i])).norm()
    }

    pub fn with_decay_fit(mut self) -> Self {
        self.decay_fit = fit_decay(&self).0;
        self
    }
}

/// Least-squares fit of log‖R(x)‖ against |x| on the outer quarter of each tail.
///
/// Returns the fit (if both tails decay) and warnings.
pub fn fit_decay(pulse: &Pulse) -> (Option<DecayFit>, Vec<String>) {
    let n = pulse.n();
    let q = (n / 4).max(2);
    let mut warnings = Vec::new();
    let mut slopes = Vec::new();
    let mut intercepts = Vec::new();
    for (side, idx) in [("left", (0..q).collect::<Vec<_>>()), ("right", (n - q..n).collect())] {
        let pts: Vec<(f64, f64)> = idx
            .into_iter()
            .filter(|&i| potential_matrix(&pulse.params, pulse.psi[i]).norm() >= 1e-300)
            .map(|i| (pulse.node(i).abs(), pulse.r_norm(i).ln()))
            .collect();
        if pts.len() < 8 {
            warnings.push(format!("{side} tail fit uses only {} nodes", pts.len()));
        }
        if pts.len() < 2 {
            return (None, warnings);
        }
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx == 0.0 {
            return (None, warnings);
        }
        let slope = sxy / sxx;
        slopes.push(slope);
        intercepts.push(my - slope * mx);
    }
    let a_r = slopes.iter().map(|s| -s).fold(f64::INFINITY, f64::min);
    if !(a_r > 0.0 && a_r.is_finite()) {
        warnings.push(format!("tails do not decay (fitted rate {a_r})"));
        return (None, warnings);
    }
    let mut c_r = intercepts.iter().map(|c| c.exp()).fold(0.0, f64::max);
    for i in 0..n {
        c_r = c_r.max(pulse.r_norm(i) * (a_r * pulse.node(i).abs()).exp());
    }
    (Some(DecayFit { c_r, a_r }), warnings)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub b_d_ok: bool,
    pub decay_ok: bool,
    pub decay_fit: Option<DecayFit>,
    pub nonvanishing_ok: bool,
    /// a = (ε, γ) and b = (μ, ν) are not both zero
    pub coefficients_ok: bool,
    pub r_minus: Option<f64>,
    pub amplitude_ok: bool,
    pub det_m_positive: bool,
    pub trace_class: bool,
    pub warnings: Vec<String>,
}

pub fn check_hypotheses(pulse: &Pulse) -> HypothesisReport {
    let p = &pulse.params;
    let b_d_ok = p.beta >= 0.0 && (p.d, p.beta) != (0.0, 0.0);
    let (decay_fit, warnings) = fit_decay(pulse);
    let decay_ok = decay_fit.is_some();
    let nonvanishing_ok = (0..pulse.n()).all(|i| pulse.abs_sq(i) > 0.0);
    let coefficients_ok = [p.epsilon, p.gamma, p.mu, p.nu].iter().any(|&v| v != 0.0);
    let r_minus = r_minus(p);
    let max_sq = (0..pulse.n()).map(|i| pulse.abs_sq(i)).fold(0.0, f64::max);
    let amplitude_ok = r_minus.map_or(true, |r| max_sq < r);
    let det_m_positive = pulse.psi.iter().all(|&psi| potential_matrix(p, psi).determinant() > 0.0);
    let trace_class = b_d_ok && decay_ok && nonvanishing_ok && coefficients_ok && amplitude_ok && det_m_positive;
    HypothesisReport {
        b_d_ok,
        decay_ok,
        decay_fit,
        nonvanishing_ok,
        coefficients_ok,
        r_minus,
        amplitude_ok,
        det_m_positive,
        trace_class,
        warnings,
    }
}
