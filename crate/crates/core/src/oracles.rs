//! Closed-form references: the Evans function of the NLSE sech pulse, the trace of
//! the Birman-Schwinger operator for a general pulse, and the resulting prediction
//! for the 2-modified determinant.

use crate::asymptotic::sigma_pm;
use crate::cgle::{Branch, CgleParams, Pulse};
use crate::error::{Error, Result};
use crate::fredholm::{simpson_grid, QuadratureGrid};
use crate::kernel::KernelContext;
use num_complex::Complex64;
use serde::Serialize;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// E(λ) = −16λ⁴ / ([1 + √(1−2iλ)]⁴ [1 + √(1+2iλ)]⁴), principal square roots.
pub fn evans_sech(lambda: Complex64) -> Complex64 {
    let p = 1.0 + (1.0 - 2.0 * I * lambda).sqrt();
    let m = 1.0 + (1.0 + 2.0 * I * lambda).sqrt();
    -16.0 * lambda.powi(4) / (p * m).powi(4)
}

/// −E(λ): the sech Evans function with the normalization of det(I + K), which tends
/// to 1 as |λ| → ∞ where E itself tends to −1.
pub fn evans_sech_unit(lambda: Complex64) -> Complex64 {
    -evans_sech(lambda)
}

/// Ê(λ) = λ⁴ / ((1 + √(1−λ))⁴ (1 + √(1+λ))⁴), the Evans function after λ ↦ −2iλ.
pub fn evans_sech_transformed(lambda: Complex64) -> Result<Complex64> {
    if lambda.im == 0.0 && lambda.re.abs() >= 1.0 {
        return Err(Error::InvalidInput(format!("{lambda} lies on a branch cut")));
    }
    let mu = (1.0 - lambda).sqrt();
    let nu = (1.0 + lambda).sqrt();
    Ok(lambda.powi(4) / ((1.0 + mu) * (1.0 + nu)).powi(4))
}

/// λ-independent data of Tr K(λ) = a₊/√(λ−λ_{e,+}) + a₋/√(λ−λ_{e,−}).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceCoefficients {
    pub a_plus: Complex64,
    pub a_minus: Complex64,
    pub lambda_edge_plus: Complex64,
    pub lambda_edge_minus: Complex64,
    /// ∫|ψ|²
    pub i2: f64,
    /// ∫|ψ|⁴
    pub i4: f64,
    /// 4ε I2 + 6μ I4 and 4γ I2 + 6ν I4
    pub c1: f64,
    pub c2: f64,
    #[serde(skip)]
    pub params: CgleParams,
}

pub fn trace_coefficients(pulse: &Pulse) -> Result<TraceCoefficients> {
    let grid = simpson_grid(pulse.half_width, pulse.n())?;
    let i2 = grid.integrate((0..pulse.n()).map(|i| pulse.abs_sq(i)));
    let i4 = grid.integrate((0..pulse.n()).map(|i| pulse.abs_sq(i).powi(2)));
    let p = pulse.params;
    let c1 = 4.0 * p.epsilon * i2 + 6.0 * p.mu * i4;
    let c2 = 4.0 * p.gamma * i2 + 6.0 * p.nu * i4;
    let c = Complex64::new(c1, c2);
    let half_d = Complex64::new(0.0, 0.5 * p.d);
    Ok(TraceCoefficients {
        a_plus: -c / (4.0 * (p.beta + half_d).sqrt()),
        a_minus: -c.conj() / (4.0 * (p.beta - half_d).sqrt()),
        lambda_edge_plus: p.edge(Branch::Plus),
        lambda_edge_minus: p.edge(Branch::Minus),
        i2,
        i4,
        c1,
        c2,
        params: p,
    })
}

/// Tr K(λ) built from 1/σ±(λ).
pub fn trace_k(coeffs: &TraceCoefficients, lambda: Complex64) -> Result<Complex64> {
    let p = &coeffs.params;
    let s = sigma_pm(p, lambda)?;
    let c = Complex64::new(coeffs.c1, coeffs.c2);
    let half_d = Complex64::new(0.0, 0.5 * p.d);
    let db = 4.0 * p.det_b();
    Ok(-c * (p.beta - half_d) / (db * s.sigma_plus) - c.conj() * (p.beta + half_d) / (db * s.sigma_minus))
}

/// a₊/√(λ−λ_{e,+}) + a₋/√(λ−λ_{e,−}) with principal roots; agrees with
/// [`trace_k`] wherever the principal branches of the two forms coincide.
pub fn trace_k_edge_form(coeffs: &TraceCoefficients, lambda: Complex64) -> Complex64 {
    coeffs.a_plus / (lambda - coeffs.lambda_edge_plus).sqrt() + coeffs.a_minus / (lambda - coeffs.lambda_edge_minus).sqrt()
}

/// A complex number as log-modulus and argument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogValue {
    pub log_abs: f64,
    pub arg: f64,
}

/// det₂ = e^{−Tr K} · E with E the Evans function (or d₁).
pub fn det2_prediction(coeffs: &TraceCoefficients, lambda: Complex64, evans: Complex64) -> Result<LogValue> {
    let t = trace_k(coeffs, lambda)?;
    Ok(LogValue { log_abs: -t.re + evans.norm().ln(), arg: evans.arg() - t.im })
}

pub fn det2_prediction_sech(pulse: &Pulse, lambda: Complex64) -> Result<LogValue> {
    det2_prediction(&trace_coefficients(pulse)?, lambda, evans_sech(lambda))
}

/// Θ = ∫ Tr(Q(λ) R(x)) dx by the Simpson rule; Tr K_Q ≈ −Θ.
pub fn theta_integral(ctx: &KernelContext, grid: &QuadratureGrid) -> Complex64 {
    (0..ctx.n()).map(|i| ctx.trace_q_r(i) * grid.weights[i]).sum()
}
