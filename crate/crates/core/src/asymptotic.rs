//! Spectral data of the constant-coefficient system at spatial infinity,
//! A∞(λ) = [[0, I], [B⁻¹(λ − N₀), 0]].

use crate::cgle::{dist_to_essential, CgleParams};
use crate::error::{Error, Result};
use crate::linalg::{complexify2, frob_c4, CMat2, CMat4};
use num_complex::Complex64;
use serde::Serialize;

/// Distance to the essential spectrum below which σ± are not computed.
pub const EPS_ESS: f64 = 1e-8;

const REPEATED_TOL: f64 = 1e-12;
const ILL_CONDITIONED_TOL: f64 = 1e-6;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaPair {
    pub sigma_plus: Complex64,
    pub sigma_minus: Complex64,
    /// σ±² = a ± ib
    pub a: Complex64,
    pub b: Complex64,
}

impl SigmaPair {
    pub fn kappa_plus(&self) -> f64 {
        self.sigma_plus.re
    }
    pub fn kappa_minus(&self) -> f64 {
        self.sigma_minus.re
    }
    pub fn eta_plus(&self) -> f64 {
        self.sigma_plus.im
    }
    pub fn eta_minus(&self) -> f64 {
        self.sigma_minus.im
    }
    pub fn kappa1(&self) -> f64 {
        self.kappa_plus().min(self.kappa_minus())
    }
    pub fn kappa2(&self) -> f64 {
        self.kappa_plus().max(self.kappa_minus())
    }
}

/// (a, b) with σ±² = a ± ib.
pub fn sigma_coefficients(params: &CgleParams, lambda: Complex64) -> (Complex64, Complex64) {
    let db = params.det_b();
    let w = lambda - params.delta;
    let a = (w * params.beta - 0.5 * params.d * params.alpha) / db;
    let b = -(w * (0.5 * params.d) + params.alpha * params.beta) / db;
    (a, b)
}

pub fn sigma_pm(params: &CgleParams, lambda: Complex64) -> Result<SigmaPair> {
    let distance = dist_to_essential(params, lambda);
    if distance <= EPS_ESS {
        return Err(Error::TooCloseToEssentialSpectrum { lambda, distance });
    }
    let (a, b) = sigma_coefficients(params, lambda);
    Ok(SigmaPair { sigma_plus: (a + I * b).sqrt(), sigma_minus: (a - I * b).sqrt(), a, b })
}

pub fn a_inf_matrix(params: &CgleParams, lambda: Complex64) -> CMat4 {
    let lower = complexify2(&params.b_inv()) * (CMat2::identity() * lambda - complexify2(&params.n0()));
    let mut a = CMat4::zeros();
    a[(0, 2)] = c(1.0);
    a[(1, 3)] = c(1.0);
    a.fixed_view_mut::<2, 2>(2, 0).copy_from(&lower);
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DiagCase {
    Distinct,
    Repeated,
}

/// A∞ = P·diag(d)·P⁻¹ with the two stable modes first.
#[derive(Clone, Debug)]
pub struct Diagonalization {
    pub case: DiagCase,
    pub sigma: SigmaPair,
    pub p: CMat4,
    pub d: [Complex64; 4],
    pub pinv: CMat4,
    /// Projection onto the stable subspace.
    pub q: CMat4,
    pub cond_fro: f64,
    /// σ+ and σ− are close enough that P is nearly singular.
    pub ill_conditioned: bool,
}

impl Diagonalization {
    pub fn d_matrix(&self) -> CMat4 {
        CMat4::from_diagonal(&self.d.into())
    }

    /// P·diag(e^{d t}) restricted by `mask`·P⁻¹.
    pub fn exp_masked(&self, t: f64, mask: [bool; 4]) -> CMat4 {
        let e: [Complex64; 4] =
            std::array::from_fn(|k| if mask[k] { (self.d[k] * t).exp() } else { c(0.0) });
        self.p * CMat4::from_diagonal(&e.into()) * self.pinv
    }
}

pub fn diagonalize(params: &CgleParams, lambda: Complex64) -> Result<Diagonalization> {
    let sigma = sigma_pm(params, lambda)?;
    let (a, b) = (sigma.a, sigma.b);
    let scale = 1.0 + a.norm();
    let (case, p, d, pinv) = if b.norm() <= REPEATED_TOL * scale {
        let s = a.sqrt();
        let o = c(0.0);
        let l = c(1.0);
        #[rustfmt::skip]
        let p = CMat4::new(
            o, l, o, l,
            l, o, l, o,
            o, -s, o, s,
            -s, o, s, o,
        );
        let r = s.inv();
        #[rustfmt::skip]
        let pinv = CMat4::new(
            o, l, o, -r,
            l, o, -r, o,
            o, l, o, r,
            l, o, r, o,
        ) * c(0.5);
        (DiagCase::Repeated, p, [-s, -s, s, s], pinv)
    } else {
        let (sp, sm) = (sigma.sigma_plus, sigma.sigma_minus);
        let o = c(1.0);
        #[rustfmt::skip]
        let p = CMat4::new(
            I / sm, -I / sp, I / sp, -I / sm,
            -sm.inv(), -sp.inv(), sp.inv(), sm.inv(),
            -I, I, I, -I,
            o, o, o, o,
        );
        #[rustfmt::skip]
        let pinv = CMat4::new(
            -I * sm, -sm, I, o,
            I * sp, -sp, -I, o,
            -I * sp, sp, -I, o,
            I * sm, sm, I, o,
        ) * c(0.25);
        (DiagCase::Distinct, p, [-sm, -sp, sp, sm], pinv)
    };
    let proj = CMat4::from_diagonal(&[c(1.0), c(1.0), c(0.0), c(0.0)].into());
    let q = p * proj * pinv;
    let cond_fro = match case {
        DiagCase::Distinct => cond_closed_form(&sigma),
        DiagCase::Repeated => frob_c4(&p) * frob_c4(&pinv),
    };
    let ill_conditioned = case == DiagCase::Distinct && b.norm() <= ILL_CONDITIONED_TOL * scale;
    Ok(Diagonalization { case, sigma, p, d, pinv, q, cond_fro, ill_conditioned })
}

/// cond_F(P)² = (1/|σ−|² + 1/|σ+|² + 2)(|σ−|² + |σ+|² + 2).
pub fn cond_closed_form(sigma: &SigmaPair) -> f64 {
    let (m2, p2) = (sigma.sigma_minus.norm_sqr(), sigma.sigma_plus.norm_sqr());
    ((1.0 / m2 + 1.0 / p2 + 2.0) * (m2 + p2 + 2.0)).sqrt()
}

pub fn cond_fro(diag: &Diagonalization) -> f64 {
    diag.cond_fro
}

/// |det(λ − N₀ − σ²B)| relative to the scale of its terms; zero for eigenvalues of A∞.
pub fn dispersion_residual(params: &CgleParams, lambda: Complex64, sigma: Complex64) -> f64 {
    let m = CMat2::identity() * lambda - complexify2(&params.n0()) - complexify2(&params.b()) * (sigma * sigma);
    let scale = (lambda.norm() + params.n0().norm() + sigma.norm_sqr() * params.b().norm()).powi(2);
    m.determinant().norm() / scale.max(f64::MIN_POSITIVE)
}
