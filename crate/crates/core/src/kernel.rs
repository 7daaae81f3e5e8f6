//! Polar factorization of the perturbation and the semi-separable kernel of the
//! symmetrized Birman-Schwinger operator.
//!
//! With R = [[0,0],[−B⁻¹M,0]] = R_ℓ R_r, R_r = [[T_r,0],[0,0]] and
//! R_ℓ = [[0,0],[T_ℓ,0]], the kernel is
//!
//! K(x,y) = −R_r(x) Q e^{A∞(x−y)} Q R_ℓ(y)            for x ≥ y,
//! K(x,y) =  R_r(x) (I−Q) e^{A∞(x−y)} (I−Q) R_ℓ(y)    for x < y,
//!
//! and only its top-left 2×2 block is nonzero.

use crate::asymptotic::{diagonalize, Diagonalization};
use crate::cgle::{potential_matrix, Pulse};
use crate::error::{Error, Result};
use crate::linalg::{complexify2, sqrt_spd2, CMat2, CMat4, Mat2};
use num_complex::Complex64;
use serde::Serialize;

const SINGULAR_DET: f64 = 1e-280;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polar {
    /// Orthogonal factor, M = V|M|.
    pub v: Mat2,
    /// |M| = (MᵀM)^{1/2}
    pub abs: Mat2,
    /// |M|^{1/2}
    pub half: Mat2,
}

/// In 2×2, M ± cof(M) is a multiple of the orthogonal factor (a rotation when
/// det M > 0, a reflection when det M < 0), which avoids forming MᵀM.
pub fn polar_factors(m: &Mat2) -> Result<Polar> {
    let det = m.determinant();
    if det == 0.0 {
        return Err(Error::SingularM);
    }
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let n = if det > 0.0 { Mat2::new(a + d, b - c, c - b, a + d) } else { Mat2::new(a - d, b + c, b + c, d - a) };
    let scale = n.column(0).norm();
    if scale == 0.0 {
        return Err(Error::SingularM);
    }
    let v = n / scale;
    let vm = v.transpose() * m;
    let abs = (vm + vm.transpose()) * 0.5;
    let half = sqrt_spd2(&abs);
    Ok(Polar { v, abs, half })
}

/// T_r = |M|^{1/2} and T_ℓ = −B⁻¹V|M|^{1/2} at every node.
#[derive(Clone, Debug)]
pub struct PerturbationFactors {
    pub t_r: Vec<Mat2>,
    pub t_l: Vec<Mat2>,
}

pub fn perturbation_factors(pulse: &Pulse) -> PerturbationFactors {
    let b_inv = pulse.params.b_inv();
    let (t_r, t_l) = pulse
        .psi
        .iter()
        .map(|&psi| {
            let m = potential_matrix(&pulse.params, psi);
            if m.determinant().abs() <= SINGULAR_DET {
                return (Mat2::zeros(), Mat2::zeros());
            }
            match polar_factors(&m) {
                Ok(p) => (p.half, -(b_inv * p.v * p.half)),
                Err(_) => (Mat2::zeros(), Mat2::zeros()),
            }
        })
        .unzip();
    PerturbationFactors { t_r, t_l }
}

fn embed_r(t: &Mat2) -> CMat4 {
    let mut r = CMat4::zeros();
    r.fixed_view_mut::<2, 2>(0, 0).copy_from(&complexify2(t));
    r
}

fn embed_l(t: &Mat2) -> CMat4 {
    let mut r = CMat4::zeros();
    r.fixed_view_mut::<2, 2>(2, 0).copy_from(&complexify2(t));
    r
}

/// Everything needed to evaluate K(x_i, x_j; λ) in O(1).
#[derive(Clone, Debug)]
pub struct KernelContext<'a> {
    pub pulse: &'a Pulse,
    pub lambda: Complex64,
    pub diag: Diagonalization,
    pub factors: PerturbationFactors,
    // −T_r P₁ and S₂ T_ℓ for x ≥ y; T_r P₂ and S₄ T_ℓ for x < y
    left_stable: Vec<CMat2>,
    right_stable: Vec<CMat2>,
    left_unstable: Vec<CMat2>,
    right_unstable: Vec<CMat2>,
    // e^{d_k · m Δx}, k stable, and e^{−d_k · m Δx}, k unstable, for m = 0..n−1
    exp_stable: Vec<[Complex64; 2]>,
    exp_unstable: Vec<[Complex64; 2]>,
}

impl<'a> KernelContext<'a> {
    pub fn new(pulse: &'a Pulse, lambda: Complex64) -> Result<Self> {
        let diag = diagonalize(&pulse.params, lambda)?;
        let factors = perturbation_factors(pulse);
        Ok(Self::with_parts(pulse, lambda, diag, factors))
    }

    pub fn with_parts(pulse: &'a Pulse, lambda: Complex64, diag: Diagonalization, factors: PerturbationFactors) -> Self {
        let p1: CMat2 = diag.p.fixed_view::<2, 2>(0, 0).into();
        let p2: CMat2 = diag.p.fixed_view::<2, 2>(0, 2).into();
        let s2: CMat2 = diag.pinv.fixed_view::<2, 2>(0, 2).into();
        let s4: CMat2 = diag.pinv.fixed_view::<2, 2>(2, 2).into();
        let tr: Vec<CMat2> = factors.t_r.iter().map(complexify2).collect();
        let tl: Vec<CMat2> = factors.t_l.iter().map(complexify2).collect();
        let left_stable = tr.iter().map(|t| -(t * p1)).collect();
        let right_stable = tl.iter().map(|t| s2 * t).collect();
        let left_unstable = tr.iter().map(|t| t * p2).collect();
        let right_unstable = tl.iter().map(|t| s4 * t).collect();

        let n = pulse.n();
        let dx = pulse.dx();
        let d = diag.d;
        let exp_stable = (0..n).map(|m| [(d[0] * (m as f64 * dx)).exp(), (d[1] * (m as f64 * dx)).exp()]).collect();
        let exp_unstable = (0..n).map(|m| [(-d[2] * (m as f64 * dx)).exp(), (-d[3] * (m as f64 * dx)).exp()]).collect();
        Self {
            pulse,
            lambda,
            diag,
            factors,
            left_stable,
            right_stable,
            left_unstable,
            right_unstable,
            exp_stable,
            exp_unstable,
        }
    }

    pub fn n(&self) -> usize {
        self.pulse.n()
    }

    /// Top-left 2×2 block of K(x_i, x_j). The diagonal uses the x ≥ y branch.
    #[inline]
    pub fn kernel_effective(&self, i: usize, j: usize) -> CMat2 {
        if i >= j {
            outer(&self.left_stable[i], &self.exp_stable[i - j], &self.right_stable[j])
        } else {
            outer(&self.left_unstable[i], &self.exp_unstable[j - i], &self.right_unstable[j])
        }
    }

    /// The x < y branch evaluated at (x_i, x_j) with i ≥ j, used to check diagonal continuity.
    pub fn kernel_unstable_branch(&self, i: usize, j: usize) -> CMat2 {
        assert!(i >= j);
        let t = (i - j) as f64 * self.pulse.dx();
        let e = [(self.diag.d[2] * t).exp(), (self.diag.d[3] * t).exp()];
        outer(&self.left_unstable[i], &e, &self.right_unstable[j])
    }

    /// Full 4×4 kernel from the block products −R_r P diag(e) P⁻¹ R_ℓ.
    pub fn kernel_full(&self, i: usize, j: usize) -> CMat4 {
        let t = (i as f64 - j as f64) * self.pulse.dx();
        let (mask, sign) = if i >= j { ([true, true, false, false], -1.0) } else { ([false, false, true, true], 1.0) };
        let g = self.diag.exp_masked(t, mask) * Complex64::new(sign, 0.0);
        embed_r(&self.factors.t_r[i]) * g * embed_l(&self.factors.t_l[j])
    }

    /// Largest real part among the exponents e^{z} used for the pair (i, j).
    pub fn max_exponent_re(&self, i: usize, j: usize) -> f64 {
        let t = (i as f64 - j as f64) * self.pulse.dx();
        let d = &self.diag.d;
        if i >= j {
            (d[0] * t).re.max((d[1] * t).re)
        } else {
            (d[2] * t).re.max((d[3] * t).re)
        }
    }

    /// Tr K(x_i, x_i).
    pub fn diagonal_trace(&self, i: usize) -> Complex64 {
        self.kernel_effective(i, i).trace()
    }

    /// Tr(Q R(x_i)): the integrand of −Tr K in the trace identity.
    pub fn trace_q_r(&self, i: usize) -> Complex64 {
        let r = -(self.pulse.params.b_inv() * potential_matrix(&self.pulse.params, self.pulse.psi[i]));
        (self.diag.q * embed_l(&r)).trace()
    }
}

#[inline(always)]
fn outer(l: &CMat2, e: &[Complex64; 2], r: &CMat2) -> CMat2 {
    let a0 = l[(0, 0)] * e[0];
    let a1 = l[(0, 1)] * e[1];
    let b0 = l[(1, 0)] * e[0];
    let b1 = l[(1, 1)] * e[1];
    CMat2::new(
        a0 * r[(0, 0)] + a1 * r[(1, 0)],
        a0 * r[(0, 1)] + a1 * r[(1, 1)],
        b0 * r[(0, 0)] + b1 * r[(1, 0)],
        b0 * r[(0, 1)] + b1 * r[(1, 1)],
    )
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PointwiseBoundReport {
    /// max ‖K(x,y)‖_F / (√2·cond(P)·C_R·e^{−a_R(|x|+|y|)/2}·e^{−κ₁|x−y|})
    pub max_ratio: f64,
    pub pairs: usize,
}

fn decay_fit(ctx: &KernelContext) -> Result<crate::cgle::DecayFit> {
    ctx.pulse.decay_fit.or_else(|| crate::cgle::fit_decay(ctx.pulse).0).ok_or(Error::MissingDecayFit)
}

pub fn pointwise_bound_check(ctx: &KernelContext) -> Result<PointwiseBoundReport> {
    let fit = decay_fit(ctx)?;
    let kappa1 = ctx.diag.sigma.kappa1();
    let n = ctx.n();
    let pre = 2f64.sqrt() * ctx.diag.cond_fro * fit.c_r;
    let mut max_ratio: f64 = 0.0;
    for i in 0..n {
        let x = ctx.pulse.node(i);
        for j in 0..n {
            let y = ctx.pulse.node(j);
            let bound = pre * (-0.5 * fit.a_r * (x.abs() + y.abs()) - kappa1 * (x - y).abs()).exp();
            let k = ctx.kernel_effective(i, j).norm();
            if k > 0.0 {
                max_ratio = max_ratio.max(k / bound);
            }
        }
    }
    Ok(PointwiseBoundReport { max_ratio, pairs: n * n })
}

/// (32·C_R²·cond²(P)/a_R², Σ w_i w_j ‖K(x_i,x_j)‖²_F).
pub fn hs_norm_estimate(ctx: &KernelContext) -> Result<(f64, f64)> {
    let fit = decay_fit(ctx)?;
    let bound = 32.0 * fit.c_r.powi(2) * ctx.diag.cond_fro.powi(2) / fit.a_r.powi(2);
    let grid = crate::fredholm::simpson_grid(ctx.pulse.half_width, ctx.n())?;
    let n = ctx.n();
    let mut numeric = 0.0;
    for i in 0..n {
        for j in 0..n {
            numeric += grid.weights[i] * grid.weights[j] * ctx.kernel_effective(i, j).norm_squared();
        }
    }
    Ok((bound, numeric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::sech_pulse;

    #[test]
    fn polar_identity() {
        let p = polar_factors(&Mat2::identity()).unwrap();
        assert!((p.v - Mat2::identity()).norm() < 1e-15);
        assert!((p.half - Mat2::identity()).norm() < 1e-15);
    }

    #[test]
    fn polar_nlse_peak() {
        let m = Mat2::new(0.0, -1.0, 3.0, 0.0);
        let p = polar_factors(&m).unwrap();
        assert!((p.abs - Mat2::new(3.0, 0.0, 0.0, 1.0)).norm() < 1e-15);
        assert!((p.half - Mat2::new(3f64.sqrt(), 0.0, 0.0, 1.0)).norm() < 1e-15);
        assert!((p.v - Mat2::new(0.0, -1.0, 1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(polar_factors(&Mat2::zeros()), Err(Error::SingularM)));
    }

    #[test]
    fn factors_multiply_to_perturbation() {
        let pulse = sech_pulse(7.325, 21).unwrap();
        let f = perturbation_factors(&pulse);
        for i in 0..pulse.n() {
            let m = potential_matrix(&pulse.params, pulse.psi[i]);
            let want = -(pulse.params.b_inv() * m);
            assert!((f.t_l[i] * f.t_r[i] - want).norm() <= 1e-12 * want.norm());
            let rr = embed_r(&f.t_r[i]) * embed_l(&f.t_l[i]);
            assert!(rr.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        }
    }

    #[test]
    fn nlse_diagonal_trace() {
        let pulse = sech_pulse(7.325, 51).unwrap();
        let lam = Complex64::new(0.3, 0.1);
        let ctx = KernelContext::new(&pulse, lam).unwrap();
        let i2 = Complex64::new(0.0, 2.0);
        let mu = (1.0 - i2 * lam).sqrt();
        let nu = (1.0 + i2 * lam).sqrt();
        for i in 0..pulse.n() {
            let s2 = (1.0 / pulse.node(i).cosh()).powi(2);
            let want = -(mu.inv() + nu.inv()) * 2.0 * s2;
            assert!((ctx.diagonal_trace(i) - want).norm() < 1e-12, "{i}");
            assert!((ctx.kernel_full(i, i).trace() - want).norm() < 1e-12, "{i}");
        }
    }
}
