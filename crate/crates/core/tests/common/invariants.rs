#![allow(dead_code)]
//! Structural invariants shared by the property tests and the acceptance run.

use super::{params_and_lambda, pulse, pulse_and_lambda, rel};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use pulse_spectra::asymptotic::{a_inf_matrix, dispersion_residual};
use pulse_spectra::fredholm::{assemble, ln_phi, psi};
use pulse_spectra::kernel::{perturbation_factors, polar_factors};
use pulse_spectra::linalg::{CMat4, Mat2};
use pulse_spectra::*;

type Outcome = Result<(), TestCaseError>;

pub fn fro(m: &CMat4) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn matrix2() -> impl Strategy<Value = Mat2> {
    prop::array::uniform4(-10.0..10.0f64).prop_map(|v| Mat2::new(v[0], v[1], v[2], v[3]))
}

pub fn cubic() -> impl Strategy<Value = ([f64; 4], f64, usize)> {
    (prop::array::uniform4(-3.0..3.0f64), 0.1..10.0f64, 1usize..60)
}

pub fn z_grid() -> impl Strategy<Value = f64> {
    1e-3..8.0f64
}

pub fn spectral_point() -> impl Strategy<Value = (CgleParams, Complex64)> {
    params_and_lambda()
}

pub fn small_pulse() -> impl Strategy<Value = Pulse> {
    pulse(15)
}

pub fn pulse_point(n: usize) -> impl Strategy<Value = (Pulse, Complex64)> {
    pulse_and_lambda(n)
}

pub fn pdp_residual((p, l): (CgleParams, Complex64)) -> Outcome {
    let d = diagonalize(&p, l).unwrap();
    prop_assume!(!d.ill_conditioned && d.cond_fro < 1e3);
    let a = a_inf_matrix(&p, l);
    let res = fro(&(d.p * d.d_matrix() * d.pinv - a));
    prop_assert!(rel(res, fro(&a)) < 1e-12, "residual {res:e}, cond {}", d.cond_fro);
    let id = fro(&(d.p * d.pinv - CMat4::identity()));
    prop_assert!(id < 1e-12, "P P^-1 off by {id:e}");
    Ok(())
}

pub fn projection_idempotent((p, l): (CgleParams, Complex64)) -> Outcome {
    let d = diagonalize(&p, l).unwrap();
    prop_assume!(!d.ill_conditioned && d.cond_fro < 1e3);
    let q = d.q;
    prop_assert!(rel(fro(&(q * q - q)), fro(&q).powi(2)) < 1e-12);
    prop_assert!((q.trace() - c(2.0, 0.0)).norm() < 1e-12 * fro(&q).max(1.0));
    Ok(())
}

pub fn dispersion((p, l): (CgleParams, Complex64)) -> Outcome {
    let s = sigma_pm(&p, l).unwrap();
    for sigma in [s.sigma_plus, -s.sigma_plus, s.sigma_minus, -s.sigma_minus] {
        let r = dispersion_residual(&p, l, sigma);
        prop_assert!(r < 1e-10, "residual {r:e} for sigma {sigma}");
    }
    Ok(())
}

pub fn diagonal_continuity((pulse, l): (Pulse, Complex64)) -> Outcome {
    let ctx = KernelContext::new(&pulse, l).unwrap();
    for i in 0..pulse.n() {
        let a = ctx.kernel_effective(i, i);
        let b = ctx.kernel_unstable_branch(i, i);
        let scale = a.norm().max(b.norm()).max(1.0);
        prop_assert!((a - b).norm() < 1e-12 * scale, "jump {:e} at node {i}", (a - b).norm());
    }
    Ok(())
}

pub fn factor_product_vanishes(pulse: Pulse) -> Outcome {
    let f = perturbation_factors(&pulse);
    for (tr, tl) in f.t_r.iter().zip(&f.t_l) {
        let mut r_r = CMat4::zeros();
        let mut r_l = CMat4::zeros();
        for a in 0..2 {
            for b in 0..2 {
                r_r[(a, b)] = c(tr[(a, b)], 0.0);
                r_l[(a + 2, b)] = c(tl[(a, b)], 0.0);
            }
        }
        prop_assert_eq!(r_r * r_l, CMat4::zeros());
    }
    Ok(())
}

pub fn full_vs_effective((pulse, l): (Pulse, Complex64)) -> Outcome {
    let ctx = KernelContext::new(&pulse, l).unwrap();
    let grid = simpson_grid(pulse.half_width, pulse.n()).unwrap();
    let full = det_p(l, assemble(&ctx, &grid, KernelForm::Full4).unwrap());
    let eff = det_p(l, assemble(&ctx, &grid, KernelForm::Eff2).unwrap());
    prop_assume!(eff.log_abs_d1.is_finite() && eff.log_abs_d1.abs() < 600.0);
    let (a, b) = (eff.d1.unwrap(), full.d1.unwrap());
    prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(b.norm()), "eff {a}, full {b}");
    prop_assert!((full.trace_q - eff.trace_q).norm() <= 1e-12 * eff.trace_q.norm().max(1.0));
    Ok(())
}

pub fn polar_reconstruction(m: Mat2) -> Outcome {
    prop_assume!(m.determinant().abs() > 1e-6 * m.norm_squared());
    let pol = polar_factors(&m).unwrap();
    prop_assert!((pol.v * pol.abs - m).norm() < 1e-12 * m.norm());
    prop_assert!((pol.v.transpose() * pol.v - Mat2::identity()).norm() < 1e-13);
    prop_assert!((pol.half * pol.half - pol.abs).norm() < 1e-12 * pol.abs.norm());
    prop_assert!((pol.abs - pol.abs.transpose()).norm() < 1e-12 * pol.abs.norm());
    Ok(())
}

pub fn simpson_cubic((coef, half_width, m): ([f64; 4], f64, usize)) -> Outcome {
    let grid = simpson_grid(half_width, 2 * m + 1).unwrap();
    let f = |x: f64| coef[0] + coef[1] * x + coef[2] * x * x + coef[3] * x * x * x;
    let got = grid.integrate(grid.nodes.iter().map(|&x| f(x)));
    let l = half_width;
    let want = 2.0 * coef[0] * l + 2.0 * coef[2] * l.powi(3) / 3.0;
    let scale = coef.iter().map(|v| v.abs()).sum::<f64>() * (1.0 + l).powi(4);
    prop_assert!((got - want).abs() < 1e-12 * scale, "got {got}, want {want}");
    Ok(())
}

pub fn phi_bound(z: f64) -> Outcome {
    let rhs = (z * psi(z * (2.0 * std::f64::consts::E).sqrt())).ln();
    prop_assert!(ln_phi(z) <= rhs + 1e-12, "ln phi {} > ln bound {rhs}", ln_phi(z));
    Ok(())
}
