#![allow(dead_code)]

pub mod invariants;

use nalgebra::Vector2;
use proptest::prelude::*;
use pulse_spectra::{dist_to_essential, CgleParams, Complex64, Pulse};

pub fn params() -> impl Strategy<Value = CgleParams> {
    (
        (-2.0..2.0f64, 0.0..2.0f64),
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64),
        (-5.0..5.0f64, -5.0..5.0f64, -2.0..2.0f64),
    )
        .prop_filter("B must be invertible", |((d, beta), _, _)| d.abs() + beta > 0.05)
        .prop_map(|((d, beta), (gamma, nu, delta), (epsilon, mu, alpha))| CgleParams {
            d,
            beta,
            gamma,
            nu,
            delta,
            epsilon,
            mu,
            alpha,
        })
}

/// Parameters with a spectral point at least 1e-2 from the essential spectrum.
pub fn params_and_lambda() -> impl Strategy<Value = (CgleParams, Complex64)> {
    (params(), -3.0..3.0f64, -3.0..3.0f64)
        .prop_map(|(p, re, im)| (p, Complex64::new(re, im)))
        .prop_filter("too close to the essential spectrum", |(p, l)| dist_to_essential(p, *l) > 1e-2)
}

/// A localized profile a·sech(x/w)·e^{iθ(x)} on n nodes.
pub fn pulse(n: usize) -> impl Strategy<Value = Pulse> {
    (params(), 0.1..1.5f64, 0.5..2.0f64, -1.0..1.0f64, 3.0..8.0f64).prop_map(move |(p, a, w, chirp, l)| {
        let dx = 2.0 * l / (n - 1) as f64;
        let psi = (0..n)
            .map(|i| {
                let x = -l + i as f64 * dx;
                let amp = a / (x / w).cosh();
                let th = chirp * x * x / 4.0;
                Vector2::new(amp * th.cos(), amp * th.sin())
            })
            .collect();
        Pulse::new(p, l, psi, "test").unwrap()
    })
}

pub fn pulse_and_lambda(n: usize) -> impl Strategy<Value = (Pulse, Complex64)> {
    (pulse(n), -3.0..3.0f64, -3.0..3.0f64)
        .prop_map(|(p, re, im)| (p, Complex64::new(re, im)))
        .prop_filter("too close to the essential spectrum", |(p, l)| dist_to_essential(&p.params, *l) > 1e-2)
}

pub fn rel(a: f64, scale: f64) -> f64 {
    a / scale.max(1.0)
}

// Reference formulas for sech(x) under the NLSE, written independently of the library.

/// Evans function; the regular determinant tends to −E(λ).
pub fn evans_ref(l: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let a = one + (one - 2.0 * i * l).sqrt();
    let b = one + (one + 2.0 * i * l).sqrt();
    -16.0 * l.powi(4) / (a.powi(4) * b.powi(4))
}

/// Tr K for sech(x) and the NLSE: −(∫4|ψ|²)(1/√(1−2iλ) + 1/√(1+2iλ)) with ∫|ψ|² = 2.
pub fn trace_ref(l: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    -4.0 * ((one - 2.0 * i * l).sqrt().inv() + (one + 2.0 * i * l).sqrt().inv())
}
