//! Point spectra of stationary pulses of the cubic-quintic complex
//! Ginzburg-Landau equation.
//!
//! Eigenvalues of the operator linearized about a pulse are located as zeros of
//! a Nyström (composite Simpson) discretization of the Fredholm determinant of a
//! Birman-Schwinger operator. The kernel of that operator is semi-separable and is
//! evaluated from the diagonalized asymptotic system, so only decaying exponentials
//! ever appear. Closed-form oracles for the hyperbolic secant pulse of the focusing
//! NLSE are included for validation.

pub mod asymptotic;
pub mod cgle;
pub mod eigen;
pub mod error;
pub mod fredholm;
pub mod kernel;
pub mod linalg;
pub mod oracles;
pub mod pulse;
pub mod validation;

pub use num_complex::Complex64;

pub use asymptotic::{diagonalize, sigma_pm, DiagCase, Diagonalization, SigmaPair, EPS_ESS};
pub use cgle::{
    check_hypotheses, dist_to_essential, essential_spectrum, Branch, CgleParams, DecayFit,
    HypothesisReport, Pulse,
};
pub use eigen::{find_point_spectrum, Contour, RootReport, SearchConfig};
pub use error::{Error, Result};
pub use fredholm::{det_p, determinant, scan, simpson_grid, DetResult, KernelForm, Path, QuadratureGrid};
pub use kernel::KernelContext;
pub use pulse::{evolve_to_stationary, load_pulse, save_pulse, sech_pulse, EvolveConfig, InitialCondition};
pub use validation::{validate_sech, ValidationReport};
