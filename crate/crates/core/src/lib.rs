//! Numerical toolkit for Fourier summation pairs: measures `μ` on the line
//! and coefficient functions `a` with `∫ φ̂ dμ = Σ a(λ) φ(λ)` for every
//! admissible test function `φ`.
//!
//! Fourier transforms use `f̂(ξ) = ∫ f(x) e^{-2πixξ} dx`.

pub mod error;
pub mod kernels;
pub mod measures;
pub mod nevanlinna;
pub mod quadrature;
pub mod testfn;
pub mod qseries;

pub use error::{Error, Result};
pub use measures::{
    antipodal_split, degree_probe, integrate_against, load_pair, make_guinand, make_meyer,
    make_poisson, Atom, FSPair, SummationFunction, TemperedMeasure,
};
pub use num_complex::Complex64;
pub use testfn::{eval_testfn, ft_testfn, verify_pair, TestFunctionSpec, VerificationReport};
pub use nevanlinna::{
    bridge_rhs, bridge_sum, ef_coeff, f_integral, f_series, fit_q, nev_matrix, neg_index,
    recover_measure, HolomorphicModel, NevMatrix,
};
