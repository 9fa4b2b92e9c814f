//! Exact null-controllability of diagonalizable linear evolution equations.
//!
//! A system `x_j' = λ_j x_j + b_j u(t)` is steered to zero at `t1` by a scalar
//! control that vanishes after `L = t1 - T` exactly when the exponential moment
//! problem
//!
//! ```text
//! -x_{0j} = ∫_0^L e^{-λ_j τ} b_j u(τ) dτ,   j = 1, 2, ...
//! ```
//!
//! is solvable. This crate works at a finite truncation order `n`: it builds the
//! Gram matrices of the exponential family, tracks their minimal eigenvalues,
//! solves the truncated moment problem in minimum norm, simulates the modal
//! system to certify the result and measures how spectrum perturbations affect
//! all of the above.
//!
//! Module map:
//!
//! * [`spectrum`]: spectra, input vectors, exponential families, problems.
//! * [`gram`] and [`eigen`]: closed-form Gram matrices, quadrature oracle and a
//!   Hermitian Jacobi eigensolver.
//! * [`minimality`]: classification of minimal-eigenvalue profiles.
//! * [`moment`]: minimum-norm moment solutions and biorthogonal families.
//! * [`synthesis`]: null-control synthesis from an initial state.
//! * [`simulator`]: modal mild solution and verification at `t1`.
//! * [`perturbation`]: deviation ratios and transferred lower bounds.
//! * [`io`], [`demos`] and [`cli`]: file formats, built-in pipelines and the
//!   command-line front end.

pub mod cli;
pub mod demos;
pub mod eigen;
pub mod error;
pub mod gram;
pub mod io;
pub mod linalg;
pub mod minimality;
pub mod moment;
pub mod numeric;
pub mod perturbation;
pub mod quadrature;
pub mod simulator;
pub mod spectrum;
pub mod synthesis;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
