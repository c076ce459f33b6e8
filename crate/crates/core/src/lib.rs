//! Numerical laboratory for stochastic heat equations with reaction terms.
//!
//! The crate simulates `∂_t u = ½Δu + b(u) + σ Ẇ` (and its fractional,
//! colored-noise and bounded-multiplicative variants), detects finite-time
//! blow-up with a truncation ladder, classifies drifts by the Osgood
//! condition `∫^∞ ds / b(s) < ∞`, and checks the Gaussian-process laws of the
//! stochastic convolution against closed forms.
//!
//! Modules, bottom up:
//!
//! * [`drift`]: reaction terms, truncations and the Osgood classifier.
//! * [`kernels`]: heat kernels and Dirichlet spectra.
//! * [`noise`]: bifractional Brownian motion, Riesz-colored noise and exact
//!   spectral simulation of the stochastic convolution.
//! * [`solver`]: the exponential-Euler SPDE scheme, perturbed ODEs and the
//!   Feller comparison diffusion.
//! * [`analysis`]: Monte Carlo ensembles and statistical checks.
//! * [`cli`]: configuration files, subcommands and report files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod drift;
pub mod error;
pub mod kernels;
pub mod noise;
pub mod quad;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
