//! Numerical toolkit for incompressible 3-D magnetohydrodynamics and the
//! pressure-based regularity quantities built on it.
//!
//! * [`grid`], [`spectral`], [`quadrature`]: periodic grids, FFTs, spectral
//!   operators and integration rules.
//! * [`solver`]: pseudo-spectral integrating-factor RK4 time stepping.
//! * [`pressure`]: periodic and free-space pressure recovery, the
//!   near/far split of the pressure integral.
//! * [`logpot`]: the log-modulated functionals `F_gamma`, `Phi_gamma` and
//!   ball potential bounds.
//! * [`kernels`]: closed-form potentials of power-law ball densities with
//!   quadrature and finite-difference cross-checks.
//! * [`identities`]: weighted ball identities, energy inequality and weak
//!   form residuals, trajectory monitors.

pub mod error;
pub mod grid;
pub mod identities;
pub mod kernels;
pub mod logpot;
pub mod pressure;
pub mod quadrature;
pub mod snapshot;
pub mod solver;
pub mod spectral;
pub mod synthetic;

pub use error::{Error, Result};
pub use grid::{Grid, Point, ScalarField, VectorField};
