//! Simulation and verification toolkit for SDEs `dX_t = b(t, X_{t−}) dt + dL_t`
//! driven by Lévy processes.
//!
//! * [`models`]: the catalog of driving processes, exponents, balance
//!   condition and predicted strong rate.
//! * [`samplers`]: exact and bias-controlled increment samplers on
//!   reproducible counter-based streams.
//! * [`em`]: the Euler–Maruyama scheme and the common-noise coupling of a
//!   coarse and a fine grid.
//! * [`harness`]: Monte Carlo estimation and fitting of strong rates.
//! * [`spectral`]: Fourier-side densities, gradient bounds, the semigroup and
//!   a Picard solver for the backward Kolmogorov equation.

pub mod diagnostics;
pub mod em;
pub mod error;
pub mod harness;
pub mod models;
pub mod quadrature;
pub mod rng;
pub mod samplers;
pub mod spectral;

pub use error::{Error, Result};

pub use models::{Family, LevyModel, ModelKind, SubordinatorSpec};
pub use rng::RngStream;
