//! A desk-scale laboratory for linear dynamical systems.
//!
//! The crate is organised around five areas:
//!
//! * [`measure`]: finite positive measures on the unit circle (atoms plus a
//!   binned density), their convolution algebra, the spectral exponential
//!   and finite-window mixing probes.
//! * [`kalish`]: a grid discretization of the operator `T = M - J` acting on
//!   functions over the circle, whose arc indicators are eigenvectors.
//! * [`gauss`]: Gaussian measures built from quantized eigenvector fields,
//!   with sampling, invariance and symmetry checks and Koopman matrix
//!   coefficients.
//! * [`hits`]: exact combinatorics of visit-time sets (densities, upper
//!   Banach density, difference sets, gaps and runs).
//! * [`lab`]: orbit simulation over a small zoo of operators and the
//!   classification harness that cross-checks the implication diagram.
//!
//! [`config`] and [`runner`] provide the experiment description format and
//! the artifact-producing runner used by the `linlab` binary.

pub mod config;
pub mod error;
pub mod gauss;
pub mod hits;
pub mod kalish;
pub mod lab;
pub mod measure;
pub mod rng;
pub mod runner;
pub mod schema;

pub use error::{LabError, Result};
pub use gauss::{EigenField, GaussModel, Node};
pub use hits::WindowedSet;
pub use kalish::{CircleFunction, KalishMatrix, KalishOperator};
pub use measure::{Atom, CircleMeasure};

pub use num_complex::Complex64;

/// 2π.
pub const TAU: f64 = std::f64::consts::TAU;
