//! Meshfree solver for stationary convection-diffusion problems on the
//! unit square by unsymmetric Kansa collocation with MultiQuadric radial
//! basis functions and randomly perturbed ("fictitious") centers.
//!
//! Layout:
//! - [`kernel`]: the MultiQuadric kernel and its derivative quantities
//! - [`operators`]: PDE/boundary collocation operators, geometry and the
//!   manufactured reference problem
//! - [`discretization`]: grids, random centers, system assembly
//! - [`linalg`]: dense LU with partial pivoting plus conditioning and
//!   smallest-singular-value diagnostics
//! - [`harness`]: seeded multi-trial benchmark runs and the
//!   nonsingularity probe
//!
//! The numerical core is generic over the scalar type; the aliases below
//! fix the double-precision instantiation used by the CLI.

pub mod discretization;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod operators;
pub mod scalar;

pub use harness::{ExperimentConfig, ProbeReport, TrialResult};
pub use scalar::Real;

/// Double-precision point in the plane.
pub type Point2 = kernel::Point<f64, 2>;
/// Double-precision MultiQuadric kernel.
pub type Kernel = kernel::MQKernel<f64>;
/// Double-precision velocity field in the plane.
pub type Velocity = operators::VelocityField<f64, 2>;
/// Double-precision dense matrix.
pub type Matrix = linalg::DenseMatrix<f64>;
/// Double-precision collocation set.
pub type Collocation = discretization::CollocationSet<f64>;
/// Double-precision center set.
pub type Centers = discretization::CenterSet<f64>;
