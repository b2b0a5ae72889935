//! Numerical engine for Finsleroid–Finsler geometry.
//!
//! A Finsleroid–Finsler space is built from a Riemannian metric `a_ij(x)`, a
//! unit axis 1-form `b_i(x)` and a charge `g(x) ∈ (−2, 2)`. This crate
//! evaluates its metric function, metric and Cartan tensors, spray, connection
//! and curvatures at arbitrary line elements `(x, y)`, and carries the
//! differentiation oracles used to certify every closed form.

pub mod background;
pub mod connection;
pub mod curvature;
pub mod diff;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod scalar;
pub mod spray;
pub mod tensor;
pub mod tensors;

pub use background::{build_point_frame, validate_scenario, BackgroundGeometry, DeclaredProperties, Point, PointFrame};
pub use error::{FinslerError, Result};
pub use harness::{run_suite, Scenario, VerificationReport};
pub use scalar::{Dual, Scalar};
pub use tensor::Tensor;
