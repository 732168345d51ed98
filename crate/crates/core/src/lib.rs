//! Riemannian geometry on coordinate charts.
//!
//! A metric is given by closed-form coefficient expressions (or a builtin
//! model space). From it the crate computes Christoffel symbols, curvature
//! and its contractions, geodesics with parallel frames, Jacobi fields and
//! conjugate points, variational quantities and sampled comparison checks.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the bottom of this file fix the scalar to `f64`, which is what the
//! tolerances in the documentation refer to.

pub mod comparison;
pub mod error;
pub mod expr;
pub mod linalg;
pub mod manifold;
pub mod ode;
pub mod quad;
pub mod scalar;
pub mod surfrev;
pub mod tensor;
pub mod transport;
pub mod variation;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Chart = manifold::MetricChart<f64>;
pub type Trajectory = transport::Trajectory<f64>;
pub type CurvatureTensor = tensor::CurvatureTensor<f64>;
pub type Profile = surfrev::Profile<f64>;
pub type CurvatureProfile = comparison::CurvatureProfile<f64>;
pub type RiccatiTrace = comparison::RiccatiTrace<f64>;
pub type FrameField = variation::FrameField<f64>;
pub type JacobiSolution = variation::JacobiSolution<f64>;
pub type ConjugateReport = variation::ConjugateReport<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type OdeSettings = ode::OdeSettings<f64>;
