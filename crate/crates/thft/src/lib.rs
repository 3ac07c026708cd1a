//! Wheel and anomaly weights for topological-holomorphic theories on `R^m x C^n`.
//!
//! Kernels, Gaussian moments, quadrature and regulator integrals are generic over the real
//! scalar; the aliases below fix it to `f64`, which is what the weight pipelines run on.

pub mod anomaly;
pub mod error;
pub mod exterior;
pub mod gaussian;
pub mod integrand;
pub mod kernels;
pub mod ladder;
pub mod poly;
pub mod quadrature;
pub mod regulator;
pub mod scalar;
pub mod wheel;

pub use error::{Result, ThftError};
pub use exterior::{MixedForm, SpaceSignature};
pub use ladder::{ConvergenceReport, LadderSpec, Verdict};
pub use scalar::{Coeff, Real};

pub type Point = kernels::Point<f64>;
pub type ScaleVector = kernels::ScaleVector<f64>;
pub type ECoefficient = kernels::ECoefficient<f64>;
pub type TMatrix = gaussian::TMatrix<f64>;
pub type QuadOptions = quadrature::QuadOptions<f64>;
pub type QuadResult = quadrature::QuadResult<f64>;
