//! Discrete exponential dispersion models defined by their variance
//! functions in mean parameterization: the ABM, LMS and LMNS classes.
//!
//! The numerical core is generic over [`Scalar`]; the aliases below pin the
//! two precisions used in practice.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod dd;
pub mod distributions;
pub mod error;
pub mod gof;
pub mod inference;
pub mod scalar;
pub mod series;
pub mod special;

pub use dd::DoubleDouble;
pub use error::{EdmError, Result};
pub use scalar::{Precision, Scalar};
pub use series::{ClassId, VarianceParams};

pub type VarianceParams64 = series::VarianceParams<f64>;
pub type VarianceParamsExt = series::VarianceParams<DoubleDouble>;
pub type KernelTable64 = series::KernelTable<f64>;
pub type KernelTableExt = series::KernelTable<DoubleDouble>;
pub type CoefficientSet64 = series::CoefficientSet<f64>;
pub type ModelSpec64 = distributions::ModelSpec<f64>;
pub type ModelSpecExt = distributions::ModelSpec<DoubleDouble>;
