//! Numerical and symbolic kernels for non-Gaussian white-noise analysis built
//! on characteristic functions of the ML class.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fockspace;
pub mod graded;
pub mod hermite;
pub mod kondratiev;
pub mod marginals;
pub mod mlfun;
pub mod moments;
pub mod multiindex;
pub mod orthopoly;
pub mod process;
pub mod quad;
pub mod series;
pub mod spectral;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use graded::{Coeff, GradedSeries};
pub use mlfun::{make_ml, moment_weights, MLFunction, MomentWeights, PhiDescriptor};
pub use multiindex::{MultiIndex, PairAssignment};
pub use moments::{GramMatrix, MomentResult};
pub use fockspace::{FockGeometry, Scalar};
pub use kondratiev::{VageConstant, WeightSystem};
pub use hermite::HermiteEnvelope;
pub use process::ProcessElement;
pub use spectral::{MeasureKind, SpectralMeasure};
pub use verify::CheckOutcome;
pub use num_complex::Complex64;
pub use num_rational::BigRational;
