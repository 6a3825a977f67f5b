//! Cross-session stabilization of EMG gesture classifiers.
//!
//! A linear SVM is trained once on a reference session. Each later session
//! records a short calibration set, canonical correlation analysis fits a
//! mapping between the two calibration sets, and the new session's features
//! are projected back into the reference feature space before classification.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below are what the experiment harness and CLI use.

pub mod cca;
pub mod classifier;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod scalar;
pub mod signal;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type SvdResult64 = linalg::SvdResult<f64>;

pub type SignalMatrix64 = signal::SignalMatrix<f64>;
pub type FirFilter64 = signal::FirFilter<f64>;
pub type LabeledWindows64 = signal::LabeledWindows<f64>;
pub type LabeledWindows32 = signal::LabeledWindows<f32>;
pub type CcaMapping64 = cca::CcaMapping<f64>;
pub type CcaMapping32 = cca::CcaMapping<f32>;
pub type SvmModel64 = classifier::SvmModel<f64>;
pub type SvmModel32 = classifier::SvmModel<f32>;
