//! Matrix multiplicative weights solver for semidefinite programs, with
//! Gibbs-distribution oracles, a classical simulation of the sampling-based
//! variant, and explicit query-cost accounting.
//!
//! The numerical core ([`linalg`], [`model`], [`mmw`]) is generic over the
//! scalar type; the sampling layers work in `f64`.

pub mod error;
pub mod harness;
pub mod jaynes;
pub mod linalg;
pub mod mmw;
pub mod model;
pub mod qsim;
pub mod reductions;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{ceil_count, Real};

pub type DenseHermitianF64 = linalg::DenseHermitian<f64>;
pub type SparseHermitianF64 = linalg::SparseHermitian<f64>;
pub type DensityMatrixF64 = linalg::DensityMatrix<f64>;
pub type SdpInstanceF64 = model::SdpInstance<f64>;
pub type DualVectorF64 = model::DualVector<f64>;
pub type MmwConfigF64 = mmw::MmwConfig<f64>;
