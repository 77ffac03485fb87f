//! Stochastic simulator and analytic toolkit for the lifetime of a quantum
//! memory under depolarizing noise.
//!
//! * [`pauli`]: Pauli algebra, error frames and the event-driven noise sampler.
//! * [`code`]: the 5-qubit perfect code, its lookup decoder and `B(p)`.
//! * [`clock`]: the noise-driven clock built from `K` flipping bits.
//! * [`memory`]: end-to-end storage strategies and lifetime scans.
//! * [`bounds`]: closed-form bounds, the parameter ledger and its feasibility search.
//! * [`oracle`]: a dense density-matrix integrator used as ground truth.
//!
//! The analytic layers are generic over the scalar type (see [`num`]); the
//! aliases below fix the common choices.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod clock;
pub mod code;
pub mod memory;
pub mod num;
pub mod oracle;
pub mod pauli;
pub mod stats;

pub use num::{OracleScalar, Real};

/// Exact rational scalar, used for `B(p)` coefficients.
pub type Exact = num_rational::BigRational;

pub type ClockParams64 = clock::ClockParams<f64>;
pub type ClockParams32 = clock::ClockParams<f32>;
pub type LedgerReport64 = bounds::LedgerReport<f64>;
pub type LedgerReport32 = bounds::LedgerReport<f32>;
pub type DensityMatrix64 = oracle::DensityMatrix<f64>;
pub type QubitChannel64 = oracle::QubitChannel<f64>;
pub type PauliChannel64 = oracle::PauliChannel<f64>;
