//! Truncated Fock-space numerics for verifying asymmetric continuous-variable
//! de Finetti reductions: Gaussian states, biased homodyne POVMs, operator
//! inequality certification, verification thresholds and Monte Carlo checks.

pub mod bounds;
pub mod error;
pub mod figures;
pub mod fock;
mod linalg;
pub mod operator;
pub mod overlap;
pub mod projectors;
pub mod sim;
pub mod symmetric;

pub use bounds::{BoundReport, ProtocolParams};
pub use error::{Error, Result};
pub use fock::{GaussianParams, MomentOrder};
pub use linalg::C64;
pub use operator::{FockVector, Spectrum, TruncatedOperator};
pub use overlap::OverlapSolution;
pub use projectors::{CertificationRecord, PovmSet};
pub use sim::{Basis, BatchConfig, RunRecord, SourceModel};
pub use symmetric::SymmetricSpec;
