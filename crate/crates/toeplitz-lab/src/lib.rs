//! Truncated Toeplitz, Laurent and Hankel operators built from symbols on the
//! torus, together with the verification machinery around them: commutator
//! identities with defect tracking, positive-commutator (Mourre) certificates,
//! perturbation admissibility probes, spectral filters, and ballistic
//! transport runs at finite truncation.

pub mod dynamo;
pub mod error;
pub mod interval;
pub mod linalg;
pub mod operator;
pub mod par;
pub mod perturb;
pub mod spectra;
pub mod symbol;

pub use error::{Error, Result};
pub use interval::Interval;
pub use num_complex::Complex64;
pub use symbol::Symbol;
