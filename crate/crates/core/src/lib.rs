//! Set-Cover to decision-tree hardness reductions with exact certification.
//!
//! The crate turns a Set-Cover instance into a partial Boolean function and
//! a distribution whose decision-tree and DNF complexity track the instance's
//! optimum, amplifies them by blockwise parity and by XOR composition, and
//! ships brute-force oracles that check every structural inequality exactly
//! on small instances.
//!
//! Enumeration kernels run on rayon by default; build without the `parallel`
//! feature (or pass [`Exec::Sequential`]) for single-threaded execution.

pub mod amplification;
pub mod bits;
pub mod circuit;
pub mod construction;
pub mod error;
pub mod fixtures;
pub mod generator;
pub mod hypotheses;
pub mod oracles;
pub mod par;
pub mod pipeline;
pub mod ratio;
pub mod setcover;
pub mod xor;

pub use bits::BitString;
pub use error::{Error, Result};
pub use par::Exec;
