//! Analysis of EPR/B probability distributions: the 32 product-form classes
//! per partition, standard and generalized Wigner-Bell inequalities, the
//! explicit witness distributions, and a desk-scale verification harness that
//! reproduces the consistency / implication status of every class.

pub mod constructors;
pub mod error;
pub mod inequalities;
pub mod jsonio;
pub mod probcore;
pub mod taxonomy;
pub mod verifier;

pub use error::{Error, Result};
