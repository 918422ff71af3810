//! A small laboratory for limits of combinatorial structures.
//!
//! Theons are represented as executable membership oracles over products of
//! unit intervals. From them the crate samples exchangeable arrays, applies
//! open interpretations and couplings, estimates densities by Monte Carlo and
//! runs statistical falsifiers for the quasirandomness hierarchy. Exact
//! counterparts (enumeration, closed-form densities, dilution maps) live next
//! to the sampling code so every estimate can be checked against an oracle.

pub mod calculus;
pub mod error;
pub mod harness;
pub mod logic;
pub mod relational;
pub mod testlab;
pub mod theon;

pub use error::{Error, Result};
