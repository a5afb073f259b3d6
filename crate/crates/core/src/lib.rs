//! Numerical toolkit for probing differentiability of composition operators
//! on spaces of smooth periodic functions.
//!
//! The building blocks are truncated jets with exact high-order arithmetic
//! ([`jet`]), a small smooth-expression language with a parser and symbolic
//! differentiation ([`expr`], [`parse`]), grid seminorms with refinement
//! ([`seminorm`]), Gateaux-derivative verification for composition maps
//! ([`gateaux`]), a witness-based falsification pipeline for boundedness
//! claims ([`falsify`]), and a transport-operator subsystem on the cylinder
//! ([`transport`]).

pub mod error;
pub mod expr;
pub mod falsify;
pub mod gateaux;
pub mod jet;
pub mod parse;
pub mod partitions;
pub mod quad;
pub mod seminorm;
pub mod smooth;
pub mod transport;

pub use error::{Error, Result};
