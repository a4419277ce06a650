//! Finite, exactly checkable models of reductions between mass problems
//! built from density, block-disagreement and slalom relations.

pub mod base;
pub mod codec;
pub mod error;
pub mod forcing;
pub mod listcode;
pub mod reduction;
pub mod slalom;
pub mod witness;

pub use error::{Error, Result};
