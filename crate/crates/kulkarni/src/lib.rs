//! Classification and limit-set toolkit for complex projective transformations.
//!
//! The crate covers cyclic subgroups of PSL(3,C) through closed-form tables,
//! general finitely generated groups through an orbit-sampling oracle, the
//! Möbius groups obtained by projecting controllable groups to a line, and
//! constructors for a gallery of explicit families.

pub mod error;
pub mod projective;
pub mod spectral;
pub mod cyclic;
pub mod words;
pub mod mobius;
pub mod actions;
pub mod gallery;
pub mod cli;

pub use error::{Error, Result};
