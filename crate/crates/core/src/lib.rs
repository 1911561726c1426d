//! Exact computations with uniformly finite chains on windowed presentations
//! of UDBG spaces.

pub mod chain;
pub mod cli;
pub mod degree0;
pub mod degree1;
pub mod error;
pub mod grouphom;
pub mod literal;
pub mod rigidity;
pub mod space;
pub mod transport;

mod maxflow;

pub use error::{Error, Result};

/// Exact rational coefficient type used throughout.
pub type Rat = num_rational::BigRational;
