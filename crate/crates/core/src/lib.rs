//! Normed lattices, successive minima, effective sections and the
//! arithmetic-Hilbert–Samuel bookkeeping built on top of them.

pub mod enumeration;
pub mod error;
pub mod inequality;
pub mod ledger;
pub mod exact;
pub mod linalg;
pub mod minima;
pub mod norm;
pub mod suite;
pub mod volume;

pub use error::{Error, Result};
pub use exact::Rational;
pub use norm::{make_normed_module, NormSpec, NormedModule};
