//! Fourier-analytic machinery for three-term progressions in F_p^n.

pub mod collapse;
pub mod error;
pub mod explore;
pub mod field;
pub mod formats;
pub mod iteration;
pub mod progressions;
pub mod spectrum;
pub mod structure;
pub mod subspace;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use field::{FieldParams, FieldPoint};
