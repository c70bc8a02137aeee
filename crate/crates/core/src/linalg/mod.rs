//! Exact linear algebra over the integers, the rationals and prime fields:
//! rings as values, dense matrices, canonical column echelon forms, Smith
//! normal form and subquotient presentations.

pub mod echelon;
pub mod matrix;
pub mod ring;
pub mod smith;
pub mod subquotient;

pub use echelon::{kernel, rref, solve, ColumnBasis, LinalgError};
pub use matrix::{tensor_vec, Matrix};
pub use ring::{bezout, Field, Integers, PrimeField, Rationals, Ring, RingKind};
pub use smith::{smith, Smith};
pub use subquotient::Subquotient;
