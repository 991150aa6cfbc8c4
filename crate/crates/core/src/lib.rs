//! Exact computations for deformations of Galois representations over Z/p^n:
//! tame local cohomology, duality, Selmer groups on finite models, the
//! auxiliary-prime lifting planner, and congruence-module invariants of
//! augmented rings.

pub mod acceptance;
pub mod cohomology;
pub mod gl2;
pub mod linalg;
pub mod planner;
pub mod rings;
pub mod selmer;
pub mod tame;
pub mod zp;

pub use linalg::{cokernel_length, smith_form, solve, LinalgError, SmithForm, ZModMatrix};
pub use zp::{RingError, ZModScalar, Zpn};
