//! Exact experiments on determinants of sums of sets in `M_2(F_q)`.
//!
//! Everything is computed by exhaustive enumeration over small finite fields
//! with exact integer or cyclotomic-integer arithmetic.

pub mod constructions;
pub mod counting;
pub mod cyclotomic;
pub mod experiments;
pub mod field;
pub mod matrix;
pub mod report;
pub mod sample;
pub mod transforms;

pub use cyclotomic::CycInt;
pub use field::{FieldCtx, Fq};
pub use matrix::{Mat2, MatSet};
pub use report::{Record, Report};
