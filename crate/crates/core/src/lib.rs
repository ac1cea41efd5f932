//! Recurrence sequences, their auxiliary λ/μ decompositions, and empirical
//! Benford-law diagnostics.

// `!(x < t)` is deliberate: NaN must fail the check. SciNum arithmetic is
// fallible, so it stays as named methods instead of operator traits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::should_implement_trait)]

pub mod benford;
pub mod binet;
pub mod decompose;
pub mod error;
pub mod expr;
pub mod recurrence;
pub mod rng;
pub mod montecarlo;
pub mod presets;
pub mod scinum;

pub use error::{Error, Result};
pub use expr::{parse, EvalContext, Expr};
pub use recurrence::{RecurrenceKind, RecurrenceSpec, SequenceSample};
pub use scinum::SciNum;
