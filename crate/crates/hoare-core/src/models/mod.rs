//! Built-in state models: concrete state types with their atomic predicates,
//! constant semantics, and the theories (signatures plus axiom schemas) that
//! are read against them.
//!
//! Each submodule exports a model type implementing [`StateModel`] and a
//! `theory()` builder producing the matching [`Theory`]. The theory names the
//! model it expects via `Theory::model`, which is how the command-line layer
//! pairs a parsed proof with its runtime.

use crate::extract::validate_saxiom_realizer;
use crate::kernel::{KernelError, Theory};

pub mod insertsort;
pub mod querysolve;
pub mod swap3;

/// Check that every state-axiom schema of `theory` carries a realizer of the
/// right type. Registration-time guard for theory builders: a theory whose
/// schemas pass here can have any instance's realizer produced on demand.
pub fn validate_realizers(theory: &Theory) -> Result<(), KernelError> {
    for schema in &theory.saxioms {
        validate_saxiom_realizer(schema, theory)?;
    }
    Ok(())
}
