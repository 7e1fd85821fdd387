//! Transfinite polymodal provability logic at desk scale.
//!
//! Ordinal notations, the GLP language and a Hilbert proof checker sit next to
//! an evaluator for Münchhausen provability operators over finite GL frames.

pub mod algebra;
pub mod muench;
pub mod ordinals;
pub mod proofkit;
pub mod syntax;
pub mod uniformpp;
