//! Symbol-placement patterns for the staircase lattice scheme, the
//! block-diagonal effective channel they induce, and its Gram determinant.

mod effective;
mod matrix;
mod pattern;

pub use effective::{
    determinant_decomposition, effective_channel, effective_structure, gram_determinant,
    occurrence_count, pattern_occurrence_count, rule_blocks, ColumnFactor, EffectiveChannel,
};
pub use matrix::ComplexMatrix;
pub use pattern::{build_pattern, stack_patterns, stack_patterns_numbered, Numbering, StackedPattern, TransmissionPattern};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("effective channel disagrees with the deletion rule at block {0}")]
    RuleMismatch(usize),
}
