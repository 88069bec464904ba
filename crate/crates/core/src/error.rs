//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Negative verdicts (a matrix failing the GRIP, an unbalanced tree, a
/// non-RIP ordering) are *results*, not errors; only contract violations
/// land here.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A matrix entry was neither 0 nor 1.
    #[error("entry at block {block}, row {row}, column {column} is not 0/1")]
    EntryNotBinary {
        /// 0-based block index.
        block: usize,
        /// 0-based row index within the block.
        row: usize,
        /// 0-based column index.
        column: usize,
    },

    /// Rows or operands have incompatible dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A block, row or column index is out of range.
    #[error("index out of range: {0}")]
    IndexError(String),

    /// The matrix failed multipartition validation (column sums, shape).
    #[error("matrix validation failed: {0} violation(s)")]
    Validation(usize),

    /// A data vector is not normalized (exact mode requires sum exactly 1).
    #[error("data vector is not normalized: sum = {0}")]
    NonNormalizedData(String),

    /// A data or probability entry that must be strictly positive is not.
    #[error("entry {index} must be strictly positive")]
    NotPositive {
        /// 0-based entry index.
        index: usize,
    },

    /// A block marginal of the current state vanished; the state is corrupt.
    #[error("zero marginal for block {block}, row {row}")]
    ZeroMarginal {
        /// 0-based block index.
        block: usize,
        /// 0-based row index.
        row: usize,
    },

    /// The per-floret column-count table is not rank one over the integers;
    /// the pair of matrices is not well-connected.
    #[error("omega table is not rank one within floret {floret}")]
    RankOneViolation {
        /// 0-based floret index.
        floret: usize,
    },

    /// A compression requested more copies of a column class than exist.
    #[error("compression count {requested} exceeds multiplicity {multiplicity} of class {class}")]
    CountExceedsMultiplicity {
        /// 0-based column class.
        class: usize,
        /// Requested number of copies.
        requested: u64,
        /// Actual multiplicity in the source matrix.
        multiplicity: u64,
    },

    /// Florets are undefined because the floret condition failed.
    #[error("florets undefined: floret condition failed at level {level}")]
    FloretsUndefined {
        /// 1-based level of the failing pair.
        level: usize,
    },

    /// An operation requires a matrix satisfying the GRIP.
    #[error("operation requires the GRIP; check failed at level {level}")]
    GripRequired {
        /// 1-based level of the first failing condition.
        level: usize,
    },

    /// Compressed-data indexing is undefined (missing floret data).
    #[error("compressed indexing undefined: {0}")]
    IndexingUndefined(String),

    /// A tree operation requires a stratified staged tree.
    #[error("tree is not stratified: {0}")]
    NotStratified(String),

    /// The labelled tree built from a matrix is not a staged tree.
    #[error("not a staged tree: florets of {vertex_a} and {vertex_b} overlap without being equal")]
    NotStaged {
        /// Path-label name of the first witness vertex.
        vertex_a: String,
        /// Path-label name of the second witness vertex.
        vertex_b: String,
    },

    /// A facet ordering is not a permutation of the complex's facets.
    #[error("invalid facet order: {0}")]
    InvalidFacetOrder(String),

    /// The facet count exceeds the exhaustive-search bound.
    #[error("facet count {count} exceeds search bound {bound}")]
    FacetCountTooLarge {
        /// Number of facets in the complex.
        count: usize,
        /// Maximum supported by exhaustive search.
        bound: usize,
    },

    /// A binomial is not multihomogeneous with respect to the grading.
    #[error("binomial is not multihomogeneous with respect to the grading")]
    NotMultihomogeneous,

    /// Input text could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}
