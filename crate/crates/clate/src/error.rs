//! Error types for model construction, representation building, and ingestion.
//!
//! Scalar payloads are carried as canonical strings so the enums stay
//! independent of the scalar lane.

use crate::label::{CovariateCell, InstrumentValue};
use crate::model::{MonotonicityVerdict, ResponseType};
use thiserror::Error;

/// Construction and validation failures for finite models.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{which} support is empty")]
    EmptySupport { which: &'static str },
    #[error("duplicate label {label:?} in {which} support")]
    DuplicateLabel { which: &'static str, label: String },
    #[error("{0}")]
    ShapeMismatch(String),
    #[error("negative probability in {context}: {value}")]
    NegativeProbability { context: String, value: String },
    #[error("probabilities in {context} sum to {total}, expected 1")]
    MassNotNormalized { context: String, total: String },
    #[error("joint cell (x={x}, z={z}) carries zero mass; full support is required")]
    ZeroMassCell { x: CovariateCell, z: InstrumentValue },
    #[error("response type at cell {x} is not a total map over the instrument support")]
    NonTotalResponse { x: CovariateCell },
    #[error("treatment level {level} outside the declared range {range}")]
    LevelOutOfRange { level: u32, range: String },
    #[error("outcome vector has {got} arms, expected {expected}")]
    OutcomeArity { expected: usize, got: usize },
    #[error("outcome index {index} outside the outcome support (size {size})")]
    OutcomeIndexOutOfRange { index: usize, size: usize },
    #[error("treatment level {level} is never attained with positive probability")]
    UnattainableLevel { level: u32 },
    #[error("unknown label {label:?}")]
    UnknownLabel { label: String },
    #[error(
        "conditional independence fails at x={x}: law of (type, outcomes) differs \
         between z={z} and z={z_alt}"
    )]
    IndependenceViolated {
        x: CovariateCell,
        z: InstrumentValue,
        z_alt: InstrumentValue,
    },
}

/// Failures of the binary propensity-table computation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropensityError {
    #[error("operation requires a binary-treatment model")]
    OrderedModel,
    #[error("propensity at (z={z}, x={x}) is {value}, outside (0,1)")]
    DegenerateCell {
        z: InstrumentValue,
        x: CovariateCell,
        value: String,
    },
}

/// Failures of instrument-index construction from a propensity table.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error(
        "rank invariance violated: ordering of (z={z}, z'={z_alt}) flips between \
         x={x_gt} and x={x_lt}"
    )]
    RankInvariance {
        z: InstrumentValue,
        z_alt: InstrumentValue,
        x_gt: CovariateCell,
        x_lt: CovariateCell,
    },
    #[error(
        "anchor cell {anchor} ties z={z} with z={z_alt} although the merged order \
         separates them"
    )]
    AnchorNotStrict {
        anchor: CovariateCell,
        z: InstrumentValue,
        z_alt: InstrumentValue,
    },
    #[error("anchor label {label:?} is not a covariate cell of this table")]
    UnknownAnchor { label: String },
}

/// Failures when building or normalizing a latent-index representation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepresentationError {
    #[error("monotonicity is {verdict}; a separable index representation does not exist")]
    Monotonicity { verdict: MonotonicityVerdict },
    #[error(transparent)]
    Propensity(#[from] PropensityError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("representation does not reproduce the model: {detail}")]
    NotVerified { detail: String },
}

/// Support mismatch between a model and a representation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("shape mismatch: {detail}")]
pub struct ShapeError {
    pub detail: String,
}

impl ShapeError {
    pub fn new(detail: impl Into<String>) -> Self {
        Self {
            detail: detail.into(),
        }
    }
}

/// Failures of the ordered-treatment pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderedError {
    #[error("binarization level {k} outside 1..={max}")]
    LevelRange { k: u32, max: u32 },
    #[error("monotonicity fails at binarization level {level}: {verdict}")]
    Monotonicity {
        level: u32,
        verdict: MonotonicityVerdict,
    },
    #[error(
        "index is ambiguous: z={z} and z={z_alt} share the same mean treatment but \
         their level distributions differ at x={x}"
    )]
    AmbiguousIndex {
        z: InstrumentValue,
        z_alt: InstrumentValue,
        x: CovariateCell,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// Failures of seeded model generation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerationError {
    #[error("generation exhausted after {attempts} attempts for class {class}")]
    Exhausted { class: String, attempts: u32 },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

/// Failures of a nonnegativity-constrained test-function table.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("test function {name:?} is negative at (y={y}, x={x}): {value}")]
pub struct NegativityError {
    pub name: String,
    pub y: String,
    pub x: String,
    pub value: String,
}

/// Data-ingestion failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("io error reading {path}: {detail}")]
    Io { path: String, detail: String },
    #[error("parse error at line {line}: {detail}")]
    Parse { line: u64, detail: String },
    #[error("missing required column(s): {missing:?}")]
    Schema { missing: Vec<String> },
    #[error(
        "outcome looks continuous ({distinct} distinct numeric values); \
         supply a binning spec to ingest it"
    )]
    ContinuousOutcome { distinct: usize },
    #[error("treatment levels {levels:?} are not contiguous {{0,1}} or {{1,...,K}}")]
    NonContiguousLevels { levels: Vec<u32> },
    #[error("dataset is empty")]
    EmptyDataset,
}

/// File-format failures for JSON artifacts.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("json: {0}")]
    Json(String),
    #[error("bad rational {0:?}")]
    BadRational(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A response type that is not a threshold function of the index.
///
/// This is an internal-consistency condition: it cannot occur once the model
/// has been certified globally monotone, so the construction asserts instead
/// of returning it. The type exists for the panic message.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("non-threshold response type {response:?} at x={x} under a certified-monotone model")]
pub struct NonThresholdType {
    pub x: CovariateCell,
    pub response: ResponseType,
}
