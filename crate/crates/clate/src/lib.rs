//! Audit toolkit for finite-support instrumental-variable selection models.
//!
//! The crate builds the separable latent-index form of treatment choice —
//! `D_z = 1{ index(z) >= threshold(x, u) }` — from a model's counterfactual
//! treatment law, certifies or refutes the uniform-direction monotonicity
//! that form requires, and runs the observable implications (propensity rank
//! invariance, index sufficiency, moment monotonicity) on population objects
//! and on sampled data. Ordered treatments with `K` levels are handled by a
//! random-threshold extension of the same machinery.
//!
//! Population arithmetic is exact: the default scalar is an
//! arbitrary-precision rational (see [`Rational`]), so every certificate and
//! every witness is a decidable statement, not a numeric approximation. All
//! core types are generic over [`Scalar`], which `f64` also satisfies for
//! float tables.

pub mod audit;
pub mod compare;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod fixtures;
pub mod json;
pub mod label;
pub mod model;
pub mod ordered;
pub mod represent;
pub mod scalar;
pub mod simulate;

pub use audit::{
    audit, audit_dataset, audit_model, audit_ordered, AuditInput, AuditOptions, AuditReport,
    CheckEntry, CheckStatus, CHECK_ORDER,
};
pub use compare::{Ordering3, ProbComparer, ToleranceRule};
pub use data::{empirical_model, ingest_csv, ingest_csv_str, CsvSchema, DataRow, Dataset,
    EmpiricalJoint,
};
pub use diagnostics::{
    moment_monotonicity_check, moment_monotonicity_check_law, sufficiency_check,
    sufficiency_check_law, MomentCheckError, MomentMonotonicityReport, MomentSequence,
    ObservableLaw, SufficiencyFailure, SufficiencyReport, TestFunction,
};
pub use error::{
    FormatError, GenerationError, IndexError, IngestError, ModelError, NegativityError,
    OrderedError, PropensityError, RepresentationError, ShapeError,
};
pub use ordered::{
    binarize_levels, construct_ordered_representation, ordered_index, verify_ordered,
    ThresholdMass, ThresholdRepresentation,
};
pub use simulate::{
    derive_seed, generate_model, sample, DgpSpec, Generated, GeneratedModel, ModelClass,
    RNG_ALGORITHM,
};
pub use label::{CovariateCell, InstrumentValue, OutcomeValue};
pub use model::{
    check_conditional_independence, check_conditional_independence_joint, classify_monotonicity,
    propensity_matrix, Compliance, FiniteModel, IndependenceOutcome, JointPoint, JointTable,
    MonotonicityClass, MonotonicityVerdict, MonotonicityWitness, OrderedModel, OutcomeWeight,
    PropensityMatrix, ResponseType, TreatmentKind, TypeMass,
};
pub use represent::{
    check_rank_invariance, construct_index, construct_representation, normalize_uniform,
    verify_normalized, verify_representation, IndexFunction, IndexRepresentation, LatentLaw,
    NormalizedForm, RankInvarianceReport, RankStatus, UStarSegment, Verification, VerifyWitness,
};
pub use scalar::{parse_rational, Rational, Scalar};

/// Version string stamped into every report.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exact-lane aliases: the concrete types population work runs on.
pub type ExactModel = FiniteModel<Rational>;
pub type ExactOrderedModel = OrderedModel<Rational>;
pub type ExactPropensity = PropensityMatrix<Rational>;
pub type ExactRepresentation = IndexRepresentation<Rational>;
pub type ExactIndex = IndexFunction<Rational>;

/// Float-lane aliases for in-memory approximate tables.
pub type FloatModel = FiniteModel<f64>;
pub type FloatPropensity = PropensityMatrix<f64>;
