//! Separable latent-index representation of treatment choice.
//!
//! Under global monotonicity every response type at every cell is a
//! threshold type of a single instrument index: `D_z = 1{ index(z) >=
//! threshold }`, with the threshold drawn from a cell-specific latent law
//! that does not depend on the instrument. This module constructs that
//! representation, verifies it exhaustively against a model, and rescales
//! the latent variable to an exact piecewise `Unif[0,1]` via the
//! distributional transform (the latent law here is discrete, so the plain
//! probability-integral transform does not apply).
//!
//! The index is contractual only up to strictly increasing transformations;
//! [`IndexRepresentation::map_scale`] rescales a whole representation
//! without changing anything observable.

use crate::compare::{Ordering3, ProbComparer};
use crate::error::{IndexError, RepresentationError, ShapeError};
use crate::label::{CovariateCell, InstrumentValue};
use crate::model::{
    check_conditional_independence, classify_monotonicity, FiniteModel, IndependenceWitness,
    MonotonicityClass, PropensityMatrix, ResponseType,
};
use crate::scalar::{cmp_scalar, mean_of, Scalar};
use std::collections::BTreeMap;

/// A level of the instrument index for every instrument value.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexFunction<T> {
    z_support: Vec<InstrumentValue>,
    values: Vec<T>,
}

impl<T: Scalar> IndexFunction<T> {
    pub fn new(z_support: Vec<InstrumentValue>, values: Vec<T>) -> Result<Self, ShapeError> {
        if z_support.len() != values.len() {
            return Err(ShapeError::new(format!(
                "index has {} values for {} instrument points",
                values.len(),
                z_support.len()
            )));
        }
        Ok(Self { z_support, values })
    }

    pub fn z_support(&self) -> &[InstrumentValue] {
        &self.z_support
    }

    pub fn value(&self, z: usize) -> &T {
        &self.values[z]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> &T {
        self.values
            .iter()
            .min_by(|a, b| cmp_scalar(*a, *b))
            .expect("index is non-empty")
    }

    pub fn max(&self) -> &T {
        self.values
            .iter()
            .max_by(|a, b| cmp_scalar(*a, *b))
            .expect("index is non-empty")
    }

    /// Weak order induced by the index: classes of instrument positions in
    /// ascending index order, members in support order. This is the whole
    /// ordinal content of the index.
    pub fn argsort_classes(&self) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| cmp_scalar(&self.values[a], &self.values[b]).then(a.cmp(&b)));
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for idx in order {
            match classes.last_mut() {
                Some(class) if self.values[class[0]] == self.values[idx] => class.push(idx),
                _ => classes.push(vec![idx]),
            }
        }
        classes
    }

    pub fn map_values(&self, f: &dyn Fn(&T) -> T) -> Self {
        Self {
            z_support: self.z_support.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }
}

/// One latent threshold level with its conditional mass.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPoint<T> {
    pub level: T,
    pub prob: T,
}

/// Discrete latent law per covariate cell; depends on the cell only, which
/// is what makes the latent variable independent of the instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentLaw<T> {
    /// Per cell, sorted by level.
    pub per_cell: Vec<Vec<LatentPoint<T>>>,
}

/// One `u*`-interval of the normalized form, mapping to a threshold on the
/// index scale. The last interval of each cell is closed at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct UStarSegment<T> {
    pub lo: T,
    pub hi: T,
    pub threshold: T,
}

/// Piecewise-uniform normalized latent variable.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedForm<T> {
    pub per_cell: Vec<Vec<UStarSegment<T>>>,
}

/// The separable latent-index representation: index, thresholds, latent law,
/// and (optionally) the uniform-normalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexRepresentation<T> {
    pub index: IndexFunction<T>,
    pub x_support: Vec<CovariateCell>,
    pub u_law: LatentLaw<T>,
    /// Threshold `q(x, u)` aligned with `u_law.per_cell[x]`; the identity on
    /// levels when built by [`construct_representation`].
    pub q: Vec<Vec<T>>,
    pub normalized: Option<NormalizedForm<T>>,
}

impl<T: Scalar> IndexRepresentation<T> {
    /// Rescale the whole representation by a strictly increasing map: index
    /// values, latent levels, and thresholds move; interval measure does not.
    pub fn map_scale(&self, f: &dyn Fn(&T) -> T) -> Self {
        Self {
            index: self.index.map_values(f),
            x_support: self.x_support.clone(),
            u_law: LatentLaw {
                per_cell: self
                    .u_law
                    .per_cell
                    .iter()
                    .map(|cell| {
                        cell.iter()
                            .map(|p| LatentPoint {
                                level: f(&p.level),
                                prob: p.prob.clone(),
                            })
                            .collect()
                    })
                    .collect(),
            },
            q: self
                .q
                .iter()
                .map(|cell| cell.iter().map(f).collect())
                .collect(),
            normalized: self.normalized.as_ref().map(|n| NormalizedForm {
                per_cell: n
                    .per_cell
                    .iter()
                    .map(|cell| {
                        cell.iter()
                            .map(|s| UStarSegment {
                                lo: s.lo.clone(),
                                hi: s.hi.clone(),
                                threshold: f(&s.threshold),
                            })
                            .collect()
                    })
                    .collect(),
            }),
        }
    }

    /// Treatment pattern induced by threshold `q[x][i]` across the support.
    fn pattern_of_threshold(&self, threshold: &T) -> Vec<u32> {
        self.index
            .values()
            .iter()
            .map(|m| u32::from(*m >= *threshold))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Rank invariance
// ---------------------------------------------------------------------------

/// Status of the propensity rank-invariance condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankStatus {
    Consistent,
    Violated,
}

/// The lexicographically first strictly-opposite comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct RankViolation<T> {
    pub z: InstrumentValue,
    pub z_alt: InstrumentValue,
    pub x_gt: CovariateCell,
    pub x_lt: CovariateCell,
    /// Propensities at the four witness cells:
    /// (z,x_gt), (z_alt,x_gt), (z,x_lt), (z_alt,x_lt).
    pub values: [T; 4],
}

/// A tie at one cell broken by a strict comparison elsewhere; recorded
/// because the weak-order reading of ties is a semantic choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieNote {
    pub z: InstrumentValue,
    pub z_alt: InstrumentValue,
    pub x: CovariateCell,
}

/// Result of the rank-invariance check.
#[derive(Debug, Clone, PartialEq)]
pub struct RankInvarianceReport<T> {
    pub status: RankStatus,
    /// Equivalence classes of instrument values in ascending propensity
    /// order (present when consistent); members in support order.
    pub merged_order: Option<Vec<Vec<InstrumentValue>>>,
    pub witness: Option<RankViolation<T>>,
    pub tie_notes: Vec<TieNote>,
    /// Number of pair-cell comparisons skipped as underpowered.
    pub underpowered: usize,
}

impl<T> RankInvarianceReport<T> {
    pub fn is_consistent(&self) -> bool {
        matches!(self.status, RankStatus::Consistent)
    }
}

/// Exact rank-invariance check: the ordering of instrument values by
/// propensity must be the same in every covariate cell (weak inequalities;
/// a full tie collapses into one equivalence class).
pub fn check_rank_invariance<T: Scalar>(pi: &PropensityMatrix<T>) -> RankInvarianceReport<T> {
    check_rank_invariance_with(pi, &ProbComparer::exact())
}

/// Rank-invariance check under a comparison policy (tolerance-aware for
/// sample tables).
pub fn check_rank_invariance_with<T: Scalar>(
    pi: &PropensityMatrix<T>,
    cmp: &ProbComparer,
) -> RankInvarianceReport<T> {
    let nz = pi.z_count();
    let nx = pi.x_count();
    let mut relations: BTreeMap<(usize, usize), Ordering3> = BTreeMap::new();
    let mut tie_notes = Vec::new();
    let mut underpowered = 0usize;

    for i in 0..nz {
        for j in (i + 1)..nz {
            let mut first_gt: Option<usize> = None;
            let mut first_lt: Option<usize> = None;
            let mut first_tie: Option<usize> = None;
            for x in 0..nx {
                let outcome = cmp.compare(
                    pi.value(x, i),
                    pi.count(x, i),
                    pi.value(x, j),
                    pi.count(x, j),
                );
                match outcome {
                    Ordering3::Gt => first_gt = first_gt.or(Some(x)),
                    Ordering3::Lt => first_lt = first_lt.or(Some(x)),
                    Ordering3::Eq => first_tie = first_tie.or(Some(x)),
                    Ordering3::Underpowered => underpowered += 1,
                }
            }
            if let (Some(xg), Some(xl)) = (first_gt, first_lt) {
                return RankInvarianceReport {
                    status: RankStatus::Violated,
                    merged_order: None,
                    witness: Some(RankViolation {
                        z: pi.z_support()[i].clone(),
                        z_alt: pi.z_support()[j].clone(),
                        x_gt: pi.x_support()[xg].clone(),
                        x_lt: pi.x_support()[xl].clone(),
                        values: [
                            pi.value(xg, i).clone(),
                            pi.value(xg, j).clone(),
                            pi.value(xl, i).clone(),
                            pi.value(xl, j).clone(),
                        ],
                    }),
                    tie_notes,
                    underpowered,
                };
            }
            let rel = if first_gt.is_some() {
                Ordering3::Gt
            } else if first_lt.is_some() {
                Ordering3::Lt
            } else {
                Ordering3::Eq
            };
            if first_tie.is_some() && rel != Ordering3::Eq {
                tie_notes.push(TieNote {
                    z: pi.z_support()[i].clone(),
                    z_alt: pi.z_support()[j].clone(),
                    x: pi.x_support()[first_tie.unwrap()].clone(),
                });
            }
            relations.insert((i, j), rel);
        }
    }

    // Group full ties, then order classes by the pairwise relation. Under
    // consistency the relation is transitive, so any representative works.
    let mut class_of: Vec<usize> = (0..nz).collect();
    for (&(i, j), rel) in &relations {
        if *rel == Ordering3::Eq {
            let target = class_of[i];
            let from = class_of[j];
            for c in class_of.iter_mut() {
                if *c == from {
                    *c = target;
                }
            }
        }
    }
    let mut class_ids: Vec<usize> = class_of.clone();
    class_ids.sort_unstable();
    class_ids.dedup();
    let rel_of = |a: usize, b: usize| -> Ordering3 {
        if a < b {
            relations[&(a, b)]
        } else {
            match relations[&(b, a)] {
                Ordering3::Gt => Ordering3::Lt,
                Ordering3::Lt => Ordering3::Gt,
                other => other,
            }
        }
    };
    class_ids.sort_by(|&a, &b| match rel_of(a, b) {
        Ordering3::Lt => std::cmp::Ordering::Less,
        Ordering3::Gt => std::cmp::Ordering::Greater,
        _ => a.cmp(&b),
    });
    let merged = class_ids
        .into_iter()
        .map(|cid| {
            (0..nz)
                .filter(|&z| class_of[z] == cid)
                .map(|z| pi.z_support()[z].clone())
                .collect()
        })
        .collect();

    RankInvarianceReport {
        status: RankStatus::Consistent,
        merged_order: Some(merged),
        witness: None,
        tie_notes,
        underpowered,
    }
}

// ---------------------------------------------------------------------------
// Index construction
// ---------------------------------------------------------------------------

/// Builds the instrument index from a consistent propensity table: the
/// anchored column `pi(., x*)` when an anchor cell is given, otherwise the
/// cellwise average, which realizes the same merged weak order.
pub fn construct_index<T: Scalar>(
    pi: &PropensityMatrix<T>,
    anchor: Option<&CovariateCell>,
) -> Result<IndexFunction<T>, IndexError> {
    construct_index_with(pi, anchor, &ProbComparer::exact())
}

/// Index construction under a comparison policy.
pub fn construct_index_with<T: Scalar>(
    pi: &PropensityMatrix<T>,
    anchor: Option<&CovariateCell>,
    cmp: &ProbComparer,
) -> Result<IndexFunction<T>, IndexError> {
    let report = check_rank_invariance_with(pi, cmp);
    let Some(merged) = report.merged_order.as_ref() else {
        let w = report.witness.as_ref().expect("violated report has witness");
        return Err(IndexError::RankInvariance {
            z: w.z.clone(),
            z_alt: w.z_alt.clone(),
            x_gt: w.x_gt.clone(),
            x_lt: w.x_lt.clone(),
        });
    };

    let values: Vec<T> = match anchor {
        Some(label) => {
            let x = pi
                .x_support()
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| IndexError::UnknownAnchor {
                    label: label.to_string(),
                })?;
            // The anchor column must separate every pair the merged order
            // separates, else it cannot carry the full ordinal content.
            let mut class_index = vec![0usize; pi.z_count()];
            for (ci, class) in merged.iter().enumerate() {
                for z in class {
                    let zi = pi
                        .z_support()
                        .iter()
                        .position(|v| v == z)
                        .expect("merged order uses support labels");
                    class_index[zi] = ci;
                }
            }
            for i in 0..pi.z_count() {
                for j in (i + 1)..pi.z_count() {
                    if class_index[i] != class_index[j]
                        && cmp.compare(pi.value(x, i), pi.count(x, i), pi.value(x, j), pi.count(x, j))
                            == Ordering3::Eq
                    {
                        return Err(IndexError::AnchorNotStrict {
                            anchor: label.clone(),
                            z: pi.z_support()[i].clone(),
                            z_alt: pi.z_support()[j].clone(),
                        });
                    }
                }
            }
            (0..pi.z_count()).map(|z| pi.value(x, z).clone()).collect()
        }
        None => (0..pi.z_count())
            .map(|z| {
                let column: Vec<T> = (0..pi.x_count()).map(|x| pi.value(x, z).clone()).collect();
                mean_of(&column)
            })
            .collect(),
    };

    Ok(IndexFunction {
        z_support: pi.z_support().to_vec(),
        values,
    })
}

// ---------------------------------------------------------------------------
// Representation construction
// ---------------------------------------------------------------------------

/// Builds the latent-index representation of a globally monotone binary
/// model with the canonical (cell-averaged) index.
pub fn construct_representation<T: Scalar>(
    model: &FiniteModel<T>,
) -> Result<IndexRepresentation<T>, RepresentationError> {
    construct_representation_anchored(model, None)
}

/// Representation with the index read off an anchor cell's propensities.
pub fn construct_representation_anchored<T: Scalar>(
    model: &FiniteModel<T>,
    anchor: Option<&CovariateCell>,
) -> Result<IndexRepresentation<T>, RepresentationError> {
    let verdict = classify_monotonicity(model);
    if verdict.class != MonotonicityClass::GlobalMonotone {
        return Err(RepresentationError::Monotonicity { verdict });
    }
    if !model.treatment().is_binary() {
        return Err(RepresentationError::Propensity(
            crate::error::PropensityError::OrderedModel,
        ));
    }
    // Raw propensity values, not the overlap-checked table: the threshold
    // construction is well defined even when some cell is degenerate.
    let raw: Vec<Vec<T>> = (0..model.x_count())
        .map(|x| {
            (0..model.z_count())
                .map(|z| model.propensity_value(x, z))
                .collect()
        })
        .collect();
    let pi = PropensityMatrix::from_parts(
        model.z_support().to_vec(),
        model.x_support().to_vec(),
        raw,
        None,
    )
    .expect("propensity table shapes follow the model");
    let index = construct_index(&pi, anchor)?;

    // Sentinel levels strictly outside the index range keep thresholds
    // finite-valued: always-treated mass sits below every index level,
    // never-treated mass above.
    let lo = index.min().clone() - T::one();
    let hi = index.max().clone() + T::one();

    let mut per_cell = Vec::with_capacity(model.x_count());
    let mut q = Vec::with_capacity(model.x_count());
    for x in 0..model.x_count() {
        let mut masses: Vec<(T, T)> = Vec::new();
        for tm in model.positive_masses(x) {
            let cutoff = threshold_of(&tm.response, &index, &lo, &hi);
            for (z, m) in index.values().iter().enumerate() {
                let want = tm.response.level_at(z) == 1;
                assert_eq!(
                    *m >= cutoff,
                    want,
                    "non-threshold response type {:?} at x={} under a certified-monotone model",
                    tm.response,
                    model.x_support()[x]
                );
            }
            masses.push((cutoff, tm.prob.clone()));
        }
        masses.sort_by(|a, b| cmp_scalar(&a.0, &b.0));
        let mut points: Vec<LatentPoint<T>> = Vec::new();
        for (level, prob) in masses {
            match points.last_mut() {
                Some(p) if p.level == level => p.prob = p.prob.clone() + prob,
                _ => points.push(LatentPoint { level, prob }),
            }
        }
        q.push(points.iter().map(|p| p.level.clone()).collect());
        per_cell.push(points);
    }

    Ok(IndexRepresentation {
        index,
        x_support: model.x_support().to_vec(),
        u_law: LatentLaw { per_cell },
        q,
        normalized: None,
    })
}

/// Lowest index level the type accepts; sentinels for the constant types.
fn threshold_of<T: Scalar>(
    response: &ResponseType,
    index: &IndexFunction<T>,
    lo: &T,
    hi: &T,
) -> T {
    let treated: Vec<&T> = index
        .values()
        .iter()
        .enumerate()
        .filter(|(z, _)| response.level_at(*z) == 1)
        .map(|(_, m)| m)
        .collect();
    if treated.len() == index.len() {
        lo.clone()
    } else if treated.is_empty() {
        hi.clone()
    } else {
        treated
            .into_iter()
            .min_by(|a, b| cmp_scalar(*a, *b))
            .expect("non-empty treated set")
            .clone()
    }
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Outcome of an exhaustive verification scan.
#[derive(Debug, Clone, PartialEq)]
pub enum Verification<W> {
    Verified,
    Failed(W),
}

impl<W> Verification<W> {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verification::Verified)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verification::Verified => None,
            Verification::Failed(w) => Some(w),
        }
    }
}

/// First failing point of a verification scan.
#[derive(Debug, Clone, PartialEq)]
pub enum VerifyWitness<T> {
    /// No latent level reproduces this response type; `z` is the first
    /// instrument value where the closest level disagrees.
    MissingPattern {
        x: CovariateCell,
        response: ResponseType,
        z: InstrumentValue,
    },
    /// The latent law puts a different mass on this treatment pattern than
    /// the model's types do.
    MassMismatch {
        x: CovariateCell,
        pattern: ResponseType,
        model_mass: T,
        rep_mass: T,
    },
    /// A cell's latent law is not a probability distribution.
    NotDistribution { x: CovariateCell, total: T },
    /// Conditional independence fails on the coupled model.
    IndependenceFailure(IndependenceWitness),
    /// The normalized segments of a cell do not partition [0,1].
    BadPartition { x: CovariateCell, detail: String },
    /// Treated `u*`-measure disagrees with the propensity.
    PropensityMismatch {
        z: InstrumentValue,
        x: CovariateCell,
        expected: T,
        got: T,
    },
    /// Ordered thresholds out of order on a positive-mass point.
    OrderingViolation {
        x: CovariateCell,
        position: usize,
        lower: String,
        upper: String,
    },
}

/// Exhaustively verifies a representation against a model: reproduction of
/// the counterfactual treatments on every positive-mass point (as equality
/// of pattern measures), properness of the latent law, and conditional
/// independence on the coupled model.
pub fn verify_representation<T: Scalar>(
    model: &FiniteModel<T>,
    rep: &IndexRepresentation<T>,
) -> Result<Verification<VerifyWitness<T>>, ShapeError> {
    if !model.treatment().is_binary() {
        return Err(ShapeError::new(
            "binary representation verified against a non-binary model",
        ));
    }
    check_shapes(model, rep)?;

    for x in 0..model.x_count() {
        let total = crate::scalar::sum(rep.u_law.per_cell[x].iter().map(|p| &p.prob));
        if total != T::one() || rep.u_law.per_cell[x].iter().any(|p| p.prob < T::zero()) {
            return Ok(Verification::Failed(VerifyWitness::NotDistribution {
                x: model.x_support()[x].clone(),
                total,
            }));
        }

        // Measure each treatment pattern from both sides.
        let mut model_mass: BTreeMap<Vec<u32>, T> = BTreeMap::new();
        for tm in model.positive_masses(x) {
            let key = tm.response.levels().to_vec();
            let e = model_mass.entry(key).or_insert_with(T::zero);
            *e = e.clone() + tm.prob.clone();
        }
        let mut rep_mass: BTreeMap<Vec<u32>, T> = BTreeMap::new();
        for (i, point) in rep.u_law.per_cell[x].iter().enumerate() {
            if point.prob > T::zero() {
                let pattern = rep.pattern_of_threshold(&rep.q[x][i]);
                let e = rep_mass.entry(pattern).or_insert_with(T::zero);
                *e = e.clone() + point.prob.clone();
            }
        }

        // Types whose pattern no latent level reproduces come first: they
        // give the most readable witness.
        for tm in model.positive_masses(x) {
            let key = tm.response.levels().to_vec();
            if !rep_mass.contains_key(&key) {
                let z = closest_disagreement(&key, rep, x);
                return Ok(Verification::Failed(VerifyWitness::MissingPattern {
                    x: model.x_support()[x].clone(),
                    response: tm.response.clone(),
                    z: model.z_support()[z].clone(),
                }));
            }
        }
        let keys: std::collections::BTreeSet<Vec<u32>> = model_mass
            .keys()
            .chain(rep_mass.keys())
            .cloned()
            .collect();
        for key in keys {
            let a = model_mass.get(&key).cloned().unwrap_or_else(T::zero);
            let b = rep_mass.get(&key).cloned().unwrap_or_else(T::zero);
            if a != b {
                return Ok(Verification::Failed(VerifyWitness::MassMismatch {
                    x: model.x_support()[x].clone(),
                    pattern: ResponseType::new(key),
                    model_mass: a,
                    rep_mass: b,
                }));
            }
        }
    }

    // The latent law depends on x alone by type, so independence of the
    // coupled (outcomes, U) from Z reduces to the model's own conditional
    // independence.
    let independence = check_conditional_independence(model);
    if let Some(w) = independence.witness {
        return Ok(Verification::Failed(VerifyWitness::IndependenceFailure(w)));
    }

    Ok(Verification::Verified)
}

/// Among the cell's latent levels, find the one agreeing with the pattern on
/// the longest prefix of the support, and return the first disagreement.
fn closest_disagreement<T: Scalar>(
    pattern: &[u32],
    rep: &IndexRepresentation<T>,
    x: usize,
) -> usize {
    let mut best_prefix = 0usize;
    for (i, point) in rep.u_law.per_cell[x].iter().enumerate() {
        if point.prob <= T::zero() {
            continue;
        }
        let candidate = rep.pattern_of_threshold(&rep.q[x][i]);
        let prefix = candidate
            .iter()
            .zip(pattern)
            .take_while(|(a, b)| a == b)
            .count();
        best_prefix = best_prefix.max(prefix);
    }
    best_prefix.min(pattern.len().saturating_sub(1))
}

fn check_shapes<T: Scalar>(
    model: &FiniteModel<T>,
    rep: &IndexRepresentation<T>,
) -> Result<(), ShapeError> {
    if rep.index.z_support() != model.z_support() {
        return Err(ShapeError::new("instrument supports differ"));
    }
    if rep.x_support != model.x_support() {
        return Err(ShapeError::new("covariate supports differ"));
    }
    if rep.u_law.per_cell.len() != model.x_count()
        || rep.q.len() != model.x_count()
        || rep
            .q
            .iter()
            .zip(&rep.u_law.per_cell)
            .any(|(q, u)| q.len() != u.len())
    {
        return Err(ShapeError::new("latent law and threshold map misaligned"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Uniform normalization
// ---------------------------------------------------------------------------

/// Rescales the discrete latent law to an exact piecewise `Unif[0,1]` via
/// the distributional transform: thresholds in `u*`-space sit at cumulative
/// latent masses, so interval measure reproduces every propensity exactly.
pub fn normalize_uniform<T: Scalar>(
    rep: &IndexRepresentation<T>,
    model: &FiniteModel<T>,
) -> Result<IndexRepresentation<T>, RepresentationError> {
    match verify_representation(model, rep)? {
        Verification::Verified => {}
        Verification::Failed(w) => {
            return Err(RepresentationError::NotVerified {
                detail: format!("{w:?}"),
            })
        }
    }

    let mut per_cell = Vec::with_capacity(rep.u_law.per_cell.len());
    for (x, cell) in rep.u_law.per_cell.iter().enumerate() {
        let mut segments = Vec::new();
        let mut cum = T::zero();
        for (i, point) in cell.iter().enumerate() {
            if point.prob <= T::zero() {
                continue;
            }
            let next = cum.clone() + point.prob.clone();
            segments.push(UStarSegment {
                lo: cum,
                hi: next.clone(),
                threshold: rep.q[x][i].clone(),
            });
            cum = next;
        }
        per_cell.push(segments);
    }

    Ok(IndexRepresentation {
        normalized: Some(NormalizedForm { per_cell }),
        ..rep.clone()
    })
}

/// Verifies the normalized form: segments partition [0,1] exactly, the
/// treated `u*`-measure equals the propensity at every `(z, x)`, and the
/// segment pattern measure matches the model's type measure.
pub fn verify_normalized<T: Scalar>(
    model: &FiniteModel<T>,
    rep: &IndexRepresentation<T>,
) -> Result<Verification<VerifyWitness<T>>, ShapeError> {
    check_shapes(model, rep)?;
    let Some(normalized) = rep.normalized.as_ref() else {
        return Err(ShapeError::new("representation has no normalized form"));
    };
    if normalized.per_cell.len() != model.x_count() {
        return Err(ShapeError::new("normalized form has wrong cell count"));
    }

    for x in 0..model.x_count() {
        let segments = &normalized.per_cell[x];
        let mut cursor = T::zero();
        for s in segments {
            if s.lo != cursor || s.hi <= s.lo {
                return Ok(Verification::Failed(VerifyWitness::BadPartition {
                    x: model.x_support()[x].clone(),
                    detail: format!(
                        "segment [{}, {}) does not continue the partition at {}",
                        s.lo.encode(),
                        s.hi.encode(),
                        cursor.encode()
                    ),
                }));
            }
            cursor = s.hi.clone();
        }
        if cursor != T::one() {
            return Ok(Verification::Failed(VerifyWitness::BadPartition {
                x: model.x_support()[x].clone(),
                detail: format!("segments end at {} instead of 1", cursor.encode()),
            }));
        }

        // Treated measure reproduces the propensity cell by cell.
        for z in 0..model.z_count() {
            let mut treated = T::zero();
            for s in segments {
                if *rep.index.value(z) >= s.threshold {
                    treated = treated + (s.hi.clone() - s.lo.clone());
                }
            }
            let expected = model.propensity_value(x, z);
            if treated != expected {
                return Ok(Verification::Failed(VerifyWitness::PropensityMismatch {
                    z: model.z_support()[z].clone(),
                    x: model.x_support()[x].clone(),
                    expected,
                    got: treated,
                }));
            }
        }

        // Reproduction on every subinterval: pattern measure equality.
        let mut seg_mass: BTreeMap<Vec<u32>, T> = BTreeMap::new();
        for s in segments {
            let pattern = rep.pattern_of_threshold(&s.threshold);
            let e = seg_mass.entry(pattern).or_insert_with(T::zero);
            *e = e.clone() + (s.hi.clone() - s.lo.clone());
        }
        let mut model_mass: BTreeMap<Vec<u32>, T> = BTreeMap::new();
        for tm in model.positive_masses(x) {
            let e = model_mass
                .entry(tm.response.levels().to_vec())
                .or_insert_with(T::zero);
            *e = e.clone() + tm.prob.clone();
        }
        let keys: std::collections::BTreeSet<Vec<u32>> =
            seg_mass.keys().chain(model_mass.keys()).cloned().collect();
        for key in keys {
            let a = model_mass.get(&key).cloned().unwrap_or_else(T::zero);
            let b = seg_mass.get(&key).cloned().unwrap_or_else(T::zero);
            if a != b {
                return Ok(Verification::Failed(VerifyWitness::MassMismatch {
                    x: model.x_support()[x].clone(),
                    pattern: ResponseType::new(key),
                    model_mass: a,
                    rep_mass: b,
                }));
            }
        }
    }

    Ok(Verification::Verified)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{model_m1, model_m2, point_type};
    use crate::label::OutcomeValue;
    use crate::model::{propensity_matrix, FiniteModel, TreatmentKind};
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn m1_pi() -> PropensityMatrix<Rational> {
        propensity_matrix(&model_m1()).unwrap()
    }

    #[test]
    fn rank_invariance_consistent_on_m1() {
        let report = check_rank_invariance(&m1_pi());
        assert!(report.is_consistent());
        let merged = report.merged_order.unwrap();
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0][0].as_str(), "z0");
        assert_eq!(merged[1][0].as_str(), "z1");
        assert!(report.tie_notes.is_empty());
    }

    #[test]
    fn rank_invariance_violated_on_m2_with_witness_values() {
        let pi = propensity_matrix(&model_m2()).unwrap();
        let report = check_rank_invariance(&pi);
        assert_eq!(report.status, RankStatus::Violated);
        let w = report.witness.unwrap();
        assert_eq!(w.z.as_str(), "z0");
        assert_eq!(w.z_alt.as_str(), "z1");
        assert_eq!(w.x_gt.as_str(), "b");
        assert_eq!(w.x_lt.as_str(), "a");
        assert_eq!(w.values, [r(7, 10), r(1, 4), r(3, 10), r(3, 5)]);
    }

    #[test]
    fn single_cell_tables_are_always_consistent() {
        let pi = PropensityMatrix::from_parts(
            vec!["z0".into(), "z1".into(), "z2".into()],
            vec!["a".into()],
            vec![vec![r(1, 2), r(1, 4), r(3, 4)]],
            None,
        )
        .unwrap();
        let report = check_rank_invariance(&pi);
        assert!(report.is_consistent());
        let merged = report.merged_order.unwrap();
        let flat: Vec<&str> = merged.iter().flatten().map(|z| z.as_str()).collect();
        assert_eq!(flat, ["z1", "z0", "z2"]);
    }

    #[test]
    fn anchored_index_reads_the_anchor_column() {
        let m = construct_index(&m1_pi(), Some(&"a".into())).unwrap();
        assert_eq!(m.values(), &[r(1, 5), r(7, 10)]);
    }

    #[test]
    fn canonical_index_averages_cells() {
        let m = construct_index(&m1_pi(), None).unwrap();
        assert_eq!(m.values(), &[r(3, 20), r(11, 20)]);
    }

    #[test]
    fn index_on_violated_table_fails() {
        let pi = propensity_matrix(&model_m2()).unwrap();
        assert!(matches!(
            construct_index(&pi, None),
            Err(IndexError::RankInvariance { .. })
        ));
    }

    #[test]
    fn anchor_with_order_breaking_tie_is_rejected() {
        // Ties z0/z1 at cell a, separates them at cell b.
        let pi = PropensityMatrix::from_parts(
            vec!["z0".into(), "z1".into()],
            vec!["a".into(), "b".into()],
            vec![vec![r(1, 2), r(1, 2)], vec![r(1, 4), r(3, 4)]],
            None,
        )
        .unwrap();
        let report = check_rank_invariance(&pi);
        assert!(report.is_consistent());
        assert_eq!(report.tie_notes.len(), 1);
        assert!(matches!(
            construct_index(&pi, Some(&"a".into())),
            Err(IndexError::AnchorNotStrict { .. })
        ));
        assert!(construct_index(&pi, Some(&"b".into())).is_ok());
    }

    #[test]
    fn representation_of_m1_matches_hand_construction() {
        let model = model_m1();
        let rep = construct_representation(&model).unwrap();
        assert_eq!(rep.index.values(), &[r(3, 20), r(11, 20)]);
        let lo = r(3, 20) - r(1, 1);
        let hi = r(11, 20) + r(1, 1);
        let cell_a = &rep.u_law.per_cell[0];
        assert_eq!(cell_a.len(), 3);
        assert_eq!((&cell_a[0].level, &cell_a[0].prob), (&lo, &r(1, 5)));
        assert_eq!((&cell_a[1].level, &cell_a[1].prob), (&r(11, 20), &r(1, 2)));
        assert_eq!((&cell_a[2].level, &cell_a[2].prob), (&hi, &r(3, 10)));
        let cell_b = &rep.u_law.per_cell[1];
        assert_eq!(&cell_b[0].prob, &r(1, 10));
        assert_eq!(&cell_b[1].prob, &r(3, 10));
        assert_eq!(&cell_b[2].prob, &r(3, 5));

        assert!(verify_representation(&model, &rep).unwrap().is_verified());
    }

    #[test]
    fn representation_fails_on_m2_with_monotonicity_witness() {
        let err = construct_representation(&model_m2()).unwrap_err();
        match err {
            RepresentationError::Monotonicity { verdict } => {
                assert_eq!(verdict.class, MonotonicityClass::LocalOnlyMonotone);
                assert!(!verdict.witnesses.is_empty());
            }
            other => panic!("expected monotonicity error, got {other}"),
        }
    }

    #[test]
    fn all_complier_cells_give_point_mass_at_the_upper_level() {
        // One threshold type per cell; the propensity table is degenerate
        // (0 and 1) but the representation still exists and reproduces.
        let model = FiniteModel::new(
            vec!["z0".into(), "z1".into()],
            vec!["a".into()],
            vec![OutcomeValue::from("y0"), OutcomeValue::from("y1")],
            TreatmentKind::Binary,
            vec![vec![r(1, 2), r(1, 2)]],
            vec![vec![point_type(vec![0, 1], vec![0, 1], r(1, 1))]],
        )
        .unwrap();
        let rep = construct_representation(&model).unwrap();
        let cell = &rep.u_law.per_cell[0];
        assert_eq!(cell.len(), 1);
        assert_eq!(cell[0].level, rep.index.value(1).clone());
        assert_eq!(cell[0].prob, r(1, 1));
        assert!(verify_representation(&model, &rep).unwrap().is_verified());
    }

    #[test]
    fn tampered_index_fails_verification_at_the_complier_point() {
        let model = model_m1();
        let rep = construct_representation(&model).unwrap();
        let mut tampered = rep.clone();
        let swapped = vec![rep.index.value(1).clone(), rep.index.value(0).clone()];
        tampered.index = IndexFunction::new(rep.index.z_support().to_vec(), swapped).unwrap();
        let outcome = verify_representation(&model, &tampered).unwrap();
        match outcome.witness().unwrap() {
            VerifyWitness::MissingPattern { x, response, z } => {
                assert_eq!(x.as_str(), "a");
                assert_eq!(response.levels(), &[0, 1]);
                assert_eq!(z.as_str(), "z1");
            }
            other => panic!("expected missing-pattern witness, got {other:?}"),
        }
    }

    #[test]
    fn shape_mismatch_is_an_error_not_a_failure() {
        let rep = construct_representation(&model_m1()).unwrap();
        let err = verify_representation(&model_m2(), &rep);
        // Same supports, so this verifies (and fails); use a support change.
        assert!(err.is_ok());
        let other = FiniteModel::new(
            vec!["w0".into(), "w1".into()],
            vec!["a".into(), "b".into()],
            vec![OutcomeValue::from("y0"), OutcomeValue::from("y1")],
            TreatmentKind::Binary,
            vec![
                vec![r(1, 4), r(1, 4)],
                vec![r(1, 4), r(1, 4)],
            ],
            vec![
                vec![
                    point_type(vec![1, 1], vec![0, 1], r(1, 2)),
                    point_type(vec![0, 1], vec![0, 1], r(1, 2)),
                ],
                vec![
                    point_type(vec![1, 1], vec![0, 1], r(1, 2)),
                    point_type(vec![0, 1], vec![0, 1], r(1, 2)),
                ],
            ],
        )
        .unwrap();
        assert!(verify_representation(&other, &rep).is_err());
    }

    #[test]
    fn normalization_of_m1_matches_cumulative_shares() {
        let model = model_m1();
        let rep = construct_representation(&model).unwrap();
        let rep = normalize_uniform(&rep, &model).unwrap();
        let segs = &rep.normalized.as_ref().unwrap().per_cell[0];
        assert_eq!(segs.len(), 3);
        assert_eq!((&segs[0].lo, &segs[0].hi), (&r(0, 1), &r(1, 5)));
        assert_eq!((&segs[1].lo, &segs[1].hi), (&r(1, 5), &r(7, 10)));
        assert_eq!((&segs[2].lo, &segs[2].hi), (&r(7, 10), &r(1, 1)));
        assert_eq!(segs[1].threshold, r(11, 20));

        // Treated measure at (z1, a) is .7 = pi(z1, a).
        assert!(verify_normalized(&model, &rep).unwrap().is_verified());
    }

    #[test]
    fn normalization_is_identity_on_already_uniform_levels() {
        // Two compliers with distinct cutoffs and an always/never pair:
        // segment lengths are just the type shares in cutoff order.
        let model = model_m1();
        let rep = construct_representation(&model).unwrap();
        let rep = normalize_uniform(&rep, &model).unwrap();
        for (cell, law) in rep
            .normalized
            .as_ref()
            .unwrap()
            .per_cell
            .iter()
            .zip(&rep.u_law.per_cell)
        {
            for (seg, point) in cell.iter().zip(law) {
                assert_eq!(seg.hi.clone() - seg.lo.clone(), point.prob);
                assert_eq!(seg.threshold, point.level);
            }
        }
    }

    #[test]
    fn map_scale_preserves_verification_and_order() {
        let model = model_m1();
        let rep = normalize_uniform(&construct_representation(&model).unwrap(), &model).unwrap();
        let affine = |v: &Rational| v.clone() * r(7, 2) + r(3, 1);
        let mapped = rep.map_scale(&affine);
        assert!(verify_representation(&model, &mapped).unwrap().is_verified());
        assert!(verify_normalized(&model, &mapped).unwrap().is_verified());
        assert_eq!(
            rep.index.argsort_classes(),
            mapped.index.argsort_classes()
        );
    }
}
