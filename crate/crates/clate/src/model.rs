//! Finite-support selection models and their monotonicity structure.
//!
//! A [`FiniteModel`] is the population object every check runs on: a joint
//! law over (covariate cell, instrument value, response type, potential
//! outcomes) stored in the factored form `P(x,z) x P(type, outcomes | x)`,
//! which makes conditional independence of the instrument structural. A raw
//! joint built from ingested data goes through [`FiniteModel::from_joint`],
//! which checks that independence instead of assuming it.
//!
//! Treatment enters as an opaque level: `{0,1}` for binary models,
//! `{1,...,K}` for ordered ones. "With probability one" statements are
//! evaluated on every support point with positive mass.

use crate::error::{ModelError, PropensityError};
use crate::label::{all_distinct, index_of, CovariateCell, InstrumentValue, OutcomeValue};
use crate::scalar::{sum, Scalar};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Treatment-level domain of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreatmentKind {
    /// Two levels, coded `{0, 1}`.
    Binary,
    /// `K` ordered levels, coded `{1, ..., K}`.
    Ordered(u32),
}

impl TreatmentKind {
    /// Number of potential-outcome arms carried by each mass point.
    pub fn arms(&self) -> usize {
        match self {
            TreatmentKind::Binary => 2,
            TreatmentKind::Ordered(k) => *k as usize,
        }
    }

    pub fn level_in_range(&self, level: u32) -> bool {
        match self {
            TreatmentKind::Binary => level <= 1,
            TreatmentKind::Ordered(k) => (1..=*k).contains(&level),
        }
    }

    /// Arm index of the outcome revealed at a treatment level.
    pub fn arm_of_level(&self, level: u32) -> usize {
        match self {
            TreatmentKind::Binary => level as usize,
            TreatmentKind::Ordered(_) => level as usize - 1,
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, TreatmentKind::Binary)
    }

    fn range_string(&self) -> String {
        match self {
            TreatmentKind::Binary => "{0,1}".to_string(),
            TreatmentKind::Ordered(k) => format!("{{1,...,{k}}}"),
        }
    }
}

/// A full map from instrument values to treatment levels (one individual's
/// counterfactual treatment schedule), indexed by instrument position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResponseType {
    levels: Vec<u32>,
}

/// Direction of treatment movement between two instrument values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMove {
    Up,
    Down,
    Flat,
}

/// Pairwise compliance label for binary treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Compliance {
    AlwaysTaker,
    NeverTaker,
    Complier,
    Defier,
}

impl ResponseType {
    pub fn new(levels: Vec<u32>) -> Self {
        Self { levels }
    }

    pub fn level_at(&self, z: usize) -> u32 {
        self.levels[z]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    /// Treatment movement when the instrument moves from position `from` to
    /// position `to`.
    pub fn movement(&self, from: usize, to: usize) -> PairMove {
        match self.levels[to].cmp(&self.levels[from]) {
            std::cmp::Ordering::Greater => PairMove::Up,
            std::cmp::Ordering::Less => PairMove::Down,
            std::cmp::Ordering::Equal => PairMove::Flat,
        }
    }

    /// Compliance label for the instrument pair `(from, to)`. Defined for
    /// binary levels only; pairs are labeled independently when the
    /// instrument has more than two points.
    pub fn compliance(&self, from: usize, to: usize) -> Option<Compliance> {
        let (a, b) = (self.levels[from], self.levels[to]);
        if a > 1 || b > 1 {
            return None;
        }
        Some(match (a, b) {
            (1, 1) => Compliance::AlwaysTaker,
            (0, 0) => Compliance::NeverTaker,
            (0, 1) => Compliance::Complier,
            (1, 0) => Compliance::Defier,
            _ => unreachable!(),
        })
    }
}

/// One outcome vector (one value per potential-outcome arm) with its
/// conditional weight inside a response type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeWeight<T> {
    /// Indices into the outcome support, one per arm.
    pub outcomes: Vec<usize>,
    pub prob: T,
}

/// A response type with its conditional outcome law and share within a cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeMass<T> {
    pub response: ResponseType,
    pub outcome_law: Vec<OutcomeWeight<T>>,
    pub prob: T,
}

/// Finite-support model of treatment choice under an instrument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteModel<T> {
    z_support: Vec<InstrumentValue>,
    x_support: Vec<CovariateCell>,
    y_support: Vec<OutcomeValue>,
    treatment: TreatmentKind,
    /// Joint law `P(X=x, Z=z)`, x-major.
    pzx: Vec<Vec<T>>,
    /// Per covariate cell: response types with outcome laws, `P(. | x)`.
    cells: Vec<Vec<TypeMass<T>>>,
}

impl<T: Scalar> FiniteModel<T> {
    /// Factored constructor. Validates structure: distinct non-empty
    /// supports, strictly positive `P(x,z)` summing to one, total response
    /// maps with levels in range, and normalized conditional laws.
    pub fn new(
        z_support: Vec<InstrumentValue>,
        x_support: Vec<CovariateCell>,
        y_support: Vec<OutcomeValue>,
        treatment: TreatmentKind,
        pzx: Vec<Vec<T>>,
        cells: Vec<Vec<TypeMass<T>>>,
    ) -> Result<Self, ModelError> {
        check_support("instrument", &z_support)?;
        check_support("covariate", &x_support)?;
        check_support("outcome", &y_support)?;
        if let TreatmentKind::Ordered(k) = treatment {
            if k < 2 {
                return Err(ModelError::LevelOutOfRange {
                    level: k,
                    range: "ordered treatments need K >= 2".to_string(),
                });
            }
        }

        if pzx.len() != x_support.len() || pzx.iter().any(|row| row.len() != z_support.len()) {
            return Err(ModelError::ShapeMismatch(format!(
                "pzx table must be {} x {}",
                x_support.len(),
                z_support.len()
            )));
        }
        let mut total = T::zero();
        for (xi, row) in pzx.iter().enumerate() {
            for (zi, p) in row.iter().enumerate() {
                if *p < T::zero() {
                    return Err(ModelError::NegativeProbability {
                        context: format!("pzx[{}][{}]", x_support[xi], z_support[zi]),
                        value: p.encode(),
                    });
                }
                if *p == T::zero() {
                    return Err(ModelError::ZeroMassCell {
                        x: x_support[xi].clone(),
                        z: z_support[zi].clone(),
                    });
                }
                total = total + p.clone();
            }
        }
        if total != T::one() {
            return Err(ModelError::MassNotNormalized {
                context: "pzx".to_string(),
                total: total.encode(),
            });
        }

        if cells.len() != x_support.len() {
            return Err(ModelError::ShapeMismatch(format!(
                "types_given_x must list {} cells",
                x_support.len()
            )));
        }
        for (xi, cell) in cells.iter().enumerate() {
            let mut share = T::zero();
            for mass in cell {
                if mass.response.len() != z_support.len() {
                    return Err(ModelError::NonTotalResponse {
                        x: x_support[xi].clone(),
                    });
                }
                for &level in mass.response.levels() {
                    if !treatment.level_in_range(level) {
                        return Err(ModelError::LevelOutOfRange {
                            level,
                            range: treatment.range_string(),
                        });
                    }
                }
                if mass.prob < T::zero() {
                    return Err(ModelError::NegativeProbability {
                        context: format!("type share at x={}", x_support[xi]),
                        value: mass.prob.encode(),
                    });
                }
                share = share + mass.prob.clone();

                let mut law_total = T::zero();
                for w in &mass.outcome_law {
                    if w.outcomes.len() != treatment.arms() {
                        return Err(ModelError::OutcomeArity {
                            expected: treatment.arms(),
                            got: w.outcomes.len(),
                        });
                    }
                    if let Some(&bad) = w.outcomes.iter().find(|&&i| i >= y_support.len()) {
                        return Err(ModelError::OutcomeIndexOutOfRange {
                            index: bad,
                            size: y_support.len(),
                        });
                    }
                    if w.prob < T::zero() {
                        return Err(ModelError::NegativeProbability {
                            context: format!("outcome law at x={}", x_support[xi]),
                            value: w.prob.encode(),
                        });
                    }
                    law_total = law_total + w.prob.clone();
                }
                if law_total != T::one() {
                    return Err(ModelError::MassNotNormalized {
                        context: format!("outcome law at x={}", x_support[xi]),
                        total: law_total.encode(),
                    });
                }
            }
            if share != T::one() {
                return Err(ModelError::MassNotNormalized {
                    context: format!("type shares at x={}", x_support[xi]),
                    total: share.encode(),
                });
            }
        }

        Ok(Self {
            z_support,
            x_support,
            y_support,
            treatment,
            pzx,
            cells,
        })
    }

    /// Raw-joint constructor for ingested data: checks that the law of
    /// (response type, outcomes) given `(x, z)` does not depend on `z`, then
    /// stores the factored form. Fails with a witness when the instrument is
    /// not as good as randomly assigned within cells.
    pub fn from_joint(joint: &JointTable<T>) -> Result<Self, ModelError> {
        let outcome = check_conditional_independence_joint(joint);
        if let Some(w) = outcome.witness {
            return Err(ModelError::IndependenceViolated {
                x: w.x,
                z: w.z,
                z_alt: w.z_alt,
            });
        }

        let nx = joint.x_support.len();
        let nz = joint.z_support.len();
        let mut pzx = vec![vec![T::zero(); nz]; nx];
        for p in &joint.mass {
            pzx[p.x][p.z] = pzx[p.x][p.z].clone() + p.prob.clone();
        }

        // Conditional law per cell, read off the first instrument value
        // (equal across z by the check above).
        let mut cells = Vec::with_capacity(nx);
        for xi in 0..nx {
            let cond = joint_conditional(joint, xi, 0, &pzx[xi][0]);
            let mut by_type: BTreeMap<ResponseType, Vec<(Vec<usize>, T)>> = BTreeMap::new();
            for ((resp, outs), p) in cond {
                by_type.entry(resp).or_default().push((outs, p));
            }
            let mut cell = Vec::new();
            for (resp, outcomes) in by_type {
                let share = sum(outcomes.iter().map(|(_, p)| p));
                let law = outcomes
                    .into_iter()
                    .map(|(outs, p)| OutcomeWeight {
                        outcomes: outs,
                        prob: p / share.clone(),
                    })
                    .collect();
                cell.push(TypeMass {
                    response: resp,
                    outcome_law: law,
                    prob: share,
                });
            }
            cells.push(cell);
        }

        Self::new(
            joint.z_support.clone(),
            joint.x_support.clone(),
            joint.y_support.clone(),
            joint.treatment,
            pzx,
            cells,
        )
    }

    pub fn z_support(&self) -> &[InstrumentValue] {
        &self.z_support
    }

    pub fn x_support(&self) -> &[CovariateCell] {
        &self.x_support
    }

    pub fn y_support(&self) -> &[OutcomeValue] {
        &self.y_support
    }

    pub fn treatment(&self) -> TreatmentKind {
        self.treatment
    }

    pub fn z_count(&self) -> usize {
        self.z_support.len()
    }

    pub fn x_count(&self) -> usize {
        self.x_support.len()
    }

    pub fn pzx(&self, x: usize, z: usize) -> &T {
        &self.pzx[x][z]
    }

    pub fn cell(&self, x: usize) -> &[TypeMass<T>] {
        &self.cells[x]
    }

    /// Marginal `P(X=x)`.
    pub fn x_marginal(&self, x: usize) -> T {
        sum(self.pzx[x].iter())
    }

    pub fn find_z(&self, label: &InstrumentValue) -> Option<usize> {
        index_of(&self.z_support, label)
    }

    pub fn find_x(&self, label: &CovariateCell) -> Option<usize> {
        index_of(&self.x_support, label)
    }

    pub fn find_y(&self, label: &OutcomeValue) -> Option<usize> {
        index_of(&self.y_support, label)
    }

    /// Response types at a cell that carry positive mass.
    pub fn positive_masses(&self, x: usize) -> impl Iterator<Item = &TypeMass<T>> {
        self.cells[x].iter().filter(|m| m.prob > T::zero())
    }

    /// The induced raw joint over (x, z, type, outcomes).
    pub fn to_joint(&self) -> JointTable<T> {
        let mut mass = Vec::new();
        for xi in 0..self.x_count() {
            for zi in 0..self.z_count() {
                for tm in &self.cells[xi] {
                    for w in &tm.outcome_law {
                        let p = self.pzx[xi][zi].clone() * tm.prob.clone() * w.prob.clone();
                        mass.push(JointPoint {
                            x: xi,
                            z: zi,
                            response: tm.response.clone(),
                            outcomes: w.outcomes.clone(),
                            prob: p,
                        });
                    }
                }
            }
        }
        JointTable {
            z_support: self.z_support.clone(),
            x_support: self.x_support.clone(),
            y_support: self.y_support.clone(),
            treatment: self.treatment,
            mass,
        }
    }

    /// Exact overlap and relevance preconditions, reported per cell rather
    /// than enforced at construction so that audits can surface them.
    pub fn validate_preconditions(&self) -> PreconditionReport {
        let mut failures = Vec::new();
        for xi in 0..self.x_count() {
            if self.treatment.is_binary() {
                // P(D=1 | X=x) must be strictly inside (0,1).
                let px = self.x_marginal(xi);
                let mut treated = T::zero();
                for zi in 0..self.z_count() {
                    let pi = self.propensity_value(xi, zi);
                    treated = treated + self.pzx[xi][zi].clone() * pi;
                }
                let share = treated / px;
                if share <= T::zero() || share >= T::one() {
                    failures.push(PreconditionFailure::Overlap {
                        x: self.x_support[xi].clone(),
                        treated_share: share.encode(),
                    });
                }
            }
            if !self.cell_has_relevance(xi) {
                failures.push(PreconditionFailure::Relevance {
                    x: self.x_support[xi].clone(),
                });
            }
        }
        PreconditionReport { failures }
    }

    /// `P(D_z = 1 | X = x)` summed over positive-mass types, no overlap check.
    pub(crate) fn propensity_value(&self, x: usize, z: usize) -> T {
        sum(self.cells[x]
            .iter()
            .filter(|tm| tm.response.level_at(z) == 1)
            .map(|tm| &tm.prob))
    }

    /// Distribution of the treatment level at `(x, z)` over positive mass.
    pub(crate) fn level_distribution(&self, x: usize, z: usize) -> BTreeMap<u32, T> {
        let mut dist = BTreeMap::new();
        for tm in self.positive_masses(x) {
            let level = tm.response.level_at(z);
            let entry = dist.entry(level).or_insert_with(T::zero);
            *entry = entry.clone() + tm.prob.clone();
        }
        dist
    }

    fn cell_has_relevance(&self, x: usize) -> bool {
        let base = self.level_distribution(x, 0);
        (1..self.z_count()).any(|z| self.level_distribution(x, z) != base)
    }
}

fn check_support<L: Ord + Clone + fmt::Display>(
    which: &'static str,
    support: &[L],
) -> Result<(), ModelError> {
    if support.is_empty() {
        return Err(ModelError::EmptySupport { which });
    }
    if !all_distinct(support) {
        let mut seen = std::collections::BTreeSet::new();
        let dup = support.iter().find(|l| !seen.insert((*l).clone())).unwrap();
        return Err(ModelError::DuplicateLabel {
            which,
            label: dup.to_string(),
        });
    }
    Ok(())
}

/// One point of a raw joint law over (x, z, response type, outcomes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointPoint<T> {
    pub x: usize,
    pub z: usize,
    pub response: ResponseType,
    pub outcomes: Vec<usize>,
    pub prob: T,
}

/// Raw joint law over (x, z, response type, outcomes); the domain of the
/// conditional-independence check for models that were not built factored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointTable<T> {
    pub z_support: Vec<InstrumentValue>,
    pub x_support: Vec<CovariateCell>,
    pub y_support: Vec<OutcomeValue>,
    pub treatment: TreatmentKind,
    pub mass: Vec<JointPoint<T>>,
}

fn joint_conditional<T: Scalar>(
    joint: &JointTable<T>,
    x: usize,
    z: usize,
    pxz: &T,
) -> BTreeMap<(ResponseType, Vec<usize>), T> {
    let mut cond = BTreeMap::new();
    for p in &joint.mass {
        if p.x == x && p.z == z && p.prob > T::zero() {
            let key = (p.response.clone(), p.outcomes.clone());
            let entry = cond.entry(key).or_insert_with(T::zero);
            *entry = entry.clone() + p.prob.clone() / pxz.clone();
        }
    }
    cond
}

/// Outcome of the conditional-independence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependenceOutcome {
    pub holds: bool,
    pub witness: Option<IndependenceWitness>,
}

/// First event whose conditional probability differs across instrument
/// values within a cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndependenceWitness {
    pub x: CovariateCell,
    pub z: InstrumentValue,
    pub z_alt: InstrumentValue,
    pub response: ResponseType,
    pub outcomes: Vec<OutcomeValue>,
}

/// Checks whether the law of (response type, potential outcomes) given
/// `(x, z)` is the same for every `z`, by exact comparison of conditionals.
pub fn check_conditional_independence_joint<T: Scalar>(
    joint: &JointTable<T>,
) -> IndependenceOutcome {
    for xi in 0..joint.x_support.len() {
        let mut totals = vec![T::zero(); joint.z_support.len()];
        for p in &joint.mass {
            if p.x == xi {
                totals[p.z] = totals[p.z].clone() + p.prob.clone();
            }
        }
        let base = joint_conditional(joint, xi, 0, &totals[0]);
        for zi in 1..joint.z_support.len() {
            let other = joint_conditional(joint, xi, zi, &totals[zi]);
            if other == base {
                continue;
            }
            // First differing event in the order the mass points are listed.
            let mut ordered_keys = Vec::new();
            for p in &joint.mass {
                if p.x == xi && (p.z == 0 || p.z == zi) && p.prob > T::zero() {
                    let key = (p.response.clone(), p.outcomes.clone());
                    if !ordered_keys.contains(&key) {
                        ordered_keys.push(key);
                    }
                }
            }
            for key in ordered_keys {
                let a = base.get(&key);
                let b = other.get(&key);
                if a != b {
                    let (response, outcomes) = key;
                    return IndependenceOutcome {
                        holds: false,
                        witness: Some(IndependenceWitness {
                            x: joint.x_support[xi].clone(),
                            z: joint.z_support[0].clone(),
                            z_alt: joint.z_support[zi].clone(),
                            response,
                            outcomes: outcomes
                                .into_iter()
                                .map(|i| joint.y_support[i].clone())
                                .collect(),
                        }),
                    };
                }
            }
            unreachable!("conditional maps differ, so some event must differ");
        }
    }
    IndependenceOutcome {
        holds: true,
        witness: None,
    }
}

/// Conditional-independence check on a model: scans the induced joint, so a
/// factored model passes and a defective joint surfaces its witness.
pub fn check_conditional_independence<T: Scalar>(model: &FiniteModel<T>) -> IndependenceOutcome {
    check_conditional_independence_joint(&model.to_joint())
}

/// Exact precondition failures (overlap and relevance).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreconditionReport {
    pub failures: Vec<PreconditionFailure>,
}

impl PreconditionReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum PreconditionFailure {
    /// `P(D=1 | X=x)` is not strictly inside (0,1).
    Overlap {
        x: CovariateCell,
        treated_share: String,
    },
    /// No instrument pair shifts the treatment law at `x`.
    Relevance { x: CovariateCell },
}

/// Ordered-treatment model: a finite model with levels `{1,...,K}` in which
/// every level is attained with positive probability somewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedModel<T>(FiniteModel<T>);

impl<T: Scalar> OrderedModel<T> {
    pub fn new(model: FiniteModel<T>) -> Result<Self, ModelError> {
        let k = match model.treatment() {
            TreatmentKind::Ordered(k) => k,
            TreatmentKind::Binary => {
                return Err(ModelError::LevelOutOfRange {
                    level: 0,
                    range: "ordered model requires levels {1,...,K}".to_string(),
                })
            }
        };
        for level in 1..=k {
            let attained = (0..model.x_count()).any(|x| {
                model.positive_masses(x).any(|tm| {
                    (0..model.z_count()).any(|z| tm.response.level_at(z) == level)
                })
            });
            if !attained {
                return Err(ModelError::UnattainableLevel { level });
            }
        }
        Ok(Self(model))
    }

    pub fn as_model(&self) -> &FiniteModel<T> {
        &self.0
    }

    pub fn into_model(self) -> FiniteModel<T> {
        self.0
    }

    pub fn k(&self) -> u32 {
        match self.0.treatment() {
            TreatmentKind::Ordered(k) => k,
            TreatmentKind::Binary => unreachable!("OrderedModel wraps ordered kinds only"),
        }
    }
}

// ---------------------------------------------------------------------------
// Propensity table
// ---------------------------------------------------------------------------

/// Table of treatment probabilities `pi(z, x) = P(D=1 | Z=z, X=x)`, x-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropensityMatrix<T> {
    z_support: Vec<InstrumentValue>,
    x_support: Vec<CovariateCell>,
    values: Vec<Vec<T>>,
    /// Conditioning-cell sizes when the table is a sample estimate.
    counts: Option<Vec<Vec<u64>>>,
}

impl<T: Scalar> PropensityMatrix<T> {
    pub fn from_parts(
        z_support: Vec<InstrumentValue>,
        x_support: Vec<CovariateCell>,
        values: Vec<Vec<T>>,
        counts: Option<Vec<Vec<u64>>>,
    ) -> Result<Self, ModelError> {
        if values.len() != x_support.len()
            || values.iter().any(|row| row.len() != z_support.len())
        {
            return Err(ModelError::ShapeMismatch(format!(
                "propensity table must be {} x {}",
                x_support.len(),
                z_support.len()
            )));
        }
        if let Some(c) = &counts {
            if c.len() != values.len() || c.iter().any(|row| row.len() != z_support.len()) {
                return Err(ModelError::ShapeMismatch(
                    "count table shape differs from value table".to_string(),
                ));
            }
        }
        for (xi, row) in values.iter().enumerate() {
            for (zi, v) in row.iter().enumerate() {
                if *v < T::zero() || *v > T::one() {
                    return Err(ModelError::NegativeProbability {
                        context: format!(
                            "propensity at (z={}, x={})",
                            z_support[zi], x_support[xi]
                        ),
                        value: v.encode(),
                    });
                }
            }
        }
        Ok(Self {
            z_support,
            x_support,
            values,
            counts,
        })
    }

    pub fn z_support(&self) -> &[InstrumentValue] {
        &self.z_support
    }

    pub fn x_support(&self) -> &[CovariateCell] {
        &self.x_support
    }

    pub fn value(&self, x: usize, z: usize) -> &T {
        &self.values[x][z]
    }

    pub fn count(&self, x: usize, z: usize) -> Option<u64> {
        self.counts.as_ref().map(|c| c[x][z])
    }

    pub fn has_counts(&self) -> bool {
        self.counts.is_some()
    }

    pub fn z_count(&self) -> usize {
        self.z_support.len()
    }

    pub fn x_count(&self) -> usize {
        self.x_support.len()
    }

    /// Column of propensities at one covariate cell, z-major.
    pub fn column(&self, x: usize) -> &[T] {
        &self.values[x]
    }
}

/// Exact propensity table of a binary model; every entry must be strictly
/// inside (0,1).
pub fn propensity_matrix<T: Scalar>(
    model: &FiniteModel<T>,
) -> Result<PropensityMatrix<T>, PropensityError> {
    if !model.treatment().is_binary() {
        return Err(PropensityError::OrderedModel);
    }
    let mut values = Vec::with_capacity(model.x_count());
    for xi in 0..model.x_count() {
        let mut row = Vec::with_capacity(model.z_count());
        for zi in 0..model.z_count() {
            let v = model.propensity_value(xi, zi);
            if v <= T::zero() || v >= T::one() {
                return Err(PropensityError::DegenerateCell {
                    z: model.z_support()[zi].clone(),
                    x: model.x_support()[xi].clone(),
                    value: v.encode(),
                });
            }
            row.push(v);
        }
        values.push(row);
    }
    Ok(PropensityMatrix {
        z_support: model.z_support().to_vec(),
        x_support: model.x_support().to_vec(),
        values,
        counts: None,
    })
}

// ---------------------------------------------------------------------------
// Monotonicity classification
// ---------------------------------------------------------------------------

/// Classification of a model's monotonicity structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MonotonicityClass {
    /// Every instrument pair moves all treatment weakly in one direction
    /// across the whole population.
    GlobalMonotone,
    /// Each cell is monotone on its own, but some pair flips direction
    /// across cells.
    LocalOnlyMonotone,
    /// Some cell hosts opposite movers for the same instrument pair.
    Violated,
}

impl fmt::Display for MonotonicityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MonotonicityClass::GlobalMonotone => "globally monotone",
            MonotonicityClass::LocalOnlyMonotone => "locally-only monotone",
            MonotonicityClass::Violated => "violated",
        };
        f.write_str(s)
    }
}

/// Witness demonstrating a monotonicity classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum MonotonicityWitness {
    /// Direction of `(z, z_alt)` flips between two cells.
    CrossCell {
        z: InstrumentValue,
        z_alt: InstrumentValue,
        x_up: CovariateCell,
        x_down: CovariateCell,
    },
    /// One cell hosts both an up-mover and a down-mover for `(z, z_alt)`.
    WithinCell {
        z: InstrumentValue,
        z_alt: InstrumentValue,
        x: CovariateCell,
        riser: ResponseType,
        faller: ResponseType,
    },
}

/// Verdict of [`classify_monotonicity`] with demonstrating witnesses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonotonicityVerdict {
    pub class: MonotonicityClass,
    pub witnesses: Vec<MonotonicityWitness>,
}

impl fmt::Display for MonotonicityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} witnesses)", self.class, self.witnesses.len())
    }
}

/// Classifies the monotonicity structure of a model by scanning every
/// instrument pair, cell, and positive-mass response type. Witnesses are
/// listed in support order, so the output is deterministic.
pub fn classify_monotonicity<T: Scalar>(model: &FiniteModel<T>) -> MonotonicityVerdict {
    let nz = model.z_count();
    let mut within = Vec::new();
    let mut cross = Vec::new();

    for i in 0..nz {
        for j in (i + 1)..nz {
            let mut first_up: Option<usize> = None;
            let mut first_down: Option<usize> = None;
            for x in 0..model.x_count() {
                let mut riser: Option<&TypeMass<T>> = None;
                let mut faller: Option<&TypeMass<T>> = None;
                for tm in model.positive_masses(x) {
                    match tm.response.movement(i, j) {
                        PairMove::Up => riser = riser.or(Some(tm)),
                        PairMove::Down => faller = faller.or(Some(tm)),
                        PairMove::Flat => {}
                    }
                }
                match (riser, faller) {
                    (Some(r), Some(fall)) => within.push(MonotonicityWitness::WithinCell {
                        z: model.z_support()[i].clone(),
                        z_alt: model.z_support()[j].clone(),
                        x: model.x_support()[x].clone(),
                        riser: r.response.clone(),
                        faller: fall.response.clone(),
                    }),
                    (Some(_), None) => first_up = first_up.or(Some(x)),
                    (None, Some(_)) => first_down = first_down.or(Some(x)),
                    (None, None) => {}
                }
            }
            if let (Some(up), Some(down)) = (first_up, first_down) {
                cross.push(MonotonicityWitness::CrossCell {
                    z: model.z_support()[i].clone(),
                    z_alt: model.z_support()[j].clone(),
                    x_up: model.x_support()[up].clone(),
                    x_down: model.x_support()[down].clone(),
                });
            }
        }
    }

    let verdict = if !within.is_empty() {
        MonotonicityVerdict {
            class: MonotonicityClass::Violated,
            witnesses: within,
        }
    } else if !cross.is_empty() {
        MonotonicityVerdict {
            class: MonotonicityClass::LocalOnlyMonotone,
            witnesses: cross,
        }
    } else {
        MonotonicityVerdict {
            class: MonotonicityClass::GlobalMonotone,
            witnesses: Vec::new(),
        }
    };

    debug_assert_eq!(
        verdict.class == MonotonicityClass::GlobalMonotone,
        globally_monotone_unconditional(model),
        "unconditional and conditional monotonicity phrasings must agree"
    );
    verdict
}

/// The unconditional phrasing: for every pair, the whole population moves
/// weakly one way. Equivalent to the per-cell phrasing aggregated over
/// cells; both are computed so the equivalence can be asserted.
pub fn globally_monotone_unconditional<T: Scalar>(model: &FiniteModel<T>) -> bool {
    let nz = model.z_count();
    for i in 0..nz {
        for j in (i + 1)..nz {
            let mut any_up = false;
            let mut any_down = false;
            for x in 0..model.x_count() {
                for tm in model.positive_masses(x) {
                    match tm.response.movement(i, j) {
                        PairMove::Up => any_up = true,
                        PairMove::Down => any_down = true,
                        PairMove::Flat => {}
                    }
                }
            }
            if any_up && any_down {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn labels<L: From<&'static str>>(names: &[&'static str]) -> Vec<L> {
        names.iter().map(|&n| L::from(n)).collect()
    }

    use crate::fixtures::{model_m1, model_m2, point_type as simple_type};

    #[test]
    fn propensity_matches_hand_sums() {
        let pi = propensity_matrix(&model_m1()).unwrap();
        assert_eq!(*pi.value(0, 0), r(1, 5));
        assert_eq!(*pi.value(0, 1), r(7, 10));
        assert_eq!(*pi.value(1, 0), r(1, 10));
        assert_eq!(*pi.value(1, 1), r(2, 5));
    }

    #[test]
    fn propensity_single_cell_model() {
        let m = FiniteModel::new(
            labels(&["z0", "z1"]),
            labels(&["a"]),
            labels(&["y0", "y1"]),
            TreatmentKind::Binary,
            vec![vec![r(1, 2), r(1, 2)]],
            vec![vec![
                simple_type(vec![1, 1], vec![0, 1], r(3, 10)),
                simple_type(vec![0, 1], vec![0, 1], r(2, 5)),
                simple_type(vec![0, 0], vec![1, 0], r(3, 10)),
            ]],
        )
        .unwrap();
        let pi = propensity_matrix(&m).unwrap();
        assert_eq!(*pi.value(0, 0), r(3, 10));
        assert_eq!(*pi.value(0, 1), r(7, 10));
    }

    #[test]
    fn degenerate_cell_is_rejected() {
        // All never-takers: pi = 0 everywhere.
        let m = FiniteModel::new(
            labels(&["z0", "z1"]),
            labels(&["a"]),
            labels(&["y0", "y1"]),
            TreatmentKind::Binary,
            vec![vec![r(1, 2), r(1, 2)]],
            vec![vec![simple_type(vec![0, 0], vec![0, 0], r(1, 1))]],
        )
        .unwrap();
        assert!(matches!(
            propensity_matrix(&m),
            Err(PropensityError::DegenerateCell { .. })
        ));
    }

    #[test]
    fn type_shares_sum_to_one_within_each_cell() {
        let m = model_m1();
        for x in 0..m.x_count() {
            let total = sum(m.cell(x).iter().map(|tm| &tm.prob));
            assert_eq!(total, Rational::from_int(1));
        }
    }

    #[test]
    fn classify_m1_global() {
        let verdict = classify_monotonicity(&model_m1());
        assert_eq!(verdict.class, MonotonicityClass::GlobalMonotone);
        assert!(verdict.witnesses.is_empty());
    }

    #[test]
    fn classify_m2_local_only_with_witness() {
        let verdict = classify_monotonicity(&model_m2());
        assert_eq!(verdict.class, MonotonicityClass::LocalOnlyMonotone);
        match &verdict.witnesses[0] {
            MonotonicityWitness::CrossCell {
                z,
                z_alt,
                x_up,
                x_down,
            } => {
                assert_eq!((z.as_str(), z_alt.as_str()), ("z0", "z1"));
                assert_eq!((x_up.as_str(), x_down.as_str()), ("a", "b"));
            }
            other => panic!("expected cross-cell witness, got {other:?}"),
        }
    }

    #[test]
    fn classify_complier_and_defier_in_one_cell_is_violated() {
        let m = FiniteModel::new(
            labels(&["z0", "z1"]),
            labels(&["a"]),
            labels(&["y0", "y1"]),
            TreatmentKind::Binary,
            vec![vec![r(1, 2), r(1, 2)]],
            vec![vec![
                simple_type(vec![0, 1], vec![0, 1], r(1, 2)),
                simple_type(vec![1, 0], vec![1, 0], r(1, 2)),
            ]],
        )
        .unwrap();
        let verdict = classify_monotonicity(&m);
        assert_eq!(verdict.class, MonotonicityClass::Violated);
        assert!(matches!(
            verdict.witnesses[0],
            MonotonicityWitness::WithinCell { .. }
        ));
    }

    #[test]
    fn factored_model_passes_conditional_independence() {
        for m in [model_m1(), model_m2()] {
            let outcome = check_conditional_independence(&m);
            assert!(outcome.holds);
            assert!(outcome.witness.is_none());
        }
    }

    #[test]
    fn raw_joint_with_z_dependent_types_fails_independence() {
        // Complier share differs between z0 and z1 at the single cell.
        let complier = ResponseType::new(vec![0, 1]);
        let never = ResponseType::new(vec![0, 0]);
        let joint = JointTable {
            z_support: labels(&["z0", "z1"]),
            x_support: labels(&["a"]),
            y_support: labels(&["y0", "y1"]),
            treatment: TreatmentKind::Binary,
            mass: vec![
                JointPoint {
                    x: 0,
                    z: 0,
                    response: complier.clone(),
                    outcomes: vec![0, 1],
                    prob: r(3, 10),
                },
                JointPoint {
                    x: 0,
                    z: 0,
                    response: never.clone(),
                    outcomes: vec![0, 0],
                    prob: r(1, 5),
                },
                JointPoint {
                    x: 0,
                    z: 1,
                    response: complier.clone(),
                    outcomes: vec![0, 1],
                    prob: r(1, 10),
                },
                JointPoint {
                    x: 0,
                    z: 1,
                    response: never,
                    outcomes: vec![0, 0],
                    prob: r(2, 5),
                },
            ],
        };
        let outcome = check_conditional_independence_joint(&joint);
        assert!(!outcome.holds);
        let w = outcome.witness.unwrap();
        assert_eq!(w.x.as_str(), "a");
        assert_eq!(w.response, complier);
        assert!(FiniteModel::from_joint(&joint).is_err());
    }

    #[test]
    fn from_joint_round_trips_a_factored_model() {
        let m = model_m1();
        let rebuilt = FiniteModel::from_joint(&m.to_joint()).unwrap();
        let pi_a = propensity_matrix(&m).unwrap();
        let pi_b = propensity_matrix(&rebuilt).unwrap();
        for x in 0..m.x_count() {
            for z in 0..m.z_count() {
                assert_eq!(pi_a.value(x, z), pi_b.value(x, z));
            }
        }
        assert_eq!(
            classify_monotonicity(&rebuilt).class,
            MonotonicityClass::GlobalMonotone
        );
    }

    #[test]
    fn constructor_rejects_bad_mass() {
        let err = FiniteModel::new(
            labels(&["z0", "z1"]),
            labels(&["a"]),
            labels(&["y0"]),
            TreatmentKind::Binary,
            vec![vec![r(1, 2), r(1, 4)]],
            vec![vec![simple_type(vec![0, 1], vec![0, 0], r(1, 1))]],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::MassNotNormalized { .. }));

        let err = FiniteModel::new(
            labels(&["z0", "z0"]),
            labels(&["a"]),
            labels(&["y0"]),
            TreatmentKind::Binary,
            vec![vec![r(1, 2), r(1, 2)]],
            vec![vec![simple_type(vec![0, 1], vec![0, 0], r(1, 1))]],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::DuplicateLabel { .. }));
    }

    #[test]
    fn preconditions_flag_irrelevant_cells() {
        // Single cell with only always/never takers: no relevance.
        let m = FiniteModel::new(
            labels(&["z0", "z1"]),
            labels(&["a"]),
            labels(&["y0", "y1"]),
            TreatmentKind::Binary,
            vec![vec![r(1, 2), r(1, 2)]],
            vec![vec![
                simple_type(vec![1, 1], vec![0, 1], r(1, 2)),
                simple_type(vec![0, 0], vec![0, 0], r(1, 2)),
            ]],
        )
        .unwrap();
        let report = m.validate_preconditions();
        assert!(!report.ok());
        assert!(matches!(
            report.failures[0],
            PreconditionFailure::Relevance { .. }
        ));
        assert!(model_m1().validate_preconditions().ok());
    }

    #[test]
    fn compliance_labels_for_two_point_instruments() {
        let t = ResponseType::new(vec![0, 1]);
        assert_eq!(t.compliance(0, 1), Some(Compliance::Complier));
        assert_eq!(t.compliance(1, 0), Some(Compliance::Defier));
        let at = ResponseType::new(vec![1, 1]);
        assert_eq!(at.compliance(0, 1), Some(Compliance::AlwaysTaker));
        let ordered = ResponseType::new(vec![1, 3]);
        assert_eq!(ordered.compliance(0, 1), None);
    }
}
