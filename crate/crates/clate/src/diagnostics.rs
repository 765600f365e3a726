//! Observable implications of the separable index: sufficiency of the index
//! for outcome distributions and monotonicity of treated/untreated moments.
//!
//! Both checks run on an [`ObservableLaw`] — the joint law of the observed
//! quadruple (x, z, d, y) — so the same code audits exact population models
//! and sample frequency tables; sample tables carry cell counts and are
//! compared under a tolerance policy instead of exactly.

use crate::compare::{Ordering3, ProbComparer};
use crate::error::{ModelError, NegativityError, PropensityError, ShapeError};
use crate::label::{CovariateCell, InstrumentValue, OutcomeValue};
use crate::model::{FiniteModel, PropensityMatrix, TreatmentKind};
use crate::represent::IndexFunction;
use crate::scalar::Scalar;

/// Joint law of the observables (x, z, d, y) on finite supports.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableLaw<T> {
    z_support: Vec<InstrumentValue>,
    x_support: Vec<CovariateCell>,
    y_support: Vec<OutcomeValue>,
    /// Observable treatment levels in ascending order.
    d_levels: Vec<u32>,
    /// Mass table, flattened as [x][z][d][y].
    mass: Vec<T>,
    /// Raw cell counts when the law is a sample frequency table.
    counts: Option<Vec<u64>>,
    n: Option<u64>,
}

impl<T: Scalar> ObservableLaw<T> {
    pub fn from_parts(
        z_support: Vec<InstrumentValue>,
        x_support: Vec<CovariateCell>,
        y_support: Vec<OutcomeValue>,
        d_levels: Vec<u32>,
        mass: Vec<T>,
        counts: Option<Vec<u64>>,
        n: Option<u64>,
    ) -> Result<Self, ModelError> {
        let size = x_support.len() * z_support.len() * d_levels.len() * y_support.len();
        if mass.len() != size {
            return Err(ModelError::ShapeMismatch(format!(
                "observable law has {} entries, expected {}",
                mass.len(),
                size
            )));
        }
        if let Some(c) = &counts {
            if c.len() != size {
                return Err(ModelError::ShapeMismatch(
                    "count table shape differs from mass table".to_string(),
                ));
            }
        }
        if let Some(bad) = mass.iter().find(|v| **v < T::zero()) {
            return Err(ModelError::NegativeProbability {
                context: "observable law".to_string(),
                value: bad.encode(),
            });
        }
        Ok(Self {
            z_support,
            x_support,
            y_support,
            d_levels,
            mass,
            counts,
            n,
        })
    }

    /// Pushforward of a model onto its observables: the treatment is the
    /// response type evaluated at the drawn instrument, the outcome is the
    /// potential outcome of the realized arm.
    pub fn from_model(model: &FiniteModel<T>) -> Self {
        let d_levels: Vec<u32> = match model.treatment() {
            TreatmentKind::Binary => vec![0, 1],
            TreatmentKind::Ordered(k) => (1..=k).collect(),
        };
        let (nx, nz, nd, ny) = (
            model.x_count(),
            model.z_count(),
            d_levels.len(),
            model.y_support().len(),
        );
        let mut mass = vec![T::zero(); nx * nz * nd * ny];
        for x in 0..nx {
            for z in 0..nz {
                for tm in model.cell(x) {
                    let level = tm.response.level_at(z);
                    let d = d_levels
                        .iter()
                        .position(|&l| l == level)
                        .expect("response level within declared range");
                    let arm = model.treatment().arm_of_level(level);
                    for w in &tm.outcome_law {
                        let y = w.outcomes[arm];
                        let idx = ((x * nz + z) * nd + d) * ny + y;
                        mass[idx] = mass[idx].clone()
                            + model.pzx(x, z).clone() * tm.prob.clone() * w.prob.clone();
                    }
                }
            }
        }
        Self {
            z_support: model.z_support().to_vec(),
            x_support: model.x_support().to_vec(),
            y_support: model.y_support().to_vec(),
            d_levels,
            mass,
            counts: None,
            n: None,
        }
    }

    fn idx(&self, x: usize, z: usize, d: usize, y: usize) -> usize {
        ((x * self.z_support.len() + z) * self.d_levels.len() + d) * self.y_support.len() + y
    }

    pub fn mass_at(&self, x: usize, z: usize, d: usize, y: usize) -> &T {
        &self.mass[self.idx(x, z, d, y)]
    }

    pub fn count_at(&self, x: usize, z: usize, d: usize, y: usize) -> Option<u64> {
        self.counts.as_ref().map(|c| c[self.idx(x, z, d, y)])
    }

    /// `P(X=x, Z=z)`.
    pub fn cell_total(&self, x: usize, z: usize) -> T {
        let mut total = T::zero();
        for d in 0..self.d_levels.len() {
            for y in 0..self.y_support.len() {
                total = total + self.mass_at(x, z, d, y).clone();
            }
        }
        total
    }

    pub fn cell_count(&self, x: usize, z: usize) -> Option<u64> {
        self.counts.as_ref().map(|c| {
            let mut total = 0u64;
            for d in 0..self.d_levels.len() {
                for y in 0..self.y_support.len() {
                    total += c[self.idx(x, z, d, y)];
                }
            }
            total
        })
    }

    /// `P(X=x, Z=z, D=d)` for the d-th observable level.
    pub fn arm_total(&self, x: usize, z: usize, d: usize) -> T {
        let mut total = T::zero();
        for y in 0..self.y_support.len() {
            total = total + self.mass_at(x, z, d, y).clone();
        }
        total
    }

    pub fn arm_count(&self, x: usize, z: usize, d: usize) -> Option<u64> {
        self.counts.as_ref().map(|c| {
            (0..self.y_support.len())
                .map(|y| c[self.idx(x, z, d, y)])
                .sum()
        })
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

    pub fn d_levels(&self) -> &[u32] {
        &self.d_levels
    }

    pub fn is_binary(&self) -> bool {
        self.d_levels == [0, 1]
    }

    pub fn is_sample(&self) -> bool {
        self.counts.is_some()
    }

    pub fn sample_size(&self) -> Option<u64> {
        self.n
    }

    /// Treatment-probability table `P(D=1 | Z=z, X=x)` of a binary law,
    /// with conditioning-cell counts attached for sample tables. A cell
    /// with no observations is an error: conditionals are undefined there.
    pub fn propensity(&self) -> Result<PropensityMatrix<T>, ModelError> {
        if !self.is_binary() {
            return Err(ModelError::ShapeMismatch(
                "propensity table requires binary treatment".to_string(),
            ));
        }
        let mut values = Vec::with_capacity(self.x_support.len());
        let mut counts = Vec::with_capacity(self.x_support.len());
        for x in 0..self.x_support.len() {
            let mut row = Vec::with_capacity(self.z_support.len());
            let mut crow = Vec::with_capacity(self.z_support.len());
            for z in 0..self.z_support.len() {
                let denom = self.cell_total(x, z);
                if denom == T::zero() {
                    return Err(ModelError::ZeroMassCell {
                        x: self.x_support[x].clone(),
                        z: self.z_support[z].clone(),
                    });
                }
                row.push(self.arm_total(x, z, 1) / denom);
                crow.push(self.cell_count(x, z).unwrap_or(0));
            }
            values.push(row);
            counts.push(crow);
        }
        PropensityMatrix::from_parts(
            self.z_support.clone(),
            self.x_support.clone(),
            values,
            self.counts.as_ref().map(|_| counts),
        )
    }
}

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

/// A nonnegative table over (outcome, cell), the test function of a moment
/// inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction<T> {
    pub name: String,
    /// Values indexed [y][x].
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> TestFunction<T> {
    pub fn new(name: impl Into<String>, values: Vec<Vec<T>>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }

    pub fn constant_one(ny: usize, nx: usize) -> Self {
        Self::new("1", vec![vec![T::one(); nx]; ny])
    }

    pub fn indicator(y: usize, label: &OutcomeValue, ny: usize, nx: usize) -> Self {
        let mut values = vec![vec![T::zero(); nx]; ny];
        values[y] = vec![T::one(); nx];
        Self::new(format!("1{{y={label}}}"), values)
    }

    /// The default family: the constant one plus the indicator of each
    /// outcome value. On a finite support these generate every nonnegative
    /// implication that is checkable cell by cell.
    pub fn default_family(y_support: &[OutcomeValue], x_count: usize) -> Vec<TestFunction<T>> {
        let ny = y_support.len();
        let mut family = vec![Self::constant_one(ny, x_count)];
        for (y, label) in y_support.iter().enumerate() {
            family.push(Self::indicator(y, label, ny, x_count));
        }
        family
    }

    fn validate(
        &self,
        y_support: &[OutcomeValue],
        x_support: &[CovariateCell],
    ) -> Result<(), NegativityError> {
        for (y, row) in self.values.iter().enumerate() {
            for (x, v) in row.iter().enumerate() {
                if *v < T::zero() {
                    return Err(NegativityError {
                        name: self.name.clone(),
                        y: y_support.get(y).map(|l| l.to_string()).unwrap_or_default(),
                        x: x_support.get(x).map(|l| l.to_string()).unwrap_or_default(),
                        value: v.encode(),
                    });
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Sufficiency of the index
// ---------------------------------------------------------------------------

/// A conditional outcome probability that differs between two instrument
/// values sharing the same index level.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficiencyFailure<T> {
    pub x: CovariateCell,
    pub z: InstrumentValue,
    pub z_alt: InstrumentValue,
    pub arm: u32,
    pub y: OutcomeValue,
    pub lhs: T,
    pub rhs: T,
}

/// A conditioning cell with no mass, skipped rather than compared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VacuousCell {
    pub x: CovariateCell,
    pub z: InstrumentValue,
    pub arm: u32,
}

/// Result of the index-sufficiency check.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficiencyReport<T> {
    pub pass: bool,
    pub failures: Vec<SufficiencyFailure<T>>,
    pub vacuous: Vec<VacuousCell>,
    /// Number of comparisons actually made.
    pub compared: usize,
    pub underpowered: usize,
    /// Number of index-tied instrument pairs examined; zero means the check
    /// passed vacuously.
    pub tied_pairs: usize,
}

/// Checks that instrument values with equal index levels induce identical
/// outcome distributions within each cell and arm: the index carries all of
/// the instrument's information about outcomes.
pub fn sufficiency_check<T: Scalar>(
    model: &FiniteModel<T>,
    index: &IndexFunction<T>,
) -> Result<SufficiencyReport<T>, PropensityError> {
    if !model.treatment().is_binary() {
        return Err(PropensityError::OrderedModel);
    }
    let law = ObservableLaw::from_model(model);
    sufficiency_check_law(&law, index, &ProbComparer::exact())
        .map_err(|_| PropensityError::OrderedModel)
}

/// Sufficiency check on an observable law under a comparison policy.
pub fn sufficiency_check_law<T: Scalar>(
    law: &ObservableLaw<T>,
    index: &IndexFunction<T>,
    cmp: &ProbComparer,
) -> Result<SufficiencyReport<T>, ShapeError> {
    if !law.is_binary() {
        return Err(ShapeError::new(
            "sufficiency check requires binary treatment",
        ));
    }
    if index.z_support() != law.z_support() {
        return Err(ShapeError::new(
            "index and law have different instrument supports",
        ));
    }

    let groups = tie_groups(index);
    let mut failures = Vec::new();
    let mut vacuous = Vec::new();
    let mut compared = 0usize;
    let mut underpowered = 0usize;
    let mut tied_pairs = 0usize;

    for group in groups.iter().filter(|g| g.len() > 1) {
        for a in 0..group.len() {
            for b in (a + 1)..group.len() {
                let (zi, zj) = (group[a], group[b]);
                tied_pairs += 1;
                for x in 0..law.x_support().len() {
                    for (d, &arm) in law.d_levels().iter().enumerate() {
                        let den_i = law.arm_total(x, zi, d);
                        let den_j = law.arm_total(x, zj, d);
                        let mut skip = false;
                        for (z, den) in [(zi, &den_i), (zj, &den_j)] {
                            if *den == T::zero() {
                                vacuous.push(VacuousCell {
                                    x: law.x_support()[x].clone(),
                                    z: law.z_support()[z].clone(),
                                    arm,
                                });
                                skip = true;
                            }
                        }
                        if skip {
                            continue;
                        }
                        let n_i = law.arm_count(x, zi, d);
                        let n_j = law.arm_count(x, zj, d);
                        for y in 0..law.y_support().len() {
                            let lhs = law.mass_at(x, zi, d, y).clone() / den_i.clone();
                            let rhs = law.mass_at(x, zj, d, y).clone() / den_j.clone();
                            compared += 1;
                            match cmp.compare(&lhs, n_i, &rhs, n_j) {
                                Ordering3::Eq => {}
                                Ordering3::Underpowered => underpowered += 1,
                                _ => failures.push(SufficiencyFailure {
                                    x: law.x_support()[x].clone(),
                                    z: law.z_support()[zi].clone(),
                                    z_alt: law.z_support()[zj].clone(),
                                    arm,
                                    y: law.y_support()[y].clone(),
                                    lhs,
                                    rhs,
                                }),
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(SufficiencyReport {
        pass: failures.is_empty(),
        failures,
        vacuous,
        compared,
        underpowered,
        tied_pairs,
    })
}

/// Instrument positions grouped by exactly equal index levels.
fn tie_groups<T: Scalar>(index: &IndexFunction<T>) -> Vec<Vec<usize>> {
    index.argsort_classes()
}

// ---------------------------------------------------------------------------
// Moment monotonicity
// ---------------------------------------------------------------------------

/// First adjacent violation inside a moment sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentViolation<T> {
    /// Position i such that the step from level i to i+1 moves the wrong way.
    pub position: usize,
    pub prev: T,
    pub next: T,
}

/// One sequence `mu -> E[arm-moment | X=x, index(Z)=mu]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence<T> {
    pub x: CovariateCell,
    pub g_name: String,
    /// 1 for the treated arm (weakly increasing), 0 for the untreated arm
    /// (weakly decreasing).
    pub arm: u32,
    pub mu: Vec<T>,
    pub values: Vec<T>,
    pub violation: Option<MomentViolation<T>>,
}

/// Result of the moment-monotonicity check.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMonotonicityReport<T> {
    pub pass: bool,
    pub sequences: Vec<MomentSequence<T>>,
    pub underpowered: usize,
    /// Index levels with no mass at some cell, skipped in that cell's
    /// sequences.
    pub vacuous_levels: usize,
}

/// Errors of the moment-monotonicity check.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MomentCheckError {
    #[error(transparent)]
    Negativity(#[from] NegativityError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// Checks that treated moments rise and untreated moments fall along the
/// index, for every cell and every test function in the given families.
pub fn moment_monotonicity_check<T: Scalar>(
    model: &FiniteModel<T>,
    index: &IndexFunction<T>,
    g1: &[TestFunction<T>],
    g0: &[TestFunction<T>],
) -> Result<MomentMonotonicityReport<T>, MomentCheckError> {
    if !model.treatment().is_binary() {
        return Err(MomentCheckError::Shape(ShapeError::new(
            "moment check requires binary treatment",
        )));
    }
    let law = ObservableLaw::from_model(model);
    moment_monotonicity_check_law(&law, index, g1, g0, &ProbComparer::exact())
}

/// Moment-monotonicity check on an observable law under a comparison policy.
pub fn moment_monotonicity_check_law<T: Scalar>(
    law: &ObservableLaw<T>,
    index: &IndexFunction<T>,
    g1: &[TestFunction<T>],
    g0: &[TestFunction<T>],
    cmp: &ProbComparer,
) -> Result<MomentMonotonicityReport<T>, MomentCheckError> {
    if !law.is_binary() {
        return Err(MomentCheckError::Shape(ShapeError::new(
            "moment check requires binary treatment",
        )));
    }
    if index.z_support() != law.z_support() {
        return Err(MomentCheckError::Shape(ShapeError::new(
            "index and law have different instrument supports",
        )));
    }
    for g in g1.iter().chain(g0) {
        g.validate(law.y_support(), law.x_support())?;
    }

    let groups = tie_groups(index);
    let mut sequences = Vec::new();
    let mut underpowered = 0usize;
    let mut vacuous_levels = 0usize;

    for x in 0..law.x_support().len() {
        // Per index level: the level, its conditioning mass and count, and
        // the member instrument positions.
        let mut levels: Vec<(T, T, Option<u64>, Vec<usize>)> = Vec::new();
        for group in &groups {
            let mu = index.value(group[0]).clone();
            let mut denom = T::zero();
            let mut count = law.is_sample().then_some(0u64);
            for &z in group {
                denom = denom + law.cell_total(x, z);
                if let (Some(c), Some(cell)) = (count.as_mut(), law.cell_count(x, z)) {
                    *c += cell;
                }
            }
            if denom == T::zero() {
                vacuous_levels += 1;
                continue;
            }
            levels.push((mu, denom, count, group.clone()));
        }

        for (arm, family) in [(1u32, g1), (0u32, g0)] {
            let d = law
                .d_levels()
                .iter()
                .position(|&l| l == arm)
                .expect("binary law has both arms");
            for g in family {
                let mut mu_seq = Vec::with_capacity(levels.len());
                let mut values = Vec::with_capacity(levels.len());
                for (mu, denom, _, members) in &levels {
                    let mut num = T::zero();
                    for &z in members {
                        for y in 0..law.y_support().len() {
                            num =
                                num + law.mass_at(x, z, d, y).clone() * g.values[y][x].clone();
                        }
                    }
                    mu_seq.push(mu.clone());
                    values.push(num / denom.clone());
                }

                let mut violation = None;
                for i in 0..values.len().saturating_sub(1) {
                    let (n_prev, n_next) = (levels[i].2, levels[i + 1].2);
                    let outcome = cmp.compare(&values[i], n_prev, &values[i + 1], n_next);
                    let wrong_way = match arm {
                        1 => outcome == Ordering3::Gt,
                        _ => outcome == Ordering3::Lt,
                    };
                    if outcome == Ordering3::Underpowered {
                        underpowered += 1;
                    } else if wrong_way {
                        violation = Some(MomentViolation {
                            position: i,
                            prev: values[i].clone(),
                            next: values[i + 1].clone(),
                        });
                        break;
                    }
                }

                sequences.push(MomentSequence {
                    x: law.x_support()[x].clone(),
                    g_name: g.name.clone(),
                    arm,
                    mu: mu_seq,
                    values,
                    violation,
                });
            }
        }
    }

    Ok(MomentMonotonicityReport {
        pass: sequences.iter().all(|s| s.violation.is_none()),
        sequences,
        underpowered,
        vacuous_levels,
    })
}
