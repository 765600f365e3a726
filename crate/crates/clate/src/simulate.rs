//! Seeded generation of finite models by monotonicity class, and i.i.d.
//! sampling of observable rows.
//!
//! The generator is deterministic: a spec and its 64-bit seed fully determine
//! the emitted model (ChaCha20 keyed by the seed, no global RNG state).
//! Every emitted model is certified by re-running the classifier, with
//! bounded retries when a draw misses its class. Probability masses are
//! integer weights up to a granularity bound, normalized exactly, so all
//! population checks on generated models stay rational.

use crate::data::{DataRow, Dataset};
use crate::error::GenerationError;
use crate::label::{CovariateCell, InstrumentValue, OutcomeValue};
use crate::model::{
    classify_monotonicity, FiniteModel, MonotonicityClass, OrderedModel, OutcomeWeight,
    PropensityMatrix, ResponseType, TreatmentKind, TypeMass,
};
use crate::represent::{
    check_rank_invariance, IndexFunction, IndexRepresentation, LatentLaw, LatentPoint, RankStatus,
    Verification,
};
use crate::scalar::{Rational, Scalar};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// RNG algorithm identifier stamped into reports for reproducibility.
pub const RNG_ALGORITHM: &str = "chacha20";

const MAX_ATTEMPTS: u32 = 64;

/// Monotonicity class a generated model must certify to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelClass {
    GlobalMonotone,
    LocalOnly,
    Violated,
    FromRepresentation,
}

/// Generator specification; the seed fully determines the output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DgpSpec {
    /// Instrument support size (>= 2).
    pub z: usize,
    /// Covariate support size (>= 1; >= 2 for the locally-only class).
    pub x: usize,
    /// Outcome support size (>= 1).
    pub y: usize,
    pub treatment: TreatmentKind,
    pub class: ModelClass,
    pub seed: u64,
    /// Denominator bound for drawn integer weights (>= 2).
    pub granularity: u32,
}

impl DgpSpec {
    fn validate(&self) -> Result<(), GenerationError> {
        if self.z < 2 {
            return Err(GenerationError::InvalidSpec(
                "instrument support needs at least two points".to_string(),
            ));
        }
        if self.x < 1 || self.y < 1 {
            return Err(GenerationError::InvalidSpec(
                "covariate and outcome supports must be non-empty".to_string(),
            ));
        }
        if self.class == ModelClass::LocalOnly && self.x < 2 {
            return Err(GenerationError::InvalidSpec(
                "a direction flip needs at least two covariate cells".to_string(),
            ));
        }
        if self.granularity < 2 {
            return Err(GenerationError::InvalidSpec(
                "granularity must be at least 2".to_string(),
            ));
        }
        if let TreatmentKind::Ordered(k) = self.treatment {
            if k < 2 {
                return Err(GenerationError::InvalidSpec(
                    "ordered treatments need K >= 2".to_string(),
                ));
            }
        }
        Ok(())
    }

    fn class_name(&self) -> String {
        format!("{:?}", self.class)
    }
}

/// A generated model with its certificate metadata.
#[derive(Debug, Clone)]
pub struct Generated {
    pub model: GeneratedModel,
    /// The seed representation when the class is `FromRepresentation` and
    /// the treatment binary.
    pub representation: Option<IndexRepresentation<Rational>>,
    pub attempts: u32,
}

#[derive(Debug, Clone)]
pub enum GeneratedModel {
    Binary(FiniteModel<Rational>),
    Ordered(OrderedModel<Rational>),
}

impl GeneratedModel {
    pub fn as_finite(&self) -> &FiniteModel<Rational> {
        match self {
            GeneratedModel::Binary(m) => m,
            GeneratedModel::Ordered(m) => m.as_model(),
        }
    }

    pub fn expect_binary(self) -> FiniteModel<Rational> {
        match self {
            GeneratedModel::Binary(m) => m,
            GeneratedModel::Ordered(_) => panic!("generated model is ordered, expected binary"),
        }
    }

    pub fn expect_ordered(self) -> OrderedModel<Rational> {
        match self {
            GeneratedModel::Ordered(m) => m,
            GeneratedModel::Binary(_) => panic!("generated model is binary, expected ordered"),
        }
    }
}

/// Deterministic child seed for replication `i` of a base seed (splitmix64
/// of the xor-folded pair).
pub fn derive_seed(base: u64, replication: u64) -> u64 {
    splitmix64(base ^ replication.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn splitmix64(mut s: u64) -> u64 {
    s = s.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut v = s;
    v = (v ^ (v >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    v = (v ^ (v >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    v ^ (v >> 31)
}

/// Generates a model of the requested class, retrying until the classifier
/// certifies it (or the attempt budget runs out).
pub fn generate_model(spec: &DgpSpec) -> Result<Generated, GenerationError> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    for attempt in 1..=MAX_ATTEMPTS {
        let candidate = match (spec.class, spec.treatment) {
            (ModelClass::FromRepresentation, TreatmentKind::Binary) => {
                from_representation_binary(spec, &mut rng).map(|(m, rep)| Generated {
                    model: GeneratedModel::Binary(m),
                    representation: Some(rep),
                    attempts: attempt,
                })
            }
            (ModelClass::FromRepresentation, TreatmentKind::Ordered(k)) => {
                from_thresholds_ordered(spec, k, &mut rng).map(|m| Generated {
                    model: GeneratedModel::Ordered(m),
                    representation: None,
                    attempts: attempt,
                })
            }
            (_, TreatmentKind::Binary) => step_model(spec, 2, &mut rng).and_then(|m| {
                Ok(Generated {
                    model: GeneratedModel::Binary(m),
                    representation: None,
                    attempts: attempt,
                })
            }),
            (_, TreatmentKind::Ordered(k)) => step_model(spec, k, &mut rng).and_then(|m| {
                OrderedModel::new(m)
                    .map_err(|e| CandidateReject::Structural(e.to_string()))
                    .map(|om| Generated {
                        model: GeneratedModel::Ordered(om),
                        representation: None,
                        attempts: attempt,
                    })
            }),
        };
        match candidate {
            Ok(generated) => {
                if certify(spec, &generated) {
                    return Ok(generated);
                }
            }
            Err(CandidateReject::Structural(_)) => {}
        }
    }
    Err(GenerationError::Exhausted {
        class: spec.class_name(),
        attempts: MAX_ATTEMPTS,
    })
}

enum CandidateReject {
    Structural(#[allow(dead_code)] String),
}

fn certify(spec: &DgpSpec, generated: &Generated) -> bool {
    let model = generated.model.as_finite();
    let verdict = classify_monotonicity(model).class;
    let class_ok = match spec.class {
        ModelClass::GlobalMonotone | ModelClass::FromRepresentation => {
            verdict == MonotonicityClass::GlobalMonotone
        }
        ModelClass::LocalOnly => verdict == MonotonicityClass::LocalOnlyMonotone,
        ModelClass::Violated => verdict == MonotonicityClass::Violated,
    };
    if !class_ok {
        return false;
    }
    match spec.class {
        ModelClass::GlobalMonotone => {
            // Binary draws must also satisfy overlap and relevance so the
            // whole representation pipeline runs on them.
            !spec.treatment.is_binary() || model.validate_preconditions().ok()
        }
        ModelClass::LocalOnly => {
            // The direction flip must be visible in the propensity table.
            if !spec.treatment.is_binary() {
                return true;
            }
            match crate::model::propensity_matrix(model) {
                Ok(pi) => check_rank_invariance(&pi).status == RankStatus::Violated,
                Err(_) => false,
            }
        }
        ModelClass::FromRepresentation => {
            let rep_ok = match &generated.representation {
                Some(rep) => matches!(
                    crate::represent::verify_representation(model, rep),
                    Ok(Verification::Verified)
                ),
                None => true,
            };
            rep_ok && (!spec.treatment.is_binary() || model.validate_preconditions().ok())
        }
        ModelClass::Violated => true,
    }
}

// ---------------------------------------------------------------------------
// Candidate draws
// ---------------------------------------------------------------------------

fn z_labels(n: usize) -> Vec<InstrumentValue> {
    (0..n).map(|i| InstrumentValue::new(format!("z{i}"))).collect()
}

fn x_labels(n: usize) -> Vec<CovariateCell> {
    (0..n).map(|i| CovariateCell::new(format!("x{i}"))).collect()
}

fn y_labels(n: usize) -> Vec<OutcomeValue> {
    (0..n).map(|i| OutcomeValue::new(format!("y{i}"))).collect()
}

fn draw_weights(rng: &mut ChaCha20Rng, count: usize, granularity: u32) -> Vec<Rational> {
    let weights: Vec<u32> = (0..count).map(|_| rng.gen_range(1..=granularity)).collect();
    let total: i64 = weights.iter().map(|&w| i64::from(w)).sum();
    weights
        .into_iter()
        .map(|w| Rational::from_ratio(i64::from(w), total))
        .collect()
}

fn draw_pzx(rng: &mut ChaCha20Rng, nx: usize, nz: usize, granularity: u32) -> Vec<Vec<Rational>> {
    let flat = draw_weights(rng, nx * nz, granularity);
    flat.chunks(nz).map(|row| row.to_vec()).collect()
}

fn draw_outcome_law(
    rng: &mut ChaCha20Rng,
    arms: usize,
    ny: usize,
    granularity: u32,
) -> Vec<OutcomeWeight<Rational>> {
    let entries = rng.gen_range(1..=2usize.min(ny));
    let probs = draw_weights(rng, entries, granularity);
    probs
        .into_iter()
        .map(|prob| OutcomeWeight {
            outcomes: (0..arms).map(|_| rng.gen_range(0..ny)).collect(),
            prob,
        })
        .collect()
}

/// Step response type over a rank order: levels rise weakly along the order.
/// `cuts` are rank positions (0..=nz); the level at a rank counts the cuts
/// at or below it, starting from 0 for binary models and 1 for ordered ones.
fn step_response(order: &[usize], cuts: &[usize], binary: bool) -> ResponseType {
    let nz = order.len();
    let mut rank_of = vec![0usize; nz];
    for (rank, &z) in order.iter().enumerate() {
        rank_of[z] = rank;
    }
    let levels = (0..nz)
        .map(|z| {
            let rank = rank_of[z];
            let below = cuts.iter().filter(|&&c| c <= rank).count() as u32;
            if binary {
                below
            } else {
                1 + below
            }
        })
        .collect();
    ResponseType::new(levels)
}

fn draw_cuts(rng: &mut ChaCha20Rng, nz: usize, k: u32) -> Vec<usize> {
    let mut cuts: Vec<usize> = (0..(k - 1) as usize)
        .map(|_| rng.gen_range(0..=nz))
        .collect();
    cuts.sort_unstable();
    cuts
}

/// Monotone step-type model: one global rank order shared by every cell
/// (flipped on half the cells for the locally-only class, with an opposite
/// mover planted in one cell for the violated class).
fn step_model(
    spec: &DgpSpec,
    k: u32,
    rng: &mut ChaCha20Rng,
) -> Result<FiniteModel<Rational>, CandidateReject> {
    let nz = spec.z;
    let binary = k == 2 && spec.treatment.is_binary();
    let mut order: Vec<usize> = (0..nz).collect();
    order.shuffle(rng);
    // Adjacent pair whose direction flips in the non-global classes.
    let flip_at = rng.gen_range(0..nz - 1);
    let mut flipped = order.clone();
    flipped.swap(flip_at, flip_at + 1);

    let mut cells = Vec::with_capacity(spec.x);
    for xi in 0..spec.x {
        let (cell_order, force_cross) = match spec.class {
            ModelClass::GlobalMonotone => (&order, false),
            ModelClass::LocalOnly => {
                if xi < spec.x / 2 {
                    (&order, true)
                } else {
                    (&flipped, true)
                }
            }
            ModelClass::Violated => (&order, xi == 0),
            ModelClass::FromRepresentation => unreachable!("handled separately"),
        };

        let mut types: Vec<ResponseType> = Vec::new();
        if binary {
            // Always/never takers keep every propensity off 0 and 1.
            types.push(step_response(cell_order, &[0], true));
            types.push(step_response(cell_order, &[nz], true));
            if force_cross {
                types.push(step_response(cell_order, &[flip_at + 1], true));
            }
            let extra = rng.gen_range(1..=3usize.min(nz.saturating_sub(1)).max(1));
            for _ in 0..extra {
                if types.len() >= 6 {
                    break;
                }
                let cut = rng.gen_range(1..=nz - 1);
                types.push(step_response(cell_order, &[cut], true));
            }
        } else {
            if force_cross {
                // A type that moves across the flip pair.
                let mut cuts = draw_cuts(rng, nz, k);
                cuts[0] = flip_at + 1;
                cuts.sort_unstable();
                types.push(step_response(cell_order, &cuts, false));
            }
            let count = rng.gen_range(2..=5usize);
            for _ in 0..count {
                if types.len() >= 6 {
                    break;
                }
                let cuts = draw_cuts(rng, nz, k);
                types.push(step_response(cell_order, &cuts, false));
            }
        }

        if spec.class == ModelClass::Violated && xi == 0 {
            // Plant opposite movers for the flip pair inside this cell: a
            // riser and the same map with the pair's values swapped.
            let riser = step_response(&order, &[flip_at + 1], binary);
            let (za, zb) = (order[flip_at], order[flip_at + 1]);
            let mut faller = riser.levels().to_vec();
            faller.swap(za, zb);
            types.push(riser);
            types.push(ResponseType::new(faller));
        }

        let probs = draw_weights(rng, types.len(), spec.granularity);
        let arms = if binary { 2 } else { k as usize };
        let cell: Vec<TypeMass<Rational>> = types
            .into_iter()
            .zip(probs)
            .map(|(response, prob)| TypeMass {
                response,
                outcome_law: draw_outcome_law(rng, arms, spec.y, spec.granularity),
                prob,
            })
            .collect();
        cells.push(cell);
    }

    // Ordered models must attain every level somewhere; patch with constant
    // types of fresh weight, then renormalize that cell.
    if !binary {
        patch_attainability(&mut cells, spec, k, rng);
    }

    let treatment = if binary {
        TreatmentKind::Binary
    } else {
        TreatmentKind::Ordered(k)
    };
    FiniteModel::new(
        z_labels(spec.z),
        x_labels(spec.x),
        y_labels(spec.y),
        treatment,
        draw_pzx(rng, spec.x, spec.z, spec.granularity),
        cells,
    )
    .map_err(|e| CandidateReject::Structural(e.to_string()))
}

fn patch_attainability(
    cells: &mut [Vec<TypeMass<Rational>>],
    spec: &DgpSpec,
    k: u32,
    rng: &mut ChaCha20Rng,
) {
    let nz = spec.z;
    for level in 1..=k {
        let attained = cells.iter().any(|cell| {
            cell.iter()
                .any(|tm| tm.response.levels().iter().any(|&l| l == level))
        });
        if attained {
            continue;
        }
        let xi = rng.gen_range(0..cells.len());
        let constant = ResponseType::new(vec![level; nz]);
        let law = draw_outcome_law(rng, k as usize, spec.y, spec.granularity);
        // Rebuild the cell's shares from integer-weight space: give every
        // existing type weight `granularity` and the patch weight 1.
        let g = i64::from(spec.granularity);
        let old_len = cells[xi].len() as i64;
        let total = g * old_len + 1;
        for tm in cells[xi].iter_mut() {
            tm.prob = tm.prob.clone() * Rational::from_ratio(g * old_len, total);
        }
        cells[xi].push(TypeMass {
            response: constant,
            outcome_law: law,
            prob: Rational::from_ratio(1, total),
        });
    }
}

/// Binary pushforward model drawn representation-first: distinct index
/// levels, then per-cell latent levels with thresholds equal to the level
/// (identity form), then types as the induced indicator patterns.
fn from_representation_binary(
    spec: &DgpSpec,
    rng: &mut ChaCha20Rng,
) -> Result<(FiniteModel<Rational>, IndexRepresentation<Rational>), CandidateReject> {
    let nz = spec.z;
    let g = i64::from(spec.granularity);
    // Distinct numerators over a denominator bounded by the granularity.
    let mut numerators: Vec<i64> = (1..=(g + nz as i64)).collect();
    numerators.shuffle(rng);
    let m_values: Vec<Rational> = numerators[..nz]
        .iter()
        .map(|&n| Rational::from_ratio(n, g))
        .collect();
    let index = IndexFunction::new(z_labels(nz), m_values.clone())
        .expect("index is total by construction");
    let lo = index.min().clone() - Rational::from_int(1);
    let hi = index.max().clone() + Rational::from_int(1);

    let mut candidates: Vec<Rational> = vec![lo];
    candidates.extend(m_values.iter().cloned());
    candidates.push(hi);
    candidates.sort_by(crate::scalar::cmp_scalar);

    let mut per_cell = Vec::with_capacity(spec.x);
    let mut q = Vec::with_capacity(spec.x);
    let mut cells = Vec::with_capacity(spec.x);
    for _ in 0..spec.x {
        // Forced picks keep the cell's propensities interior and relevant:
        // mass at or below the lowest index level, mass above the highest,
        // and mass at an interior level so the instrument moves something.
        // Candidates are sorted: [lo, m(1st), ..., m(nz-th), hi].
        let top = candidates.len() - 1;
        let mut chosen: Vec<usize> = vec![
            top,
            rng.gen_range(0..=1),
            rng.gen_range(2..top),
        ];
        let budget = candidates.len().min(6);
        let extras = rng.gen_range(0..=budget.saturating_sub(chosen.len()));
        let mut picks: Vec<usize> = (0..candidates.len())
            .filter(|i| !chosen.contains(i))
            .collect();
        picks.shuffle(rng);
        chosen.extend(picks.into_iter().take(extras));
        chosen.sort_unstable();
        chosen.dedup();
        let count = chosen.len();
        let probs = draw_weights(rng, count, spec.granularity);

        let mut points = Vec::with_capacity(count);
        let mut cell_q = Vec::with_capacity(count);
        let mut masses = Vec::with_capacity(count);
        for (pick, prob) in chosen.iter().zip(probs) {
            let level = candidates[*pick].clone();
            points.push(LatentPoint {
                level: level.clone(),
                prob: prob.clone(),
            });
            cell_q.push(level.clone());
            let response = ResponseType::new(
                (0..nz)
                    .map(|z| u32::from(*index.value(z) >= level))
                    .collect(),
            );
            masses.push(TypeMass {
                response,
                outcome_law: draw_outcome_law(rng, 2, spec.y, spec.granularity),
                prob,
            });
        }
        per_cell.push(points);
        q.push(cell_q);
        cells.push(masses);
    }

    let model = FiniteModel::new(
        z_labels(spec.z),
        x_labels(spec.x),
        y_labels(spec.y),
        TreatmentKind::Binary,
        draw_pzx(rng, spec.x, spec.z, spec.granularity),
        cells,
    )
    .map_err(|e| CandidateReject::Structural(e.to_string()))?;

    let rep = IndexRepresentation {
        index,
        x_support: model.x_support().to_vec(),
        u_law: LatentLaw { per_cell },
        q,
        normalized: None,
    };
    Ok((model, rep))
}

/// Ordered pushforward model drawn threshold-first.
fn from_thresholds_ordered(
    spec: &DgpSpec,
    k: u32,
    rng: &mut ChaCha20Rng,
) -> Result<OrderedModel<Rational>, CandidateReject> {
    let nz = spec.z;
    let g = i64::from(spec.granularity);
    let mut numerators: Vec<i64> = (1..=(g + nz as i64)).collect();
    numerators.shuffle(rng);
    let m_values: Vec<Rational> = numerators[..nz]
        .iter()
        .map(|&n| Rational::from_ratio(n, g))
        .collect();
    let index = IndexFunction::new(z_labels(nz), m_values.clone())
        .expect("index is total by construction");
    let lo = index.min().clone() - Rational::from_int(1);
    let hi = index.max().clone() + Rational::from_int(1);
    let mut candidates: Vec<Rational> = vec![lo];
    candidates.extend(m_values.iter().cloned());
    candidates.push(hi);
    candidates.sort_by(crate::scalar::cmp_scalar);

    let mut cells = Vec::with_capacity(spec.x);
    for _ in 0..spec.x {
        let count = rng.gen_range(2..=6usize);
        let probs = draw_weights(rng, count, spec.granularity);
        let cell: Vec<TypeMass<Rational>> = probs
            .into_iter()
            .map(|prob| {
                let mut thresholds: Vec<Rational> = (0..(k - 1) as usize)
                    .map(|_| candidates[rng.gen_range(0..candidates.len())].clone())
                    .collect();
                thresholds.sort_by(crate::scalar::cmp_scalar);
                let response = ResponseType::new(
                    (0..nz)
                        .map(|z| {
                            1 + thresholds
                                .iter()
                                .filter(|u| index.value(z) >= *u)
                                .count() as u32
                        })
                        .collect(),
                );
                TypeMass {
                    response,
                    outcome_law: draw_outcome_law(rng, k as usize, spec.y, spec.granularity),
                    prob,
                }
            })
            .collect();
        cells.push(cell);
    }

    let model = FiniteModel::new(
        z_labels(spec.z),
        x_labels(spec.x),
        y_labels(spec.y),
        TreatmentKind::Ordered(k),
        draw_pzx(rng, spec.x, spec.z, spec.granularity),
        cells,
    )
    .map_err(|e| CandidateReject::Structural(e.to_string()))?;
    OrderedModel::new(model).map_err(|e| CandidateReject::Structural(e.to_string()))
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Draws `n` i.i.d. rows from the model's joint: (x, z) from the cell law,
/// a response type and outcome vector from the cell's conditional law, then
/// the realized treatment `d = t(z)` and outcome of the realized arm.
pub fn sample(model: &FiniteModel<Rational>, n: u64, seed: u64) -> Dataset {
    assert!(n >= 1, "sample size must be at least 1");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    // Cumulative f64 tables, converted once.
    let nz = model.z_count();
    let mut cum_cells: Vec<f64> = Vec::with_capacity(model.x_count() * nz);
    let mut acc = 0.0;
    for x in 0..model.x_count() {
        for z in 0..nz {
            acc += model.pzx(x, z).to_f64();
            cum_cells.push(acc);
        }
    }
    let type_tables: Vec<Vec<f64>> = (0..model.x_count())
        .map(|x| {
            let mut acc = 0.0;
            model
                .cell(x)
                .iter()
                .map(|tm| {
                    acc += tm.prob.to_f64();
                    acc
                })
                .collect()
        })
        .collect();
    let outcome_tables: Vec<Vec<Vec<f64>>> = (0..model.x_count())
        .map(|x| {
            model
                .cell(x)
                .iter()
                .map(|tm| {
                    let mut acc = 0.0;
                    tm.outcome_law
                        .iter()
                        .map(|w| {
                            acc += w.prob.to_f64();
                            acc
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let u: f64 = rng.gen();
        let cell = walk(&cum_cells, u * cum_cells.last().copied().unwrap_or(1.0));
        let (x, z) = (cell / nz, cell % nz);

        let u: f64 = rng.gen();
        let table = &type_tables[x];
        let t = walk(table, u * table.last().copied().unwrap_or(1.0));
        let tm = &model.cell(x)[t];

        let u: f64 = rng.gen();
        let table = &outcome_tables[x][t];
        let o = walk(table, u * table.last().copied().unwrap_or(1.0));
        let w = &tm.outcome_law[o];

        let d = tm.response.level_at(z);
        let arm = model.treatment().arm_of_level(d);
        rows.push(DataRow {
            x: model.x_support()[x].to_string(),
            z: model.z_support()[z].to_string(),
            d,
            y: model.y_support()[w.outcomes[arm]].to_string(),
        });
    }
    Dataset { rows }
}

fn walk(cumulative: &[f64], target: f64) -> usize {
    cumulative
        .partition_point(|&c| c < target)
        .min(cumulative.len() - 1)
}

/// Exact maximum absolute propensity deviation between a binary model and a
/// sampled dataset, over all non-empty cells (for convergence diagnostics).
pub fn max_propensity_deviation(
    pi: &PropensityMatrix<Rational>,
    dataset: &Dataset,
) -> f64 {
    let mut counts: std::collections::BTreeMap<(String, String), (u64, u64)> =
        std::collections::BTreeMap::new();
    for row in &dataset.rows {
        let e = counts.entry((row.x.clone(), row.z.clone())).or_insert((0, 0));
        e.0 += 1;
        if row.d == 1 {
            e.1 += 1;
        }
    }
    let mut worst = 0.0f64;
    for (x, xl) in pi.x_support().iter().enumerate() {
        for (z, zl) in pi.z_support().iter().enumerate() {
            if let Some((n, treated)) = counts.get(&(xl.to_string(), zl.to_string())) {
                if *n == 0 {
                    continue;
                }
                let hat = *treated as f64 / *n as f64;
                let dev = (hat - pi.value(x, z).to_f64()).abs();
                worst = worst.max(dev);
            }
        }
    }
    worst
}
