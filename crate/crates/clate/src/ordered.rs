//! Ordered treatments: K levels chosen by a single index crossing K-1
//! random thresholds.
//!
//! The common index is the population mean treatment `d(z) = E[D_z]`; under
//! uniform-direction monotonicity every binarized propensity ordering is a
//! nondecreasing function of it, so one index serves all K-1 cuts. Each
//! response type maps to the threshold vector `u_k = min{ d(z) : t(z) > k }`
//! (upper sentinel when the type never exceeds `k`), and the joint threshold
//! law is the pushforward of type shares.

use crate::error::{OrderedError, ShapeError};
use crate::label::CovariateCell;
use crate::model::{
    classify_monotonicity, FiniteModel, MonotonicityClass, OrderedModel, OutcomeWeight, PairMove,
    ResponseType, TreatmentKind, TypeMass,
};
use crate::represent::{IndexFunction, Verification, VerifyWitness};
use crate::scalar::{cmp_scalar, sum, Scalar};
use std::collections::BTreeMap;

/// One threshold vector `(u_1, ..., u_{K-1})` with its conditional mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdMass<T> {
    pub thresholds: Vec<T>,
    pub prob: T,
}

/// Random-threshold representation of an ordered model. The implicit outer
/// thresholds are sentinels: `u_0` below every index level, `u_K` above.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRepresentation<T> {
    pub index: IndexFunction<T>,
    pub k: u32,
    pub x_support: Vec<CovariateCell>,
    /// Per cell: threshold vectors with masses, lexicographically sorted.
    pub per_cell: Vec<Vec<ThresholdMass<T>>>,
}

impl<T: Scalar> ThresholdRepresentation<T> {
    /// Sentinel standing in for the lower infinite threshold `u_0`.
    pub fn lower_sentinel(&self) -> T {
        self.index.min().clone() - T::one()
    }

    /// Sentinel standing in for the upper infinite threshold `u_K`.
    pub fn upper_sentinel(&self) -> T {
        self.index.max().clone() + T::one()
    }

    /// Treatment level chosen at instrument position `z` under a threshold
    /// vector: one more than the number of thresholds at or below the index.
    pub fn level_at(&self, thresholds: &[T], z: usize) -> u32 {
        let m = self.index.value(z);
        1 + thresholds.iter().filter(|u| *m >= **u).count() as u32
    }
}

/// Collapses an ordered model to the binary comparison `D > k`. The arms of
/// the binarized model carry the potential outcomes adjacent to the cut
/// (levels `k` and `k+1`).
pub fn binarize_levels<T: Scalar>(
    model: &OrderedModel<T>,
    k: u32,
) -> Result<FiniteModel<T>, OrderedError> {
    let kk = model.k();
    if !(1..kk).contains(&k) {
        return Err(OrderedError::LevelRange { k, max: kk - 1 });
    }
    let inner = model.as_model();
    let cells = (0..inner.x_count())
        .map(|x| {
            inner
                .cell(x)
                .iter()
                .map(|tm| TypeMass {
                    response: ResponseType::new(
                        tm.response
                            .levels()
                            .iter()
                            .map(|&l| u32::from(l > k))
                            .collect(),
                    ),
                    outcome_law: tm
                        .outcome_law
                        .iter()
                        .map(|w| OutcomeWeight {
                            outcomes: vec![w.outcomes[(k - 1) as usize], w.outcomes[k as usize]],
                            prob: w.prob.clone(),
                        })
                        .collect(),
                    prob: tm.prob.clone(),
                })
                .collect()
        })
        .collect();
    let pzx = (0..inner.x_count())
        .map(|x| {
            (0..inner.z_count())
                .map(|z| inner.pzx(x, z).clone())
                .collect()
        })
        .collect();
    FiniteModel::new(
        inner.z_support().to_vec(),
        inner.x_support().to_vec(),
        inner.y_support().to_vec(),
        TreatmentKind::Binary,
        pzx,
        cells,
    )
    .map_err(OrderedError::Model)
}

/// The common instrument index of an ordered model: the population mean
/// treatment `d(z)`, validated to order every binarized propensity table.
pub fn ordered_index<T: Scalar>(model: &OrderedModel<T>) -> Result<IndexFunction<T>, OrderedError> {
    let inner = model.as_model();
    let verdict = classify_monotonicity(inner);
    if verdict.class != MonotonicityClass::GlobalMonotone {
        let level = failing_binarization(model).unwrap_or(1);
        return Err(OrderedError::Monotonicity { level, verdict });
    }

    // d(z) = sum_x P(x) sum_t P(t|x) t(z), exactly.
    let values: Vec<T> = (0..inner.z_count())
        .map(|z| {
            let mut total = T::zero();
            for x in 0..inner.x_count() {
                let px = inner.x_marginal(x);
                let mut cell = T::zero();
                for tm in inner.positive_masses(x) {
                    cell =
                        cell + tm.prob.clone() * T::from_int(i64::from(tm.response.level_at(z)));
                }
                total = total + px * cell;
            }
            total
        })
        .collect();
    let index = IndexFunction::new(inner.z_support().to_vec(), values)
        .expect("index is total on the instrument support");

    check_index_ties(model, &index)?;
    check_common_index(model, &index)?;
    Ok(index)
}

/// Equal index values are only admissible when the whole treatment law is
/// identical at both instrument values within every cell; equal means with
/// different level distributions leave the index's order underdetermined.
fn check_index_ties<T: Scalar>(
    model: &OrderedModel<T>,
    index: &IndexFunction<T>,
) -> Result<(), OrderedError> {
    let inner = model.as_model();
    for class in index.argsort_classes() {
        for a in 0..class.len() {
            for b in (a + 1)..class.len() {
                let (zi, zj) = (class[a], class[b]);
                for x in 0..inner.x_count() {
                    if inner.level_distribution(x, zi) != inner.level_distribution(x, zj) {
                        return Err(OrderedError::AmbiguousIndex {
                            z: inner.z_support()[zi].clone(),
                            z_alt: inner.z_support()[zj].clone(),
                            x: inner.x_support()[x].clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// The mean-treatment index must order every binarized propensity table:
/// `d(z) >= d(z')` implies `P(D_z > k | x) >= P(D_z' > k | x)` for all k, x.
fn check_common_index<T: Scalar>(
    model: &OrderedModel<T>,
    index: &IndexFunction<T>,
) -> Result<(), OrderedError> {
    let inner = model.as_model();
    let kk = model.k();
    for k in 1..kk {
        for i in 0..inner.z_count() {
            for j in 0..inner.z_count() {
                if cmp_scalar(index.value(i), index.value(j)) != std::cmp::Ordering::Greater {
                    continue;
                }
                for x in 0..inner.x_count() {
                    let pi_i = binarized_propensity(inner, x, i, k);
                    let pi_j = binarized_propensity(inner, x, j, k);
                    if pi_i < pi_j {
                        let bin = binarize_levels(model, k)?;
                        return Err(OrderedError::Monotonicity {
                            level: k,
                            verdict: classify_monotonicity(&bin),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

fn binarized_propensity<T: Scalar>(model: &FiniteModel<T>, x: usize, z: usize, k: u32) -> T {
    sum(model
        .cell(x)
        .iter()
        .filter(|tm| tm.prob > T::zero() && tm.response.level_at(z) > k)
        .map(|tm| &tm.prob))
}

/// First binarization level at which a monotonicity failure shows: a cut
/// with opposite movers, or a cut whose direction conflicts with an earlier
/// cut for the same instrument pair.
fn failing_binarization<T: Scalar>(model: &OrderedModel<T>) -> Option<u32> {
    let inner = model.as_model();
    let kk = model.k();
    let nz = inner.z_count();
    for i in 0..nz {
        for j in (i + 1)..nz {
            let mut first_dir: Option<PairMove> = None;
            for k in 1..kk {
                let mut any_up = false;
                let mut any_down = false;
                for x in 0..inner.x_count() {
                    for tm in inner.positive_masses(x) {
                        let a = u32::from(tm.response.level_at(i) > k);
                        let b = u32::from(tm.response.level_at(j) > k);
                        match b.cmp(&a) {
                            std::cmp::Ordering::Greater => any_up = true,
                            std::cmp::Ordering::Less => any_down = true,
                            std::cmp::Ordering::Equal => {}
                        }
                    }
                }
                if any_up && any_down {
                    return Some(k);
                }
                let dir = match (any_up, any_down) {
                    (true, false) => Some(PairMove::Up),
                    (false, true) => Some(PairMove::Down),
                    _ => None,
                };
                if let Some(d) = dir {
                    match first_dir {
                        None => first_dir = Some(d),
                        Some(prev) if prev != d => return Some(k),
                        Some(_) => {}
                    }
                }
            }
        }
    }
    None
}

/// Builds the random-threshold representation of an ordered model.
pub fn construct_ordered_representation<T: Scalar>(
    model: &OrderedModel<T>,
) -> Result<ThresholdRepresentation<T>, OrderedError> {
    let index = ordered_index(model)?;
    let inner = model.as_model();
    let kk = model.k();
    let hi = index.max().clone() + T::one();

    let mut per_cell = Vec::with_capacity(inner.x_count());
    for x in 0..inner.x_count() {
        let mut grouped: BTreeMap<Vec<String>, (Vec<T>, T)> = BTreeMap::new();
        for tm in inner.positive_masses(x) {
            let mut thresholds = Vec::with_capacity((kk - 1) as usize);
            for k in 1..kk {
                let mut candidates: Vec<&T> = Vec::new();
                for z in 0..inner.z_count() {
                    if tm.response.level_at(z) > k {
                        candidates.push(index.value(z));
                    }
                }
                let u_k = candidates
                    .into_iter()
                    .min_by(|a, b| cmp_scalar(*a, *b))
                    .cloned()
                    .unwrap_or_else(|| hi.clone());
                thresholds.push(u_k);
            }
            for w in thresholds.windows(2) {
                assert!(
                    w[1] >= w[0],
                    "threshold vector out of order for a certified-monotone model"
                );
            }
            for z in 0..inner.z_count() {
                let level = 1 + thresholds
                    .iter()
                    .filter(|u| *index.value(z) >= **u)
                    .count() as u32;
                assert_eq!(
                    level,
                    tm.response.level_at(z),
                    "non-threshold response type {:?} at x={} under a certified-monotone model",
                    tm.response,
                    inner.x_support()[x]
                );
            }
            // Group identical vectors; encoded strings give a deterministic
            // grouping key.
            let key: Vec<String> = thresholds.iter().map(|u| u.encode()).collect();
            let entry = grouped
                .entry(key)
                .or_insert_with(|| (thresholds.clone(), T::zero()));
            entry.1 = entry.1.clone() + tm.prob.clone();
        }
        let mut cell: Vec<ThresholdMass<T>> = grouped
            .into_values()
            .map(|(thresholds, prob)| ThresholdMass { thresholds, prob })
            .collect();
        cell.sort_by(|a, b| cmp_vec(&a.thresholds, &b.thresholds));
        per_cell.push(cell);
    }

    Ok(ThresholdRepresentation {
        index,
        k: kk,
        x_support: inner.x_support().to_vec(),
        per_cell,
    })
}

fn cmp_vec<T: Scalar>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = cmp_scalar(x, y);
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    a.len().cmp(&b.len())
}

/// Exhaustively verifies a threshold representation against an ordered
/// model: threshold ordering on every positive-mass vector, reproduction of
/// the level maps as equality of pattern measures, and conditional
/// independence of the coupled model.
pub fn verify_ordered<T: Scalar>(
    model: &OrderedModel<T>,
    rep: &ThresholdRepresentation<T>,
) -> Result<Verification<VerifyWitness<T>>, ShapeError> {
    let inner = model.as_model();
    if rep.index.z_support() != inner.z_support() {
        return Err(ShapeError::new("instrument supports differ"));
    }
    if rep.x_support != inner.x_support() {
        return Err(ShapeError::new("covariate supports differ"));
    }
    if rep.k != model.k() {
        return Err(ShapeError::new("treatment level counts differ"));
    }
    if rep.per_cell.len() != inner.x_count() {
        return Err(ShapeError::new("threshold law has wrong cell count"));
    }
    let want_len = (rep.k - 1) as usize;
    if rep
        .per_cell
        .iter()
        .flatten()
        .any(|tm| tm.thresholds.len() != want_len)
    {
        return Err(ShapeError::new("threshold vectors have wrong length"));
    }

    for x in 0..inner.x_count() {
        let cell = &rep.per_cell[x];
        let total = sum(cell.iter().map(|tm| &tm.prob));
        if total != T::one() || cell.iter().any(|tm| tm.prob < T::zero()) {
            return Ok(Verification::Failed(VerifyWitness::NotDistribution {
                x: inner.x_support()[x].clone(),
                total,
            }));
        }

        // Ordering invariant on every positive-mass vector.
        for tm in cell.iter().filter(|tm| tm.prob > T::zero()) {
            for (pos, w) in tm.thresholds.windows(2).enumerate() {
                if w[1] < w[0] {
                    return Ok(Verification::Failed(VerifyWitness::OrderingViolation {
                        x: inner.x_support()[x].clone(),
                        position: pos + 1,
                        lower: w[0].encode(),
                        upper: w[1].encode(),
                    }));
                }
            }
        }

        // Pattern measures: level maps induced by threshold vectors vs the
        // model's response types.
        let mut model_mass: BTreeMap<Vec<u32>, T> = BTreeMap::new();
        for tm in inner.positive_masses(x) {
            let e = model_mass
                .entry(tm.response.levels().to_vec())
                .or_insert_with(T::zero);
            *e = e.clone() + tm.prob.clone();
        }
        let mut rep_mass: BTreeMap<Vec<u32>, T> = BTreeMap::new();
        for tm in cell.iter().filter(|tm| tm.prob > T::zero()) {
            let pattern: Vec<u32> = (0..inner.z_count())
                .map(|z| rep.level_at(&tm.thresholds, z))
                .collect();
            let e = rep_mass.entry(pattern).or_insert_with(T::zero);
            *e = e.clone() + tm.prob.clone();
        }
        for tm in inner.positive_masses(x) {
            let key = tm.response.levels().to_vec();
            if !rep_mass.contains_key(&key) {
                let z = closest_level_disagreement(&key, rep, x, inner.z_count());
                return Ok(Verification::Failed(VerifyWitness::MissingPattern {
                    x: inner.x_support()[x].clone(),
                    response: tm.response.clone(),
                    z: inner.z_support()[z].clone(),
                }));
            }
        }
        let keys: std::collections::BTreeSet<Vec<u32>> =
            model_mass.keys().chain(rep_mass.keys()).cloned().collect();
        for key in keys {
            let a = model_mass.get(&key).cloned().unwrap_or_else(T::zero);
            let b = rep_mass.get(&key).cloned().unwrap_or_else(T::zero);
            if a != b {
                return Ok(Verification::Failed(VerifyWitness::MassMismatch {
                    x: inner.x_support()[x].clone(),
                    pattern: ResponseType::new(key),
                    model_mass: a,
                    rep_mass: b,
                }));
            }
        }
    }

    let independence = crate::model::check_conditional_independence(inner);
    if let Some(w) = independence.witness {
        return Ok(Verification::Failed(VerifyWitness::IndependenceFailure(w)));
    }

    Ok(Verification::Verified)
}

fn closest_level_disagreement<T: Scalar>(
    pattern: &[u32],
    rep: &ThresholdRepresentation<T>,
    x: usize,
    nz: usize,
) -> usize {
    let mut best_prefix = 0usize;
    for tm in rep.per_cell[x].iter().filter(|tm| tm.prob > T::zero()) {
        let candidate: Vec<u32> = (0..nz).map(|z| rep.level_at(&tm.thresholds, z)).collect();
        let prefix = candidate
            .iter()
            .zip(pattern)
            .take_while(|(a, b)| a == b)
            .count();
        best_prefix = best_prefix.max(prefix);
    }
    best_prefix.min(nz.saturating_sub(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ordered_k3, point_type};
    use crate::model::propensity_matrix;
    use crate::represent::construct_representation;
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn binarize_applies_the_upper_set_indicator() {
        let model = ordered_k3();
        let bin = binarize_levels(&model, 1).unwrap();
        let maps: Vec<&[u32]> = bin.cell(0).iter().map(|tm| tm.response.levels()).collect();
        assert_eq!(maps, vec![&[0, 0][..], &[0, 1][..], &[1, 1][..]]);
        let bin2 = binarize_levels(&model, 2).unwrap();
        let maps2: Vec<&[u32]> = bin2.cell(0).iter().map(|tm| tm.response.levels()).collect();
        assert_eq!(maps2, vec![&[0, 0][..], &[0, 0][..], &[0, 1][..]]);
    }

    #[test]
    fn binarize_rejects_the_top_level() {
        let model = ordered_k3();
        assert!(matches!(
            binarize_levels(&model, 3),
            Err(OrderedError::LevelRange { k: 3, max: 2 })
        ));
        assert!(matches!(
            binarize_levels(&model, 0),
            Err(OrderedError::LevelRange { .. })
        ));
    }

    #[test]
    fn binarized_two_level_model_is_the_relabeled_original() {
        let model = crate::model::FiniteModel::new(
            vec!["z0".into(), "z1".into()],
            vec!["a".into()],
            vec!["y0".into(), "y1".into()],
            TreatmentKind::Ordered(2),
            vec![vec![r(1, 2), r(1, 2)]],
            vec![vec![
                point_type(vec![2, 2], vec![0, 1], r(1, 5)),
                point_type(vec![1, 2], vec![0, 1], r(1, 2)),
                point_type(vec![1, 1], vec![1, 0], r(3, 10)),
            ]],
        )
        .unwrap();
        let ordered = OrderedModel::new(model).unwrap();
        let bin = binarize_levels(&ordered, 1).unwrap();
        let maps: Vec<&[u32]> = bin.cell(0).iter().map(|tm| tm.response.levels()).collect();
        assert_eq!(maps, vec![&[1, 1][..], &[0, 1][..], &[0, 0][..]]);
        // Outcome arms carry over unchanged for K=2.
        for (a, b) in bin.cell(0).iter().zip(ordered.as_model().cell(0)) {
            assert_eq!(a.outcome_law, b.outcome_law);
            assert_eq!(a.prob, b.prob);
        }
    }

    #[test]
    fn mean_treatment_index_matches_hand_expectation() {
        let index = ordered_index(&ordered_k3()).unwrap();
        assert_eq!(index.values(), &[r(13, 10), r(2, 1)]);
        let classes = index.argsort_classes();
        assert_eq!(classes, vec![vec![0], vec![1]]);
    }

    #[test]
    fn crossing_binarizations_are_rejected_with_a_level() {
        // Type (2,1) falls at cut 1 while (1,2) rises there: the k=1
        // binarization hosts opposite movers.
        let model = crate::model::FiniteModel::new(
            vec!["z0".into(), "z1".into()],
            vec!["a".into()],
            vec!["y0", "y1", "y2"].into_iter().map(Into::into).collect(),
            TreatmentKind::Ordered(3),
            vec![vec![r(1, 2), r(1, 2)]],
            vec![vec![
                point_type(vec![1, 2], vec![0, 1, 2], r(1, 2)),
                point_type(vec![2, 1], vec![0, 1, 2], r(1, 4)),
                point_type(vec![3, 3], vec![0, 1, 2], r(1, 4)),
            ]],
        )
        .unwrap();
        let ordered = OrderedModel::new(model).unwrap();
        match ordered_index(&ordered) {
            Err(OrderedError::Monotonicity { level, verdict }) => {
                assert_eq!(level, 1);
                assert_eq!(verdict.class, MonotonicityClass::Violated);
            }
            other => panic!("expected monotonicity error, got {other:?}"),
        }
    }

    #[test]
    fn representation_of_the_k3_example_matches_the_min_rule() {
        let model = ordered_k3();
        let rep = construct_ordered_representation(&model).unwrap();
        let hi = rep.upper_sentinel();
        assert_eq!(hi, r(3, 1));
        let cell = &rep.per_cell[0];
        assert_eq!(cell.len(), 3);
        // Sorted lexicographically: (13/10, 2), (2, hi), (hi, hi).
        assert_eq!(cell[0].thresholds, vec![r(13, 10), r(2, 1)]);
        assert_eq!(cell[0].prob, r(3, 10));
        assert_eq!(cell[1].thresholds, vec![r(2, 1), hi.clone()]);
        assert_eq!(cell[1].prob, r(2, 5));
        assert_eq!(cell[2].thresholds, vec![hi.clone(), hi.clone()]);
        assert_eq!(cell[2].prob, r(3, 10));

        assert!(verify_ordered(&model, &rep).unwrap().is_verified());
    }

    #[test]
    fn swapped_threshold_columns_fail_the_ordering_invariant() {
        let model = ordered_k3();
        let mut rep = construct_ordered_representation(&model).unwrap();
        // Swap u_1 and u_2 of the strictly ordered vector (13/10, 2).
        rep.per_cell[0][0].thresholds.swap(0, 1);
        let outcome = verify_ordered(&model, &rep).unwrap();
        match outcome.witness().unwrap() {
            VerifyWitness::OrderingViolation { x, position, .. } => {
                assert_eq!(x.as_str(), "a");
                assert_eq!(*position, 1);
            }
            other => panic!("expected ordering violation, got {other:?}"),
        }
    }

    #[test]
    fn single_type_non_monotone_in_support_order_still_represents() {
        // One individual with levels (1,3,2): monotone in its own mean
        // index (1, 3, 2), so a threshold representation exists.
        let model = crate::model::FiniteModel::new(
            vec!["z0".into(), "z1".into(), "z2".into()],
            vec!["a".into()],
            vec!["y0", "y1", "y2"].into_iter().map(Into::into).collect(),
            TreatmentKind::Ordered(3),
            vec![vec![r(1, 3), r(1, 3), r(1, 3)]],
            vec![vec![point_type(vec![1, 3, 2], vec![0, 1, 2], r(1, 1))]],
        )
        .unwrap();
        let ordered = OrderedModel::new(model).unwrap();
        let rep = construct_ordered_representation(&ordered).unwrap();
        assert!(verify_ordered(&ordered, &rep).unwrap().is_verified());
    }

    #[test]
    fn mixed_direction_types_fail_even_across_different_cuts() {
        // (1,2) rises at cut 1; (3,2) falls at cut 2: no cut hosts both,
        // but the directions conflict across cuts for the pair.
        let model = crate::model::FiniteModel::new(
            vec!["z0".into(), "z1".into()],
            vec!["a".into()],
            vec!["y0", "y1", "y2"].into_iter().map(Into::into).collect(),
            TreatmentKind::Ordered(3),
            vec![vec![r(1, 2), r(1, 2)]],
            vec![vec![
                point_type(vec![1, 2], vec![0, 1, 2], r(1, 2)),
                point_type(vec![3, 2], vec![0, 1, 2], r(1, 2)),
            ]],
        )
        .unwrap();
        let ordered = OrderedModel::new(model).unwrap();
        match ordered_index(&ordered) {
            Err(OrderedError::Monotonicity { level, .. }) => assert_eq!(level, 2),
            other => panic!("expected monotonicity error, got {other:?}"),
        }
    }

    #[test]
    fn ambiguous_ties_are_rejected_by_the_tie_check() {
        // Equal means with identical level laws collapse into one class.
        let model = crate::model::FiniteModel::new(
            vec!["z0".into(), "z1".into()],
            vec!["a".into()],
            vec!["y0", "y1", "y2"].into_iter().map(Into::into).collect(),
            TreatmentKind::Ordered(3),
            vec![vec![r(1, 2), r(1, 2)]],
            vec![vec![
                point_type(vec![1, 3], vec![0, 1, 2], r(2, 5)),
                point_type(vec![3, 1], vec![0, 1, 2], r(2, 5)),
                point_type(vec![2, 2], vec![0, 1, 2], r(1, 5)),
            ]],
        )
        .unwrap();
        let ordered = OrderedModel::new(model).unwrap();
        let index = IndexFunction::new(
            ordered.as_model().z_support().to_vec(),
            vec![r(2, 1), r(2, 1)],
        )
        .unwrap();
        assert!(check_index_ties(&ordered, &index).is_ok());

        // Equal means, different level laws: rejected. Such a model is never
        // certified monotone, so the tie check is exercised directly.
        let model = crate::model::FiniteModel::new(
            vec!["z0".into(), "z1".into()],
            vec!["a".into()],
            vec!["y0", "y1", "y2", "y3"]
                .into_iter()
                .map(Into::into)
                .collect(),
            TreatmentKind::Ordered(4),
            vec![vec![r(1, 2), r(1, 2)]],
            vec![vec![
                point_type(vec![1, 3], vec![0, 1, 2, 3], r(1, 2)),
                point_type(vec![2, 1], vec![0, 1, 2, 3], r(1, 4)),
                point_type(vec![4, 2], vec![0, 1, 2, 3], r(1, 4)),
            ]],
        )
        .unwrap();
        let ordered = OrderedModel::new(model).unwrap();
        let index = IndexFunction::new(
            ordered.as_model().z_support().to_vec(),
            vec![r(2, 1), r(2, 1)],
        )
        .unwrap();
        assert!(matches!(
            check_index_ties(&ordered, &index),
            Err(OrderedError::AmbiguousIndex { .. })
        ));
    }

    #[test]
    fn k2_pipeline_agrees_with_binary_pipeline_ordinally() {
        let model = crate::model::FiniteModel::new(
            vec!["z0".into(), "z1".into(), "z2".into()],
            vec!["a".into(), "b".into()],
            vec!["y0".into(), "y1".into()],
            TreatmentKind::Ordered(2),
            vec![
                vec![r(1, 6), r(1, 6), r(1, 6)],
                vec![r(1, 6), r(1, 6), r(1, 6)],
            ],
            vec![
                vec![
                    point_type(vec![2, 2, 2], vec![0, 1], r(1, 5)),
                    point_type(vec![1, 2, 2], vec![0, 1], r(1, 5)),
                    point_type(vec![1, 1, 2], vec![0, 1], r(1, 5)),
                    point_type(vec![1, 1, 1], vec![1, 0], r(2, 5)),
                ],
                vec![
                    point_type(vec![2, 2, 2], vec![0, 1], r(1, 10)),
                    point_type(vec![1, 2, 2], vec![0, 1], r(3, 10)),
                    point_type(vec![1, 1, 1], vec![0, 0], r(3, 5)),
                ],
            ],
        )
        .unwrap();
        let ordered = OrderedModel::new(model).unwrap();
        let rep = construct_ordered_representation(&ordered).unwrap();
        assert!(verify_ordered(&ordered, &rep).unwrap().is_verified());

        let bin = binarize_levels(&ordered, 1).unwrap();
        let bin_rep = construct_representation(&bin).unwrap();
        assert_eq!(rep.index.argsort_classes(), bin_rep.index.argsort_classes());
        // Reproduction behavior coincides: binarized pattern masses match.
        let pi = propensity_matrix(&bin).unwrap();
        for x in 0..2 {
            for z in 0..3 {
                let treated: Rational = rep.per_cell[x]
                    .iter()
                    .filter(|tm| rep.level_at(&tm.thresholds, z) > 1)
                    .map(|tm| tm.prob.clone())
                    .fold(Rational::from_int(0), |a, b| a + b);
                assert_eq!(&treated, pi.value(x, z));
            }
        }
    }
}
