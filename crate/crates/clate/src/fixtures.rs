//! Small reference models used in documentation and tests.

use crate::model::{FiniteModel, OrderedModel, OutcomeWeight, ResponseType, TreatmentKind, TypeMass};
use crate::scalar::{Rational, Scalar};

fn r(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn labels<L: From<&'static str>>(names: &[&'static str]) -> Vec<L> {
    names.iter().map(|&n| L::from(n)).collect()
}

/// A type whose outcome law is a point mass on one outcome vector.
pub fn point_type(levels: Vec<u32>, outcomes: Vec<usize>, prob: Rational) -> TypeMass<Rational> {
    TypeMass {
        response: ResponseType::new(levels),
        outcome_law: vec![OutcomeWeight {
            outcomes,
            prob: Rational::from_int(1),
        }],
        prob,
    }
}

/// Globally monotone two-cell model. Type shares are always/complier/never
/// = .2/.5/.3 at `a` and .1/.3/.6 at `b`, so the propensity table is
/// `[[.2, .7], [.1, .4]]` (rows `a`,`b`; columns `z0`,`z1`).
pub fn model_m1() -> FiniteModel<Rational> {
    FiniteModel::new(
        labels(&["z0", "z1"]),
        labels(&["a", "b"]),
        labels(&["y0", "y1"]),
        TreatmentKind::Binary,
        vec![vec![r(1, 4), r(1, 4)], vec![r(1, 4), r(1, 4)]],
        vec![
            vec![
                point_type(vec![1, 1], vec![0, 1], r(1, 5)),
                point_type(vec![0, 1], vec![0, 1], r(1, 2)),
                point_type(vec![0, 0], vec![1, 0], r(3, 10)),
            ],
            vec![
                point_type(vec![1, 1], vec![0, 1], r(1, 10)),
                point_type(vec![0, 1], vec![1, 1], r(3, 10)),
                point_type(vec![0, 0], vec![0, 0], r(3, 5)),
            ],
        ],
    )
    .expect("reference model is well formed")
}

/// Locally-only monotone model: compliers at `a` (shares .3/.3/.4), defiers
/// at `b` (shares .25/.45/.3). Propensities are `[[.3, .6], [.7, .25]]`, so
/// the instrument ordering flips between the two cells.
pub fn model_m2() -> FiniteModel<Rational> {
    FiniteModel::new(
        labels(&["z0", "z1"]),
        labels(&["a", "b"]),
        labels(&["y0", "y1"]),
        TreatmentKind::Binary,
        vec![vec![r(1, 4), r(1, 4)], vec![r(1, 4), r(1, 4)]],
        vec![
            vec![
                point_type(vec![1, 1], vec![0, 1], r(3, 10)),
                point_type(vec![0, 1], vec![0, 1], r(3, 10)),
                point_type(vec![0, 0], vec![1, 0], r(2, 5)),
            ],
            vec![
                point_type(vec![1, 1], vec![0, 1], r(1, 4)),
                point_type(vec![1, 0], vec![0, 1], r(9, 20)),
                point_type(vec![0, 0], vec![0, 0], r(3, 10)),
            ],
        ],
    )
    .expect("reference model is well formed")
}

/// Three-level ordered model on a single cell: shares .3 at levels (1,1),
/// .4 at (1,2), .3 at (2,3). Mean treatment is 13/10 under `z0` and 2
/// under `z1`.
pub fn ordered_k3() -> OrderedModel<Rational> {
    let model = FiniteModel::new(
        labels(&["z0", "z1"]),
        labels(&["a"]),
        labels(&["y0", "y1", "y2"]),
        TreatmentKind::Ordered(3),
        vec![vec![r(1, 2), r(1, 2)]],
        vec![vec![
            point_type(vec![1, 1], vec![0, 1, 2], r(3, 10)),
            point_type(vec![1, 2], vec![0, 1, 2], r(2, 5)),
            point_type(vec![2, 3], vec![0, 0, 1], r(3, 10)),
        ]],
    )
    .expect("reference model is well formed");
    OrderedModel::new(model).expect("levels 1..=3 all attained")
}
