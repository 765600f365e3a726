//! Canonical JSON file formats: models, representations, generator specs.
//!
//! Emission is deterministic — map keys sorted, arrays in support order,
//! rationals as reduced `"num/den"` strings — so a parse/emit round trip is
//! byte-identical and file digests are reproducible.

use crate::error::FormatError;
use crate::label::{CovariateCell, InstrumentValue, OutcomeValue};
use crate::model::{
    FiniteModel, OrderedModel, OutcomeWeight, ResponseType, TreatmentKind, TypeMass,
};
use crate::ordered::{ThresholdMass, ThresholdRepresentation};
use crate::represent::{
    IndexFunction, IndexRepresentation, LatentLaw, LatentPoint, NormalizedForm, UStarSegment,
};
use crate::scalar::{parse_rational, Rational, Scalar};
use crate::simulate::DgpSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// Note attached to every serialized normalized form: the latent law is
/// discrete, so the uniform rescaling is the distributional transform rather
/// than a plain probability-integral transform.
pub const NORMALIZATION_NOTE: &str =
    "normalization uses the distributional transform: the latent law is discrete, so \
     thresholds in u*-space sit at cumulative latent masses";

/// Hex SHA-256 of raw bytes; the input digest stamped into reports.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn emit<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn parse_str<'a, T: Deserialize<'a>>(s: &'a str) -> Result<T, FormatError> {
    serde_json::from_str(s).map_err(|e| FormatError::Json(e.to_string()))
}

fn rational(s: &str) -> Result<Rational, FormatError> {
    parse_rational(s).map_err(|e| FormatError::BadRational(e.0))
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct OutcomeJson {
    outcomes: Vec<String>,
    prob: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct TypeJson {
    treatment_map: BTreeMap<String, u32>,
    outcome_law: Vec<OutcomeJson>,
    prob: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelJson {
    z_support: Vec<String>,
    x_support: Vec<String>,
    y_support: Vec<String>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    pzx: BTreeMap<String, BTreeMap<String, String>>,
    types_given_x: BTreeMap<String, Vec<TypeJson>>,
}

/// A model file is binary unless it declares `K`.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Binary(FiniteModel<Rational>),
    Ordered(OrderedModel<Rational>),
}

impl LoadedModel {
    pub fn as_finite(&self) -> &FiniteModel<Rational> {
        match self {
            LoadedModel::Binary(m) => m,
            LoadedModel::Ordered(m) => m.as_model(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LoadedModel::Binary(_) => "model",
            LoadedModel::Ordered(_) => "ordered-model",
        }
    }
}

pub fn model_to_json(model: &FiniteModel<Rational>) -> String {
    let mut pzx = BTreeMap::new();
    for (xi, xl) in model.x_support().iter().enumerate() {
        let mut row = BTreeMap::new();
        for (zi, zl) in model.z_support().iter().enumerate() {
            row.insert(zl.to_string(), model.pzx(xi, zi).encode());
        }
        pzx.insert(xl.to_string(), row);
    }
    let mut types_given_x = BTreeMap::new();
    for (xi, xl) in model.x_support().iter().enumerate() {
        let cell = model
            .cell(xi)
            .iter()
            .map(|tm| TypeJson {
                treatment_map: model
                    .z_support()
                    .iter()
                    .enumerate()
                    .map(|(zi, zl)| (zl.to_string(), tm.response.level_at(zi)))
                    .collect(),
                outcome_law: tm
                    .outcome_law
                    .iter()
                    .map(|w| OutcomeJson {
                        outcomes: w
                            .outcomes
                            .iter()
                            .map(|&y| model.y_support()[y].to_string())
                            .collect(),
                        prob: w.prob.encode(),
                    })
                    .collect(),
                prob: tm.prob.encode(),
            })
            .collect();
        types_given_x.insert(xl.to_string(), cell);
    }
    emit(&ModelJson {
        z_support: model.z_support().iter().map(|l| l.to_string()).collect(),
        x_support: model.x_support().iter().map(|l| l.to_string()).collect(),
        y_support: model.y_support().iter().map(|l| l.to_string()).collect(),
        k: match model.treatment() {
            TreatmentKind::Binary => None,
            TreatmentKind::Ordered(k) => Some(k),
        },
        pzx,
        types_given_x,
    })
}

pub fn ordered_to_json(model: &OrderedModel<Rational>) -> String {
    model_to_json(model.as_model())
}

pub fn model_from_json(s: &str) -> Result<LoadedModel, FormatError> {
    let raw: ModelJson = parse_str(s)?;
    let treatment = match raw.k {
        Some(k) => TreatmentKind::Ordered(k),
        None => TreatmentKind::Binary,
    };
    let z_support: Vec<InstrumentValue> =
        raw.z_support.iter().map(|l| l.as_str().into()).collect();
    let x_support: Vec<CovariateCell> =
        raw.x_support.iter().map(|l| l.as_str().into()).collect();
    let y_support: Vec<OutcomeValue> =
        raw.y_support.iter().map(|l| l.as_str().into()).collect();

    let mut pzx = Vec::with_capacity(x_support.len());
    for xl in &raw.x_support {
        let row_map = raw
            .pzx
            .get(xl)
            .ok_or_else(|| FormatError::Invalid(format!("pzx is missing cell {xl:?}")))?;
        let mut row = Vec::with_capacity(z_support.len());
        for zl in &raw.z_support {
            let v = row_map.get(zl).ok_or_else(|| {
                FormatError::Invalid(format!("pzx[{xl:?}] is missing instrument {zl:?}"))
            })?;
            row.push(rational(v)?);
        }
        pzx.push(row);
    }

    let mut cells = Vec::with_capacity(x_support.len());
    for xl in &raw.x_support {
        let cell_json = raw
            .types_given_x
            .get(xl)
            .ok_or_else(|| FormatError::Invalid(format!("types_given_x missing cell {xl:?}")))?;
        let mut cell = Vec::with_capacity(cell_json.len());
        for tj in cell_json {
            let mut levels = Vec::with_capacity(z_support.len());
            for zl in &raw.z_support {
                let level = tj.treatment_map.get(zl).ok_or_else(|| {
                    FormatError::Invalid(format!("treatment_map missing instrument {zl:?}"))
                })?;
                levels.push(*level);
            }
            let mut law = Vec::with_capacity(tj.outcome_law.len());
            for oj in &tj.outcome_law {
                let outcomes = oj
                    .outcomes
                    .iter()
                    .map(|yl| {
                        raw.y_support.iter().position(|l| l == yl).ok_or_else(|| {
                            FormatError::Invalid(format!("unknown outcome label {yl:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                law.push(OutcomeWeight {
                    outcomes,
                    prob: rational(&oj.prob)?,
                });
            }
            cell.push(TypeMass {
                response: ResponseType::new(levels),
                outcome_law: law,
                prob: rational(&tj.prob)?,
            });
        }
        cells.push(cell);
    }

    let model = FiniteModel::new(z_support, x_support, y_support, treatment, pzx, cells)?;
    match treatment {
        TreatmentKind::Binary => Ok(LoadedModel::Binary(model)),
        TreatmentKind::Ordered(_) => Ok(LoadedModel::Ordered(OrderedModel::new(model)?)),
    }
}

// ---------------------------------------------------------------------------
// Index representation files
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct LatentPointJson {
    level: String,
    prob: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ThresholdPairJson {
    level: String,
    threshold: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentJson {
    u_star_interval: [String; 2],
    threshold: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RepJson {
    z_support: Vec<String>,
    x_support: Vec<String>,
    m: BTreeMap<String, String>,
    u_law: BTreeMap<String, Vec<LatentPointJson>>,
    q: BTreeMap<String, Vec<ThresholdPairJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_star: Option<BTreeMap<String, Vec<SegmentJson>>>,
    notes: Vec<String>,
}

pub fn representation_to_json(rep: &IndexRepresentation<Rational>) -> String {
    let m = rep
        .index
        .z_support()
        .iter()
        .enumerate()
        .map(|(zi, zl)| (zl.to_string(), rep.index.value(zi).encode()))
        .collect();
    let mut u_law = BTreeMap::new();
    let mut q = BTreeMap::new();
    for (xi, xl) in rep.x_support.iter().enumerate() {
        u_law.insert(
            xl.to_string(),
            rep.u_law.per_cell[xi]
                .iter()
                .map(|p| LatentPointJson {
                    level: p.level.encode(),
                    prob: p.prob.encode(),
                })
                .collect(),
        );
        q.insert(
            xl.to_string(),
            rep.u_law.per_cell[xi]
                .iter()
                .zip(&rep.q[xi])
                .map(|(p, thr)| ThresholdPairJson {
                    level: p.level.encode(),
                    threshold: thr.encode(),
                })
                .collect(),
        );
    }
    let q_star = rep.normalized.as_ref().map(|n| {
        rep.x_support
            .iter()
            .enumerate()
            .map(|(xi, xl)| {
                (
                    xl.to_string(),
                    n.per_cell[xi]
                        .iter()
                        .map(|s| SegmentJson {
                            u_star_interval: [s.lo.encode(), s.hi.encode()],
                            threshold: s.threshold.encode(),
                        })
                        .collect(),
                )
            })
            .collect()
    });
    let notes = if rep.normalized.is_some() {
        vec![NORMALIZATION_NOTE.to_string()]
    } else {
        Vec::new()
    };
    emit(&RepJson {
        z_support: rep
            .index
            .z_support()
            .iter()
            .map(|l| l.to_string())
            .collect(),
        x_support: rep.x_support.iter().map(|l| l.to_string()).collect(),
        m,
        u_law,
        q,
        q_star,
        notes,
    })
}

pub fn representation_from_json(s: &str) -> Result<IndexRepresentation<Rational>, FormatError> {
    let raw: RepJson = parse_str(s)?;
    let z_support: Vec<InstrumentValue> =
        raw.z_support.iter().map(|l| l.as_str().into()).collect();
    let x_support: Vec<CovariateCell> =
        raw.x_support.iter().map(|l| l.as_str().into()).collect();
    let mut m_values = Vec::with_capacity(z_support.len());
    for zl in &raw.z_support {
        let v = raw
            .m
            .get(zl)
            .ok_or_else(|| FormatError::Invalid(format!("m is missing instrument {zl:?}")))?;
        m_values.push(rational(v)?);
    }
    let index = IndexFunction::new(z_support, m_values)
        .map_err(|e| FormatError::Invalid(e.to_string()))?;

    let mut per_cell = Vec::with_capacity(x_support.len());
    let mut q = Vec::with_capacity(x_support.len());
    for xl in &raw.x_support {
        let points = raw
            .u_law
            .get(xl)
            .ok_or_else(|| FormatError::Invalid(format!("u_law is missing cell {xl:?}")))?;
        let thresholds = raw
            .q
            .get(xl)
            .ok_or_else(|| FormatError::Invalid(format!("q is missing cell {xl:?}")))?;
        if points.len() != thresholds.len() {
            return Err(FormatError::Invalid(format!(
                "u_law and q disagree on the number of levels at {xl:?}"
            )));
        }
        let mut cell_points = Vec::with_capacity(points.len());
        let mut cell_q = Vec::with_capacity(points.len());
        for (p, t) in points.iter().zip(thresholds) {
            if p.level != t.level {
                return Err(FormatError::Invalid(format!(
                    "u_law and q list different levels at {xl:?}"
                )));
            }
            cell_points.push(LatentPoint {
                level: rational(&p.level)?,
                prob: rational(&p.prob)?,
            });
            cell_q.push(rational(&t.threshold)?);
        }
        per_cell.push(cell_points);
        q.push(cell_q);
    }

    let normalized = match raw.q_star {
        None => None,
        Some(cells) => {
            let mut out = Vec::with_capacity(x_support.len());
            for xl in &raw.x_support {
                let segs = cells.get(xl).ok_or_else(|| {
                    FormatError::Invalid(format!("q_star is missing cell {xl:?}"))
                })?;
                out.push(
                    segs.iter()
                        .map(|s| {
                            Ok(UStarSegment {
                                lo: rational(&s.u_star_interval[0])?,
                                hi: rational(&s.u_star_interval[1])?,
                                threshold: rational(&s.threshold)?,
                            })
                        })
                        .collect::<Result<Vec<_>, FormatError>>()?,
                );
            }
            Some(NormalizedForm { per_cell: out })
        }
    };

    Ok(IndexRepresentation {
        index,
        x_support,
        u_law: LatentLaw { per_cell },
        q,
        normalized,
    })
}

// ---------------------------------------------------------------------------
// Threshold representation files (ordered treatments)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ThresholdVecJson {
    type_id: usize,
    thresholds: Vec<String>,
    prob: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ThresholdRepJson {
    z_support: Vec<String>,
    x_support: Vec<String>,
    #[serde(rename = "K")]
    k: u32,
    m: BTreeMap<String, String>,
    thresholds: BTreeMap<String, Vec<ThresholdVecJson>>,
}

pub fn threshold_rep_to_json(rep: &ThresholdRepresentation<Rational>) -> String {
    let m = rep
        .index
        .z_support()
        .iter()
        .enumerate()
        .map(|(zi, zl)| (zl.to_string(), rep.index.value(zi).encode()))
        .collect();
    let thresholds = rep
        .x_support
        .iter()
        .enumerate()
        .map(|(xi, xl)| {
            (
                xl.to_string(),
                rep.per_cell[xi]
                    .iter()
                    .enumerate()
                    .map(|(i, tm)| ThresholdVecJson {
                        type_id: i,
                        thresholds: tm.thresholds.iter().map(|u| u.encode()).collect(),
                        prob: tm.prob.encode(),
                    })
                    .collect(),
            )
        })
        .collect();
    emit(&ThresholdRepJson {
        z_support: rep
            .index
            .z_support()
            .iter()
            .map(|l| l.to_string())
            .collect(),
        x_support: rep.x_support.iter().map(|l| l.to_string()).collect(),
        k: rep.k,
        m,
        thresholds,
    })
}

pub fn threshold_rep_from_json(
    s: &str,
) -> Result<ThresholdRepresentation<Rational>, FormatError> {
    let raw: ThresholdRepJson = parse_str(s)?;
    let z_support: Vec<InstrumentValue> =
        raw.z_support.iter().map(|l| l.as_str().into()).collect();
    let x_support: Vec<CovariateCell> =
        raw.x_support.iter().map(|l| l.as_str().into()).collect();
    let mut m_values = Vec::with_capacity(z_support.len());
    for zl in &raw.z_support {
        let v = raw
            .m
            .get(zl)
            .ok_or_else(|| FormatError::Invalid(format!("m is missing instrument {zl:?}")))?;
        m_values.push(rational(v)?);
    }
    let index = IndexFunction::new(z_support, m_values)
        .map_err(|e| FormatError::Invalid(e.to_string()))?;
    let mut per_cell = Vec::with_capacity(x_support.len());
    for xl in &raw.x_support {
        let cell = raw
            .thresholds
            .get(xl)
            .ok_or_else(|| FormatError::Invalid(format!("thresholds missing cell {xl:?}")))?;
        per_cell.push(
            cell.iter()
                .map(|tj| {
                    Ok(ThresholdMass {
                        thresholds: tj
                            .thresholds
                            .iter()
                            .map(|u| rational(u))
                            .collect::<Result<Vec<_>, FormatError>>()?,
                        prob: rational(&tj.prob)?,
                    })
                })
                .collect::<Result<Vec<_>, FormatError>>()?,
        );
    }
    Ok(ThresholdRepresentation {
        index,
        k: raw.k,
        x_support,
        per_cell,
    })
}

// ---------------------------------------------------------------------------
// Generator specs
// ---------------------------------------------------------------------------

pub fn spec_to_json(spec: &DgpSpec) -> String {
    emit(spec)
}

pub fn spec_from_json(s: &str) -> Result<DgpSpec, FormatError> {
    parse_str(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{model_m1, ordered_k3};
    use crate::ordered::construct_ordered_representation;
    use crate::represent::{construct_representation, normalize_uniform, verify_representation};
    use crate::simulate::ModelClass;

    #[test]
    fn model_json_round_trips_byte_exactly() {
        let model = model_m1();
        let text = model_to_json(&model);
        let loaded = model_from_json(&text).unwrap();
        assert_eq!(model_to_json(loaded.as_finite()), text);
        match loaded {
            LoadedModel::Binary(m) => assert_eq!(m, model),
            LoadedModel::Ordered(_) => panic!("m1 is binary"),
        }
    }

    #[test]
    fn ordered_model_json_declares_k_and_round_trips() {
        let model = ordered_k3();
        let text = ordered_to_json(&model);
        assert!(text.contains("\"K\": 3"));
        let loaded = model_from_json(&text).unwrap();
        assert_eq!(model_to_json(loaded.as_finite()), text);
        assert!(matches!(loaded, LoadedModel::Ordered(_)));
    }

    #[test]
    fn representation_json_round_trips_and_verifies() {
        let model = model_m1();
        let rep = normalize_uniform(&construct_representation(&model).unwrap(), &model).unwrap();
        let text = representation_to_json(&rep);
        assert!(text.contains("u_star_interval"));
        assert!(text.contains("distributional transform"));
        let back = representation_from_json(&text).unwrap();
        assert_eq!(representation_to_json(&back), text);
        assert!(verify_representation(&model, &back).unwrap().is_verified());
    }

    #[test]
    fn threshold_rep_json_round_trips() {
        let model = ordered_k3();
        let rep = construct_ordered_representation(&model).unwrap();
        let text = threshold_rep_to_json(&rep);
        let back = threshold_rep_from_json(&text).unwrap();
        assert_eq!(threshold_rep_to_json(&back), text);
        assert_eq!(back.per_cell, rep.per_cell);
    }

    #[test]
    fn spec_json_round_trips() {
        let spec = DgpSpec {
            z: 3,
            x: 2,
            y: 2,
            treatment: TreatmentKind::Ordered(3),
            class: ModelClass::GlobalMonotone,
            seed: 99,
            granularity: 10,
        };
        let text = spec_to_json(&spec);
        assert_eq!(spec_from_json(&text).unwrap(), spec);
    }

    #[test]
    fn digests_are_stable_and_sensitive() {
        let a = sha256_hex(b"abc");
        assert_eq!(
            a,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_ne!(a, sha256_hex(b"abd"));
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(matches!(
            model_from_json("{"),
            Err(FormatError::Json(_))
        ));
        let text = model_to_json(&model_m1()).replace("\"1/4\"", "\"1/0\"");
        assert!(matches!(
            model_from_json(&text),
            Err(FormatError::BadRational(_))
        ));
    }
}
