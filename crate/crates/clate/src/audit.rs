//! Audit pipeline: runs every check in a fixed canonical order and collects
//! the results into one machine-readable report.
//!
//! Population inputs are checked exactly. Sample inputs run the same checks
//! under a plug-in tolerance; their statuses are estimates, never exact
//! refutations, and the report says so. Checks that need unobservable
//! objects (response types) are skipped on data with a reason.

use crate::compare::{ProbComparer, ToleranceRule};
use crate::data::EmpiricalJoint;
use crate::diagnostics::{
    moment_monotonicity_check_law, sufficiency_check_law, ObservableLaw, TestFunction,
};
use crate::error::IndexError;
use crate::json::sha256_hex;
use crate::label::CovariateCell;
use crate::model::{
    check_conditional_independence, classify_monotonicity, propensity_matrix, FiniteModel,
    MonotonicityClass, OrderedModel, PropensityMatrix,
};
use crate::represent::{
    check_rank_invariance_with, construct_index_with, IndexFunction, RankInvarianceReport,
};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// Canonical check names, in execution order.
pub const CHECK_ORDER: [&str; 7] = [
    "overlap_relevance",
    "conditional_independence",
    "monotonicity",
    "rank_invariance",
    "index_construction",
    "sufficiency",
    "moment_monotonicity",
];

/// Status of one check (or of the whole report).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Vacuous,
    Skipped,
    Underpowered,
}

/// One check's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    #[serde(rename = "check_name")]
    pub name: String,
    pub status: CheckStatus,
    pub witnesses: Vec<Value>,
    pub values: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl CheckEntry {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            status: CheckStatus::Pass,
            witnesses: Vec::new(),
            values: BTreeMap::new(),
            tolerance: None,
            reason: None,
        }
    }

    fn skipped(name: &str, reason: &str) -> Self {
        Self {
            status: CheckStatus::Skipped,
            reason: Some(reason.to_string()),
            ..Self::new(name)
        }
    }
}

/// The structured audit result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub toolkit_version: String,
    pub rng_algorithm: String,
    pub input_kind: String,
    pub input_digest: String,
    pub checks: Vec<CheckEntry>,
    pub verdict: CheckStatus,
    pub notes: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.verdict == CheckStatus::Pass
    }

    pub fn check(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, crate::error::FormatError> {
        serde_json::from_str(s).map_err(|e| crate::error::FormatError::Json(e.to_string()))
    }
}

/// Audit options; defaults give the exact population behavior and the
/// default plug-in tolerance on samples.
#[derive(Debug, Clone, Default)]
pub struct AuditOptions {
    pub anchor: Option<CovariateCell>,
    /// Fixed epsilon override for sample comparisons.
    pub tolerance: Option<f64>,
    /// Digest of the raw input; computed from canonical bytes when absent.
    pub digest: Option<String>,
}

impl AuditOptions {
    fn rule(&self) -> ToleranceRule {
        match self.tolerance {
            Some(eps) => ToleranceRule::fixed(eps),
            None => ToleranceRule::default(),
        }
    }
}

/// Any auditable input.
pub enum AuditInput<'a> {
    Model(&'a FiniteModel<crate::scalar::Rational>),
    Ordered(&'a OrderedModel<crate::scalar::Rational>),
    Sample(&'a EmpiricalJoint),
}

/// Audits any input, dispatching on its kind.
pub fn audit(input: AuditInput<'_>, options: &AuditOptions) -> AuditReport {
    match input {
        AuditInput::Model(m) => audit_model(m, options),
        AuditInput::Ordered(m) => audit_ordered(m, options),
        AuditInput::Sample(j) => audit_dataset(j, options),
    }
}

fn finish(
    input_kind: &str,
    digest: String,
    checks: Vec<CheckEntry>,
    mut notes: Vec<String>,
) -> AuditReport {
    debug_assert_eq!(
        checks.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(),
        CHECK_ORDER.to_vec(),
        "checks must appear in canonical order"
    );
    let verdict = if checks.iter().any(|c| c.status == CheckStatus::Fail) {
        CheckStatus::Fail
    } else {
        CheckStatus::Pass
    };
    notes.dedup();
    AuditReport {
        toolkit_version: crate::TOOLKIT_VERSION.to_string(),
        rng_algorithm: crate::simulate::RNG_ALGORITHM.to_string(),
        input_kind: input_kind.to_string(),
        input_digest: digest,
        checks,
        verdict,
        notes,
    }
}

// ---------------------------------------------------------------------------
// Population audit (binary)
// ---------------------------------------------------------------------------

/// Exact audit of a binary population model.
pub fn audit_model<T: Scalar>(model: &FiniteModel<T>, options: &AuditOptions) -> AuditReport {
    let digest = options
        .digest
        .clone()
        .unwrap_or_else(|| digest_of_model(model));
    let cmp = ProbComparer::exact();
    let mut checks = Vec::new();
    let mut notes = vec!["population audit: all comparisons are exact".to_string()];

    checks.push(preconditions_entry(model));
    checks.push(independence_entry(model));

    let verdict = classify_monotonicity(model);
    let mut entry = CheckEntry::new("monotonicity");
    entry
        .values
        .insert("class".into(), json!(format!("{}", verdict.class)));
    if verdict.class != MonotonicityClass::GlobalMonotone {
        entry.status = CheckStatus::Fail;
        entry.witnesses = verdict
            .witnesses
            .iter()
            .map(|w| serde_json::to_value(w).expect("witness serializes"))
            .collect();
    }
    checks.push(entry);

    let law = ObservableLaw::from_model(model);
    let pi = propensity_matrix(model);
    checks.extend(binary_chain(
        pi.as_ref().map_err(|e| e.to_string()),
        &law,
        options,
        &cmp,
        &mut notes,
    ));

    finish("model", digest, checks, notes)
}

fn digest_of_model<T: Scalar>(_model: &FiniteModel<T>) -> String {
    // Only the exact lane has a canonical file form; other lanes digest
    // nothing rather than something misleading.
    String::new()
}

fn preconditions_entry<T: Scalar>(model: &FiniteModel<T>) -> CheckEntry {
    let mut entry = CheckEntry::new("overlap_relevance");
    let report = model.validate_preconditions();
    if !report.ok() {
        entry.status = CheckStatus::Fail;
        entry.witnesses = report
            .failures
            .iter()
            .map(|f| serde_json::to_value(f).expect("witness serializes"))
            .collect();
    }
    entry
}

fn independence_entry<T: Scalar>(model: &FiniteModel<T>) -> CheckEntry {
    let mut entry = CheckEntry::new("conditional_independence");
    let outcome = check_conditional_independence(model);
    if let Some(w) = outcome.witness {
        entry.status = CheckStatus::Fail;
        entry.witnesses = vec![serde_json::to_value(&w).expect("witness serializes")];
    }
    entry
}

/// Entries 4..7 of the canonical order: rank invariance, index
/// construction, sufficiency, and moment monotonicity, sharing one
/// propensity table and comparison policy.
fn binary_chain<T: Scalar>(
    pi: Result<&PropensityMatrix<T>, String>,
    law: &ObservableLaw<T>,
    options: &AuditOptions,
    cmp: &ProbComparer,
    notes: &mut Vec<String>,
) -> Vec<CheckEntry> {
    let pi = match pi {
        Ok(pi) => pi,
        Err(msg) => {
            let reason = format!("propensity table unavailable: {msg}");
            return vec![
                CheckEntry::skipped("rank_invariance", &reason),
                CheckEntry::skipped("index_construction", &reason),
                CheckEntry::skipped("sufficiency", &reason),
                CheckEntry::skipped("moment_monotonicity", &reason),
            ];
        }
    };

    let report = check_rank_invariance_with(pi, cmp);
    let rank_entry = rank_entry_from(&report, cmp);
    if report.is_consistent() {
        separability_note(pi, notes);
        if !report.tie_notes.is_empty() {
            notes.push(
                "propensity ties are read as weak-order ties; strict comparisons elsewhere \
                 order the tied values"
                    .to_string(),
            );
        }
    }

    let index = if report.is_consistent() {
        construct_index_with(pi, options.anchor.as_ref(), cmp)
    } else {
        Err(IndexError::RankInvariance {
            z: report.witness.as_ref().unwrap().z.clone(),
            z_alt: report.witness.as_ref().unwrap().z_alt.clone(),
            x_gt: report.witness.as_ref().unwrap().x_gt.clone(),
            x_lt: report.witness.as_ref().unwrap().x_lt.clone(),
        })
    };

    match index {
        Ok(index) => vec![
            rank_entry,
            index_entry(&index, options),
            sufficiency_entry(law, &index, cmp),
            moment_entry(law, &index, cmp),
        ],
        Err(IndexError::RankInvariance { .. }) => vec![
            rank_entry,
            CheckEntry::skipped("index_construction", "rank invariance violated"),
            CheckEntry::skipped("sufficiency", "no instrument index"),
            CheckEntry::skipped("moment_monotonicity", "no instrument index"),
        ],
        Err(e) => {
            let mut entry = CheckEntry::new("index_construction");
            entry.status = CheckStatus::Fail;
            entry.witnesses = vec![json!({ "error": e.to_string() })];
            entry.reason = Some(e.to_string());
            vec![
                rank_entry,
                entry,
                CheckEntry::skipped("sufficiency", "no instrument index"),
                CheckEntry::skipped("moment_monotonicity", "no instrument index"),
            ]
        }
    }
}

fn rank_entry_from<T: Scalar>(report: &RankInvarianceReport<T>, cmp: &ProbComparer) -> CheckEntry {
    let mut entry = CheckEntry::new("rank_invariance");
    entry.tolerance = cmp.applied_tolerance(0.5, None);
    if let Some(merged) = &report.merged_order {
        entry.values.insert(
            "merged_order".into(),
            json!(merged
                .iter()
                .map(|class| class.iter().map(|z| z.to_string()).collect::<Vec<_>>())
                .collect::<Vec<_>>()),
        );
    }
    entry
        .values
        .insert("tie_notes".into(), json!(report.tie_notes.len()));
    if report.underpowered > 0 {
        entry
            .values
            .insert("underpowered_comparisons".into(), json!(report.underpowered));
    }
    if let Some(w) = &report.witness {
        entry.status = CheckStatus::Fail;
        entry.witnesses = vec![json!({
            "z": w.z.to_string(),
            "z_alt": w.z_alt.to_string(),
            "x_gt": w.x_gt.to_string(),
            "x_lt": w.x_lt.to_string(),
            "values": w.values.iter().map(|v| v.encode()).collect::<Vec<_>>(),
        })];
    }
    entry
}

fn index_entry<T: Scalar>(index: &IndexFunction<T>, options: &AuditOptions) -> CheckEntry {
    let mut entry = CheckEntry::new("index_construction");
    entry.values.insert(
        "m".into(),
        Value::Object(
            index
                .z_support()
                .iter()
                .enumerate()
                .map(|(zi, zl)| (zl.to_string(), json!(index.value(zi).encode())))
                .collect(),
        ),
    );
    entry.values.insert(
        "anchor".into(),
        match &options.anchor {
            Some(a) => json!(a.to_string()),
            None => json!("cell-average"),
        },
    );
    entry
}

fn sufficiency_entry<T: Scalar>(
    law: &ObservableLaw<T>,
    index: &IndexFunction<T>,
    cmp: &ProbComparer,
) -> CheckEntry {
    let mut entry = CheckEntry::new("sufficiency");
    match sufficiency_check_law(law, index, cmp) {
        Err(e) => {
            entry.status = CheckStatus::Skipped;
            entry.reason = Some(e.to_string());
        }
        Ok(report) => {
            entry
                .values
                .insert("tied_pairs".into(), json!(report.tied_pairs));
            entry
                .values
                .insert("compared".into(), json!(report.compared));
            if !report.vacuous.is_empty() {
                entry
                    .values
                    .insert("vacuous_cells".into(), json!(report.vacuous.len()));
            }
            if report.underpowered > 0 {
                entry
                    .values
                    .insert("underpowered".into(), json!(report.underpowered));
            }
            entry.status = if !report.pass {
                CheckStatus::Fail
            } else if report.tied_pairs == 0 {
                CheckStatus::Vacuous
            } else if report.compared > 0 && report.underpowered == report.compared {
                CheckStatus::Underpowered
            } else {
                CheckStatus::Pass
            };
            entry.witnesses = report
                .failures
                .iter()
                .map(|f| {
                    json!({
                        "x": f.x.to_string(),
                        "z": f.z.to_string(),
                        "z_alt": f.z_alt.to_string(),
                        "arm": f.arm,
                        "y": f.y.to_string(),
                        "lhs": f.lhs.encode(),
                        "rhs": f.rhs.encode(),
                    })
                })
                .collect();
        }
    }
    entry
}

fn moment_entry<T: Scalar>(
    law: &ObservableLaw<T>,
    index: &IndexFunction<T>,
    cmp: &ProbComparer,
) -> CheckEntry {
    let mut entry = CheckEntry::new("moment_monotonicity");
    let g1 = TestFunction::default_family(law.y_support(), law.x_support().len());
    let g0 = g1.clone();
    match moment_monotonicity_check_law(law, index, &g1, &g0, cmp) {
        Err(e) => {
            entry.status = CheckStatus::Skipped;
            entry.reason = Some(e.to_string());
        }
        Ok(report) => {
            entry
                .values
                .insert("sequences".into(), json!(report.sequences.len()));
            if report.underpowered > 0 {
                entry
                    .values
                    .insert("underpowered".into(), json!(report.underpowered));
            }
            entry.status = if report.pass {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            entry.witnesses = report
                .sequences
                .iter()
                .filter_map(|s| {
                    s.violation.as_ref().map(|v| {
                        json!({
                            "x": s.x.to_string(),
                            "g": s.g_name,
                            "arm": s.arm,
                            "position": v.position,
                            "prev": v.prev.encode(),
                            "next": v.next.encode(),
                        })
                    })
                })
                .collect();
        }
    }
    entry
}

/// Informational only: index separability never requires the propensity
/// table itself to be additively separable in (z, x).
fn separability_note<T: Scalar>(pi: &PropensityMatrix<T>, notes: &mut Vec<String>) {
    let additive = (0..pi.x_count()).all(|x| {
        (0..pi.z_count()).all(|z| {
            pi.value(x, z).clone() - pi.value(x, 0).clone() - pi.value(0, z).clone()
                + pi.value(0, 0).clone()
                == T::zero()
        })
    });
    if additive {
        notes.push("propensity table is additively separable in (z, x) (informational)".into());
    } else {
        notes.push(
            "propensity table is not additively separable in (z, x); index separability does \
             not require it (informational)"
                .into(),
        );
    }
}

// ---------------------------------------------------------------------------
// Population audit (ordered)
// ---------------------------------------------------------------------------

/// Exact audit of an ordered population model. Binary-only checks are
/// skipped; index construction builds the mean-treatment index.
pub fn audit_ordered<T: Scalar>(model: &OrderedModel<T>, options: &AuditOptions) -> AuditReport {
    let digest = options.digest.clone().unwrap_or_default();
    let inner = model.as_model();
    let mut checks = Vec::new();
    let notes = vec!["population audit: all comparisons are exact".to_string()];

    checks.push(preconditions_entry(inner));
    checks.push(independence_entry(inner));

    let verdict = classify_monotonicity(inner);
    let mut entry = CheckEntry::new("monotonicity");
    entry
        .values
        .insert("class".into(), json!(format!("{}", verdict.class)));
    if verdict.class != MonotonicityClass::GlobalMonotone {
        entry.status = CheckStatus::Fail;
        entry.witnesses = verdict
            .witnesses
            .iter()
            .map(|w| serde_json::to_value(w).expect("witness serializes"))
            .collect();
    }
    checks.push(entry);

    checks.push(CheckEntry::skipped(
        "rank_invariance",
        "binary-treatment check",
    ));

    let mut entry = CheckEntry::new("index_construction");
    match crate::ordered::ordered_index(model) {
        Ok(index) => {
            entry.values.insert(
                "d".into(),
                Value::Object(
                    index
                        .z_support()
                        .iter()
                        .enumerate()
                        .map(|(zi, zl)| (zl.to_string(), json!(index.value(zi).encode())))
                        .collect(),
                ),
            );
        }
        Err(e) => {
            entry.status = CheckStatus::Fail;
            entry.reason = Some(e.to_string());
        }
    }
    checks.push(entry);

    checks.push(CheckEntry::skipped("sufficiency", "binary-treatment check"));
    checks.push(CheckEntry::skipped(
        "moment_monotonicity",
        "binary-treatment check",
    ));

    let _ = options;
    finish("ordered-model", digest, checks, notes)
}

// ---------------------------------------------------------------------------
// Sample audit
// ---------------------------------------------------------------------------

/// Tolerance-based audit of an empirical joint built from data. Population
/// statements about response types are unobservable and reported as skipped;
/// every comparison uses the plug-in rule, so failures are evidence, not
/// exact refutations.
pub fn audit_dataset(joint: &EmpiricalJoint, options: &AuditOptions) -> AuditReport {
    let digest = options.digest.clone().unwrap_or_default();
    let rule = options.rule();
    let cmp = ProbComparer::sample(rule);
    let law = &joint.law;
    let mut checks = Vec::new();
    let mut notes = vec![
        "sample audit: statuses are tolerance-based estimates, not exact refutations"
            .to_string(),
    ];
    if joint.relabeled {
        notes.push("treatment levels {0,...,K-1} were relabeled to {1,...,K}".to_string());
    }
    if let Some(n) = law.sample_size() {
        notes.push(format!("sample size n = {n}"));
    }

    // Overlap and relevance on the observed cells.
    let mut entry = CheckEntry::new("overlap_relevance");
    entry.tolerance = Some(rule.fixed.unwrap_or(rule.floor));
    for (x, z) in &joint.empty_cells {
        entry.witnesses.push(json!({
            "empty_cell": {"x": x.to_string(), "z": z.to_string()},
        }));
    }
    if !joint.empty_cells.is_empty() {
        entry.status = CheckStatus::Underpowered;
        entry.reason = Some("some (x, z) cells have no observations".to_string());
    } else if law.is_binary() {
        match law.propensity() {
            Ok(pi) => {
                for x in 0..pi.x_count() {
                    for z in 0..pi.z_count() {
                        let v = pi.value(x, z).to_f64();
                        let n = pi.count(x, z).unwrap_or(0);
                        if (v == 0.0 || v == 1.0) && n >= rule.min_cell {
                            entry.status = CheckStatus::Fail;
                            entry.witnesses.push(json!({
                                "degenerate_cell": {
                                    "x": pi.x_support()[x].to_string(),
                                    "z": pi.z_support()[z].to_string(),
                                    "propensity": v,
                                    "n": n,
                                },
                            }));
                        }
                    }
                }
            }
            Err(e) => {
                entry.status = CheckStatus::Underpowered;
                entry.reason = Some(e.to_string());
            }
        }
    }
    checks.push(entry);

    checks.push(CheckEntry::skipped(
        "conditional_independence",
        "unobservable: response types are not identified from data",
    ));
    checks.push(CheckEntry::skipped(
        "monotonicity",
        "unobservable: response types are not identified from data",
    ));

    if !law.is_binary() {
        checks.push(CheckEntry::skipped(
            "rank_invariance",
            "binary-treatment check",
        ));
        checks.push(CheckEntry::skipped(
            "index_construction",
            "binary-treatment check",
        ));
        checks.push(CheckEntry::skipped("sufficiency", "binary-treatment check"));
        checks.push(CheckEntry::skipped(
            "moment_monotonicity",
            "binary-treatment check",
        ));
        return finish("dataset", digest, checks, notes);
    }

    let pi = law.propensity();
    checks.extend(binary_chain(
        pi.as_ref().map_err(|e| e.to_string()),
        law,
        options,
        &cmp,
        &mut notes,
    ));

    finish("dataset", digest, checks, notes)
}

/// Digest helper for audits of serialized inputs.
pub fn digest_bytes(bytes: &[u8]) -> String {
    sha256_hex(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::empirical_model;
    use crate::fixtures::{model_m1, model_m2, ordered_k3};
    use crate::simulate::sample;

    #[test]
    fn m1_population_audit_passes_every_check() {
        let report = audit_model(&model_m1(), &AuditOptions::default());
        assert!(report.passed());
        for check in &report.checks {
            assert_ne!(check.status, CheckStatus::Fail, "{} failed", check.name);
        }
        // Injective index: sufficiency is vacuous, the rest pass.
        assert_eq!(
            report.check("sufficiency").unwrap().status,
            CheckStatus::Vacuous
        );
        assert_eq!(
            report.check("moment_monotonicity").unwrap().status,
            CheckStatus::Pass
        );
        assert_eq!(
            report.checks.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(),
            CHECK_ORDER.to_vec()
        );
    }

    #[test]
    fn m2_audit_fails_rank_invariance_and_skips_downstream() {
        let report = audit_model(&model_m2(), &AuditOptions::default());
        assert!(!report.passed());
        assert_eq!(
            report.check("monotonicity").unwrap().status,
            CheckStatus::Fail
        );
        let rank = report.check("rank_invariance").unwrap();
        assert_eq!(rank.status, CheckStatus::Fail);
        assert_eq!(rank.witnesses.len(), 1);
        let index = report.check("index_construction").unwrap();
        assert_eq!(index.status, CheckStatus::Skipped);
        assert_eq!(
            index.reason.as_deref(),
            Some("rank invariance violated")
        );
        assert_eq!(
            report.check("sufficiency").unwrap().status,
            CheckStatus::Skipped
        );
    }

    #[test]
    fn ordered_audit_builds_the_mean_index_and_skips_binary_checks() {
        let report = audit_ordered(&ordered_k3(), &AuditOptions::default());
        assert!(report.passed());
        let index = report.check("index_construction").unwrap();
        assert_eq!(index.status, CheckStatus::Pass);
        assert!(index.values.contains_key("d"));
        assert_eq!(
            report.check("rank_invariance").unwrap().status,
            CheckStatus::Skipped
        );
    }

    #[test]
    fn sample_audit_of_m1_passes_and_flags_estimates() {
        let model = model_m1();
        let ds = sample(&model, 10_000, 21);
        let joint = empirical_model(&ds).unwrap();
        let report = audit_dataset(&joint, &AuditOptions::default());
        assert!(report.passed(), "report: {}", report.to_json());
        assert!(report.notes.iter().any(|n| n.contains("tolerance-based")));
        assert_eq!(
            report.check("conditional_independence").unwrap().status,
            CheckStatus::Skipped
        );
        assert_eq!(
            report.check("monotonicity").unwrap().status,
            CheckStatus::Skipped
        );
    }

    #[test]
    fn sample_audit_of_m2_detects_the_flip_at_scale() {
        let model = model_m2();
        let ds = sample(&model, 100_000, 33);
        let joint = empirical_model(&ds).unwrap();
        let report = audit_dataset(&joint, &AuditOptions::default());
        assert!(!report.passed());
        assert_eq!(
            report.check("rank_invariance").unwrap().status,
            CheckStatus::Fail
        );
    }

    #[test]
    fn report_json_round_trips_byte_exactly() {
        let report = audit_model(&model_m1(), &AuditOptions::default());
        let text = report.to_json();
        let back = AuditReport::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert_eq!(back, report);
    }

    #[test]
    fn fixed_tolerance_override_is_honored() {
        let model = model_m2();
        let ds = sample(&model, 50_000, 5);
        let joint = empirical_model(&ds).unwrap();
        // An absurdly wide tolerance hides the flip.
        let opts = AuditOptions {
            tolerance: Some(0.9),
            ..AuditOptions::default()
        };
        let report = audit_dataset(&joint, &opts);
        assert!(report.passed());
    }
}
