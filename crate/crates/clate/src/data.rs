//! Dataset ingestion: CSV rows of (x, z, d, y) into a typed dataset and an
//! exact empirical frequency table.
//!
//! Response types are not identified from data, so only the observable joint
//! is built here; population-only checks are reported as unobservable by the
//! audit layer. Frequencies are exact rationals `count/n`, with raw counts
//! kept alongside for tolerance decisions.

use crate::diagnostics::ObservableLaw;
use crate::error::IngestError;
use crate::label::{CovariateCell, InstrumentValue, OutcomeValue};
use crate::model::TreatmentKind;
use crate::scalar::Rational;
use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

/// One observed row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataRow {
    pub x: String,
    pub z: String,
    pub d: u32,
    pub y: String,
}

/// An ingested dataset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub rows: Vec<DataRow>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct treatment levels in ascending order.
    pub fn treatment_levels(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.rows.iter().map(|r| r.d).collect();
        set.into_iter().collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("x,z,d,y\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", row.x, row.z, row.d, row.y));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv_string())
    }
}

/// Column names and outcome-binning options for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub col_x: String,
    pub col_z: String,
    pub col_d: String,
    pub col_y: String,
    /// Equal-width bin count for numeric outcomes.
    pub y_bins: Option<usize>,
    /// Distinct-numeric-value threshold above which an unbinned outcome is
    /// rejected as continuous.
    pub max_y_distinct: usize,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            col_x: "x".to_string(),
            col_z: "z".to_string(),
            col_d: "d".to_string(),
            col_y: "y".to_string(),
            y_bins: None,
            max_y_distinct: 16,
        }
    }
}

/// Parses a CSV file into a dataset, binning the outcome when requested and
/// rejecting continuous outcomes otherwise.
pub fn ingest_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset, IngestError> {
    let mut file = std::fs::File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    let mut content = String::new();
    file.read_to_string(&mut content).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    ingest_csv_str(&content, schema)
}

/// Parses CSV text into a dataset (see [`ingest_csv`]).
pub fn ingest_csv_str(content: &str, schema: &CsvSchema) -> Result<Dataset, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| IngestError::Parse {
            line: 1,
            detail: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let wanted = [
        schema.col_x.as_str(),
        schema.col_z.as_str(),
        schema.col_d.as_str(),
        schema.col_y.as_str(),
    ];
    let missing: Vec<String> = wanted
        .iter()
        .filter(|n| col(n).is_none())
        .map(|n| n.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(IngestError::Schema { missing });
    }
    let (ix, iz, id, iy) = (
        col(&schema.col_x).unwrap(),
        col(&schema.col_z).unwrap(),
        col(&schema.col_d).unwrap(),
        col(&schema.col_y).unwrap(),
    );

    let mut rows = Vec::new();
    for (offset, record) in reader.records().enumerate() {
        let line = offset as u64 + 2; // header is line 1
        let record = record.map_err(|e| IngestError::Parse {
            line,
            detail: e.to_string(),
        })?;
        let field = |i: usize| -> Result<&str, IngestError> {
            let v = record.get(i).unwrap_or("");
            if v.is_empty() {
                return Err(IngestError::Parse {
                    line,
                    detail: "missing field".to_string(),
                });
            }
            Ok(v)
        };
        let d: u32 = field(id)?.parse().map_err(|_| IngestError::Parse {
            line,
            detail: format!("treatment level {:?} is not a nonnegative integer", record.get(id)),
        })?;
        rows.push(DataRow {
            x: field(ix)?.to_string(),
            z: field(iz)?.to_string(),
            d,
            y: field(iy)?.to_string(),
        });
    }
    if rows.is_empty() {
        return Err(IngestError::EmptyDataset);
    }

    let dataset = match schema.y_bins {
        Some(bins) => bin_outcomes(Dataset { rows }, bins)?,
        None => {
            let numeric: Option<BTreeSet<String>> = {
                let mut distinct = BTreeSet::new();
                let all_numeric = rows.iter().all(|r| r.y.parse::<f64>().is_ok());
                if all_numeric {
                    for r in &rows {
                        distinct.insert(r.y.clone());
                    }
                    Some(distinct)
                } else {
                    None
                }
            };
            if let Some(distinct) = numeric {
                if distinct.len() > schema.max_y_distinct {
                    return Err(IngestError::ContinuousOutcome {
                        distinct: distinct.len(),
                    });
                }
            }
            Dataset { rows }
        }
    };
    Ok(dataset)
}

fn bin_outcomes(mut dataset: Dataset, bins: usize) -> Result<Dataset, IngestError> {
    if bins == 0 {
        return Err(IngestError::ContinuousOutcome { distinct: 0 });
    }
    let values: Vec<f64> = dataset
        .rows
        .iter()
        .map(|r| {
            r.y.parse::<f64>().map_err(|_| IngestError::Parse {
                line: 0,
                detail: format!("outcome {:?} is not numeric, cannot bin", r.y),
            })
        })
        .collect::<Result<_, _>>()?;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    for (row, v) in dataset.rows.iter_mut().zip(values) {
        let mut b = ((v - lo) / width).floor() as usize;
        if b >= bins {
            b = bins - 1; // the top edge closes the last bin
        }
        let left = lo + b as f64 * width;
        let right = left + width;
        row.y = format!("[{left:.6},{right:.6})");
    }
    Ok(dataset)
}

/// The empirical joint of a dataset: exact `count/n` frequencies over the
/// inferred supports, with counts attached, plus the inferred treatment kind.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalJoint {
    pub law: ObservableLaw<Rational>,
    pub treatment: TreatmentKind,
    /// True when levels `{0,...,K-1}` were shifted to `{1,...,K}`.
    pub relabeled: bool,
    /// `(x, z)` cells with no observations, flagged for the audit.
    pub empty_cells: Vec<(CovariateCell, InstrumentValue)>,
}

/// Builds the empirical joint table of a dataset. Supports are inferred in
/// first-appearance order; treatment levels must form `{0,1}` or a
/// contiguous `{1,...,K}` (a `{0,...,K-1}` coding is shifted up and the
/// relabeling recorded).
pub fn empirical_model(dataset: &Dataset) -> Result<EmpiricalJoint, IngestError> {
    if dataset.is_empty() {
        return Err(IngestError::EmptyDataset);
    }

    let levels = dataset.treatment_levels();
    let (treatment, shift): (TreatmentKind, u32) = infer_levels(&levels)?;
    let relabeled = shift > 0;

    let mut x_support: Vec<CovariateCell> = Vec::new();
    let mut z_support: Vec<InstrumentValue> = Vec::new();
    let mut y_support: Vec<OutcomeValue> = Vec::new();
    for row in &dataset.rows {
        if !x_support.iter().any(|l| l.as_str() == row.x) {
            x_support.push(CovariateCell::new(row.x.clone()));
        }
        if !z_support.iter().any(|l| l.as_str() == row.z) {
            z_support.push(InstrumentValue::new(row.z.clone()));
        }
        if !y_support.iter().any(|l| l.as_str() == row.y) {
            y_support.push(OutcomeValue::new(row.y.clone()));
        }
    }

    let d_levels: Vec<u32> = match treatment {
        TreatmentKind::Binary => vec![0, 1],
        TreatmentKind::Ordered(k) => (1..=k).collect(),
    };
    let (nx, nz, nd, ny) = (
        x_support.len(),
        z_support.len(),
        d_levels.len(),
        y_support.len(),
    );
    let mut counts = vec![0u64; nx * nz * nd * ny];
    for row in &dataset.rows {
        let x = x_support.iter().position(|l| l.as_str() == row.x).unwrap();
        let z = z_support.iter().position(|l| l.as_str() == row.z).unwrap();
        let level = row.d + shift;
        let d = d_levels
            .iter()
            .position(|&l| l == level)
            .expect("levels validated contiguous");
        let y = y_support.iter().position(|l| l.as_str() == row.y).unwrap();
        counts[((x * nz + z) * nd + d) * ny + y] += 1;
    }

    let n = dataset.len() as u64;
    let mass: Vec<Rational> = counts
        .iter()
        .map(|&c| Rational::new((c as i64).into(), (n as i64).into()))
        .collect();
    let law = ObservableLaw::from_parts(
        z_support.clone(),
        x_support.clone(),
        y_support,
        d_levels,
        mass,
        Some(counts),
        Some(n),
    )
    .expect("table shapes are consistent by construction");

    let mut empty_cells = Vec::new();
    for (xi, xl) in x_support.iter().enumerate() {
        for (zi, zl) in z_support.iter().enumerate() {
            if law.cell_count(xi, zi) == Some(0) {
                empty_cells.push((xl.clone(), zl.clone()));
            }
        }
    }

    Ok(EmpiricalJoint {
        law,
        treatment,
        relabeled,
        empty_cells,
    })
}

fn infer_levels(levels: &[u32]) -> Result<(TreatmentKind, u32), IngestError> {
    let contiguous =
        |lvls: &[u32]| lvls.windows(2).all(|w| w[1] == w[0] + 1);
    match (levels.first(), levels.last()) {
        (Some(0), Some(1)) if levels.len() == 2 => Ok((TreatmentKind::Binary, 0)),
        (Some(&0), Some(&hi)) if hi >= 2 && contiguous(levels) => {
            Ok((TreatmentKind::Ordered(hi + 1), 1))
        }
        (Some(&1), Some(&hi)) if hi >= 2 && contiguous(levels) => {
            Ok((TreatmentKind::Ordered(hi), 0))
        }
        // A single observed level cannot distinguish binary from ordered;
        // read it as a degenerate binary observation of one arm.
        (Some(0), Some(0)) | (Some(1), Some(1)) => Ok((TreatmentKind::Binary, 0)),
        _ => Err(IngestError::NonContiguousLevels {
            levels: levels.to_vec(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::model_m1;
    use crate::model::propensity_matrix;
    use crate::scalar::Scalar;
    use crate::simulate::sample;

    #[test]
    fn four_row_file_parses_with_inferred_supports() {
        let csv = "x,z,d,y\na,z0,0,y0\na,z0,1,y1\na,z1,1,y1\na,z1,0,y0\n";
        let ds = ingest_csv_str(csv, &CsvSchema::default()).unwrap();
        assert_eq!(ds.len(), 4);
        let joint = empirical_model(&ds).unwrap();
        assert_eq!(joint.treatment, TreatmentKind::Binary);
        assert_eq!(joint.law.z_support().len(), 2);
        assert_eq!(joint.law.x_support().len(), 1);
        assert!(joint.empty_cells.is_empty());
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let csv = "x,z,y\na,z0,y0\n";
        match ingest_csv_str(csv, &CsvSchema::default()) {
            Err(IngestError::Schema { missing }) => assert_eq!(missing, vec!["d".to_string()]),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn zero_based_ordered_levels_are_relabeled() {
        let csv = "x,z,d,y\na,z0,0,y0\na,z0,1,y0\na,z1,2,y1\na,z1,0,y0\n";
        let ds = ingest_csv_str(csv, &CsvSchema::default()).unwrap();
        let joint = empirical_model(&ds).unwrap();
        assert_eq!(joint.treatment, TreatmentKind::Ordered(3));
        assert!(joint.relabeled);
    }

    #[test]
    fn gappy_levels_are_rejected() {
        let csv = "x,z,d,y\na,z0,0,y0\na,z1,3,y1\n";
        let ds = ingest_csv_str(csv, &CsvSchema::default()).unwrap();
        assert!(matches!(
            empirical_model(&ds),
            Err(IngestError::NonContiguousLevels { .. })
        ));
    }

    #[test]
    fn continuous_outcomes_need_a_binning_spec() {
        let mut csv = String::from("x,z,d,y\n");
        for i in 0..40 {
            csv.push_str(&format!("a,z{},{},{}\n", i % 2, i % 2, i as f64 / 7.0));
        }
        let err = ingest_csv_str(&csv, &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, IngestError::ContinuousOutcome { .. }));

        let mut schema = CsvSchema::default();
        schema.y_bins = Some(4);
        let ds = ingest_csv_str(&csv, &schema).unwrap();
        let distinct: std::collections::BTreeSet<&str> =
            ds.rows.iter().map(|r| r.y.as_str()).collect();
        assert!(distinct.len() <= 4);
    }

    #[test]
    fn custom_column_names_are_honored() {
        let csv = "cell,instr,treat,out\na,z0,1,y0\na,z1,0,y0\n";
        let schema = CsvSchema {
            col_x: "cell".into(),
            col_z: "instr".into(),
            col_d: "treat".into(),
            col_y: "out".into(),
            ..CsvSchema::default()
        };
        let ds = ingest_csv_str(csv, &schema).unwrap();
        assert_eq!(ds.len(), 2);
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let model = model_m1();
        let ds = sample(&model, 200, 11);
        let back = ingest_csv_str(&ds.to_csv_string(), &CsvSchema::default()).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn empirical_frequencies_approach_the_exact_table() {
        let model = model_m1();
        let ds = sample(&model, 10_000, 3);
        let joint = empirical_model(&ds).unwrap();
        let pi_hat = joint.law.propensity().unwrap();
        let pi = propensity_matrix(&model).unwrap();
        for (xi, xl) in pi_hat.x_support().iter().enumerate() {
            for (zi, zl) in pi_hat.z_support().iter().enumerate() {
                let x = pi.x_support().iter().position(|l| l == xl).unwrap();
                let z = pi.z_support().iter().position(|l| l == zl).unwrap();
                let err = (pi_hat.value(xi, zi).to_f64() - pi.value(x, z).to_f64()).abs();
                assert!(err < 0.03, "cell ({zl},{xl}) off by {err}");
            }
        }
    }

    #[test]
    fn single_row_dataset_builds_with_empty_cells_flagged() {
        let csv = "x,z,d,y\na,z0,1,y0\na,z1,0,y0\nb,z0,1,y0\n";
        let ds = ingest_csv_str(csv, &CsvSchema::default()).unwrap();
        let joint = empirical_model(&ds).unwrap();
        assert_eq!(joint.empty_cells.len(), 1);
        assert_eq!(joint.empty_cells[0].0.as_str(), "b");
        assert_eq!(joint.empty_cells[0].1.as_str(), "z1");
    }
}
