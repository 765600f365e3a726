//! Command-line surface: audit, represent, ordered, simulate, check-model.
//!
//! Exit codes are a stable scripting contract: 0 when every check passes,
//! 1 when at least one check fails (or a requested construction is refuted
//! by the model), 2 on input or usage errors.

use clap::{Parser, Subcommand};
use clate::audit::{audit_dataset, audit_model, audit_ordered, AuditOptions};
use clate::data::{empirical_model, ingest_csv, CsvSchema};
use clate::json::{
    model_to_json, representation_to_json, sha256_hex, spec_from_json, threshold_rep_to_json,
    LoadedModel,
};
use clate::represent::{construct_representation_anchored, normalize_uniform};
use clate::simulate::{derive_seed, generate_model, sample, GeneratedModel};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "clate",
    version,
    about = "Audit toolkit for finite-support instrumental-variable selection models"
)]
struct Cli {
    /// Seed override for simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fixed comparison tolerance for sample audits.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output file (defaults to stdout where applicable).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; only "json" is supported.
    #[arg(long, global = true, default_value = "json")]
    format: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit a model file (.json) or dataset (.csv).
    Audit {
        /// Input path; .csv ingests a dataset, anything else a model file.
        #[arg(long)]
        input: PathBuf,
        /// Anchor covariate cell for index construction.
        #[arg(long)]
        anchor: Option<String>,
        /// Column names for CSV ingestion, as "x,z,d,y".
        #[arg(long)]
        columns: Option<String>,
        /// Equal-width bin count for numeric outcomes.
        #[arg(long)]
        y_bins: Option<usize>,
    },
    /// Build the latent-index representation of a binary model.
    Represent {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        anchor: Option<String>,
    },
    /// Build the random-threshold representation of an ordered model.
    Ordered {
        #[arg(long)]
        model: PathBuf,
    },
    /// Generate a model from a spec and sample a dataset from it.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Rows to sample (skipped when no --out is given).
        #[arg(long, default_value_t = 1000)]
        n: u64,
        /// Where to write the generated model.
        #[arg(long)]
        model_out: Option<PathBuf>,
        /// Where to write the seed representation (representation-first
        /// binary specs only).
        #[arg(long)]
        rep_out: Option<PathBuf>,
    },
    /// Validate a model file: structure, overlap, relevance, classification.
    CheckModel {
        #[arg(long)]
        input: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn check(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.format != "json" {
        return Err(Failure::input(format!(
            "unsupported format {:?}; only \"json\" is available",
            cli.format
        )));
    }
    match &cli.command {
        Command::Audit {
            input,
            anchor,
            columns,
            y_bins,
        } => cmd_audit(&cli, input, anchor.as_deref(), columns.as_deref(), *y_bins),
        Command::Represent { model, anchor } => cmd_represent(&cli, model, anchor.as_deref()),
        Command::Ordered { model } => cmd_ordered(&cli, model),
        Command::Simulate {
            spec,
            n,
            model_out,
            rep_out,
        } => cmd_simulate(&cli, spec, *n, model_out.as_deref(), rep_out.as_deref()),
        Command::CheckModel { input } => cmd_check_model(&cli, input),
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn write_output(out: Option<&PathBuf>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_model(path: &Path) -> Result<(LoadedModel, String), Failure> {
    let text = read_file(path)?;
    let digest = sha256_hex(text.as_bytes());
    let model =
        clate::json::model_from_json(&text).map_err(|e| Failure::input(e.to_string()))?;
    Ok((model, digest))
}

fn cmd_audit(
    cli: &Cli,
    input: &Path,
    anchor: Option<&str>,
    columns: Option<&str>,
    y_bins: Option<usize>,
) -> Result<(), Failure> {
    let options = AuditOptions {
        anchor: anchor.map(Into::into),
        tolerance: cli.tol,
        digest: None,
    };
    let report = if input.extension().and_then(|e| e.to_str()) == Some("csv") {
        let mut schema = CsvSchema::default();
        if let Some(cols) = columns {
            let names: Vec<&str> = cols.split(',').map(str::trim).collect();
            if names.len() != 4 {
                return Err(Failure::input(
                    "--columns expects four comma-separated names: x,z,d,y",
                ));
            }
            schema.col_x = names[0].to_string();
            schema.col_z = names[1].to_string();
            schema.col_d = names[2].to_string();
            schema.col_y = names[3].to_string();
        }
        schema.y_bins = y_bins;
        let dataset =
            ingest_csv(input, &schema).map_err(|e| Failure::input(e.to_string()))?;
        let joint = empirical_model(&dataset).map_err(|e| Failure::input(e.to_string()))?;
        let options = AuditOptions {
            digest: Some(sha256_hex(dataset.to_csv_string().as_bytes())),
            ..options
        };
        audit_dataset(&joint, &options)
    } else {
        let (model, digest) = load_model(input)?;
        let options = AuditOptions {
            digest: Some(digest),
            ..options
        };
        match &model {
            LoadedModel::Binary(m) => audit_model(m, &options),
            LoadedModel::Ordered(m) => audit_ordered(m, &options),
        }
    };

    write_output(cli.out.as_ref(), &report.to_json())?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::check("audit verdict: fail"))
    }
}

fn cmd_represent(cli: &Cli, path: &Path, anchor: Option<&str>) -> Result<(), Failure> {
    let (model, _) = load_model(path)?;
    let model = match model {
        LoadedModel::Binary(m) => m,
        LoadedModel::Ordered(_) => {
            return Err(Failure::input(
                "represent needs a binary model; use the ordered subcommand",
            ))
        }
    };
    let anchor_cell = anchor.map(clate::CovariateCell::from);
    let rep = construct_representation_anchored(&model, anchor_cell.as_ref())
        .map_err(|e| Failure::check(e.to_string()))?;
    let rep = normalize_uniform(&rep, &model).map_err(|e| Failure::check(e.to_string()))?;
    write_output(cli.out.as_ref(), &representation_to_json(&rep))
}

fn cmd_ordered(cli: &Cli, path: &Path) -> Result<(), Failure> {
    let (model, _) = load_model(path)?;
    let model = match model {
        LoadedModel::Ordered(m) => m,
        LoadedModel::Binary(_) => {
            return Err(Failure::input(
                "ordered needs a model file with a K field; use represent for binary models",
            ))
        }
    };
    let rep = clate::ordered::construct_ordered_representation(&model)
        .map_err(|e| Failure::check(e.to_string()))?;
    write_output(cli.out.as_ref(), &threshold_rep_to_json(&rep))
}

fn cmd_simulate(
    cli: &Cli,
    spec_path: &Path,
    n: u64,
    model_out: Option<&Path>,
    rep_out: Option<&Path>,
) -> Result<(), Failure> {
    let text = read_file(spec_path)?;
    let mut spec = spec_from_json(&text).map_err(|e| Failure::input(e.to_string()))?;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    let generated = generate_model(&spec).map_err(|e| Failure::input(e.to_string()))?;

    if let Some(path) = model_out {
        let json = match &generated.model {
            GeneratedModel::Binary(m) => model_to_json(m),
            GeneratedModel::Ordered(m) => clate::json::ordered_to_json(m),
        };
        std::fs::write(path, json)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
    }
    if let Some(path) = rep_out {
        let rep = generated.representation.as_ref().ok_or_else(|| {
            Failure::input("--rep-out needs a binary from_representation spec")
        })?;
        std::fs::write(path, representation_to_json(rep))
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
    }
    if let Some(path) = cli.out.as_ref() {
        if n == 0 {
            return Err(Failure::input("--n must be at least 1 to sample"));
        }
        let dataset = sample(
            generated.model.as_finite(),
            n,
            derive_seed(spec.seed, 1),
        );
        dataset
            .write_csv(path)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
    }
    eprintln!(
        "generated {} model (attempts: {})",
        match &generated.model {
            GeneratedModel::Binary(_) => "binary",
            GeneratedModel::Ordered(_) => "ordered",
        },
        generated.attempts
    );
    Ok(())
}

fn cmd_check_model(cli: &Cli, input: &Path) -> Result<(), Failure> {
    let (model, digest) = load_model(input)?;
    let finite = model.as_finite();
    let preconditions = finite.validate_preconditions();
    let verdict = clate::model::classify_monotonicity(finite);
    let summary = serde_json::json!({
        "input_digest": digest,
        "kind": model.kind_name(),
        "monotonicity": format!("{}", verdict.class),
        "witnesses": verdict.witnesses.len(),
        "preconditions_ok": preconditions.ok(),
        "precondition_failures": preconditions.failures.len(),
    });
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    write_output(cli.out.as_ref(), &text)?;
    if preconditions.ok() {
        Ok(())
    } else {
        Err(Failure::check("model fails overlap/relevance preconditions"))
    }
}
