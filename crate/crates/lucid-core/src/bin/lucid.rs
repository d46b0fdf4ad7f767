//! `lucid`: train tabular binary classifiers, audit them through canonical
//! sets, and sweep inverse-design learning rates.
//!
//! Exit codes: 0 success, 1 internal/pipeline error, 2 usage or config
//! error. Logs go to stderr; data goes to files and stdout.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lucid_core::error::LucidError;
use lucid_core::pipeline;
use lucid_core::report::RunConfig;

#[derive(Parser)]
#[command(name = "lucid", version, about = "Canonical-set fairness auditing for tabular classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Run configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier and write model/schema/report JSON.
    Train {
        #[command(flatten)]
        common: ConfigArg,
        /// Override the training seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a canonical set against a trained model and write the audit
    /// report plus canonical-set and histogram CSVs.
    Audit {
        #[command(flatten)]
        common: ConfigArg,
        /// Trained model JSON (expects schema.json and train_report.json
        /// alongside it).
        #[arg(long)]
        model: PathBuf,
        /// Override inverse-design epochs.
        #[arg(long)]
        id_epochs: Option<usize>,
        /// Override the inverse-design learning rate.
        #[arg(long)]
        id_lr: Option<f64>,
        /// Override the number of canonical inputs.
        #[arg(long)]
        id_num_inputs: Option<usize>,
        /// Override the inverse-design seed.
        #[arg(long)]
        id_seed: Option<u64>,
    },
    /// One canonical set per learning rate, summarized in sweep.csv.
    Sweep {
        #[command(flatten)]
        common: ConfigArg,
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated learning rates, e.g. 1e-4,1e-3,1e-2,0.05,0.1,0.5
        #[arg(long, value_delimiter = ',', required = true)]
        lrs: Vec<f64>,
    },
    /// Validate a run configuration (field ranges and referenced paths).
    ValidateConfig {
        #[command(flatten)]
        common: ConfigArg,
    },
}

fn load_config(common: &ConfigArg) -> Result<(RunConfig, PathBuf), LucidError> {
    let (mut config, base) = RunConfig::from_file(&common.config)?;
    if let Some(dir) = &common.out_dir {
        config.output_dir = Some(dir.clone());
    }
    Ok((config, base))
}

fn run(cli: Cli) -> Result<serde_json::Value, LucidError> {
    match cli.command {
        Command::Train { common, seed } => {
            let (mut config, base) = load_config(&common)?;
            if let Some(seed) = seed {
                config.train.seed = seed;
            }
            let outputs = pipeline::run_train(&config, &base)?;
            Ok(serde_json::json!({
                "ok": true,
                "command": "train",
                "out_dir": outputs.out_dir,
                "artifacts": [
                    outputs.out_dir.join(pipeline::MODEL_FILE),
                    outputs.out_dir.join(pipeline::SCHEMA_FILE),
                    outputs.out_dir.join(pipeline::TRAIN_REPORT_FILE),
                ],
                "train_accuracy": outputs.report.final_train_accuracy,
                "test_accuracy": outputs.report.final_test_accuracy,
            }))
        }
        Command::Audit {
            common,
            model,
            id_epochs,
            id_lr,
            id_num_inputs,
            id_seed,
        } => {
            let (mut config, base) = load_config(&common)?;
            if let Some(epochs) = id_epochs {
                config.inverse_design.epochs = epochs;
            }
            if let Some(lr) = id_lr {
                config.inverse_design.learning_rate = lr;
            }
            if let Some(n) = id_num_inputs {
                config.inverse_design.num_inputs = n;
            }
            if let Some(seed) = id_seed {
                config.inverse_design.seed = seed;
            }
            let outputs = pipeline::run_audit(&config, &base, &model)?;
            let flagged: Vec<&str> = outputs
                .report
                .uniformity_tests
                .iter()
                .filter(|t| t.flagged)
                .map(|t| t.feature.as_str())
                .collect();
            Ok(serde_json::json!({
                "ok": true,
                "command": "audit",
                "out_dir": outputs.out_dir,
                "report": outputs.out_dir.join(pipeline::AUDIT_REPORT_FILE),
                "flagged_features": flagged,
                "model_digest": outputs.report.model_digest,
            }))
        }
        Command::Sweep { common, model, lrs } => {
            let (config, base) = load_config(&common)?;
            let outputs = pipeline::run_sweep(&config, &base, &model, &lrs)?;
            Ok(serde_json::json!({
                "ok": true,
                "command": "sweep",
                "out_dir": outputs.out_dir,
                "summary": outputs.out_dir.join(pipeline::SWEEP_FILE),
                "rows": outputs.rows,
            }))
        }
        Command::ValidateConfig { common } => {
            let (config, base) = load_config(&common)?;
            config.validate(&base)?;
            Ok(serde_json::json!({
                "ok": true,
                "command": "validate-config",
                "config": common.config,
            }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
            ExitCode::SUCCESS
        }
        Err(err) => {
            log::error!("{err}");
            println!("{}", serde_json::to_string_pretty(&err.to_json()).expect("json"));
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
