//! `glg`: dataset preparation, benchmark runs and diagnostics.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use glg::bench::{mmd_diagnostic, report_file_name, run_all, run_task, ModelKind, RunConfig};
use glg::datasets::{find_dataset, find_task, load_dataset, verify_datasets, FileState};
use glg::mlkit::{kfold_accuracy, zscore};
use glg::optim::GlgConfig;

#[derive(Parser)]
#[command(name = "glg", version, about = "Heterogeneous domain adaptation benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify dataset files and their checksums.
    Prepare {
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
    },
    /// Run one (task, model) cell and write its JSON report.
    Run {
        #[arg(long)]
        task: String,
        #[arg(long)]
        model: ModelKind,
        #[arg(long, default_value_t = 50)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "reports")]
        out: PathBuf,
        /// GFK subspace dimension; defaults to max(1, r/2).
        #[arg(long)]
        gfk_dim: Option<usize>,
        /// JSON file with optimizer settings.
        #[arg(long)]
        glg_config: Option<PathBuf>,
    },
    /// Run every cell listed in a JSON run configuration.
    RunAll {
        #[arg(long)]
        config: PathBuf,
    },
    /// Two-sample MMD tests on the mapped and adapted domains of one run.
    Mmd {
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "rmg")]
        model: ModelKind,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        #[arg(long)]
        gfk_dim: Option<usize>,
    },
    /// Same-domain k-fold SVM accuracy of one dataset.
    SameDomain {
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
    },
}

type CliResult = Result<ExitCode, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Prepare { data_dir } => prepare(&data_dir),
        Command::Run {
            task,
            model,
            runs,
            seed,
            data_dir,
            out,
            gfk_dim,
            glg_config,
        } => {
            let glg = match glg_config {
                Some(p) => serde_json::from_str::<GlgConfig>(&fs::read_to_string(p)?)?,
                None => GlgConfig::default(),
            };
            let task = find_task(&task)?;
            let cfg = RunConfig {
                tasks: vec![task.code.to_string()],
                models: vec![model],
                runs,
                seed,
                glg,
                gfk_dim,
                data_dir,
                out,
            };
            let report = run_task(&task, model, &cfg)?;
            fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join(report_file_name(task.code, model));
            fs::write(&path, report.to_json()?)?;
            println!(
                "{} {}: {:.2}% ± {:.2}% (max {:.2}%, min {:.2}%) -> {}",
                task.code,
                model.name(),
                100.0 * report.avg,
                100.0 * report.std,
                100.0 * report.max,
                100.0 * report.min,
                path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::RunAll { config } => {
            let cfg: RunConfig = serde_json::from_str(&fs::read_to_string(&config)?)?;
            let outcome = run_all(&cfg)?;
            print!("{}", fs::read_to_string(cfg.out.join("summary.txt"))?);
            for f in &outcome.failures {
                eprintln!("failed: {} {}: {}", f.task, f.model.name(), f.error);
            }
            Ok(if outcome.success() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Mmd {
            task,
            seed,
            model,
            data_dir,
            gfk_dim,
        } => {
            let task = find_task(&task)?;
            let cfg = RunConfig {
                data_dir,
                gfk_dim,
                ..RunConfig::default()
            };
            print!("{}", mmd_diagnostic(&task, model, seed, &cfg)?.table());
            Ok(ExitCode::SUCCESS)
        }
        Command::SameDomain {
            dataset,
            folds,
            seed,
            data_dir,
        } => {
            let spec = find_dataset(&dataset)?;
            let d = load_dataset(&data_dir, spec.key)?;
            let (avg, std) = kfold_accuracy(&zscore(&d.x), d.labels()?, folds, seed)?;
            println!("{}: {:.2}% ± {:.2}%", spec.name, 100.0 * avg, 100.0 * std);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn prepare(dir: &Path) -> CliResult {
    let mut ok = true;
    for s in verify_datasets(dir)? {
        let text = find_dataset(s.dataset)?.text;
        let line = match &s.state {
            FileState::Ok { .. } => "ok".to_string(),
            FileState::Unpinned { sha256 } => format!("present (sha256 {sha256})"),
            FileState::Missing if text => "missing (text tasks unavailable)".to_string(),
            FileState::Missing => {
                ok = false;
                "missing".to_string()
            }
            FileState::Mismatch { expected, found } => {
                ok = false;
                format!("checksum mismatch: expected {expected}, found {found}")
            }
        };
        println!("{:<14} {:<42} {line}", s.dataset, s.path.display());
    }
    if !ok {
        eprintln!("some datasets are missing or corrupt; see scripts/assemble_datasets.py");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
