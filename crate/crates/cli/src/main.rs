use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use myoalign::harness::{
    calibrate_session, emit_report, evaluate_sessions, load_dataset, mapping_file_name, read_summary,
    run_experiment, run_on_sessions, train_reference, write_dataset, write_outputs, DayReport, ExperimentConfig,
    MODEL_CSV, RUN_TOML, SUMMARY_CSV,
};
use myoalign::sim::{simulate_days, DriftKind};
use myoalign::{CcaMapping64, LabeledWindows64, SvmModel64};

#[derive(Parser)]
#[command(name = "myoalign", version, about = "Cross-session alignment of EMG gesture features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-day feature dataset.
    Simulate {
        #[command(flatten)]
        opts: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the classifier on the first session of a dataset.
    Train {
        #[command(flatten)]
        opts: ConfigArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one alignment per later session against the first.
    Calibrate {
        #[command(flatten)]
        opts: ConfigArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a trained model and fitted mappings on a dataset.
    Evaluate {
        #[command(flatten)]
        opts: ConfigArgs,
        #[arg(long)]
        data: PathBuf,
        /// Directory holding model.csv and the mapping files.
        #[arg(long)]
        model_dir: PathBuf,
        /// Defaults to --model-dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Redraw the charts from an existing summary.csv.
    Report {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train, calibrate and evaluate in one go, on simulated data or --data.
    RunExperiment {
        #[command(flatten)]
        opts: ConfigArgs,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// TOML experiment configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    days: Option<usize>,
    /// rotation, general-linear, gain or offset-only
    #[arg(long)]
    drift: Option<DriftKind>,
    #[arg(long)]
    magnitude: Option<f64>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    calibration_reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sessions_per_day: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.days {
            cfg.days = v;
        }
        if let Some(v) = self.drift {
            cfg.drift = v;
        }
        if let Some(v) = self.magnitude {
            cfg.magnitude = v;
        }
        if let Some(v) = self.noise_std {
            cfg.noise_std = Some(v);
        }
        if let Some(v) = self.calibration_reps {
            cfg.calibration_reps = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.sessions_per_day {
            cfg.sessions_per_day = v;
        }
        Ok(cfg)
    }

    /// Config for a recorded dataset: the manifest's session grouping wins
    /// unless the flag is given, and `days` follows the data.
    fn resolve_for_dataset(&self, data: &Path) -> Result<(ExperimentConfig, Vec<LabeledWindows64>)> {
        let mut cfg = self.resolve()?;
        let (manifest, sessions) =
            load_dataset(data).with_context(|| format!("loading dataset {}", data.display()))?;
        if self.sessions_per_day.is_none() {
            cfg.sessions_per_day = manifest.sessions_per_day;
        }
        cfg.days = sessions.len().div_ceil(cfg.sessions_per_day);
        if sessions.len() < 2 {
            bail!("dataset {} has {} session(s); need at least 2", data.display(), sessions.len());
        }
        Ok((cfg, sessions))
    }
}

fn write_run_toml(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join(RUN_TOML), cfg.to_toml_string()?)?;
    Ok(())
}

fn print_table(reports: &[DayReport]) {
    println!("{:>6} {:>9} {:>9} {:>7} {:>9} {:>9} {:>8} {:>9}", "day", "corr_al", "corr_un", "gain", "acc_al", "acc_un", "pooled", "relative");
    for r in reports {
        println!(
            "{:>6} {:>9.4} {:>9.4} {:>7.4} {:>9.4} {:>9.4} {:>8.4} {:>9.4}",
            r.label(),
            r.mean_canonical_correlation_aligned,
            r.mean_channelwise_correlation_unaligned,
            r.correlation_gain,
            r.acc_aligned,
            r.acc_unaligned,
            r.acc_pooled,
            r.relative_accuracy
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { opts, out } => {
            let cfg = opts.resolve()?;
            cfg.validate()?;
            let sessions = cfg.days * cfg.sessions_per_day;
            let data = simulate_days(&cfg.geometry, sessions, cfg.drift, cfg.magnitude, cfg.noise_std(), cfg.seed)?;
            write_dataset(&out, &data, cfg.sessions_per_day)?;
            write_run_toml(&cfg, &out)?;
            println!("wrote {sessions} sessions to {}", out.display());
        }
        Command::Train { opts, data, out } => {
            let (cfg, sessions) = opts.resolve_for_dataset(&data)?;
            let (model, split) = train_reference(&sessions[0], &cfg)?;
            fs::create_dir_all(&out)?;
            model.save(out.join(MODEL_CSV))?;
            write_run_toml(&cfg, &out)?;
            println!("trained on {} windows; model written to {}", split.train.len(), out.join(MODEL_CSV).display());
        }
        Command::Calibrate { opts, data, out } => {
            let (cfg, sessions) = opts.resolve_for_dataset(&data)?;
            fs::create_dir_all(&out)?;
            for (i, s) in sessions.iter().enumerate().skip(1) {
                let (_, mapping) = calibrate_session(&sessions[0], s, &cfg)
                    .with_context(|| format!("calibrating session {}", i + 1))?;
                let name = mapping_file_name(i, cfg.sessions_per_day);
                mapping.save(out.join(&name))?;
                println!("{name}: mean canonical correlation {:.4}", mapping.mean_correlation());
            }
            write_run_toml(&cfg, &out)?;
        }
        Command::Evaluate { opts, data, model_dir, out } => {
            let (cfg, sessions) = opts.resolve_for_dataset(&data)?;
            let model = SvmModel64::load(model_dir.join(MODEL_CSV))
                .with_context(|| format!("reading {}", model_dir.join(MODEL_CSV).display()))?;
            let mappings = (1..sessions.len())
                .map(|i| {
                    let p = model_dir.join(mapping_file_name(i, cfg.sessions_per_day));
                    CcaMapping64::load(&p).with_context(|| format!("reading {}", p.display()))
                })
                .collect::<Result<Vec<_>>>()?;
            let outcome = evaluate_sessions(&sessions, &model, &mappings, &cfg)?;
            let out = out.unwrap_or(model_dir);
            emit_report(&outcome.reports, &out)?;
            print_table(&outcome.reports);
        }
        Command::Report { summary, out } => {
            let reports = read_summary(&summary).with_context(|| format!("reading {}", summary.display()))?;
            emit_report(&reports, &out)?;
            print_table(&reports);
        }
        Command::RunExperiment { opts, data, out } => {
            let (cfg, outcome) = match data {
                Some(dir) => {
                    let (cfg, sessions) = opts.resolve_for_dataset(&dir)?;
                    let outcome = run_on_sessions(&sessions, &cfg)?;
                    (cfg, outcome)
                }
                None => {
                    let cfg = opts.resolve()?;
                    let outcome = run_experiment(&cfg)?;
                    (cfg, outcome)
                }
            };
            write_outputs(&outcome, &cfg, &out)?;
            print_table(&outcome.reports);
            println!("reference accuracy {:.4}; outputs in {}", outcome.acc_reference, out.join(SUMMARY_CSV).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
