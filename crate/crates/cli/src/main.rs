use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deepokan::config::presets;
use deepokan::experiment::{
    evaluate, generate_dataset, prepare_dataset, run_experiment, train_model, write_evaluation, CHECKPOINT_FILE,
    CONFIG_FILE, DATASET_FILE,
};
use deepokan::persist::{load_checkpoint, save_checkpoint, save_dataset};
use deepokan::report::{self, describe_run_dir};
use deepokan::{Error, ExperimentConfig, Model, Result};

#[derive(Parser)]
#[command(name = "deepokan", version, about = "Train and compare RBF-KAN operators against MLP baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured dataset and save it as dataset.dokn
    Generate(Common),
    /// Train a model and save loss.csv and checkpoint.dokn
    Train {
        #[command(flatten)]
        common: Common,
        /// Use this dataset file instead of generating one
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on the test split and write error CSVs
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Defaults to <out>/checkpoint.dokn
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Print a summary of a finished run directory
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate, train and evaluate in one go
    Run(Common),
    /// Print a built-in configuration, or list them
    Preset {
        name: Option<String>,
        #[arg(long)]
        list: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the weight-initialization and shuffling seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the data-generation seed
    #[arg(long)]
    data_seed: Option<u64>,
    /// Overrides the output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.experiment.seed = s;
        }
        if let Some(s) = self.data_seed {
            cfg.data.seed = s;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        Ok(cfg)
    }
}

fn announce(cfg: &ExperimentConfig) -> Result<()> {
    let model = Model::build(cfg)?;
    println!("{:?} / {:?}: {} trainable parameters", cfg.kind(), cfg.family(), model.param_count());
    Ok(())
}

fn with_dataset(mut cfg: ExperimentConfig, dataset: &Option<PathBuf>) -> ExperimentConfig {
    if let Some(p) = dataset {
        cfg.data.dataset = Some(p.clone());
    }
    cfg
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(common) => {
            let cfg = common.load()?;
            let ds = generate_dataset(&cfg)?;
            let path = cfg.output.dir.join(DATASET_FILE);
            save_dataset(&ds, &path)?;
            println!(
                "{} samples ({} train / {} test) written to {}",
                ds.num_samples(),
                ds.train_indices().len(),
                ds.test_indices().len(),
                path.display()
            );
        }
        Command::Train { common, dataset } => {
            let cfg = with_dataset(common.load()?, &dataset);
            announce(&cfg)?;
            let ds = prepare_dataset(&cfg)?;
            let dir = &cfg.output.dir;
            report::write_text(dir, CONFIG_FILE, &cfg.to_toml())?;
            let (ck, tr) = train_model(&cfg, &ds)?;
            report::write_text(dir, report::LOSS_CSV, &report::loss_csv(&tr.history))?;
            save_checkpoint(&ck, &dir.join(CHECKPOINT_FILE))?;
            if let Some(reason) = tr.aborted {
                return Err(Error::Diverged { epoch: tr.history.len(), reason });
            }
            if let Some(last) = tr.history.last() {
                println!("final rmsd {}", last.rmsd);
            }
        }
        Command::Evaluate { common, dataset, checkpoint } => {
            let cfg = with_dataset(common.load()?, &dataset);
            let path = checkpoint.unwrap_or_else(|| cfg.output.dir.join(CHECKPOINT_FILE));
            let ck = load_checkpoint(&path)?;
            let ds = prepare_dataset(&cfg)?;
            let eval = evaluate(&cfg, &ds, &ck)?;
            write_evaluation(&cfg.output.dir, &eval)?;
            print_summary(&eval.summary);
        }
        Command::Report { out } => print!("{}", describe_run_dir(&out)?),
        Command::Run(common) => {
            let cfg = common.load()?;
            announce(&cfg)?;
            let r = run_experiment(&cfg)?;
            if let Some(rmsd) = r.final_rmsd() {
                println!("final rmsd {rmsd}");
            }
            print_summary(&r.evaluation.summary);
            println!("wall clock {:.1}s, artifacts in {}", r.wall_clock.as_secs_f64(), cfg.output.dir.display());
        }
        Command::Preset { name, list } => match name {
            Some(name) if !list => {
                let (_, cfg) = presets()
                    .into_iter()
                    .find(|(n, _)| *n == name)
                    .ok_or_else(|| Error::Config(format!("unknown preset `{name}`; see --list")))?;
                print!("{}", cfg.to_toml());
            }
            _ => presets().iter().for_each(|(n, _)| println!("{n}")),
        },
    }
    Ok(())
}

fn print_summary(s: &deepokan::eval::ErrorSummary) {
    println!(
        "test L2 error: mean {:.6} std {:.6} median {:.6} p25 {:.6} p75 {:.6}",
        s.mean, s.std_deviation, s.median, s.p25, s.p75
    );
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
