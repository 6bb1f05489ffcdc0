//! Command-line front end. `run` returns the process exit code:
//! 0 success, 1 a check failed, 2 bad usage, config or input.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use kanhar_core::dataset::LabeledDataset;
use kanhar_core::features::FEATURE_COUNT;
use kanhar_core::kan::KanNetwork;
use kanhar_core::metrics::{evaluate, render_report};
use kanhar_core::optim::{grad_check_against, loss_and_gradients};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::PipelineConfig;
use crate::formats::{self, Checkpoint};
use crate::pipeline::{self, PreparedFeatures};

#[derive(Debug, Parser)]
#[command(
    name = "kanhar",
    version,
    about = "Activity recognition with Kolmogorov-Arnold networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Window recordings, extract and standardize features.
    Features(Common),
    /// Train a network and write a checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        /// Read features written by `features` instead of recomputing them.
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Score a checkpoint on the test subjects.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Compare backprop gradients with finite differences on a small random network.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        /// Corrupt one analytic gradient entry; the check must then fail.
        #[arg(long)]
        inject_fault: bool,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Write a synthetic recording tree in the on-disk dataset layout.
    Synth(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, overriding `out_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `section.key=value`, repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

enum Outcome {
    Ok,
    CheckFailed,
}

impl Common {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p, &self.overrides)?,
            None => PipelineConfig::from_toml_str("", &self.overrides)?,
        };
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn prepare_out(cfg: &PipelineConfig, command: &str) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    let path = cfg.out_dir.join(format!("{command}_config.toml"));
    fs::write(&path, cfg.to_toml()?).with_context(|| format!("cannot write {}", path.display()))
}

/// Parses arguments, runs the command and maps the result to an exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::CheckFailed) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Features(c) => features_cmd(&c.resolve()?),
        Command::Train { common, features } => train_cmd(&common.resolve()?, features.as_deref()),
        Command::Eval {
            common,
            checkpoint,
            features,
        } => eval_cmd(&common.resolve()?, &checkpoint, features.as_deref()),
        Command::Gradcheck {
            common,
            inject_fault,
            tolerance,
        } => gradcheck_cmd(&common.resolve()?, inject_fault, tolerance),
        Command::Synth(c) => synth_cmd(&c.resolve()?),
    }
}

fn print_counts(label: &str, counts: &[usize], names: &[&str]) {
    let parts: Vec<String> = names.iter().zip(counts).map(|(n, c)| format!("{n}={c}")).collect();
    println!(
        "{label}: {} windows ({})",
        counts.iter().sum::<usize>(),
        parts.join(", ")
    );
}

fn features_cmd(cfg: &PipelineConfig) -> Result<Outcome> {
    let prepared = pipeline::prepare_features(cfg)?;
    prepare_out(cfg, "features")?;
    let out = &cfg.out_dir;
    formats::write_features(&out.join("train_features.csv"), &prepared.train)?;
    formats::write_features(&out.join("test_features.csv"), &prepared.test)?;
    formats::write_standardizer(&out.join("standardizer.csv"), &prepared.standardizer)?;
    let names = pipeline::class_names(cfg);
    print_counts("train", &pipeline::class_counts(&prepared.train, names.len()), &names);
    print_counts("test", &pipeline::class_counts(&prepared.test, names.len()), &names);
    Ok(Outcome::Ok)
}

fn load_or_prepare(cfg: &PipelineConfig, features: Option<&Path>) -> Result<PreparedFeatures> {
    match features {
        Some(dir) => Ok(PreparedFeatures {
            train: formats::read_features(&dir.join("train_features.csv"))?,
            test: formats::read_features(&dir.join("test_features.csv"))?,
            standardizer: formats::read_standardizer(&dir.join("standardizer.csv"))?,
        }),
        None => pipeline::prepare_features(cfg),
    }
}

fn check_labels(data: &LabeledDataset, classes: usize, what: &str) -> Result<()> {
    if let Some(&bad) = data.labels.iter().find(|&&l| l >= classes) {
        bail!("{what} contains class index {bad} but the model has {classes} outputs");
    }
    Ok(())
}

fn train_cmd(cfg: &PipelineConfig, features: Option<&Path>) -> Result<Outcome> {
    let prepared = load_or_prepare(cfg, features)?;
    let train_set = prepared.train_set();
    ensure!(!train_set.is_empty(), "no training windows");
    ensure!(
        train_set.dim() == FEATURE_COUNT,
        "training features have {} columns, expected {FEATURE_COUNT}",
        train_set.dim()
    );
    let classes = cfg.class_count();
    check_labels(&train_set, classes, "training data")?;
    prepare_out(cfg, "train")?;

    let mut net = pipeline::build_network(cfg)?;
    info!("network {:?}, {} parameters", net.dims(), net.parameter_count());
    let every = cfg.train.checkpoint_every;
    let seed = cfg.seed;
    let mut save_err = None;
    let history = pipeline::train_network(cfg, &mut net, &train_set, |rec, n| {
        info!(
            "{} epoch {}: loss {:.6} acc {:.4}",
            rec.phase, rec.epoch, rec.mean_loss, rec.train_accuracy
        );
        if every > 0 && rec.epoch % every == 0 && save_err.is_none() {
            let path = cfg.out_dir.join(format!("checkpoint_epoch_{}.json", rec.epoch));
            if let Err(e) = Checkpoint::from_network(n, seed).save(&path) {
                save_err = Some(e);
            }
        }
    })?;
    if let Some(e) = save_err {
        return Err(e);
    }
    Checkpoint::from_network(&net, seed).save(&cfg.out_dir.join("checkpoint.json"))?;
    formats::write_history(&cfg.out_dir.join("history.csv"), &history)?;
    formats::write_standardizer(&cfg.out_dir.join("standardizer.csv"), &prepared.standardizer)?;

    match history.last() {
        Some(last) => println!(
            "final train loss {:.6}, train accuracy {:.4}",
            last.mean_loss, last.train_accuracy
        ),
        None => println!("no epochs run"),
    }
    let test_set = prepared.test_set();
    if !test_set.is_empty() {
        check_labels(&test_set, classes, "test data")?;
        let report = evaluate(&net, &test_set)?;
        println!("test accuracy {:.4} on {} windows", report.accuracy, test_set.len());
    }
    Ok(Outcome::Ok)
}

fn eval_cmd(cfg: &PipelineConfig, checkpoint: &Path, features: Option<&Path>) -> Result<Outcome> {
    let net = Checkpoint::load(checkpoint)?.to_network()?;
    let classes = cfg.class_count();
    ensure!(
        net.input_dim() == FEATURE_COUNT,
        "checkpoint expects {} inputs but features have {FEATURE_COUNT} columns",
        net.input_dim()
    );
    ensure!(
        net.output_dim() == classes,
        "checkpoint has {} outputs but the config describes {classes} classes",
        net.output_dim()
    );
    let prepared = load_or_prepare(cfg, features)?;
    let test_set = prepared.test_set();
    ensure!(!test_set.is_empty(), "no test windows");
    check_labels(&test_set, classes, "test data")?;
    prepare_out(cfg, "eval")?;
    let report = evaluate(&net, &test_set)?;
    let rendered = render_report(&report, &pipeline::class_names(cfg))?;
    fs::write(cfg.out_dir.join("report.txt"), &rendered.text)?;
    fs::write(cfg.out_dir.join("metrics.csv"), &rendered.csv)?;
    print!("{}", rendered.text);
    Ok(Outcome::Ok)
}

/// Random network with every parameter jittered, so that gates and weights
/// are not all at their initial values of one.
pub fn gradcheck_network(cfg: &PipelineConfig) -> Result<(KanNetwork, Vec<f64>, usize)> {
    let dims = &cfg.gradcheck.dims;
    ensure!(dims.len() >= 2, "gradcheck.dims needs at least two entries");
    let seed = cfg.require_seed()?;
    let mut net_cfg = cfg.network_config(0, 0);
    net_cfg.dims = dims.clone();
    let mut net = KanNetwork::new(&net_cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for layer in net.layers_mut() {
        for p in layer.params_mut() {
            *p += rng.gen_range(-0.3..0.3);
        }
    }
    let (lo, hi) = net.layers()[0].grid().range();
    let sample: Vec<f64> = (0..dims[0]).map(|_| rng.gen_range(0.8 * lo..0.8 * hi)).collect();
    let label = rng.gen_range(0..net.output_dim());
    Ok((net, sample, label))
}

fn gradcheck_cmd(cfg: &PipelineConfig, inject_fault: bool, tolerance: Option<f64>) -> Result<Outcome> {
    let tolerance = tolerance.unwrap_or(cfg.gradcheck.tolerance);
    let (net, sample, label) = gradcheck_network(cfg)?;
    let (_, mut grads) = loss_and_gradients(&net, &sample, label)?;
    if inject_fault {
        let g = &mut grads.layers[0][0];
        *g += 0.1 * g.abs().max(1.0);
    }
    let report = grad_check_against(&net, &sample, label, cfg.gradcheck.step, tolerance, &grads)?;
    prepare_out(cfg, "gradcheck")?;
    println!(
        "checked {} parameters of {:?}: max relative error {:.3e}, mean {:.3e}, worst at layer {} index {}",
        report.checked,
        net.dims(),
        report.max_rel_error,
        report.mean_rel_error,
        report.worst.0,
        report.worst.1
    );
    if report.passed() {
        println!("PASS (tolerance {tolerance:e})");
        Ok(Outcome::Ok)
    } else {
        println!("FAIL (tolerance {tolerance:e})");
        Ok(Outcome::CheckFailed)
    }
}

fn synth_cmd(cfg: &PipelineConfig) -> Result<Outcome> {
    let recs =
        kanhar_core::dataset::synthetic_recordings(&cfg.synthetic_config()?, cfg.synthetic.samples_per_recording)?;
    prepare_out(cfg, "synth")?;
    let root = cfg.out_dir.join("A_DeviceMotion_data");
    let written =
        crate::loader::write_recording_tree(&root, &recs).with_context(|| format!("writing {}", root.display()))?;
    println!("wrote {} recordings under {}", written.len(), root.display());
    Ok(Outcome::Ok)
}
