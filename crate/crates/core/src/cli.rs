//! The `moltr` command line.
//!
//! Exit codes: 0 on success, 2 for usage errors and invalid configuration,
//! 1 for everything else.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{generate_dataset, load_dataset, save_dataset, GeneratorConfig};
use crate::distill::{
    fuse_soft_distributions, fuse_soft_labels, inject_boost, score_dataset, self_distill_step, train_student,
    train_teacher, BoostPredicate, BoostRule, SoftLabelSet, SoftLabels, TeacherEnsemble,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_scores, serve_with_boost, EvalOptions};
use crate::model::Model;
use crate::pipeline::{run_study, ExperimentConfig, Study};

#[derive(Parser, Debug)]
#[command(
    name = "moltr",
    version,
    about = "Multi-objective ranking by teacher fusion and distillation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset.
    GenData(GenData),
    /// Train the teacher for one objective.
    TrainTeacher(TrainTeacher),
    /// Fuse teacher scores into soft labels.
    Fuse(Fuse),
    /// Add a boost to soft labels of matching items.
    InjectBoost(InjectBoost),
    /// Distill a student from soft labels and primary labels.
    TrainStudent(TrainStudent),
    /// Train the next student generation from the previous one.
    SelfDistill(SelfDistill),
    /// Score every query of a dataset.
    Score(Score),
    /// Ranking metrics of a model on a dataset.
    Eval(Eval),
    /// Distilled student against fusion, scalarized and hard-only baselines.
    StudyDistill(StudyArgs),
    /// Self-distillation chain on shifted time windows.
    StudySelf(StudyArgs),
    /// Seed-to-seed churn of hard-only and distilled students.
    StudyRepro(StudyArgs),
    /// Soft-label boost against serving-time boost at matched exposure.
    StudyBoost(StudyArgs),
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// Experiment config (JSON); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct TrainFlags {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Shuffle and init seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct GenData {
    /// Generator config, or an experiment config whose `generator` section is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    objectives: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainTeacher {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    data: PathBuf,
    /// Objective index (0 is the primary objective).
    #[arg(long)]
    objective: usize,
    #[command(flatten)]
    train: TrainFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FuseMode {
    /// Weighted sum of raw teacher scores.
    Scores,
    /// Log of the weighted mixture of teacher distributions.
    Distributions,
}

#[derive(Args, Debug)]
struct Fuse {
    #[arg(long)]
    data: PathBuf,
    /// Teacher checkpoints, one per objective, in objective order.
    #[arg(long = "teacher", required = true)]
    teachers: Vec<PathBuf>,
    /// Comma-separated fusion weights; uniform when absent.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "scores")]
    mode: FuseMode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BoostFlags {
    /// Boost established items rated at least this.
    #[arg(long, conflicts_with = "new_items")]
    rho: Option<f64>,
    /// Boost new items.
    #[arg(long = "new-items")]
    new_items: bool,
}

impl BoostFlags {
    fn predicate(&self) -> Option<BoostPredicate> {
        match (self.rho, self.new_items) {
            (Some(rho), _) => Some(BoostPredicate::RatingAtLeast { rho }),
            (None, true) => Some(BoostPredicate::IsNew),
            (None, false) => None,
        }
    }
}

#[derive(Args, Debug)]
struct InjectBoost {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    soft: PathBuf,
    #[command(flatten)]
    boost: BoostFlags,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Default)]
struct DistillFlags {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    teacher_temperature: Option<f64>,
}

#[derive(Args, Debug)]
struct TrainStudent {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    soft: PathBuf,
    #[command(flatten)]
    distill: DistillFlags,
    #[command(flatten)]
    train: TrainFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SelfDistill {
    #[command(flatten)]
    config: ConfigArg,
    /// Previous student checkpoint.
    #[arg(long)]
    prev: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    distill: DistillFlags,
    #[command(flatten)]
    train: TrainFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct Score {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// JSON Lines of `{"query_id", "scores"}`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct Eval {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[command(flatten)]
    boost: BoostFlags,
    /// Serving-time boost added to matching items before ranking.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Models per family (irreproducibility study).
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Number of generated queries.
    #[arg(long)]
    queries: Option<usize>,
    /// Epochs for teachers and students.
    #[arg(long)]
    epochs: Option<usize>,
    /// Data seed.
    #[arg(long)]
    data_seed: Option<u64>,
}

/// Config files that fail to parse are configuration errors (exit 2).
fn as_config_error(e: Error) -> Error {
    match e {
        Error::Parse { path, line, message } => Error::Config(format!("{}:{line}: {message}", path.display())),
        other => other,
    }
}

fn load_experiment(arg: &ConfigArg) -> Result<ExperimentConfig> {
    match &arg.config {
        Some(p) => ExperimentConfig::load(p).map_err(as_config_error),
        None => Ok(ExperimentConfig::default()),
    }
}

fn load_generator(path: &Path) -> Result<GeneratorConfig> {
    let parse = |e: serde_json::Error| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(parse)?;
    if value.get("generator").is_some() {
        Ok(ExperimentConfig::load(path)?.generator)
    } else {
        serde_json::from_str(&text).map_err(parse)
    }
}

fn apply_train(cfg: &mut crate::distill::TrainConfig, flags: &TrainFlags) {
    if let Some(e) = flags.epochs {
        cfg.epochs = e;
    }
    if let Some(lr) = flags.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(b) = flags.batch_size {
        cfg.batch_size = b;
    }
    if let Some(s) = flags.seed {
        *cfg = cfg.with_seed(s);
    }
}

fn distill_config(
    config: &ConfigArg,
    distill: &DistillFlags,
    train: &TrainFlags,
    m: usize,
) -> Result<crate::distill::DistillConfig> {
    let mut c = load_experiment(config)?.distill;
    if let Some(a) = distill.alpha {
        c.alpha = a;
    }
    if let Some(t) = distill.temperature {
        c.temperature = t;
    }
    if let Some(t) = distill.teacher_temperature {
        c.teacher_temperature = t;
    }
    apply_train(&mut c.train, train);
    fit_input_dim(&mut c.train.mlp.layer_dims, config, m)?;
    c.validate()?;
    Ok(c)
}

/// Without a config file the default network is resized to the dataset's width.
fn fit_input_dim(dims: &mut [usize], config: &ConfigArg, m: usize) -> Result<()> {
    if dims[0] != m {
        if config.config.is_some() {
            return Err(Error::config(format!(
                "layer_dims starts with {} but the dataset has {m} features",
                dims[0]
            )));
        }
        dims[0] = m;
    }
    Ok(())
}

fn done(what: &str, path: &Path) {
    eprintln!("wrote {what} to {}", path.display());
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenData(a) => {
            let mut g = match &a.config {
                Some(p) => load_generator(p).map_err(as_config_error)?,
                None => GeneratorConfig::default(),
            };
            if let Some(q) = a.queries {
                g.num_queries = q;
            }
            if let Some(s) = a.seed {
                g.seed = s;
            }
            if let Some(m) = a.features {
                g.m = m;
            }
            if let Some(k) = a.objectives {
                g.k = k;
                if g.label_rates.len() != k.saturating_sub(1) {
                    let r = g.label_rates.first().copied().unwrap_or(0.1);
                    g.label_rates = vec![r; k.saturating_sub(1)];
                }
            }
            let ds = generate_dataset(&g)?;
            save_dataset(&ds, &a.out)?;
            eprintln!(
                "{} queries, {} items, sha256 {}",
                ds.len(),
                ds.num_items(),
                ds.content_hash()
            );
            done("dataset", &a.out);
        }
        Command::TrainTeacher(a) => {
            let ds = load_dataset(&a.data)?;
            let mut cfg = load_experiment(&a.config)?.teacher;
            apply_train(&mut cfg, &a.train);
            fit_input_dim(&mut cfg.mlp.layer_dims, &a.config, ds.m)?;
            cfg.validate()?;
            let model = train_teacher(&ds, a.objective, &cfg)?;
            model.save(&a.out)?;
            done("teacher", &a.out);
        }
        Command::Fuse(a) => {
            let ds = load_dataset(&a.data)?;
            let models = a.teachers.iter().map(Model::load).collect::<Result<Vec<_>>>()?;
            let ens = match a.weights {
                Some(w) => TeacherEnsemble::new(models, w)?,
                None => TeacherEnsemble::uniform(models)?,
            };
            let soft = match a.mode {
                FuseMode::Scores => fuse_soft_labels(&ens, &ds)?,
                FuseMode::Distributions => fuse_soft_distributions(&ens, &ds)?,
            };
            soft.save(&a.out)?;
            done("soft labels", &a.out);
        }
        Command::InjectBoost(a) => {
            let ds = load_dataset(&a.data)?;
            let soft = SoftLabelSet::load(&a.soft)?;
            let predicate = a
                .boost
                .predicate()
                .ok_or_else(|| Error::config("inject-boost needs --rho or --new-items"))?;
            let boosted = inject_boost(
                &soft,
                &BoostRule {
                    predicate,
                    beta: a.beta,
                },
                &ds,
            )?;
            boosted.save(&a.out)?;
            done("boosted soft labels", &a.out);
        }
        Command::TrainStudent(a) => {
            let ds = load_dataset(&a.data)?;
            let soft = SoftLabelSet::load(&a.soft)?;
            let cfg = distill_config(&a.config, &a.distill, &a.train, ds.m)?;
            let model = train_student(&ds, &soft, &cfg)?;
            model.save(&a.out)?;
            done("student", &a.out);
        }
        Command::SelfDistill(a) => {
            let prev = Model::load(&a.prev)?;
            let ds = load_dataset(&a.data)?;
            let mut cfg = distill_config(&a.config, &a.distill, &a.train, ds.m)?;
            if a.config.config.is_none() {
                cfg.train.mlp.layer_dims = prev.config.layer_dims.clone();
                cfg.train.mlp.activation = prev.config.activation;
            }
            let model = self_distill_step(&prev, &ds, &cfg)?;
            model.save(&a.out)?;
            done("student", &a.out);
        }
        Command::Score(a) => {
            let model = Model::load(&a.model)?;
            let ds = load_dataset(&a.data)?;
            let scores = score_dataset(&model, &ds)?;
            let io = |e| Error::io(&a.out, e);
            let mut out = BufWriter::new(File::create(&a.out).map_err(io)?);
            for (g, scores) in ds.groups.iter().zip(scores) {
                serde_json::to_writer(
                    &mut out,
                    &SoftLabels {
                        query_id: g.query_id,
                        scores,
                    },
                )?;
                out.write_all(b"\n").map_err(io)?;
            }
            out.flush().map_err(io)?;
            done("scores", &a.out);
        }
        Command::Eval(a) => {
            let model = Model::load(&a.model)?;
            let ds = load_dataset(&a.data)?;
            let boost = a.boost.predicate();
            if a.gamma != 0.0 && boost.is_none() {
                return Err(Error::config("--gamma needs --rho or --new-items"));
            }
            let scores = match &boost {
                Some(p) => ds
                    .groups
                    .iter()
                    .map(|g| serve_with_boost(&model, g, p, a.gamma))
                    .collect::<Result<Vec<_>>>()?,
                None => score_dataset(&model, &ds)?,
            };
            let (report, _) = evaluate_scores(&ds, &scores, &EvalOptions { exposure_k: a.k, boost })?;
            let json = serde_json::to_string_pretty(&report)? + "\n";
            match &a.out {
                Some(p) => {
                    std::fs::write(p, json).map_err(|e| Error::io(p, e))?;
                    done("metrics", p);
                }
                None => print!("{json}"),
            }
        }
        Command::StudyDistill(a) => study(Study::Distill, a)?,
        Command::StudySelf(a) => study(Study::SelfDistill, a)?,
        Command::StudyRepro(a) => study(Study::Repro, a)?,
        Command::StudyBoost(a) => study(Study::Boost, a)?,
    }
    Ok(())
}

fn study(which: Study, a: StudyArgs) -> Result<()> {
    let mut cfg = load_experiment(&a.config)?;
    if let Some(s) = a.seeds {
        cfg.num_seeds = s;
    }
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    if let Some(q) = a.queries {
        cfg.generator.num_queries = q;
    }
    if let Some(e) = a.epochs {
        cfg.teacher.epochs = e;
        cfg.distill.train.epochs = e;
    }
    if let Some(s) = a.data_seed {
        cfg.generator.seed = s;
    }
    if let Some(o) = a.out {
        cfg.output_dir = Some(o);
    }
    let dir = cfg
        .output_dir
        .clone()
        .ok_or_else(|| Error::config("no output directory: pass --out or set output_dir"))?;
    let out = run_study(which, &cfg)?;
    out.write(&dir)?;
    for (k, v) in &out.report.summary {
        eprintln!("{k:45} {v:.6}");
    }
    done("report", &dir);
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        _ => 1,
    }
}

/// Runs the CLI on `argv` (program name first) and returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
