//! The `phd` binary: generate synthetic datasets, train the rankers, learn the fusion
//! weight, evaluate scorers and run the history-size ablation.
//!
//! All subcommands exit 0 on success; on failure a machine-readable error
//! record is printed to stderr as a single JSON line and the exit code is
//! nonzero. `PHD_THREADS` caps evaluation parallelism.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use phd_core::ablation::{ablation_csv, history_ablation};
use phd_core::dataset::manifest::load_manifest;
use phd_core::dataset::synth::{generate_synthetic, SynthConfig};
use phd_core::dataset::Split;
use phd_core::fusion::{FusionReport, FusedScorer, FusionWeights};
use phd_core::metrics::{evaluate, EvalReport};
use phd_core::scorers::{
    FnnScorer, HighlightSvmScorer, MaxSimilarityScorer, RandomScorer, ResidualScorer, Scorer,
    SvmDScorer, VideoMmrScorer,
};
use phd_core::svm::RankSvmParams;
use phd_core::sweep::{hyperparameter_search, SweepSpace};
use phd_core::train::{
    learn_fusion, load_residual_bundle, save_residual_bundle, train_fnn, train_highlight_svm,
    train_residual_models, train_svm_d, FnnTrainSpec, TrainConfig,
};
use phd_core::util::fnv1a64;
use phd_core::vecmath::DistancePad;
use phd_core::{load_fnn, load_svm, save_fnn, save_svm, Dataset, FnnVariant};

#[derive(Parser)]
#[command(name = "phd", version, about = "Personalized highlight detection harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    PhdCa,
    Generic,
    PhdCaEd,
    SvmD,
    HighlightSvm,
    Residual,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Val,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Val => Split::Val,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (manifest + feature store).
    GenSynth {
        /// JSON file with the generator configuration.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Output directory for manifest.jsonl and features/.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on the train split of a dataset.
    Train {
        /// Dataset directory (as written by gen-synth).
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        model: ModelKind,
        /// JSON training configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Checkpoint output. For neural models this is the
        /// best-validation-loss checkpoint.
        #[arg(long)]
        out: PathBuf,
        /// Also write the final-epoch checkpoint here (neural models).
        #[arg(long)]
        final_out: Option<PathBuf>,
        /// Generic FNN checkpoint; required by the residual model.
        #[arg(long)]
        generic: Option<PathBuf>,
    },
    /// Learn the late-fusion weight on the validation split.
    Fuse {
        /// FNN checkpoint (any history-conditioned variant).
        #[arg(long)]
        fnn: PathBuf,
        /// Distance-SVM checkpoint.
        #[arg(long)]
        svm: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Fusion report (JSON, key "fusion_omega").
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 17)]
        seed: u64,
    },
    /// Evaluate a scorer on a split and write the report.
    Eval {
        #[arg(long)]
        data: PathBuf,
        /// Scorer spec, e.g. `random:seed=7`, `max-sim`, `v-mmr`,
        /// `fnn:model.fnn`, `svm-d:model.svm`, `highlight-svm:model.svm`,
        /// `residual:bundle.phdres`,
        /// `fused:model.fnn,model.svm,report=fuse.json`.
        #[arg(long)]
        scorer: String,
        #[arg(long, value_enum)]
        split: SplitArg,
        /// JSON report output.
        #[arg(long)]
        report: PathBuf,
        /// Optional CSV with the per-video rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Random/grid hyperparameter search over FNN configurations.
    Sweep {
        /// JSON sweep space.
        #[arg(long)]
        space: PathBuf,
        /// Overrides the budget from the space file.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        data: PathBuf,
        /// JSON result (all trials plus the winner).
        #[arg(long)]
        out: PathBuf,
        /// Which input variant to search.
        #[arg(long, value_enum, default_value = "phd-ca")]
        model: FnnModelArg,
    },
    /// History-size ablation over one or more scorers.
    Ablate {
        #[arg(long)]
        data: PathBuf,
        /// Scorer specs (repeatable).
        #[arg(long, required = true)]
        scorer: Vec<String>,
        /// Comma-separated history sizes, e.g. `0,1,2,4,8,20`.
        #[arg(long)]
        k: String,
        /// CSV output, one row per (scorer, k).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FnnModelArg {
    PhdCa,
    Generic,
    PhdCaEd,
}

impl From<FnnModelArg> for FnnVariant {
    fn from(m: FnnModelArg) -> FnnVariant {
        match m {
            FnnModelArg::PhdCa => FnnVariant::PhdCa,
            FnnModelArg::Generic => FnnVariant::Generic,
            FnnModelArg::PhdCaEd => FnnVariant::PhdCaEd,
        }
    }
}

/// The JSON training configuration: optimizer settings plus architecture
/// and linear-solver knobs, all optional.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(default)]
struct TrainFileConfig {
    #[serde(flatten)]
    train: TrainConfig,
    hidden_sizes: Option<Vec<usize>>,
    activation: Option<phd_core::Activation>,
    dropout_input: Option<f64>,
    dropout_hidden: Option<f64>,
    batch_norm: Option<bool>,
    distance_k: Option<usize>,
    distance_pad: Option<DistancePad>,
    svm_c: Option<f64>,
    svm_tol: Option<f64>,
    svm_max_iters: Option<usize>,
}

impl TrainFileConfig {
    fn spec(&self, variant: FnnVariant) -> FnnTrainSpec {
        let default = FnnTrainSpec::default();
        FnnTrainSpec {
            variant,
            hidden_sizes: self.hidden_sizes.clone().unwrap_or(default.hidden_sizes),
            activation: self.activation.unwrap_or(default.activation),
            dropout_input: self.dropout_input.unwrap_or(default.dropout_input),
            dropout_hidden: self.dropout_hidden.unwrap_or(default.dropout_hidden),
            batch_norm: self.batch_norm.unwrap_or(default.batch_norm),
            distance_k: self.distance_k.unwrap_or(default.distance_k),
            distance_pad: self.distance_pad.unwrap_or(default.distance_pad),
        }
    }

    fn svm_params(&self) -> RankSvmParams {
        let default = RankSvmParams::default();
        RankSvmParams {
            c: self.svm_c.unwrap_or(default.c),
            tol: self.svm_tol.unwrap_or(default.tol),
            max_iters: self.svm_max_iters.unwrap_or(default.max_iters),
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_data(dir: &Path) -> Result<Dataset> {
    let manifest = dir.join("manifest.jsonl");
    Ok(load_manifest(&manifest, dir)?)
}

/// Parse a scorer spec into a boxed scorer plus report metadata.
type ScorerWithMeta = (Box<dyn Scorer>, Option<u64>, Option<f64>);

fn build_scorer(spec: &str) -> Result<ScorerWithMeta> {
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k, r),
        None => (spec, ""),
    };
    let pad_of = |opts: &[&str]| {
        if opts.contains(&"pad=max") {
            DistancePad::MaxDistance
        } else {
            DistancePad::Zero
        }
    };
    match kind {
        "random" => {
            let mut seed = 0u64;
            for opt in rest.split(',').filter(|s| !s.is_empty()) {
                match opt.strip_prefix("seed=") {
                    Some(v) => seed = v.parse().context("random seed")?,
                    None => bail!("unknown random option '{opt}'"),
                }
            }
            Ok((Box::new(RandomScorer { seed }), Some(seed), None))
        }
        "max-sim" => Ok((Box::new(MaxSimilarityScorer), None, None)),
        "v-mmr" => Ok((Box::new(VideoMmrScorer), None, None)),
        "fnn" => {
            let parts: Vec<&str> = rest.split(',').collect();
            let model = load_fnn(Path::new(parts[0]))?;
            let pad = pad_of(&parts[1..]);
            Ok((Box::new(FnnScorer::with_pad(model, pad)), None, None))
        }
        "svm-d" => {
            let parts: Vec<&str> = rest.split(',').collect();
            let model = load_svm(Path::new(parts[0]))?;
            let pad = pad_of(&parts[1..]);
            Ok((Box::new(SvmDScorer { model, pad }), None, None))
        }
        "highlight-svm" => {
            let model = load_svm(Path::new(rest))?;
            Ok((Box::new(HighlightSvmScorer { model }), None, None))
        }
        "residual" => {
            let (bundle, generic) = load_residual_bundle(Path::new(rest))?;
            Ok((
                Box::new(ResidualScorer {
                    generic,
                    models: bundle.models,
                }),
                None,
                None,
            ))
        }
        "fused" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() < 3 {
                bail!("fused spec needs `fused:<fnn>,<svm>,omega=<w>|report=<json>`");
            }
            let fnn = load_fnn(Path::new(parts[0]))?;
            let svm = load_svm(Path::new(parts[1]))?;
            let mut omega: Option<f64> = None;
            let mut pad = DistancePad::Zero;
            for opt in &parts[2..] {
                if let Some(v) = opt.strip_prefix("omega=") {
                    omega = Some(v.parse().context("omega value")?);
                } else if let Some(p) = opt.strip_prefix("report=") {
                    let report: FusionReport = read_json(Path::new(p))?;
                    omega = Some(report.fusion_omega);
                } else if *opt == "pad=max" {
                    pad = DistancePad::MaxDistance;
                } else {
                    bail!("unknown fused option '{opt}'");
                }
            }
            let omega = omega.context("fused spec needs omega= or report=")?;
            Ok((
                Box::new(FusedScorer::with_pad(fnn, svm, FusionWeights { omega }, pad)),
                None,
                Some(omega),
            ))
        }
        other => bail!("unknown scorer kind '{other}'"),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSynth { config, seed, out } => {
            let config: SynthConfig = read_json(&config)?;
            let output = generate_synthetic(&config, seed, &out)?;
            let counts = output.dataset.split_counts();
            log::info!(
                "wrote {} users ({} train / {} val / {} test) to {}",
                output.dataset.users.len(),
                counts.train,
                counts.val,
                counts.test,
                out.display()
            );
            println!(
                "{}",
                serde_json::json!({
                    "out": out,
                    "users": output.dataset.users.len(),
                    "feature_dim": output.dataset.feature_dim,
                })
            );
        }
        Command::Train {
            data,
            model,
            config,
            out,
            final_out,
            generic,
        } => {
            let dataset = load_data(&data)?;
            let file_config: TrainFileConfig = match config {
                Some(path) => read_json(&path)?,
                None => TrainFileConfig::default(),
            };
            let tc = file_config.train;
            match model {
                ModelKind::PhdCa | ModelKind::Generic | ModelKind::PhdCaEd => {
                    let variant = match model {
                        ModelKind::PhdCa => FnnVariant::PhdCa,
                        ModelKind::Generic => FnnVariant::Generic,
                        _ => FnnVariant::PhdCaEd,
                    };
                    let outcome = train_fnn(&dataset, &file_config.spec(variant), &tc)?;
                    save_fnn(&outcome.best_model, &out)?;
                    if let Some(final_path) = final_out {
                        save_fnn(&outcome.final_model, &final_path)?;
                    }
                    log::info!(
                        "saved best checkpoint (epoch {}) to {}",
                        outcome.best_epoch,
                        out.display()
                    );
                }
                ModelKind::SvmD => {
                    let spec = file_config.spec(FnnVariant::PhdCaEd);
                    let model = train_svm_d(
                        &dataset,
                        spec.distance_k,
                        spec.distance_pad,
                        file_config.svm_params(),
                        &tc,
                    )?;
                    save_svm(&model, &out)?;
                }
                ModelKind::HighlightSvm => {
                    let model = train_highlight_svm(&dataset, file_config.svm_params(), &tc)?;
                    save_svm(&model, &out)?;
                }
                ModelKind::Residual => {
                    let generic_path =
                        generic.context("--model residual requires --generic <fnn checkpoint>")?;
                    let generic_model = load_fnn(&generic_path)?;
                    let bundle = train_residual_models(
                        &dataset,
                        &generic_model,
                        file_config.svm_params(),
                        &tc,
                    )?;
                    save_residual_bundle(&out, &bundle, &generic_model)?;
                    log::info!("saved {} per-user models", bundle.models.len());
                }
            }
        }
        Command::Fuse {
            fnn,
            svm,
            data,
            out,
            seed,
        } => {
            let dataset = load_data(&data)?;
            let fnn_model = load_fnn(&fnn)?;
            let svm_model = load_svm(&svm)?;
            let tc = TrainConfig {
                seed,
                ..Default::default()
            };
            let outcome = learn_fusion(&dataset, &fnn_model, &svm_model, DistancePad::Zero, &tc)?;
            let report = FusionReport::from(&outcome);
            fs::write(&out, serde_json::to_string_pretty(&report)?)
                .with_context(|| format!("writing {}", out.display()))?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Command::Eval {
            data,
            scorer,
            split,
            report,
            csv,
        } => {
            let dataset = load_data(&data)?;
            let (boxed, seed, fusion_omega) = build_scorer(&scorer)?;
            let mut eval_report: EvalReport = evaluate(&dataset, boxed.as_ref(), split.into())?;
            eval_report.metadata.seed = seed;
            eval_report.metadata.fusion_omega = fusion_omega;
            eval_report.metadata.config_hash = Some(format!("{:016x}", fnv1a64(scorer.as_bytes())));
            fs::write(&report, serde_json::to_string_pretty(&eval_report)?)
                .with_context(|| format!("writing {}", report.display()))?;
            if let Some(csv_path) = csv {
                fs::write(&csv_path, eval_report.rows_csv())
                    .with_context(|| format!("writing {}", csv_path.display()))?;
            }
            println!(
                "{}",
                serde_json::json!({
                    "scorer": eval_report.scorer,
                    "split": eval_report.split,
                    "map": eval_report.metrics.map,
                    "nmsd": eval_report.metrics.nmsd,
                    "recall_at_5": eval_report.metrics.recall_at_5,
                    "n_videos": eval_report.n_videos,
                })
            );
        }
        Command::Sweep {
            space,
            budget,
            data,
            out,
            model,
        } => {
            let mut space: SweepSpace = read_json(&space)?;
            if let Some(b) = budget {
                space.budget = b;
            }
            let dataset = load_data(&data)?;
            let result =
                hyperparameter_search(&space, &dataset, model.into(), &TrainConfig::default())?;
            fs::write(&out, serde_json::to_string_pretty(&result)?)
                .with_context(|| format!("writing {}", out.display()))?;
            let winner = result.winner_trial();
            println!(
                "{}",
                serde_json::json!({
                    "winner": result.winner,
                    "val_map": winner.val_map,
                    "hidden_sizes": winner.spec.hidden_sizes,
                    "learning_rate": winner.config.learning_rate,
                })
            );
        }
        Command::Ablate {
            data,
            scorer,
            k,
            out,
            split,
        } => {
            let dataset = load_data(&data)?;
            let k_values: Vec<usize> = k
                .split(',')
                .map(|v| v.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .context("parsing --k")?;
            let mut scorers: Vec<Box<dyn Scorer>> = Vec::new();
            for spec in &scorer {
                scorers.push(build_scorer(spec)?.0);
            }
            let refs: Vec<&dyn Scorer> = scorers.iter().map(|s| s.as_ref()).collect();
            let rows = history_ablation(&dataset, &refs, &k_values, split.into())?;
            fs::write(&out, ablation_csv(&rows))
                .with_context(|| format!("writing {}", out.display()))?;
            println!("{}", serde_json::json!({ "rows": rows.len(), "out": out }));
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!(
            "{}",
            serde_json::json!({ "error": format!("{err:#}") })
        );
        std::process::exit(1);
    }
}
