//! Hyperparameter search: grid choices over the discrete axes, random draws
//! over the continuous ones, trials selected by validation mAP.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Split};
use crate::error::{PhdError, Result};
use crate::fnn::{Activation, FnnVariant};
use crate::metrics::evaluate;
use crate::scorers::FnnScorer;
use crate::train::{train_fnn, FnnTrainSpec, TrainConfig};
use crate::util::derive_seed_idx;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpace {
    /// Hidden-layer layouts to choose from (1-3 layers, sizes <= 512,
    /// non-increasing).
    pub architectures: Vec<Vec<usize>>,
    pub activations: Vec<Activation>,
    pub batch_norm_options: Vec<bool>,
    pub dropout_input_range: (f64, f64),
    pub dropout_hidden_range: (f64, f64),
    /// Sampled log-uniformly.
    pub learning_rate_range: (f64, f64),
    /// Sampled log-uniformly.
    pub weight_decay_range: (f64, f64),
    pub budget: usize,
    pub seed: u64,
}

impl Default for SweepSpace {
    fn default() -> Self {
        SweepSpace {
            architectures: vec![vec![512], vec![256], vec![512, 64], vec![256, 64], vec![512, 128, 32]],
            activations: vec![Activation::Relu, Activation::Selu],
            batch_norm_options: vec![false, true],
            dropout_input_range: (0.5, 0.8),
            dropout_hidden_range: (0.1, 0.5),
            learning_rate_range: (1e-4, 1e-2),
            weight_decay_range: (1e-3, 2.0),
            budget: 8,
            seed: 1,
        }
    }
}

impl SweepSpace {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(PhdError::InvalidConfig("sweep budget must be >= 1".into()));
        }
        if self.architectures.is_empty()
            || self.activations.is_empty()
            || self.batch_norm_options.is_empty()
        {
            return Err(PhdError::InvalidConfig("empty sweep axis".into()));
        }
        for sizes in &self.architectures {
            if sizes.is_empty() || sizes.len() > 3 {
                return Err(PhdError::InvalidConfig(
                    "architectures must have 1 to 3 hidden layers".into(),
                ));
            }
            if sizes.iter().any(|&s| s == 0 || s > 512) {
                return Err(PhdError::InvalidConfig(
                    "hidden sizes must lie in 1..=512".into(),
                ));
            }
            if sizes.windows(2).any(|w| w[1] > w[0]) {
                return Err(PhdError::InvalidConfig(
                    "hidden sizes must be non-increasing".into(),
                ));
            }
        }
        let range_ok = |(lo, hi): (f64, f64)| lo > 0.0 && lo <= hi && hi.is_finite();
        if !range_ok(self.learning_rate_range) || !range_ok(self.weight_decay_range) {
            return Err(PhdError::InvalidConfig("bad continuous range".into()));
        }
        let within = |(lo, hi): (f64, f64), (a, b): (f64, f64)| lo >= a && hi <= b;
        if !within(self.dropout_input_range, (0.5, 0.8))
            || !within(self.dropout_hidden_range, (0.1, 0.5))
        {
            return Err(PhdError::InvalidConfig(
                "dropout ranges must stay inside the searched intervals".into(),
            ));
        }
        if !within(self.learning_rate_range, (1e-4, 1e-2))
            || !within(self.weight_decay_range, (1e-3, 2.0))
        {
            return Err(PhdError::InvalidConfig(
                "learning rate and weight decay ranges must stay inside the searched intervals"
                    .into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTrial {
    pub index: usize,
    pub spec: FnnTrainSpec,
    pub config: TrainConfig,
    pub val_map: f64,
    pub final_val_loss: Option<f64>,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub trials: Vec<SweepTrial>,
    /// Index into `trials` of the winner by validation mAP.
    pub winner: usize,
}

impl SweepResult {
    pub fn winner_trial(&self) -> &SweepTrial {
        &self.trials[self.winner]
    }
}

fn sample_trial(
    space: &SweepSpace,
    variant: FnnVariant,
    base: &TrainConfig,
    index: usize,
) -> (FnnTrainSpec, TrainConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed_idx(space.seed, index as u64));
    let pick = |rng: &mut ChaCha8Rng, n: usize| rng.gen_range(0..n);
    let uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
        if lo == hi {
            lo
        } else {
            rng.gen_range(lo..hi)
        }
    };
    let log_uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
        if lo == hi {
            lo
        } else {
            (rng.gen_range(lo.ln()..hi.ln())).exp()
        }
    };
    let spec = FnnTrainSpec {
        variant,
        hidden_sizes: space.architectures[pick(&mut rng, space.architectures.len())].clone(),
        activation: space.activations[pick(&mut rng, space.activations.len())],
        dropout_input: uniform(&mut rng, space.dropout_input_range),
        dropout_hidden: uniform(&mut rng, space.dropout_hidden_range),
        batch_norm: space.batch_norm_options[pick(&mut rng, space.batch_norm_options.len())],
        ..Default::default()
    };
    let config = TrainConfig {
        learning_rate: log_uniform(&mut rng, space.learning_rate_range),
        weight_decay: log_uniform(&mut rng, space.weight_decay_range),
        seed: derive_seed_idx(space.seed, 0x5eed_0000 + index as u64),
        ..*base
    };
    (spec, config)
}

/// Run `budget` trials and pick the best configuration by validation mAP
/// of each trial's best-validation-loss checkpoint. Ties go to the earliest
/// trial, so the result is independent of scheduling.
pub fn hyperparameter_search(
    space: &SweepSpace,
    dataset: &Dataset,
    variant: FnnVariant,
    base: &TrainConfig,
) -> Result<SweepResult> {
    space.validate()?;
    if dataset.users_in(Split::Val).next().is_none() {
        return Err(PhdError::InvalidData(
            "hyperparameter search needs a validation split".into(),
        ));
    }
    let trials: Vec<Result<SweepTrial>> = (0..space.budget)
        .into_par_iter()
        .map(|index| {
            let (spec, config) = sample_trial(space, variant, base, index);
            let outcome = train_fnn(dataset, &spec, &config)?;
            let report = evaluate(dataset, &FnnScorer::new(outcome.best_model), Split::Val)?;
            log::info!(
                "sweep trial {index}: arch {:?} {:?} bn={} lr={:.2e} wd={:.2e} -> val mAP {:.4}",
                spec.hidden_sizes,
                spec.activation,
                spec.batch_norm,
                config.learning_rate,
                config.weight_decay,
                report.metrics.map
            );
            Ok(SweepTrial {
                index,
                spec,
                config,
                val_map: report.metrics.map,
                final_val_loss: outcome.epochs.last().and_then(|e| e.val_loss),
                best_epoch: outcome.best_epoch,
            })
        })
        .collect();
    let trials: Vec<SweepTrial> = trials.into_iter().collect::<Result<_>>()?;
    let winner = trials
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.val_map
                .partial_cmp(&b.val_map)
                .expect("finite mAP")
                .then(ib.cmp(ia))
        })
        .map(|(i, _)| i)
        .expect("budget >= 1");
    Ok(SweepResult { trials, winner })
}
