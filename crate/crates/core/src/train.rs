//! Training loop and model-fitting entry points: RMSProp with a halving
//! learning-rate schedule for the feed-forward rankers, pair assembly for
//! the linear models, per-user residual training, and fusion-weight data.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    build_history, full_history, sample_pairs, Dataset, Split, UserHistory, UserRecord,
    HISTORY_MAX_SHOTS, HISTORY_MAX_VIDEOS,
};
use crate::error::{PhdError, Result};
use crate::fnn::{
    assemble_input, batch_loss, gradients, init_fnn, Activation, FnnArchitecture, FnnGradients,
    FnnModel, FnnVariant,
};
use crate::fusion::{learn_fusion_weight, FusionOutcome, FusionPair};
use crate::scorers::FnnScorer;
use crate::svm::{
    train_rank_svm, train_residual, LinearModel, RankSvmParams, ResidualModel, ResidualPair,
};
use crate::util::{derive_seed, derive_seed_idx};
use crate::vecmath::{distance_features_padded, DistancePad};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub lr_halving_period: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub loss_margin: f64,
    /// Pairs sampled from each user's target video.
    pub pairs_per_video: usize,
    pub rmsprop: RmsPropConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 2e-3,
            weight_decay: 1e-3,
            epochs: 16,
            lr_halving_period: 4,
            batch_size: 64,
            seed: 7,
            loss_margin: 1.0,
            pairs_per_video: 5,
            rmsprop: RmsPropConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0
            || self.weight_decay <= 0.0
            || self.epochs == 0
            || self.lr_halving_period == 0
            || self.batch_size == 0
            || self.loss_margin <= 0.0
            || self.pairs_per_video == 0
            || !(0.0..1.0).contains(&self.rmsprop.rho)
            || self.rmsprop.eps <= 0.0
        {
            return Err(PhdError::InvalidConfig(
                "training config fields must be positive".into(),
            ));
        }
        if self.epochs < self.lr_halving_period {
            return Err(PhdError::InvalidConfig(
                "epochs must be at least the halving period".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RmsPropConfig {
    pub rho: f64,
    pub eps: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        RmsPropConfig {
            rho: 0.9,
            eps: 1e-8,
        }
    }
}

/// One RMSProp update of a scalar parameter, with decoupled weight decay.
/// Returns the new (parameter, state).
pub fn rmsprop_update_scalar(
    param: f64,
    grad: f64,
    state: f64,
    lr: f64,
    weight_decay: f64,
    cfg: RmsPropConfig,
) -> (f64, f64) {
    let state = cfg.rho * state + (1.0 - cfg.rho) * grad * grad;
    let param = param - lr * grad / (state.sqrt() + cfg.eps) - lr * weight_decay * param;
    (param, state)
}

/// Apply one RMSProp step to every trainable tensor of the model.
pub fn rmsprop_step(
    model: &mut FnnModel,
    grads: &FnnGradients,
    state: &mut FnnGradients,
    lr: f64,
    weight_decay: f64,
    cfg: RmsPropConfig,
) -> Result<()> {
    let apply = |p: &mut f64, g: f64, s: &mut f64| {
        let (np, ns) = rmsprop_update_scalar(*p, g, *s, lr, weight_decay, cfg);
        *p = np;
        *s = ns;
    };
    for l in 0..model.hidden.len() {
        for (p, (g, s)) in model.hidden[l]
            .w
            .iter_mut()
            .zip(grads.hidden[l].w.iter().zip(state.hidden[l].w.iter_mut()))
        {
            apply(p, *g, s);
        }
        for (p, (g, s)) in model.hidden[l]
            .b
            .iter_mut()
            .zip(grads.hidden[l].b.iter().zip(state.hidden[l].b.iter_mut()))
        {
            apply(p, *g, s);
        }
        if l < model.batch_norm.len() {
            for (p, (g, s)) in model.batch_norm[l].scale.iter_mut().zip(
                grads.batch_norm[l]
                    .scale
                    .iter()
                    .zip(state.batch_norm[l].scale.iter_mut()),
            ) {
                apply(p, *g, s);
            }
            for (p, (g, s)) in model.batch_norm[l].shift.iter_mut().zip(
                grads.batch_norm[l]
                    .shift
                    .iter()
                    .zip(state.batch_norm[l].shift.iter_mut()),
            ) {
                apply(p, *g, s);
            }
        }
    }
    for (p, (g, s)) in model
        .output
        .w
        .iter_mut()
        .zip(grads.output.w.iter().zip(state.output.w.iter_mut()))
    {
        apply(p, *g, s);
    }
    for (p, (g, s)) in model
        .output
        .b
        .iter_mut()
        .zip(grads.output.b.iter().zip(state.output.b.iter_mut()))
    {
        apply(p, *g, s);
    }
    if !model.parameters_finite() {
        return Err(PhdError::NonFinite {
            location: "parameters after rmsprop step".into(),
        });
    }
    Ok(())
}

/// Learning rate at a 0-based epoch: halved every `halving_period` epochs.
pub fn lr_at_epoch(initial: f64, epoch: usize, halving_period: usize) -> f64 {
    initial / 2f64.powi((epoch / halving_period) as i32)
}

/// Everything that defines the network being trained, minus the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FnnTrainSpec {
    pub variant: FnnVariant,
    pub hidden_sizes: Vec<usize>,
    pub activation: Activation,
    pub dropout_input: f64,
    pub dropout_hidden: f64,
    pub batch_norm: bool,
    pub distance_k: usize,
    pub distance_pad: DistancePad,
}

impl Default for FnnTrainSpec {
    fn default() -> Self {
        FnnTrainSpec {
            variant: FnnVariant::PhdCa,
            hidden_sizes: vec![512, 64],
            activation: Activation::Relu,
            dropout_input: 0.0,
            dropout_hidden: 0.0,
            batch_norm: false,
            distance_k: 20,
            distance_pad: DistancePad::Zero,
        }
    }
}

impl FnnTrainSpec {
    pub fn architecture(&self, feature_dim: usize) -> FnnArchitecture {
        FnnArchitecture {
            variant: self.variant,
            feature_dim,
            distance_k: self.distance_k,
            hidden_sizes: self.hidden_sizes.clone(),
            activation: self.activation,
            dropout_input: self.dropout_input,
            dropout_hidden: self.dropout_hidden,
            batch_norm: self.batch_norm,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

pub struct TrainOutcome {
    pub final_model: FnnModel,
    /// The checkpoint with the lowest validation loss (the final model when
    /// there is no validation split).
    pub best_model: FnnModel,
    pub best_epoch: usize,
    pub epochs: Vec<EpochLog>,
}

/// Assembled network inputs for a set of pairs.
struct PairInputs {
    pos: Array2<f64>,
    neg: Array2<f64>,
}

impl PairInputs {
    fn len(&self) -> usize {
        self.pos.nrows()
    }
}

/// The training-time history of a user, capped per the protocol.
fn training_history(user: &UserRecord, master_seed: u64) -> Result<UserHistory> {
    build_history(
        &user.user_id,
        &user.histories,
        HISTORY_MAX_VIDEOS,
        HISTORY_MAX_SHOTS,
        derive_seed(master_seed, &format!("hist:{}", user.user_id)),
    )
}

fn assemble_pair_inputs(
    dataset: &Dataset,
    split: Split,
    arch: &FnnArchitecture,
    pad: DistancePad,
    config: &TrainConfig,
) -> Result<PairInputs> {
    let mut pos_rows: Vec<Vec<f64>> = Vec::new();
    let mut neg_rows: Vec<Vec<f64>> = Vec::new();
    for user in dataset.users_in(split) {
        let history = if arch.variant.uses_history() {
            match training_history(user, config.seed) {
                Ok(h) => Some(h),
                Err(_) => {
                    log::debug!("user {} has no usable history, skipped", user.user_id);
                    continue;
                }
            }
        } else {
            None
        };
        let pairs = match sample_pairs(
            &user.user_id,
            &user.target,
            config.pairs_per_video,
            derive_seed(config.seed, &format!("pairs:{}", user.user_id)),
        ) {
            Ok(p) => p,
            Err(e) => {
                log::debug!("skipping pairs for {}: {e}", user.user_id);
                continue;
            }
        };
        for pair in pairs {
            let row_for = |idx: usize| -> Result<Vec<f64>> {
                let seg = &user.target.segments[idx];
                let distances = if arch.variant.uses_distances() {
                    let h = history.as_ref().expect("history present for this variant");
                    Some(distance_features_padded(
                        &seg.feature,
                        &h.elements,
                        arch.distance_k,
                        pad,
                    )?)
                } else {
                    None
                };
                assemble_input(
                    arch,
                    &seg.feature,
                    history.as_ref().map(|h| h.profile.as_slice()),
                    distances.as_ref().map(|d| d.values()),
                )
            };
            pos_rows.push(row_for(pair.positive)?);
            neg_rows.push(row_for(pair.negative)?);
        }
    }
    if pos_rows.is_empty() {
        return Err(PhdError::InvalidData(format!(
            "no training pairs could be assembled from split {split}"
        )));
    }
    let dim = arch.input_dim();
    let to_array = |rows: Vec<Vec<f64>>| {
        let mut arr = Array2::zeros((rows.len(), dim));
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                arr[(i, j)] = v;
            }
        }
        arr
    };
    Ok(PairInputs {
        pos: to_array(pos_rows),
        neg: to_array(neg_rows),
    })
}

/// Train a feed-forward ranker: RMSProp, the learning rate halved every
/// `lr_halving_period` epochs, losses logged per epoch. Returns the final
/// model and the best-validation-loss checkpoint.
pub fn train_fnn(dataset: &Dataset, spec: &FnnTrainSpec, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let arch = spec.architecture(dataset.feature_dim);
    arch.validate()?;

    let train = assemble_pair_inputs(dataset, Split::Train, &arch, spec.distance_pad, config)?;
    let val = if dataset.users_in(Split::Val).next().is_some() {
        Some(assemble_pair_inputs(
            dataset,
            Split::Val,
            &arch,
            spec.distance_pad,
            config,
        )?)
    } else {
        None
    };

    let mut model = init_fnn(&arch, config.seed)?;
    let mut state = model.zero_gradients();
    let rms = config.rmsprop;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "shuffle"));

    let mut best_model = model.clone();
    let mut best_epoch = 0usize;
    let mut best_val = f64::INFINITY;
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut step: u64 = 0;

    for epoch in 0..config.epochs {
        let lr = lr_at_epoch(config.learning_rate, epoch, config.lr_halving_period);
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut shuffle_rng);

        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let mut pos = Array2::zeros((chunk.len(), arch.input_dim()));
            let mut neg = Array2::zeros((chunk.len(), arch.input_dim()));
            for (row, &idx) in chunk.iter().enumerate() {
                pos.row_mut(row).assign(&train.pos.row(idx));
                neg.row_mut(row).assign(&train.neg.row(idx));
            }
            let out = gradients(
                &model,
                pos.view(),
                neg.view(),
                config.loss_margin,
                derive_seed_idx(config.seed, step),
            )?;
            rmsprop_step(&mut model, &out.gradients, &mut state, lr, config.weight_decay, rms)?;
            model.absorb_bn_stats(&out.bn_batch_stats);
            loss_sum += out.mean_loss * chunk.len() as f64;
            step += 1;
        }
        let train_loss = loss_sum / train.len() as f64;

        let val_loss = match &val {
            Some(v) => Some(batch_loss(
                &model,
                v.pos.view(),
                v.neg.view(),
                config.loss_margin,
                None,
            )?),
            None => None,
        };
        if !train_loss.is_finite() || val_loss.is_some_and(|v| !v.is_finite()) {
            return Err(PhdError::NonFinite {
                location: format!(
                    "training diverged at epoch {epoch} (train {train_loss:?}, val {val_loss:?})"
                ),
            });
        }
        if let Some(v) = val_loss {
            if v < best_val {
                best_val = v;
                best_epoch = epoch;
                best_model = model.clone();
            }
        }
        log::info!(
            "epoch {epoch}: lr {lr:.6}, train loss {train_loss:.6}, val loss {val_loss:?}"
        );
        epochs.push(EpochLog {
            epoch,
            learning_rate: lr,
            train_loss,
            val_loss,
        });
    }

    if val.is_none() {
        best_model = model.clone();
        best_epoch = config.epochs - 1;
    }
    Ok(TrainOutcome {
        final_model: model,
        best_model,
        best_epoch,
        epochs,
    })
}

/// Positive/negative feature pairs for the distance-based ranking SVM,
/// using the capped training history of each user.
pub fn svm_d_training_pairs(
    dataset: &Dataset,
    split: Split,
    k: usize,
    pad: DistancePad,
    config: &TrainConfig,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let mut out = Vec::new();
    for user in dataset.users_in(split) {
        let Ok(history) = training_history(user, config.seed) else {
            continue;
        };
        let Ok(pairs) = sample_pairs(
            &user.user_id,
            &user.target,
            config.pairs_per_video,
            derive_seed(config.seed, &format!("pairs:{}", user.user_id)),
        ) else {
            continue;
        };
        for pair in pairs {
            let feat = |idx: usize| -> Result<Vec<f64>> {
                Ok(distance_features_padded(
                    &user.target.segments[idx].feature,
                    &history.elements,
                    k,
                    pad,
                )?
                .into_values())
            };
            out.push((feat(pair.positive)?, feat(pair.negative)?));
        }
    }
    if out.is_empty() {
        return Err(PhdError::InvalidData(format!(
            "no distance pairs could be assembled from split {split}"
        )));
    }
    Ok(out)
}

pub fn train_svm_d(
    dataset: &Dataset,
    k: usize,
    pad: DistancePad,
    params: RankSvmParams,
    config: &TrainConfig,
) -> Result<LinearModel> {
    let pairs = svm_d_training_pairs(dataset, Split::Train, k, pad, config)?;
    train_rank_svm(&pairs, params)
}

/// Raw-feature pairs for the history-agnostic highlight SVM.
pub fn highlight_svm_training_pairs(
    dataset: &Dataset,
    split: Split,
    config: &TrainConfig,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let mut out = Vec::new();
    for user in dataset.users_in(split) {
        let Ok(pairs) = sample_pairs(
            &user.user_id,
            &user.target,
            config.pairs_per_video,
            derive_seed(config.seed, &format!("pairs:{}", user.user_id)),
        ) else {
            continue;
        };
        for pair in pairs {
            out.push((
                user.target.segments[pair.positive].feature.clone(),
                user.target.segments[pair.negative].feature.clone(),
            ));
        }
    }
    if out.is_empty() {
        return Err(PhdError::InvalidData(format!(
            "no raw-feature pairs could be assembled from split {split}"
        )));
    }
    Ok(out)
}

pub fn train_highlight_svm(
    dataset: &Dataset,
    params: RankSvmParams,
    config: &TrainConfig,
) -> Result<LinearModel> {
    let pairs = highlight_svm_training_pairs(dataset, Split::Train, config)?;
    train_rank_svm(&pairs, params)
}

/// Per-user residual models trained on each user's history videos.
pub struct ResidualBundle {
    pub models: BTreeMap<String, ResidualModel>,
}

/// Fit one residual model per user from pairs sampled inside that user's
/// history videos, scored by the generic model. Users without any usable
/// history pair are omitted and fall back to generic scoring.
pub fn train_residual_models(
    dataset: &Dataset,
    generic: &FnnModel,
    params: RankSvmParams,
    config: &TrainConfig,
) -> Result<ResidualBundle> {
    if generic.arch.variant != FnnVariant::Generic {
        return Err(PhdError::InvalidConfig(
            "residual models take the generic ranker as the base model".into(),
        ));
    }
    let scorer = FnnScorer::new(generic.clone());
    let mut models = BTreeMap::new();
    for user in &dataset.users {
        let mut residual_pairs: Vec<ResidualPair> = Vec::new();
        for video in &user.histories {
            let Ok(pairs) = sample_pairs(
                &user.user_id,
                video,
                config.pairs_per_video,
                derive_seed(config.seed, &format!("res:{}:{}", user.user_id, video.video_id)),
            ) else {
                continue;
            };
            let scores = scorer.scores(video, None)?;
            for pair in pairs {
                residual_pairs.push(ResidualPair {
                    pos_features: video.segments[pair.positive].feature.clone(),
                    pos_generic_score: scores[pair.positive],
                    neg_features: video.segments[pair.negative].feature.clone(),
                    neg_generic_score: scores[pair.negative],
                });
            }
        }
        if residual_pairs.is_empty() {
            log::debug!("user {} has no residual pairs; generic fallback", user.user_id);
            continue;
        }
        models.insert(user.user_id.clone(), train_residual(&residual_pairs, params)?);
    }
    Ok(ResidualBundle { models })
}

pub const RESIDUAL_MAGIC: &[u8; 8] = b"PHDRES01";

/// Write a residual bundle: the embedded generic checkpoint followed by one
/// linear model and score standardization per user.
pub fn save_residual_bundle(
    path: &std::path::Path,
    bundle: &ResidualBundle,
    generic: &FnnModel,
) -> Result<()> {
    use std::io::Write;
    let mut fnn_bytes = Vec::new();
    crate::fnn::write_fnn(generic, &mut fnn_bytes).map_err(|e| PhdError::io(path, e))?;

    let file = std::fs::File::create(path).map_err(|e| PhdError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e| PhdError::io(path, e);
    w.write_all(RESIDUAL_MAGIC).map_err(io_err)?;
    w.write_all(&(fnn_bytes.len() as u64).to_le_bytes()).map_err(io_err)?;
    w.write_all(&fnn_bytes).map_err(io_err)?;
    w.write_all(&(bundle.models.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (user_id, model) in &bundle.models {
        let id = user_id.as_bytes();
        w.write_all(&(id.len() as u32).to_le_bytes()).map_err(io_err)?;
        w.write_all(id).map_err(io_err)?;
        w.write_all(&model.score_mean.to_le_bytes()).map_err(io_err)?;
        w.write_all(&model.score_std.to_le_bytes()).map_err(io_err)?;
        w.write_all(&(model.linear.weights.len() as u32).to_le_bytes())
            .map_err(io_err)?;
        for v in &model.linear.weights {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
        w.write_all(&model.linear.bias.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Load a residual bundle, returning the per-user models and the embedded
/// generic model.
pub fn load_residual_bundle(path: &std::path::Path) -> Result<(ResidualBundle, FnnModel)> {
    use std::io::Read;
    let file = std::fs::File::open(path).map_err(|e| PhdError::io(path, e))?;
    let mut r = std::io::BufReader::new(file);
    let bad = |message: &str| PhdError::Checkpoint {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| PhdError::io(path, e))?;
    if &magic != RESIDUAL_MAGIC {
        return Err(bad("wrong magic"));
    }
    let mut u64_buf = [0u8; 8];
    r.read_exact(&mut u64_buf).map_err(|e| PhdError::io(path, e))?;
    let fnn_len = u64::from_le_bytes(u64_buf) as usize;
    let mut fnn_bytes = vec![0u8; fnn_len];
    r.read_exact(&mut fnn_bytes).map_err(|e| PhdError::io(path, e))?;
    let generic = crate::fnn::read_fnn(&mut fnn_bytes.as_slice(), path)?;

    let mut u32_buf = [0u8; 4];
    r.read_exact(&mut u32_buf).map_err(|e| PhdError::io(path, e))?;
    let n_users = u32::from_le_bytes(u32_buf) as usize;
    let mut models = BTreeMap::new();
    for _ in 0..n_users {
        r.read_exact(&mut u32_buf).map_err(|e| PhdError::io(path, e))?;
        let id_len = u32::from_le_bytes(u32_buf) as usize;
        let mut id = vec![0u8; id_len];
        r.read_exact(&mut id).map_err(|e| PhdError::io(path, e))?;
        let user_id = String::from_utf8(id).map_err(|_| bad("user id is not utf-8"))?;
        let read_f64 = |r: &mut std::io::BufReader<std::fs::File>| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|e| PhdError::io(path, e))?;
            Ok(f64::from_le_bytes(b))
        };
        let score_mean = read_f64(&mut r)?;
        let score_std = read_f64(&mut r)?;
        r.read_exact(&mut u32_buf).map_err(|e| PhdError::io(path, e))?;
        let dim = u32::from_le_bytes(u32_buf) as usize;
        let mut weights = Vec::with_capacity(dim);
        for _ in 0..dim {
            weights.push(read_f64(&mut r)?);
        }
        let bias = read_f64(&mut r)?;
        models.insert(
            user_id,
            ResidualModel {
                linear: LinearModel {
                    weights,
                    bias,
                    c: 1.0,
                },
                score_mean,
                score_std,
            },
        );
    }
    Ok((ResidualBundle { models }, generic))
}

/// Component scores on validation pairs, the input to fusion-weight
/// learning. Histories are the full (query-time) histories.
pub fn fusion_validation_pairs(
    dataset: &Dataset,
    fnn: &FnnModel,
    svm: &LinearModel,
    pad: DistancePad,
    config: &TrainConfig,
) -> Result<Vec<FusionPair>> {
    let fnn_scorer = FnnScorer::with_pad(fnn.clone(), pad);
    let svm_scorer = crate::scorers::SvmDScorer { model: svm.clone(), pad };
    let mut out = Vec::new();
    for user in dataset.users_in(Split::Val) {
        let Ok(history) = full_history(&user.user_id, &user.histories) else {
            continue;
        };
        let Ok(pairs) = sample_pairs(
            &user.user_id,
            &user.target,
            config.pairs_per_video,
            derive_seed(config.seed, &format!("fuse:{}", user.user_id)),
        ) else {
            continue;
        };
        let fnn_scores = fnn_scorer.scores(&user.target, Some(&history))?;
        let svm_scores = svm_scorer.scores(&user.target, &history)?;
        for pair in pairs {
            out.push(FusionPair {
                fnn_pos: fnn_scores[pair.positive],
                svm_pos: svm_scores[pair.positive],
                fnn_neg: fnn_scores[pair.negative],
                svm_neg: svm_scores[pair.negative],
            });
        }
    }
    if out.is_empty() {
        return Err(PhdError::InvalidData(
            "no validation pairs available for fusion learning".into(),
        ));
    }
    Ok(out)
}

/// Learn the fusion weight on the validation split.
pub fn learn_fusion(
    dataset: &Dataset,
    fnn: &FnnModel,
    svm: &LinearModel,
    pad: DistancePad,
    config: &TrainConfig,
) -> Result<FusionOutcome> {
    let pairs = fusion_validation_pairs(dataset, fnn, svm, pad, config)?;
    learn_fusion_weight(&pairs)
}
