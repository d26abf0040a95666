//! Scoring interface and scorer implementations.
//!
//! A scorer maps every segment of a video to a real score, optionally
//! conditioned on the requesting user's history. Rankings are induced by the
//! scores alone, so any strictly increasing transform of a scorer's output
//! ranks identically.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{UserHistory, VideoRecord};
use crate::error::{PhdError, Result};
use crate::fnn::{assemble_input, FnnModel};
use crate::svm::{svm_score, LinearModel, ResidualModel};
use crate::util::derive_seed;
use crate::vecmath::{cosine_similarity, distance_features_padded, DistancePad};

/// Everything a scorer may condition on.
pub struct ScoreRequest<'a> {
    pub user_id: &'a str,
    pub video: &'a VideoRecord,
    pub history: Option<&'a UserHistory>,
}

pub trait Scorer: Sync {
    fn name(&self) -> &str;

    /// Whether the scorer needs a non-empty history to produce scores.
    fn requires_history(&self) -> bool {
        false
    }

    /// One score per segment of the request's video.
    fn score_video(&self, req: &ScoreRequest<'_>) -> Result<Vec<f64>>;
}

fn need_history<'a>(req: &'a ScoreRequest<'_>, name: &str) -> Result<&'a UserHistory> {
    match req.history {
        Some(h) if !h.is_empty() => Ok(h),
        _ => Err(PhdError::Eval(format!(
            "scorer '{name}' requires a non-empty user history"
        ))),
    }
}

/// Maximum cosine similarity between a segment and any history element.
pub fn max_similarity(segment: &[f64], history: &UserHistory) -> Result<f64> {
    if history.is_empty() {
        return Err(PhdError::EmptyHistory {
            user_id: history.user_id.clone(),
        });
    }
    let mut best = f64::NEG_INFINITY;
    for g in &history.elements {
        best = best.max(cosine_similarity(segment, g)?);
    }
    Ok(best)
}

/// Mean cosine similarity between a segment and the history elements.
pub fn video_mmr(segment: &[f64], history: &UserHistory) -> Result<f64> {
    if history.is_empty() {
        return Err(PhdError::EmptyHistory {
            user_id: history.user_id.clone(),
        });
    }
    let mut sum = 0.0;
    for g in &history.elements {
        sum += cosine_similarity(segment, g)?;
    }
    Ok(sum / history.elements.len() as f64)
}

/// I.i.d. uniform scores, deterministic per (video id, seed).
pub fn random_scores(video: &VideoRecord, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &video.video_id));
    (0..video.segments.len()).map(|_| rng.gen::<f64>()).collect()
}

pub struct RandomScorer {
    pub seed: u64,
}

impl Scorer for RandomScorer {
    fn name(&self) -> &str {
        "random"
    }

    fn score_video(&self, req: &ScoreRequest<'_>) -> Result<Vec<f64>> {
        Ok(random_scores(req.video, self.seed))
    }
}

pub struct MaxSimilarityScorer;

impl Scorer for MaxSimilarityScorer {
    fn name(&self) -> &str {
        "max-sim"
    }

    fn requires_history(&self) -> bool {
        true
    }

    fn score_video(&self, req: &ScoreRequest<'_>) -> Result<Vec<f64>> {
        let history = need_history(req, self.name())?;
        req.video
            .segments
            .iter()
            .map(|s| max_similarity(&s.feature, history))
            .collect()
    }
}

pub struct VideoMmrScorer;

impl Scorer for VideoMmrScorer {
    fn name(&self) -> &str {
        "v-mmr"
    }

    fn requires_history(&self) -> bool {
        true
    }

    fn score_video(&self, req: &ScoreRequest<'_>) -> Result<Vec<f64>> {
        let history = need_history(req, self.name())?;
        req.video
            .segments
            .iter()
            .map(|s| video_mmr(&s.feature, history))
            .collect()
    }
}

/// A trained feed-forward ranker of any input variant.
pub struct FnnScorer {
    pub model: FnnModel,
    pub pad: DistancePad,
    name: String,
}

impl FnnScorer {
    pub fn new(model: FnnModel) -> Self {
        Self::with_pad(model, DistancePad::Zero)
    }

    pub fn with_pad(model: FnnModel, pad: DistancePad) -> Self {
        let name = match model.arch.variant {
            crate::fnn::FnnVariant::Generic => "generic-fnn",
            crate::fnn::FnnVariant::PhdCa => "phd-ca",
            crate::fnn::FnnVariant::PhdCaEd => "phd-ca-ed",
        }
        .to_string();
        FnnScorer { model, pad, name }
    }

    /// Eval-mode scores for every segment of a video.
    pub fn scores(&self, video: &VideoRecord, history: Option<&UserHistory>) -> Result<Vec<f64>> {
        let arch = &self.model.arch;
        let profile: Option<&[f64]> = if arch.variant.uses_history() {
            let h = history.ok_or_else(|| {
                PhdError::Eval(format!("scorer '{}' requires a user history", self.name))
            })?;
            Some(&h.profile)
        } else {
            None
        };
        let mut rows = Array2::zeros((video.segments.len(), arch.input_dim()));
        for (i, seg) in video.segments.iter().enumerate() {
            let distances = if arch.variant.uses_distances() {
                let h = history.expect("history checked above");
                Some(distance_features_padded(
                    &seg.feature,
                    &h.elements,
                    arch.distance_k,
                    self.pad,
                )?)
            } else {
                None
            };
            let input = assemble_input(
                arch,
                &seg.feature,
                profile,
                distances.as_ref().map(|d| d.values()),
            )?;
            for (j, v) in input.into_iter().enumerate() {
                rows[(i, j)] = v;
            }
        }
        Ok(self.model.score_batch(rows.view())?.to_vec())
    }
}

impl Scorer for FnnScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn requires_history(&self) -> bool {
        self.model.arch.variant.uses_history()
    }

    fn score_video(&self, req: &ScoreRequest<'_>) -> Result<Vec<f64>> {
        let history = if self.requires_history() {
            Some(need_history(req, self.name())?)
        } else {
            None
        };
        self.scores(req.video, history)
    }
}

/// Ranking SVM over the distance features to the user history.
pub struct SvmDScorer {
    pub model: LinearModel,
    pub pad: DistancePad,
}

impl SvmDScorer {
    pub fn new(model: LinearModel) -> Self {
        SvmDScorer {
            model,
            pad: DistancePad::Zero,
        }
    }

    pub fn scores(&self, video: &VideoRecord, history: &UserHistory) -> Result<Vec<f64>> {
        let k = self.model.weights.len();
        video
            .segments
            .iter()
            .map(|s| {
                let d = distance_features_padded(&s.feature, &history.elements, k, self.pad)?;
                svm_score(&self.model, d.values())
            })
            .collect()
    }
}

impl Scorer for SvmDScorer {
    fn name(&self) -> &str {
        "svm-d"
    }

    fn requires_history(&self) -> bool {
        true
    }

    fn score_video(&self, req: &ScoreRequest<'_>) -> Result<Vec<f64>> {
        let history = need_history(req, self.name())?;
        self.scores(req.video, history)
    }
}

/// Ranking SVM on raw segment descriptors, ignoring the history.
pub struct HighlightSvmScorer {
    pub model: LinearModel,
}

impl Scorer for HighlightSvmScorer {
    fn name(&self) -> &str {
        "highlight-svm"
    }

    fn score_video(&self, req: &ScoreRequest<'_>) -> Result<Vec<f64>> {
        req.video
            .segments
            .iter()
            .map(|s| svm_score(&self.model, &s.feature))
            .collect()
    }
}

/// Per-user residual models over the generic scorer; users without a model
/// fall back to the generic scores (cold start).
pub struct ResidualScorer {
    pub generic: FnnModel,
    pub models: BTreeMap<String, ResidualModel>,
}

impl ResidualScorer {
    fn generic_scores(&self, video: &VideoRecord) -> Result<Vec<f64>> {
        let dim = self.generic.arch.input_dim();
        let mut rows = Array2::zeros((video.segments.len(), dim));
        for (i, seg) in video.segments.iter().enumerate() {
            if seg.feature.len() != dim {
                return Err(PhdError::LengthMismatch {
                    context: format!("residual generic input for '{}'", video.video_id),
                    left: seg.feature.len(),
                    right: dim,
                });
            }
            for (j, &v) in seg.feature.iter().enumerate() {
                rows[(i, j)] = v;
            }
        }
        Ok(self.generic.score_batch(rows.view())?.to_vec())
    }
}

impl Scorer for ResidualScorer {
    fn name(&self) -> &str {
        "residual"
    }

    fn score_video(&self, req: &ScoreRequest<'_>) -> Result<Vec<f64>> {
        let generic = self.generic_scores(req.video)?;
        match self.models.get(req.user_id) {
            Some(model) => req
                .video
                .segments
                .iter()
                .zip(generic.iter())
                .map(|(s, &g)| model.score(&s.feature, g))
                .collect(),
            None => Ok(generic),
        }
    }
}

/// A closure-backed scorer, handy for oracles in tests and experiments.
pub struct FnScorer<F> {
    pub name: String,
    pub f: F,
}

impl<F> Scorer for FnScorer<F>
where
    F: Fn(&ScoreRequest<'_>) -> Result<Vec<f64>> + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn score_video(&self, req: &ScoreRequest<'_>) -> Result<Vec<f64>> {
        (self.f)(req)
    }
}
