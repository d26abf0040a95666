//! Evaluation protocol: per-video Average Precision, normalized Meaningful
//! Summary Duration and Recall@N, aggregated over a split.
//!
//! Rankings are always scores-descending with ties broken by ascending
//! segment index, so evaluation is bit-reproducible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::intervals::{intersect_len, total_len};
use crate::dataset::{
    history_from_last_k, label_segments, Dataset, Split, UserHistory, VideoRecord,
    DEFAULT_OVERLAP_THRESHOLD,
};
use crate::error::{PhdError, Result};
use crate::scorers::{Scorer, ScoreRequest};
use crate::util::rank_descending;

/// The coverage fraction of the ground truth that defines "watched enough".
pub const NMSD_ALPHA: f64 = 0.5;

/// A video with scores and the induced ranking.
#[derive(Debug, Clone)]
pub struct RankedVideo<'a> {
    pub video: &'a VideoRecord,
    pub scores: Vec<f64>,
    /// Segment indices, best first.
    pub ranking: Vec<usize>,
}

impl<'a> RankedVideo<'a> {
    pub fn new(video: &'a VideoRecord, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != video.segments.len() {
            return Err(PhdError::LengthMismatch {
                context: format!("scores for video '{}'", video.video_id),
                left: scores.len(),
                right: video.segments.len(),
            });
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(PhdError::NonFinite {
                location: format!("scores for video '{}'", video.video_id),
            });
        }
        let ranking = rank_descending(&scores);
        Ok(RankedVideo {
            video,
            scores,
            ranking,
        })
    }
}

/// Average precision of the positive labels under the stable descending
/// ranking. Errors when no label is positive.
pub fn average_precision(labels: &[bool], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(PhdError::LengthMismatch {
            context: "average_precision".into(),
            left: labels.len(),
            right: scores.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Err(PhdError::Eval("average precision of an all-negative video".into()));
    }
    let ranking = rank_descending(scores);
    let mut hits = 0.0;
    let mut sum = 0.0;
    for (rank, &idx) in ranking.iter().enumerate() {
        if labels[idx] {
            hits += 1.0;
            sum += hits / (rank as f64 + 1.0);
        }
    }
    Ok(sum / n_pos as f64)
}

/// Normalized meaningful summary duration: the fraction of the video that
/// must be watched, in ranking order, before at least `alpha` of the ground
/// truth duration has been shown. Lower is better.
pub fn nmsd(ranked: &RankedVideo<'_>, alpha: f64) -> Result<f64> {
    let gt = &ranked.video.gt_frames;
    let gt_total = total_len(gt);
    if gt_total <= 0.0 {
        return Err(PhdError::Eval(format!(
            "video '{}' has empty ground truth",
            ranked.video.video_id
        )));
    }
    let needed = alpha * gt_total;
    let mut covered = 0.0;
    let mut watched = 0.0;
    for &idx in &ranked.ranking {
        let seg = &ranked.video.segments[idx];
        watched += seg.duration();
        covered += intersect_len(seg.interval(), gt);
        if covered >= needed - 1e-9 {
            return Ok(watched / ranked.video.duration_s);
        }
    }
    Err(PhdError::Eval(format!(
        "ground truth of video '{}' is not coverable by its segments",
        ranked.video.video_id
    )))
}

/// Fraction of the ground-truth duration covered by the `n` highest ranked
/// segments.
pub fn recall_at_n(ranked: &RankedVideo<'_>, n: usize) -> Result<f64> {
    let gt = &ranked.video.gt_frames;
    let gt_total = total_len(gt);
    if gt_total <= 0.0 {
        return Err(PhdError::Eval(format!(
            "video '{}' has empty ground truth",
            ranked.video.video_id
        )));
    }
    let covered: f64 = ranked
        .ranking
        .iter()
        .take(n)
        .map(|&idx| intersect_len(ranked.video.segments[idx].interval(), gt))
        .sum();
    Ok(covered / gt_total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub map: f64,
    pub nmsd: f64,
    pub recall_at_5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRow {
    pub user_id: String,
    pub video_id: String,
    pub scorer: String,
    pub ap: f64,
    pub nmsd: f64,
    pub recall_at_5: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fusion_omega: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scorer: String,
    pub split: String,
    pub metrics: MetricSummary,
    pub n_videos: usize,
    /// Videos the scorer failed on, excluded from the aggregates.
    pub failed_videos: Vec<String>,
    /// Videos with no positive segment under the labeling rule.
    pub all_negative_videos: Vec<String>,
    pub rows: Vec<VideoRow>,
    pub metadata: ReportMetadata,
}

impl EvalReport {
    /// Per-video rows as CSV.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("user_id,video_id,scorer,ap,nmsd,recall_at_5\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.user_id, row.video_id, row.scorer, row.ap, row.nmsd, row.recall_at_5
            ));
        }
        out
    }
}

/// Evaluate a scorer on every target video of a split, conditioning on each
/// user's full history.
pub fn evaluate(dataset: &Dataset, scorer: &dyn Scorer, split: Split) -> Result<EvalReport> {
    evaluate_with_history(dataset, scorer, split, None)
}

/// Like [`evaluate`], but restricting every user's history to the positives
/// of their last `k` videos. `Some(0)` evaluates without any history, which
/// is an error for history-dependent scorers.
pub fn evaluate_with_history(
    dataset: &Dataset,
    scorer: &dyn Scorer,
    split: Split,
    last_k: Option<usize>,
) -> Result<EvalReport> {
    if last_k == Some(0) && scorer.requires_history() {
        return Err(PhdError::Eval(format!(
            "scorer '{}' cannot run with an empty history",
            scorer.name()
        )));
    }
    let users: Vec<_> = dataset.users_in(split).collect();
    if users.is_empty() {
        return Err(PhdError::Eval(format!("no users in split {split}")));
    }

    enum Outcome {
        Row(VideoRow),
        Failed(String),
        AllNegative(String),
    }

    let pool = eval_pool()?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        users
            .par_iter()
            .map(|user| {
                let video = &user.target;
                let labels = label_segments(video, DEFAULT_OVERLAP_THRESHOLD);
                if !labels.iter().any(|&l| l) {
                    return Outcome::AllNegative(video.video_id.clone());
                }
                let history: Option<UserHistory> = match last_k {
                    Some(0) => None,
                    Some(k) => history_from_last_k(&user.user_id, &user.histories, k).ok(),
                    None => history_from_last_k(&user.user_id, &user.histories, usize::MAX).ok(),
                };
                if history.is_none() && scorer.requires_history() {
                    return Outcome::Failed(video.video_id.clone());
                }
                let req = ScoreRequest {
                    user_id: &user.user_id,
                    video,
                    history: history.as_ref(),
                };
                let scores = match scorer.score_video(&req) {
                    Ok(s) => s,
                    Err(_) => return Outcome::Failed(video.video_id.clone()),
                };
                let ranked = match RankedVideo::new(video, scores) {
                    Ok(r) => r,
                    Err(_) => return Outcome::Failed(video.video_id.clone()),
                };
                let ap = average_precision(&labels, &ranked.scores);
                let msd = nmsd(&ranked, NMSD_ALPHA);
                let recall = recall_at_n(&ranked, 5);
                match (ap, msd, recall) {
                    (Ok(ap), Ok(nmsd), Ok(recall_at_5)) => Outcome::Row(VideoRow {
                        user_id: user.user_id.clone(),
                        video_id: video.video_id.clone(),
                        scorer: scorer.name().to_string(),
                        ap,
                        nmsd,
                        recall_at_5,
                    }),
                    _ => Outcome::Failed(video.video_id.clone()),
                }
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut failed_videos = Vec::new();
    let mut all_negative_videos = Vec::new();
    for outcome in outcomes {
        match outcome {
            Outcome::Row(row) => rows.push(row),
            Outcome::Failed(id) => failed_videos.push(id),
            Outcome::AllNegative(id) => all_negative_videos.push(id),
        }
    }
    if rows.is_empty() {
        return Err(PhdError::Eval(format!(
            "scorer '{}' produced no evaluable videos on split {split}",
            scorer.name()
        )));
    }
    let n = rows.len() as f64;
    let metrics = MetricSummary {
        map: rows.iter().map(|r| r.ap).sum::<f64>() / n,
        nmsd: rows.iter().map(|r| r.nmsd).sum::<f64>() / n,
        recall_at_5: rows.iter().map(|r| r.recall_at_5).sum::<f64>() / n,
    };
    Ok(EvalReport {
        scorer: scorer.name().to_string(),
        split: split.to_string(),
        metrics,
        n_videos: rows.len(),
        failed_videos,
        all_negative_videos,
        rows,
        metadata: ReportMetadata::default(),
    })
}

/// Worker pool for per-video evaluation; `PHD_THREADS` caps the parallelism.
fn eval_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var("PHD_THREADS") {
        if let Ok(n) = value.trim().parse::<usize>() {
            if n >= 1 {
                builder = builder.num_threads(n);
            }
        }
    }
    builder
        .build()
        .map_err(|e| PhdError::Eval(format!("cannot build evaluation pool: {e}")))
}
