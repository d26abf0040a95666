//! Data model and dataset operations: labeling, pair sampling, history
//! construction, manifest ingestion and synthetic generation.

pub mod chunk;
pub mod intervals;
pub mod manifest;
pub mod synth;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PhdError, Result};
use crate::vecmath::{aggregate_mean, Feature};

/// Default fraction of a segment that must overlap the ground truth for the
/// segment to count as positive. Ties are positive.
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.5;

/// History caps applied at training time.
pub const HISTORY_MAX_VIDEOS: usize = 20;
pub const HISTORY_MAX_SHOTS: usize = 20;

/// Dataset split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Val => write!(f, "val"),
            Split::Test => write!(f, "test"),
        }
    }
}

/// One scoring unit of a video.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub video_id: String,
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub feature: Feature,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.start_s, self.end_s)
    }
}

/// A video with its segments and the user's ground-truth selection.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoRecord {
    pub video_id: String,
    pub duration_s: f64,
    pub segments: Vec<Segment>,
    /// Disjoint union of the intervals the user selected.
    pub gt_frames: Vec<(f64, f64)>,
    pub split: Split,
}

/// A user's previously selected highlight segments and their mean profile.
#[derive(Debug, Clone, PartialEq)]
pub struct UserHistory {
    pub user_id: String,
    pub elements: Vec<Feature>,
    pub profile: Feature,
}

impl UserHistory {
    pub fn new(user_id: impl Into<String>, elements: Vec<Feature>) -> Result<Self> {
        let user_id = user_id.into();
        if elements.is_empty() {
            return Err(PhdError::EmptyHistory { user_id });
        }
        let profile = aggregate_mean(&elements)?;
        Ok(UserHistory {
            user_id,
            elements,
            profile,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// A positive/negative segment pair drawn from one video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub user_id: String,
    pub video_id: String,
    pub positive: usize,
    pub negative: usize,
}

/// All videos of one user: an ordered history plus the held-out target.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    pub user_id: String,
    pub split: Split,
    /// Ordered by creation time (oldest first).
    pub histories: Vec<VideoRecord>,
    pub target: VideoRecord,
}

/// A user dropped during ingestion, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedUser {
    pub user_id: String,
    pub reason: String,
}

/// Number of users per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

/// The full dataset: one record per user, sorted by user id.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub users: Vec<UserRecord>,
    pub feature_dim: usize,
    /// Users rejected at ingestion, surfaced rather than silently dropped.
    pub skipped: Vec<SkippedUser>,
}

impl Dataset {
    pub fn get_user(&self, user_id: &str) -> Option<&UserRecord> {
        self.users
            .binary_search_by(|u| u.user_id.as_str().cmp(user_id))
            .ok()
            .map(|i| &self.users[i])
    }

    pub fn users_in(&self, split: Split) -> impl Iterator<Item = &UserRecord> {
        self.users.iter().filter(move |u| u.split == split)
    }

    pub fn split_counts(&self) -> SplitCounts {
        let mut counts = SplitCounts::default();
        for u in &self.users {
            match u.split {
                Split::Train => counts.train += 1,
                Split::Val => counts.val += 1,
                Split::Test => counts.test += 1,
            }
        }
        counts
    }
}

/// Label each segment: positive iff the overlapped fraction of the segment
/// meets `overlap_threshold`. Ties count as positive.
pub fn label_segments(video: &VideoRecord, overlap_threshold: f64) -> Vec<bool> {
    video
        .segments
        .iter()
        .map(|seg| {
            let overlap = intervals::intersect_len(seg.interval(), &video.gt_frames);
            let frac = overlap / seg.duration();
            frac >= overlap_threshold
        })
        .collect()
}

/// Indices of positive segments under the default labeling rule.
pub fn positive_indices(video: &VideoRecord) -> Vec<usize> {
    label_segments(video, DEFAULT_OVERLAP_THRESHOLD)
        .iter()
        .enumerate()
        .filter_map(|(i, &p)| p.then_some(i))
        .collect()
}

/// Sample `min(n_pairs, |pos| * |neg|)` distinct positive/negative pairs
/// uniformly without replacement from the cross product, deterministically.
pub fn sample_pairs(
    user_id: &str,
    video: &VideoRecord,
    n_pairs: usize,
    rng_seed: u64,
) -> Result<Vec<TrainingPair>> {
    let labels = label_segments(video, DEFAULT_OVERLAP_THRESHOLD);
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if pos.is_empty() {
        return Err(PhdError::Sampling {
            video_id: video.video_id.clone(),
            reason: "no positive segments".to_string(),
        });
    }
    if neg.is_empty() {
        return Err(PhdError::Sampling {
            video_id: video.video_id.clone(),
            reason: "no negative segments".to_string(),
        });
    }
    let total = pos.len() * neg.len();
    let take = n_pairs.min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    // partial Fisher-Yates over the implicit cross-product index space
    let mut swapped: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    let mut picks = Vec::with_capacity(take);
    for i in 0..take {
        let j = rng.gen_range(i..total);
        let pick = *swapped.get(&j).unwrap_or(&j);
        let at_i = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, at_i);
        picks.push(pick);
    }
    Ok(picks
        .into_iter()
        .map(|flat| TrainingPair {
            user_id: user_id.to_string(),
            video_id: video.video_id.clone(),
            positive: pos[flat / neg.len()],
            negative: neg[flat % neg.len()],
        })
        .collect())
}

/// Build a training-time history: one positive shot from each of the last
/// `max_videos` videos first, remaining slots up to `max_shots` filled at
/// random from the leftover positive shots.
pub fn build_history(
    user_id: &str,
    history_videos: &[VideoRecord],
    max_videos: usize,
    max_shots: usize,
    rng_seed: u64,
) -> Result<UserHistory> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let start = history_videos.len().saturating_sub(max_videos);
    // videos with at least one positive shot, most recent window
    let mut contributing: Vec<(&VideoRecord, Vec<usize>)> = history_videos[start..]
        .iter()
        .filter_map(|v| {
            let pos = positive_indices(v);
            (!pos.is_empty()).then_some((v, pos))
        })
        .collect();
    // if coverage alone would overflow the shot budget, the most recent
    // videos win
    if contributing.len() > max_shots {
        let drop = contributing.len() - max_shots;
        contributing.drain(..drop);
    }
    let mut elements: Vec<Feature> = Vec::new();
    let mut leftovers: Vec<&Segment> = Vec::new();
    for (video, pos) in &contributing {
        let chosen = pos[rng.gen_range(0..pos.len())];
        elements.push(video.segments[chosen].feature.clone());
        for &i in pos {
            if i != chosen {
                leftovers.push(&video.segments[i]);
            }
        }
    }
    let extra = max_shots.saturating_sub(elements.len()).min(leftovers.len());
    if extra > 0 {
        leftovers.shuffle(&mut rng);
        for seg in leftovers.into_iter().take(extra) {
            elements.push(seg.feature.clone());
        }
    }
    UserHistory::new(user_id, elements)
}

/// The query-time history: every positive shot from every history video,
/// uncapped.
pub fn full_history(user_id: &str, history_videos: &[VideoRecord]) -> Result<UserHistory> {
    history_from_last_k(user_id, history_videos, usize::MAX)
}

/// History restricted to the positive shots of the last `k` videos; used by
/// the history-size ablation. `k >= |videos|` is the full history.
pub fn history_from_last_k(
    user_id: &str,
    history_videos: &[VideoRecord],
    k: usize,
) -> Result<UserHistory> {
    let start = history_videos.len().saturating_sub(k);
    let mut elements = Vec::new();
    for video in &history_videos[start..] {
        for i in positive_indices(video) {
            elements.push(video.segments[i].feature.clone());
        }
    }
    UserHistory::new(user_id, elements)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// A video whose segments are consecutive `seg_len`-second windows with
    /// the given features; `gt` marks the positive intervals.
    pub fn video(
        video_id: &str,
        seg_len: f64,
        features: Vec<Feature>,
        gt: Vec<(f64, f64)>,
        split: Split,
    ) -> VideoRecord {
        let segments = features
            .into_iter()
            .enumerate()
            .map(|(i, feature)| Segment {
                video_id: video_id.to_string(),
                index: i,
                start_s: i as f64 * seg_len,
                end_s: (i + 1) as f64 * seg_len,
                feature,
            })
            .collect::<Vec<_>>();
        let duration_s = segments.last().map(|s| s.end_s).unwrap_or(0.0);
        VideoRecord {
            video_id: video_id.to_string(),
            duration_s,
            segments,
            gt_frames: intervals::normalize_union(&gt),
            split,
        }
    }

    /// Unit-ish features along a single axis, dimension 3.
    pub fn axis_feature(axis: usize, value: f64) -> Feature {
        let mut f = vec![0.0; 3];
        f[axis.min(2)] = value;
        f
    }
}
