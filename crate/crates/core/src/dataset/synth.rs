//! Synthetic dataset generator.
//!
//! Topic prototypes are unit vectors; every user draws a preference mixture
//! over topics, every segment is a noisy copy of one topic prototype, and
//! ground-truth selections are sampled with probability proportional to
//! `generic_weight * appeal(topic) + (1 - generic_weight) * affinity(user, topic)`.
//! With `consistency = 1, generic_weight = 0` the positives always carry the
//! user's preferred topic; with `consistency = 0, generic_weight = 1` the
//! labels carry no personalization signal at all.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::chunk::CHUNK_S;
use super::intervals::normalize_union;
use super::manifest::{write_dataset, TEST_MAX_DURATION_S, TEST_MIN_DURATION_S};
use super::{Dataset, Segment, Split, UserRecord, VideoRecord};
use crate::error::{PhdError, Result};
use crate::vecmath::Feature;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub train_users: usize,
    pub val_users: usize,
    pub test_users: usize,
    /// Number of topic prototypes.
    pub topics: usize,
    pub feature_dim: usize,
    /// History videos per user; each user additionally gets one target video.
    pub history_videos_per_user: usize,
    pub segments_per_video: usize,
    /// Ground-truth selections drawn per video. Must leave at least one
    /// negative segment.
    pub positives_per_video: usize,
    /// kappa in [0, 1]: how concentrated a user's preference mixture is on
    /// their main topic. 0 = uniform (no personal signal).
    pub consistency: f64,
    /// gamma in [0, 1]: weight of the shared topic appeal in the selection
    /// probability. 1 = selections are user-independent.
    pub generic_weight: f64,
    /// Standard deviation of the Gaussian feature noise around prototypes.
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            train_users: 50,
            val_users: 10,
            test_users: 10,
            topics: 8,
            feature_dim: 64,
            history_videos_per_user: 6,
            segments_per_video: 12,
            positives_per_video: 2,
            consistency: 0.9,
            generic_weight: 0.3,
            noise: 0.05,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(PhdError::InvalidConfig(msg));
        if self.topics == 0 {
            return fail("topics must be >= 1".into());
        }
        if self.feature_dim < self.topics {
            return fail(format!(
                "feature_dim {} smaller than topics {}",
                self.feature_dim, self.topics
            ));
        }
        if self.train_users + self.val_users + self.test_users == 0 {
            return fail("no users requested".into());
        }
        if self.history_videos_per_user == 0 {
            return fail("history_videos_per_user must be >= 1".into());
        }
        if self.segments_per_video < 2 {
            return fail("segments_per_video must be >= 2".into());
        }
        if self.positives_per_video == 0 || self.positives_per_video >= self.segments_per_video {
            return fail(
                "positives_per_video must be >= 1 and leave at least one negative".into(),
            );
        }
        if !(0.0..=1.0).contains(&self.consistency) {
            return fail("consistency must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.generic_weight) {
            return fail("generic_weight must be in [0, 1]".into());
        }
        if self.noise < 0.0 || !self.noise.is_finite() {
            return fail("noise must be finite and >= 0".into());
        }
        let duration = self.segments_per_video as f64 * CHUNK_S;
        if self.test_users > 0
            && !(TEST_MIN_DURATION_S..=TEST_MAX_DURATION_S).contains(&duration)
        {
            return fail(format!(
                "test videos would be {duration}s long, outside [{TEST_MIN_DURATION_S}, {TEST_MAX_DURATION_S}]"
            ));
        }
        Ok(())
    }
}

/// Per-user generation record kept for oracle checks.
#[derive(Debug, Clone, Serialize)]
pub struct SynthUserMeta {
    pub main_topic: usize,
    /// Preference mixture over topics, sums to 1.
    pub preference: Vec<f64>,
}

/// Generation side information. Not written to the manifest; used by tests
/// that need the true topic structure.
#[derive(Debug, Clone, Serialize)]
pub struct SynthMeta {
    /// Shared appeal score per topic, in (0, 1).
    pub topic_appeal: Vec<f64>,
    pub users: BTreeMap<String, SynthUserMeta>,
    /// Topic of every segment, per video.
    pub video_topics: BTreeMap<String, Vec<usize>>,
}

impl SynthMeta {
    /// The true selection weight of a segment for a user; the Bayes-optimal
    /// personalized score under the generator.
    pub fn selection_weight(&self, config: &SynthConfig, user_id: &str, video_id: &str) -> Vec<f64> {
        let user = &self.users[user_id];
        let max_pref = user
            .preference
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        self.video_topics[video_id]
            .iter()
            .map(|&t| {
                let affinity = user.preference[t] / max_pref;
                config.generic_weight * self.topic_appeal[t]
                    + (1.0 - config.generic_weight) * affinity
            })
            .collect()
    }

    /// The user-independent component of the selection weight.
    pub fn appeal_scores(&self, video_id: &str) -> Vec<f64> {
        self.video_topics[video_id]
            .iter()
            .map(|&t| self.topic_appeal[t])
            .collect()
    }
}

pub struct SynthOutput {
    pub dataset: Dataset,
    pub meta: SynthMeta,
}

/// Generate a dataset, write it under `out_dir` (manifest plus feature
/// store), and return the in-memory form together with generation metadata.
///
/// Byte-identical outputs for identical `(config, seed)`.
pub fn generate_synthetic(config: &SynthConfig, seed: u64, out_dir: &Path) -> Result<SynthOutput> {
    let output = generate_in_memory(config, seed)?;
    write_dataset(&output.dataset, out_dir)?;
    Ok(output)
}

/// Generate without touching the filesystem.
pub fn generate_in_memory(config: &SynthConfig, seed: u64) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = config.topics;

    // unit prototypes; values pass through f32 so the feature store
    // round-trips bit-exactly
    let prototypes: Vec<Feature> = (0..t).map(|_| unit_vector(config.feature_dim, &mut rng)).collect();

    // evenly spread appeal, assignment shuffled per dataset
    let mut topic_appeal: Vec<f64> = (0..t)
        .map(|i| {
            if t == 1 {
                0.5
            } else {
                0.1 + 0.8 * i as f64 / (t - 1) as f64
            }
        })
        .collect();
    topic_appeal.shuffle(&mut rng);

    let total_users = config.train_users + config.val_users + config.test_users;
    let mut users = Vec::with_capacity(total_users);
    let mut meta_users = BTreeMap::new();
    let mut video_topics = BTreeMap::new();

    for u in 0..total_users {
        let user_id = format!("u{u:05}");
        let split = if u < config.train_users {
            Split::Train
        } else if u < config.train_users + config.val_users {
            Split::Val
        } else {
            Split::Test
        };
        let main_topic = rng.gen_range(0..t);
        let preference: Vec<f64> = (0..t)
            .map(|i| {
                let base = (1.0 - config.consistency) / t as f64;
                if i == main_topic {
                    base + config.consistency
                } else {
                    base
                }
            })
            .collect();
        let max_pref = preference.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        let n_videos = config.history_videos_per_user + 1;
        let mut videos = Vec::with_capacity(n_videos);
        for v in 0..n_videos {
            let video_id = format!("{user_id}_v{v:02}");
            let n_seg = config.segments_per_video;
            // one slot always carries the user's main topic
            let main_slot = rng.gen_range(0..n_seg);
            let topics: Vec<usize> = (0..n_seg)
                .map(|i| if i == main_slot { main_topic } else { rng.gen_range(0..t) })
                .collect();

            let mut features = Vec::with_capacity(n_seg);
            for &topic in &topics {
                features.push(noisy_copy(&prototypes[topic], config.noise, &mut rng));
            }

            let weights: Vec<f64> = topics
                .iter()
                .map(|&topic| {
                    let affinity = preference[topic] / max_pref;
                    config.generic_weight * topic_appeal[topic]
                        + (1.0 - config.generic_weight) * affinity
                })
                .collect();
            let chosen = weighted_sample(&weights, config.positives_per_video, &mut rng);

            let gt: Vec<(f64, f64)> = chosen
                .iter()
                .map(|&i| (i as f64 * CHUNK_S, (i + 1) as f64 * CHUNK_S))
                .collect();
            let segments: Vec<Segment> = features
                .into_iter()
                .enumerate()
                .map(|(i, feature)| Segment {
                    video_id: video_id.clone(),
                    index: i,
                    start_s: i as f64 * CHUNK_S,
                    end_s: (i + 1) as f64 * CHUNK_S,
                    feature,
                })
                .collect();
            video_topics.insert(video_id.clone(), topics);
            videos.push(VideoRecord {
                video_id,
                duration_s: n_seg as f64 * CHUNK_S,
                segments,
                gt_frames: normalize_union(&gt),
                split,
            });
        }

        let target = videos.pop().expect("at least one video");
        users.push(UserRecord {
            user_id: user_id.clone(),
            split,
            histories: videos,
            target,
        });
        meta_users.insert(
            user_id,
            SynthUserMeta {
                main_topic,
                preference,
            },
        );
    }

    Ok(SynthOutput {
        dataset: Dataset {
            users,
            feature_dim: config.feature_dim,
            skipped: Vec::new(),
        },
        meta: SynthMeta {
            topic_appeal,
            users: meta_users,
            video_topics,
        },
    })
}

fn unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Feature {
    let normal = Normal::new(0.0f64, 1.0).expect("valid normal");
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| f64::from((x / norm) as f32)).collect();
        }
    }
}

fn noisy_copy(prototype: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> Feature {
    if sigma == 0.0 {
        return prototype.to_vec();
    }
    let normal = Normal::new(0.0f64, sigma).expect("valid normal");
    prototype
        .iter()
        .map(|&p| f64::from((p + normal.sample(rng)) as f32))
        .collect()
}

/// Sequential weighted sampling without replacement. Stops early if the
/// remaining weight mass vanishes, so zero-weight segments are never chosen;
/// the first draw always succeeds because at least one weight is positive.
fn weighted_sample(weights: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut remaining: Vec<f64> = weights.to_vec();
    let mut picks = Vec::with_capacity(n);
    for _ in 0..n.min(weights.len()) {
        let total: f64 = remaining.iter().sum();
        if total <= 1e-12 {
            break;
        }
        let mut draw = rng.gen_range(0.0..total);
        let mut chosen = remaining.len() - 1;
        for (i, &w) in remaining.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            if draw < w {
                chosen = i;
                break;
            }
            draw -= w;
        }
        picks.push(chosen);
        remaining[chosen] = 0.0;
    }
    picks.sort_unstable();
    picks
}
