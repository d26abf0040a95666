//! Personalized highlight detection over precomputed video-segment features.
//!
//! A single global ranker is conditioned on a user's previously selected
//! highlights: a feed-forward pairwise ranker sees the segment descriptor
//! concatenated with the mean history profile, a distance-based ranking SVM
//! sees the cosine distances to the nearest history elements, and their late
//! fusion combines both. Training-free baselines (random, max similarity,
//! mean similarity), a per-user residual model and a generic ranker share
//! the same evaluation protocol: per-video average precision, normalized
//! meaningful summary duration and Recall@5.

pub mod ablation;
pub mod dataset;
pub mod error;
pub mod fnn;
pub mod fusion;
pub mod metrics;
pub mod scorers;
pub mod svm;
pub mod sweep;
pub mod train;
pub mod util;
pub mod vecmath;

pub use dataset::{
    build_history, chunk::chunk_segments, chunk::ChunkMode, full_history, label_segments,
    manifest::load_manifest, manifest::write_dataset, sample_pairs, synth::generate_synthetic,
    synth::SynthConfig, Dataset, Segment, Split, TrainingPair, UserHistory, UserRecord,
    VideoRecord,
};
pub use error::{PhdError, Result};
pub use fnn::{
    init_fnn, load_fnn, pairwise_loss, save_fnn, score_segment, Activation, FnnArchitecture,
    FnnModel, FnnVariant,
};
pub use fusion::{fuse, learn_fusion_weight, FusedScorer, FusionOutcome, FusionWeights};
pub use metrics::{average_precision, evaluate, nmsd, recall_at_n, EvalReport, RankedVideo};
pub use scorers::{
    max_similarity, video_mmr, FnnScorer, HighlightSvmScorer, MaxSimilarityScorer, RandomScorer,
    Scorer, ScoreRequest, SvmDScorer, VideoMmrScorer,
};
pub use svm::{load_svm, save_svm, svm_score, train_rank_svm, LinearModel, RankSvmParams};
pub use sweep::{hyperparameter_search, SweepResult, SweepSpace};
pub use train::{
    learn_fusion, rmsprop_step, train_fnn, train_highlight_svm, train_svm_d, FnnTrainSpec,
    TrainConfig, TrainOutcome,
};
pub use vecmath::{aggregate_mean, cosine_distance, distance_features, DistanceFeatures, Feature};
