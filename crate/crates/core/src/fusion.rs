//! Late fusion of the feed-forward ranker with the distance-based SVM.
//!
//! The fused score is `score_fnn + omega * score_svm`. The weight is learned
//! on held-out validation pairs with a two-feature ranking SVM; because the
//! two component scorers differ in the range of their predictions, both
//! channels are standardized before fitting and the learned weight is mapped
//! back to raw-score units.

use serde::{Deserialize, Serialize};

use crate::error::{PhdError, Result};
use crate::fnn::FnnModel;
use crate::scorers::{FnnScorer, Scorer, ScoreRequest, SvmDScorer};
use crate::svm::{train_rank_svm, LinearModel, RankSvmParams};
use crate::util::mean_std;
use crate::vecmath::DistancePad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub omega: f64,
}

/// `score_fnn + omega * score_svm`.
pub fn fuse(score_fnn: f64, score_svm: f64, w: FusionWeights) -> f64 {
    score_fnn + w.omega * score_svm
}

/// Component scores of one validation pair.
#[derive(Debug, Clone, Copy)]
pub struct FusionPair {
    pub fnn_pos: f64,
    pub svm_pos: f64,
    pub fnn_neg: f64,
    pub svm_neg: f64,
}

/// Outcome of weight learning, with enough provenance for the experiment
/// report.
#[derive(Debug, Clone, Serialize)]
pub struct FusionOutcome {
    pub weights: FusionWeights,
    /// The weight in standardized-score units.
    pub standardized_omega: f64,
    /// True when the ranking SVM preferred to flip the FNN and the weight
    /// came from the grid search fallback instead.
    pub used_grid_fallback: bool,
    /// Pair accuracy on the provided validation pairs at the learned weight.
    pub pair_accuracy: f64,
}

const OMEGA_GRID_LIMIT: f64 = 5.0;
const OMEGA_GRID_POINTS: usize = 1001;

/// Candidate regularization strengths for the fusion SVM, in preference
/// order: on an accuracy tie the value closest to the default wins.
const FUSION_C_GRID: [f64; 7] = [1.0, 0.3, 3.0, 0.1, 10.0, 0.03, 30.0];

/// The learned weight must rank validation pairs within this margin of the
/// dense grid's best weight; otherwise the grid value takes over.
const PLATEAU_MARGIN: f64 = 0.005;

/// Learn the fusion weight from validation pairs scored by both components.
///
/// A two-feature ranking SVM is fit on the standardized scores for each
/// candidate regularization strength and the ratio `w2/w1` that ranks the
/// validation pairs best is kept, provided it stays on the pair-accuracy
/// plateau of a dense grid over the weight. The grid value takes over when
/// every fit prefers to flip the FNN (`w1 <= 0`) or when the SVM weight
/// falls off the plateau.
pub fn learn_fusion_weight(pairs: &[FusionPair]) -> Result<FusionOutcome> {
    if pairs.is_empty() {
        return Err(PhdError::InvalidData(
            "fusion weight learning needs validation pairs".into(),
        ));
    }
    let fnn_scores: Vec<f64> = pairs.iter().flat_map(|p| [p.fnn_pos, p.fnn_neg]).collect();
    let svm_scores: Vec<f64> = pairs.iter().flat_map(|p| [p.svm_pos, p.svm_neg]).collect();
    let (fnn_mean, fnn_std_raw) = mean_std(&fnn_scores);
    let (svm_mean, svm_std_raw) = mean_std(&svm_scores);
    // a constant channel carries no ranking signal; keep the rescaling sane
    let fnn_std = if fnn_std_raw > 1e-12 { fnn_std_raw } else { 1.0 };
    let svm_std = if svm_std_raw > 1e-12 { svm_std_raw } else { 1.0 };

    let std_pairs: Vec<([f64; 2], [f64; 2])> = pairs
        .iter()
        .map(|p| {
            (
                [(p.fnn_pos - fnn_mean) / fnn_std, (p.svm_pos - svm_mean) / svm_std],
                [(p.fnn_neg - fnn_mean) / fnn_std, (p.svm_neg - svm_mean) / svm_std],
            )
        })
        .collect();

    let svm_input: Vec<(Vec<f64>, Vec<f64>)> = std_pairs
        .iter()
        .map(|(p, n)| (p.to_vec(), n.to_vec()))
        .collect();

    let mut best: Option<(f64, f64)> = None; // (omega, accuracy)
    for c in FUSION_C_GRID {
        let model = train_rank_svm(
            &svm_input,
            RankSvmParams {
                c,
                ..Default::default()
            },
        )?;
        if model.weights[0] <= 0.0 {
            continue;
        }
        let omega = model.weights[1] / model.weights[0];
        let acc = accuracy_at(&std_pairs, omega);
        if best.is_none_or(|(_, b)| acc > b) {
            best = Some((omega, acc));
        }
    }
    let grid_omega = grid_search_omega(&std_pairs);
    let grid_acc = accuracy_at(&std_pairs, grid_omega);
    let (standardized_omega, used_grid_fallback) = match best {
        Some((omega, acc)) if acc >= grid_acc - PLATEAU_MARGIN => (omega, false),
        Some((omega, acc)) => {
            log::warn!(
                "fusion SVM weight {omega:.4} ranks {acc:.4} vs grid {grid_acc:.4}; using the grid weight"
            );
            (grid_omega, true)
        }
        None => {
            // the fused form fixes the FNN coefficient to +1, so a
            // non-positive FNN weight cannot be honored
            log::warn!("fusion SVM flipped the FNN at every C; falling back to grid search");
            (grid_omega, true)
        }
    };
    let accuracy = accuracy_at(&std_pairs, standardized_omega);
    // the svm channel carried no variance: fusing it cannot help, pin to 0
    let omega = if svm_std_raw <= 1e-12 {
        0.0
    } else {
        standardized_omega * fnn_std / svm_std
    };
    Ok(FusionOutcome {
        weights: FusionWeights { omega },
        standardized_omega,
        used_grid_fallback,
        pair_accuracy: accuracy,
    })
}

/// Pair accuracy of `fnn + omega * svm` on standardized pairs.
pub fn accuracy_at(pairs: &[([f64; 2], [f64; 2])], omega: f64) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let correct = pairs
        .iter()
        .filter(|(p, n)| p[0] + omega * p[1] > n[0] + omega * n[1])
        .count();
    correct as f64 / pairs.len() as f64
}

/// Dense grid over the standardized weight, ties resolved toward 0.
fn grid_search_omega(pairs: &[([f64; 2], [f64; 2])]) -> f64 {
    let mut candidates: Vec<f64> = (0..OMEGA_GRID_POINTS)
        .map(|i| -OMEGA_GRID_LIMIT + 2.0 * OMEGA_GRID_LIMIT * i as f64 / (OMEGA_GRID_POINTS - 1) as f64)
        .collect();
    candidates.sort_by(|a, b| {
        a.abs()
            .partial_cmp(&b.abs())
            .expect("finite grid")
            .then(a.partial_cmp(b).expect("finite grid"))
    });
    let mut best = 0.0;
    let mut best_acc = f64::NEG_INFINITY;
    for omega in candidates {
        let acc = accuracy_at(pairs, omega);
        if acc > best_acc {
            best_acc = acc;
            best = omega;
        }
    }
    best
}

/// The persisted form of a fusion-learning run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionReport {
    pub fusion_omega: f64,
    pub standardized_omega: f64,
    pub used_grid_fallback: bool,
    pub val_pair_accuracy: f64,
}

impl From<&FusionOutcome> for FusionReport {
    fn from(outcome: &FusionOutcome) -> Self {
        FusionReport {
            fusion_omega: outcome.weights.omega,
            standardized_omega: outcome.standardized_omega,
            used_grid_fallback: outcome.used_grid_fallback,
            val_pair_accuracy: outcome.pair_accuracy,
        }
    }
}

/// The late-fused scorer: FNN plus weighted distance SVM.
pub struct FusedScorer {
    fnn: FnnScorer,
    svm: SvmDScorer,
    pub weights: FusionWeights,
    name: String,
}

impl FusedScorer {
    pub fn new(fnn: FnnModel, svm: LinearModel, weights: FusionWeights) -> Self {
        Self::with_pad(fnn, svm, weights, DistancePad::Zero)
    }

    pub fn with_pad(
        fnn: FnnModel,
        svm: LinearModel,
        weights: FusionWeights,
        pad: DistancePad,
    ) -> Self {
        let fnn = FnnScorer::with_pad(fnn, pad);
        let name = format!("{}+svm-d", fnn.name());
        FusedScorer {
            fnn,
            svm: SvmDScorer { model: svm, pad },
            weights,
            name,
        }
    }
}

impl Scorer for FusedScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn requires_history(&self) -> bool {
        true
    }

    fn score_video(&self, req: &ScoreRequest<'_>) -> Result<Vec<f64>> {
        let fnn_scores = self.fnn.score_video(req)?;
        let svm_scores = self.svm.score_video(req)?;
        Ok(fnn_scores
            .into_iter()
            .zip(svm_scores)
            .map(|(f, s)| fuse(f, s, self.weights))
            .collect())
    }
}
