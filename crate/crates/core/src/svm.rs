//! Linear ranking SVM on preference pairs.
//!
//! Minimizes `0.5 |w|^2 + C * sum_i max(0, 1 - w . (x+_i - x-_i))` over the
//! pair difference vectors. The bias cancels in pairwise training and is
//! fixed to zero. The solver is deterministic batch projected-subgradient
//! descent with harmonic step decay, accelerated by an exact line search in
//! the scale of `w` and by active-set jumps that are only accepted when they
//! lower the objective.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{PhdError, Result};

pub const SVM_MAGIC: &[u8; 8] = b"PHDSVM01";

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Regularization strength the model was trained with.
    pub c: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RankSvmParams {
    pub c: f64,
    /// Relative convergence tolerance on the objective.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for RankSvmParams {
    fn default() -> Self {
        RankSvmParams {
            c: 1.0,
            tol: 1e-3,
            max_iters: 100_000,
        }
    }
}

/// The training objective at `w` for the given pair differences.
pub fn rank_svm_objective(w: &[f64], diffs: &[Vec<f64>], c: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = diffs
        .iter()
        .map(|d| (1.0 - dot(w, d)).max(0.0))
        .sum();
    reg + c * hinge
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Train on (positive, negative) feature pairs.
pub fn train_rank_svm(pairs: &[(Vec<f64>, Vec<f64>)], params: RankSvmParams) -> Result<LinearModel> {
    if pairs.is_empty() {
        return Err(PhdError::InvalidData("no training pairs".into()));
    }
    if params.c <= 0.0 || params.tol <= 0.0 || params.max_iters == 0 {
        return Err(PhdError::InvalidConfig(
            "rank svm needs c > 0, tol > 0 and a positive iteration budget".into(),
        ));
    }
    let dim = pairs[0].0.len();
    if dim == 0 {
        return Err(PhdError::InvalidData("zero-dimension features".into()));
    }
    let mut diffs = Vec::with_capacity(pairs.len());
    for (pos, neg) in pairs {
        if pos.len() != dim || neg.len() != dim {
            return Err(PhdError::LengthMismatch {
                context: "rank svm pair".into(),
                left: pos.len(),
                right: neg.len(),
            });
        }
        diffs.push(pos.iter().zip(neg.iter()).map(|(p, n)| p - n).collect::<Vec<f64>>());
    }
    let w = solve(&diffs, params)?;
    Ok(LinearModel {
        weights: w,
        bias: 0.0,
        c: params.c,
    })
}

fn solve(diffs: &[Vec<f64>], params: RankSvmParams) -> Result<Vec<f64>> {
    let dim = diffs[0].len();
    let n = diffs.len() as f64;
    let c = params.c;
    // f(w*) <= f(0) = C*n, so |w*| <= sqrt(2*C*n); projecting onto this ball
    // keeps the subgradients bounded
    let radius = (2.0 * c * n).sqrt();

    let mut w = vec![0.0; dim];
    let mut best_w = w.clone();
    let mut best_f = rank_svm_objective(&w, diffs, c);
    let improve_eps = |f: f64| params.tol * 0.1 * (1.0 + f.abs());
    let stall_window = 500usize;
    let mut last_improvement = 0usize;
    let mut converged = false;

    let mut margins = vec![0.0; diffs.len()];
    for t in 0..params.max_iters {
        for (m, d) in margins.iter_mut().zip(diffs.iter()) {
            *m = dot(&w, d);
        }
        let f = {
            let hinge: f64 = margins.iter().map(|&m| (1.0 - m).max(0.0)).sum();
            0.5 * w.iter().map(|v| v * v).sum::<f64>() + c * hinge
        };
        if !f.is_finite() {
            return Err(PhdError::NonFinite {
                location: "rank svm objective".into(),
            });
        }
        if f < best_f - improve_eps(best_f) {
            last_improvement = t;
        }
        if f < best_f {
            best_f = f;
            best_w.copy_from_slice(&w);
        }
        if t.saturating_sub(last_improvement) >= stall_window {
            converged = true;
            break;
        }

        // subgradient step with harmonic decay
        let step = 1.0 / (t as f64 + 2.0);
        let mut grad = w.clone();
        for (d, &m) in diffs.iter().zip(margins.iter()) {
            if m < 1.0 {
                for (g, x) in grad.iter_mut().zip(d.iter()) {
                    *g -= c * x;
                }
            }
        }
        for (wi, gi) in w.iter_mut().zip(grad.iter()) {
            *wi -= step * gi;
        }
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            let scale = radius / norm;
            for wi in w.iter_mut() {
                *wi *= scale;
            }
        }

        if t % 25 == 24 {
            polish(&mut w, diffs, c);
            let f = rank_svm_objective(&w, diffs, c);
            if f < best_f - improve_eps(best_f) {
                last_improvement = t;
            }
            if f < best_f {
                best_f = f;
                best_w.copy_from_slice(&w);
            }
        }
    }

    // refine the incumbent to a fixpoint of the two exact moves
    let mut f = best_f;
    for _ in 0..50 {
        polish(&mut best_w, diffs, c);
        let nf = rank_svm_objective(&best_w, diffs, c);
        if nf >= f - 1e-14 * (1.0 + f.abs()) {
            f = f.min(nf);
            break;
        }
        f = nf;
    }

    if !converged {
        return Err(PhdError::NonConvergence {
            iterations: params.max_iters,
            objective: f,
        });
    }
    Ok(best_w)
}

/// One exact scale line search followed by one active-set jump, each applied
/// only if it lowers the objective.
fn polish(w: &mut Vec<f64>, diffs: &[Vec<f64>], c: f64) {
    scale_line_search(w, diffs, c);
    active_set_jump(w, diffs, c);
}

/// Minimize `f(s * w)` exactly over `s >= 0`: the function is piecewise
/// quadratic in `s` with breakpoints where hinges (de)activate.
fn scale_line_search(w: &mut [f64], diffs: &[Vec<f64>], c: f64) {
    let w_norm2: f64 = w.iter().map(|v| v * v).sum();
    if w_norm2 <= 0.0 {
        return;
    }
    let margins: Vec<f64> = diffs.iter().map(|d| dot(w, d)).collect();
    // hinges with non-positive margin stay active for every s >= 0
    let mut k_act = 0.0f64;
    let mut s_act = 0.0f64;
    let mut positive: Vec<f64> = Vec::new();
    for &m in &margins {
        if m > 0.0 {
            positive.push(m);
        } else {
            k_act += 1.0;
            s_act += m;
        }
    }
    // breakpoints 1/m ascending <=> margins descending
    positive.sort_by(|a, b| b.partial_cmp(a).expect("finite margins"));
    let mut k = k_act + positive.len() as f64;
    let mut s = s_act + positive.iter().sum::<f64>();

    let eval = |scale: f64, k: f64, s: f64| 0.5 * w_norm2 * scale * scale + c * (k - scale * s);
    let mut best_scale = 1.0;
    let mut best_f = {
        // objective at the current w (scale 1) computed directly
        let hinge: f64 = margins.iter().map(|&m| (1.0 - m).max(0.0)).sum();
        0.5 * w_norm2 + c * hinge
    };
    let consider = |scale: f64, k: f64, s: f64, best_f: &mut f64, best_scale: &mut f64| {
        let f = eval(scale, k, s);
        if f < *best_f {
            *best_f = f;
            *best_scale = scale;
        }
    };

    let mut lo = 0.0f64;
    for (i, &m) in positive.iter().enumerate() {
        let hi = 1.0 / m;
        let unconstrained = c * s / w_norm2;
        let clipped = unconstrained.clamp(lo, hi);
        consider(clipped, k, s, &mut best_f, &mut best_scale);
        // crossing the breakpoint deactivates this hinge
        k -= 1.0;
        s -= m;
        lo = hi;
        if i == positive.len() - 1 || positive[i + 1] < m {
            consider(hi, k, s, &mut best_f, &mut best_scale);
        }
    }
    // final interval: only the always-active hinges remain
    let unconstrained = if w_norm2 > 0.0 { c * s / w_norm2 } else { 0.0 };
    consider(unconstrained.max(lo), k, s, &mut best_f, &mut best_scale);

    if best_scale != 1.0 {
        for wi in w.iter_mut() {
            *wi *= best_scale;
        }
    }
}

/// Jump to the unconstrained minimizer of the quadratic model induced by the
/// current active set; accept only on improvement.
fn active_set_jump(w: &mut Vec<f64>, diffs: &[Vec<f64>], c: f64) {
    let current = rank_svm_objective(w, diffs, c);
    let mut cand = vec![0.0; w.len()];
    for d in diffs {
        if dot(w, d) < 1.0 {
            for (ci, xi) in cand.iter_mut().zip(d.iter()) {
                *ci += c * xi;
            }
        }
    }
    if rank_svm_objective(&cand, diffs, c) < current {
        *w = cand;
    }
}

/// Score features with a trained model.
pub fn svm_score(model: &LinearModel, features: &[f64]) -> Result<f64> {
    if features.len() != model.weights.len() {
        return Err(PhdError::LengthMismatch {
            context: "svm_score".into(),
            left: features.len(),
            right: model.weights.len(),
        });
    }
    Ok(dot(&model.weights, features) + model.bias)
}

/// Fraction of pairs ranked correctly (strictly) by the model.
pub fn pair_accuracy(model: &LinearModel, pairs: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let correct = pairs
        .iter()
        .filter(|(p, n)| dot(&model.weights, p) > dot(&model.weights, n))
        .count();
    correct as f64 / pairs.len() as f64
}

/// A training pair for the per-user residual model: raw segment features plus
/// the generic model's score for each side.
#[derive(Debug, Clone)]
pub struct ResidualPair {
    pub pos_features: Vec<f64>,
    pub pos_generic_score: f64,
    pub neg_features: Vec<f64>,
    pub neg_generic_score: f64,
}

/// Per-user residual model: a ranking SVM over `[segment; generic_score]`,
/// with the generic score standardized over the user's training pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualModel {
    pub linear: LinearModel,
    pub score_mean: f64,
    pub score_std: f64,
}

impl ResidualModel {
    pub fn score(&self, features: &[f64], generic_score: f64) -> Result<f64> {
        let mut augmented = Vec::with_capacity(features.len() + 1);
        augmented.extend_from_slice(features);
        augmented.push((generic_score - self.score_mean) / self.score_std);
        svm_score(&self.linear, &augmented)
    }
}

/// Train a residual model on one user's pairs. Errors on an empty pair list;
/// the caller falls back to the generic scorer for such users.
pub fn train_residual(pairs: &[ResidualPair], params: RankSvmParams) -> Result<ResidualModel> {
    if pairs.is_empty() {
        return Err(PhdError::InvalidData(
            "residual model needs at least one pair".into(),
        ));
    }
    let scores: Vec<f64> = pairs
        .iter()
        .flat_map(|p| [p.pos_generic_score, p.neg_generic_score])
        .collect();
    let (mean, std) = crate::util::mean_std(&scores);
    // constant generic scores carry no residual signal; keep the scale sane
    let std = if std > 1e-12 { std } else { 1.0 };

    let augmented: Vec<(Vec<f64>, Vec<f64>)> = pairs
        .iter()
        .map(|p| {
            let mut pos = p.pos_features.clone();
            pos.push((p.pos_generic_score - mean) / std);
            let mut neg = p.neg_features.clone();
            neg.push((p.neg_generic_score - mean) / std);
            (pos, neg)
        })
        .collect();
    Ok(ResidualModel {
        linear: train_rank_svm(&augmented, params)?,
        score_mean: mean,
        score_std: std,
    })
}

/// Write a checkpoint: magic, dimension, then weights and bias.
pub fn save_svm(model: &LinearModel, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| PhdError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| PhdError::io(path, e);
    w.write_all(SVM_MAGIC).map_err(io_err)?;
    w.write_all(&(model.weights.len() as u32).to_le_bytes())
        .map_err(io_err)?;
    for v in &model.weights {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    w.write_all(&model.bias.to_le_bytes()).map_err(io_err)?;
    Ok(())
}

/// Load a checkpoint written by [`save_svm`]. The regularization strength is
/// a training-time parameter and is not persisted; the loaded model scores
/// identically either way.
pub fn load_svm(path: &Path) -> Result<LinearModel> {
    let file = fs::File::open(path).map_err(|e| PhdError::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| PhdError::io(path, e))?;
    if &magic != SVM_MAGIC {
        return Err(PhdError::Checkpoint {
            path: path.to_path_buf(),
            message: "wrong magic".to_string(),
        });
    }
    let mut dim_buf = [0u8; 4];
    r.read_exact(&mut dim_buf).map_err(|e| PhdError::io(path, e))?;
    let dim = u32::from_le_bytes(dim_buf) as usize;
    let read_f64 = |r: &mut BufReader<fs::File>| -> Result<f64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(|e| PhdError::io(path, e))?;
        Ok(f64::from_le_bytes(b))
    };
    let mut weights = Vec::with_capacity(dim);
    for _ in 0..dim {
        weights.push(read_f64(&mut r)?);
    }
    let bias = read_f64(&mut r)?;
    if weights.iter().any(|v| !v.is_finite()) || !bias.is_finite() {
        return Err(PhdError::Checkpoint {
            path: path.to_path_buf(),
            message: "non-finite parameters".to_string(),
        });
    }
    Ok(LinearModel {
        weights,
        bias,
        c: 1.0,
    })
}
