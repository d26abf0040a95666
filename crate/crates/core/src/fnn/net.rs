//! Forward and backward passes.
//!
//! Dropout is inverted (activations are scaled by 1/keep at train time), so
//! eval mode applies no rescaling. Batch normalization uses batch statistics
//! at train time and running statistics at eval time; in a pair batch the
//! statistics are computed over all stacked positive and negative rows.

use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FnnGradients, FnnModel, BN_EPS};
use crate::error::{PhdError, Result};

struct BnCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
    mean: Array1<f64>,
    var: Array1<f64>,
}

struct LayerTrace {
    /// Pre-activation values (post batch-norm when enabled).
    pre_activation: Array2<f64>,
    /// Post-activation, post-dropout output fed to the next layer.
    output: Array2<f64>,
    mask: Option<Array2<f64>>,
    bn: Option<BnCache>,
}

struct Trace {
    input: Array2<f64>,
    layers: Vec<LayerTrace>,
}

enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

fn dropout_mask(shape: (usize, usize), rate: f64, rng: &mut ChaCha8Rng) -> Option<Array2<f64>> {
    if rate <= 0.0 {
        return None;
    }
    let keep = 1.0 - rate;
    Some(Array2::from_shape_fn(shape, |_| {
        if rng.gen::<f64>() < keep {
            1.0 / keep
        } else {
            0.0
        }
    }))
}

fn check_finite(name: &str, values: &Array2<f64>) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(PhdError::NonFinite {
            location: name.to_string(),
        });
    }
    Ok(())
}

fn forward_pass(model: &FnnModel, inputs: ArrayView2<f64>, mut mode: Mode) -> Result<(Array1<f64>, Trace)> {
    if inputs.ncols() != model.arch.input_dim() {
        return Err(PhdError::LengthMismatch {
            context: "fnn input".into(),
            left: inputs.ncols(),
            right: model.arch.input_dim(),
        });
    }
    let mut x = inputs.to_owned();
    if let Mode::Train(rng) = &mut mode {
        if let Some(mask) = dropout_mask(x.dim(), model.arch.dropout_input, rng) {
            x *= &mask;
        }
    }
    let trace_input = x.clone();

    let mut layers = Vec::with_capacity(model.hidden.len());
    let mut current = x;
    for (l, layer) in model.hidden.iter().enumerate() {
        let z = current.dot(&layer.w) + &layer.b;
        check_finite(&format!("hidden layer {l} affine"), &z)?;

        let (pre_activation, bn) = if model.arch.batch_norm {
            let bn_layer = &model.batch_norm[l];
            match mode {
                Mode::Train(_) => {
                    let m = z.nrows() as f64;
                    let mean = z.sum_axis(Axis(0)) / m;
                    let centered = &z - &mean;
                    let var = centered.mapv(|v| v * v).sum_axis(Axis(0)) / m;
                    let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                    let xhat = &centered * &inv_std;
                    let y = &xhat * &bn_layer.scale + &bn_layer.shift;
                    (
                        y,
                        Some(BnCache {
                            xhat,
                            inv_std,
                            mean,
                            var,
                        }),
                    )
                }
                Mode::Eval => {
                    let inv_std = bn_layer.running_var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                    let xhat = (&z - &bn_layer.running_mean) * &inv_std;
                    let y = &xhat * &bn_layer.scale + &bn_layer.shift;
                    (y, None)
                }
            }
        } else {
            (z, None)
        };

        let act = model.arch.activation;
        let mut h = pre_activation.mapv(|v| act.apply(v));
        let mask = match &mut mode {
            Mode::Train(rng) => {
                let mask = dropout_mask(h.dim(), model.arch.dropout_hidden, rng);
                if let Some(m) = &mask {
                    h *= m;
                }
                mask
            }
            Mode::Eval => None,
        };
        check_finite(&format!("hidden layer {l} activation"), &h)?;
        layers.push(LayerTrace {
            pre_activation,
            output: h.clone(),
            mask,
            bn,
        });
        current = h;
    }

    let scores =
        current.dot(&model.output.w).column(0).to_owned() + model.output.b[0];
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(PhdError::NonFinite {
            location: "output layer".to_string(),
        });
    }
    Ok((
        scores,
        Trace {
            input: trace_input,
            layers,
        },
    ))
}

fn backward_pass(model: &FnnModel, trace: &Trace, dscores: &Array1<f64>) -> Result<FnnGradients> {
    let mut grads = model.zero_gradients();
    let last_output = trace
        .layers
        .last()
        .map(|l| &l.output)
        .unwrap_or(&trace.input);

    let ds = dscores.view().insert_axis(Axis(1));
    grads.output.w = last_output.t().dot(&ds);
    grads.output.b[0] = dscores.sum();
    let mut dh = ds.dot(&model.output.w.t());

    for l in (0..model.hidden.len()).rev() {
        let layer_trace = &trace.layers[l];
        if let Some(mask) = &layer_trace.mask {
            dh *= mask;
        }
        let act = model.arch.activation;
        let mut dy = &dh * &layer_trace.pre_activation.mapv(|v| act.derivative(v));

        if let Some(bn) = &layer_trace.bn {
            let bn_layer = &model.batch_norm[l];
            grads.batch_norm[l].scale = (&dy * &bn.xhat).sum_axis(Axis(0));
            grads.batch_norm[l].shift = dy.sum_axis(Axis(0));
            let dxhat = &dy * &bn_layer.scale;
            let m = dy.nrows() as f64;
            let sum_dxhat = dxhat.sum_axis(Axis(0));
            let sum_dxhat_xhat = (&dxhat * &bn.xhat).sum_axis(Axis(0));
            dy = (dxhat * m - &sum_dxhat - &bn.xhat * &sum_dxhat_xhat) * &bn.inv_std / m;
        }

        let prev = if l == 0 {
            &trace.input
        } else {
            &trace.layers[l - 1].output
        };
        grads.hidden[l].w = prev.t().dot(&dy);
        grads.hidden[l].b = dy.sum_axis(Axis(0));
        check_finite(&format!("hidden layer {l} gradient"), &grads.hidden[l].w)?;
        dh = dy.dot(&model.hidden[l].w.t());
    }
    Ok(grads)
}

/// Gradients of the mean pairwise hinge loss over a batch of assembled
/// positive/negative input rows, plus the loss value and the batch-norm
/// batch statistics observed during the forward pass.
pub struct GradientOutput {
    pub gradients: FnnGradients,
    pub mean_loss: f64,
    /// (mean, var) per hidden layer; empty when batch norm is off.
    pub bn_batch_stats: Vec<(Array1<f64>, Array1<f64>)>,
}

/// Exact gradient of the mean hinge loss on a pair batch. Dropout masks are
/// drawn from `dropout_seed` and shared between the forward and backward
/// pass of each example.
pub fn gradients(
    model: &FnnModel,
    pos_inputs: ArrayView2<f64>,
    neg_inputs: ArrayView2<f64>,
    margin: f64,
    dropout_seed: u64,
) -> Result<GradientOutput> {
    let n = pos_inputs.nrows();
    if n == 0 || n != neg_inputs.nrows() {
        return Err(PhdError::InvalidData(
            "gradient batch must contain matching positive and negative rows".into(),
        ));
    }
    let stacked = concatenate(Axis(0), &[pos_inputs, neg_inputs])
        .map_err(|e| PhdError::InvalidData(format!("cannot stack pair batch: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let (scores, trace) = forward_pass(model, stacked.view(), Mode::Train(&mut rng))?;

    let inv_n = 1.0 / n as f64;
    let mut mean_loss = 0.0;
    let mut dscores = Array1::zeros(2 * n);
    for i in 0..n {
        let gap = margin - (scores[i] - scores[n + i]);
        if gap > 0.0 {
            mean_loss += gap * inv_n;
            dscores[i] = -inv_n;
            dscores[n + i] = inv_n;
        }
    }
    let gradients = backward_pass(model, &trace, &dscores)?;
    let bn_batch_stats = trace
        .layers
        .iter()
        .filter_map(|l| l.bn.as_ref().map(|c| (c.mean.clone(), c.var.clone())))
        .collect();
    Ok(GradientOutput {
        gradients,
        mean_loss,
        bn_batch_stats,
    })
}

/// Mean pairwise hinge loss on a batch. `dropout_seed: Some(..)` evaluates in
/// train mode with the same mask stream as [`gradients`]; `None` is eval mode.
pub fn batch_loss(
    model: &FnnModel,
    pos_inputs: ArrayView2<f64>,
    neg_inputs: ArrayView2<f64>,
    margin: f64,
    dropout_seed: Option<u64>,
) -> Result<f64> {
    let n = pos_inputs.nrows();
    if n == 0 || n != neg_inputs.nrows() {
        return Err(PhdError::InvalidData(
            "loss batch must contain matching positive and negative rows".into(),
        ));
    }
    let stacked = concatenate(Axis(0), &[pos_inputs, neg_inputs])
        .map_err(|e| PhdError::InvalidData(format!("cannot stack pair batch: {e}")))?;
    let scores = match dropout_seed {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            forward_pass(model, stacked.view(), Mode::Train(&mut rng))?.0
        }
        None => forward_pass(model, stacked.view(), Mode::Eval)?.0,
    };
    let mut loss = 0.0;
    for i in 0..n {
        loss += super::pairwise_loss_margin(scores[i], scores[n + i], margin);
    }
    Ok(loss / n as f64)
}

/// Score a single assembled input. Train mode applies dropout drawn from
/// `dropout_seed`; eval mode is deterministic.
pub fn forward(
    model: &FnnModel,
    input: ArrayView1<f64>,
    train_mode: bool,
    dropout_seed: u64,
) -> Result<f64> {
    let row = input.insert_axis(Axis(0));
    let scores = if train_mode {
        let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
        forward_pass(model, row, Mode::Train(&mut rng))?.0
    } else {
        forward_pass(model, row, Mode::Eval)?.0
    };
    Ok(scores[0])
}

pub(super) fn forward_eval_single(model: &FnnModel, input: ArrayView1<f64>) -> Result<f64> {
    forward(model, input, false, 0)
}

pub(super) fn forward_eval_batch(
    model: &FnnModel,
    inputs: ArrayView2<f64>,
) -> Result<Array1<f64>> {
    Ok(forward_pass(model, inputs, Mode::Eval)?.0)
}

#[cfg(test)]
mod tests {
    use super::super::{
        init_fnn, Activation, FnnArchitecture, FnnModel, FnnVariant,
    };
    use super::*;
    use ndarray::Array2;
    use rand::Rng;

    fn arch(
        feature_dim: usize,
        hidden: Vec<usize>,
        activation: Activation,
        batch_norm: bool,
        dropout: (f64, f64),
    ) -> FnnArchitecture {
        FnnArchitecture {
            variant: FnnVariant::Generic,
            feature_dim,
            distance_k: 0,
            hidden_sizes: hidden,
            activation,
            dropout_input: dropout.0,
            dropout_hidden: dropout.1,
            batch_norm,
        }
    }

    fn random_batch(n: usize, dim: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = Array2::from_shape_fn((n, dim), |_| rng.gen_range(-1.0..1.0));
        let neg = Array2::from_shape_fn((n, dim), |_| rng.gen_range(-1.0..1.0));
        (pos, neg)
    }

    /// Trainable parameters in declaration order.
    fn param_vector(model: &FnnModel) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, l) in model.hidden.iter().enumerate() {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
            if model.arch.batch_norm {
                out.extend(model.batch_norm[i].scale.iter());
                out.extend(model.batch_norm[i].shift.iter());
            }
        }
        out.extend(model.output.w.iter());
        out.extend(model.output.b.iter());
        out
    }

    fn with_params(template: &FnnModel, params: &[f64]) -> FnnModel {
        let mut model = template.clone();
        let mut it = params.iter().copied();
        for i in 0..model.hidden.len() {
            for v in model.hidden[i].w.iter_mut() {
                *v = it.next().unwrap();
            }
            for v in model.hidden[i].b.iter_mut() {
                *v = it.next().unwrap();
            }
            if model.arch.batch_norm {
                for v in model.batch_norm[i].scale.iter_mut() {
                    *v = it.next().unwrap();
                }
                for v in model.batch_norm[i].shift.iter_mut() {
                    *v = it.next().unwrap();
                }
            }
        }
        for v in model.output.w.iter_mut() {
            *v = it.next().unwrap();
        }
        for v in model.output.b.iter_mut() {
            *v = it.next().unwrap();
        }
        assert!(it.next().is_none());
        model
    }

    fn gradient_vector(model: &FnnModel, grads: &FnnGradients) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, l) in grads.hidden.iter().enumerate() {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
            if model.arch.batch_norm {
                out.extend(grads.batch_norm[i].scale.iter());
                out.extend(grads.batch_norm[i].shift.iter());
            }
        }
        out.extend(grads.output.w.iter());
        out.extend(grads.output.b.iter());
        out
    }

    /// Central finite differences against the analytic gradient. The same
    /// dropout seed pins the masks, so the loss is a deterministic function
    /// of the parameters.
    fn check_gradients(model: &FnnModel, n_pairs: usize, data_seed: u64, max_rel: f64) {
        let (pos, neg) = random_batch(n_pairs, model.arch.input_dim(), data_seed);
        let dropout_seed = 5;
        let out = gradients(model, pos.view(), neg.view(), 1.0, dropout_seed).unwrap();
        let analytic = gradient_vector(model, &out.gradients);
        let theta = param_vector(model);
        let eps = 1e-5;
        for i in 0..theta.len() {
            let mut plus = theta.clone();
            plus[i] += eps;
            let mut minus = theta.clone();
            minus[i] -= eps;
            let lp = batch_loss(
                &with_params(model, &plus),
                pos.view(),
                neg.view(),
                1.0,
                Some(dropout_seed),
            )
            .unwrap();
            let lm = batch_loss(
                &with_params(model, &minus),
                pos.view(),
                neg.view(),
                1.0,
                Some(dropout_seed),
            )
            .unwrap();
            let numeric = (lp - lm) / (2.0 * eps);
            // the 1e-6 floor absorbs pure cancellation noise on zero
            // gradients (the finite-difference resolution is ~1e-11)
            let denom = analytic[i].abs().max(numeric.abs()).max(1e-6);
            let rel = (analytic[i] - numeric).abs() / denom;
            assert!(
                rel <= max_rel,
                "param {i}: analytic {} vs numeric {} (rel {rel})",
                analytic[i],
                numeric
            );
        }
    }

    #[test]
    fn zero_network_scores_equal_output_bias() {
        let a = arch(3, vec![4], Activation::Relu, false, (0.0, 0.0));
        let mut model = init_fnn(&a, 0).unwrap();
        for l in model.hidden.iter_mut() {
            l.w.fill(0.0);
            l.b.fill(0.0);
        }
        model.output.w.fill(0.0);
        model.output.b[0] = 0.37;
        for seed in 0..5u64 {
            let (pos, _) = random_batch(1, 3, seed);
            let score = forward(&model, pos.row(0), false, 0).unwrap();
            assert_eq!(score, 0.37);
        }
    }

    #[test]
    fn eval_mode_is_deterministic() {
        let a = arch(4, vec![8, 4], Activation::Selu, true, (0.6, 0.3));
        let model = init_fnn(&a, 3).unwrap();
        let (pos, _) = random_batch(1, 4, 1);
        let s1 = forward(&model, pos.row(0), false, 11).unwrap();
        let s2 = forward(&model, pos.row(0), false, 99).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn train_mode_is_deterministic_in_the_seed() {
        let a = arch(4, vec![8], Activation::Relu, false, (0.5, 0.2));
        let model = init_fnn(&a, 3).unwrap();
        let (pos, _) = random_batch(1, 4, 1);
        let s1 = forward(&model, pos.row(0), true, 11).unwrap();
        let s2 = forward(&model, pos.row(0), true, 11).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn linear_model_matches_closed_form() {
        // no hidden layers: score = w . x + b
        let a = arch(3, vec![], Activation::Relu, false, (0.0, 0.0));
        let mut model = init_fnn(&a, 0).unwrap();
        model.output.w = Array2::from_shape_vec((3, 1), vec![0.5, -1.5, 2.0]).unwrap();
        model.output.b[0] = 0.25;
        let x = ndarray::arr1(&[1.0, 2.0, -1.0]);
        let expected = 0.5 * 1.0 - 1.5 * 2.0 - 2.0 + 0.25;
        let score = forward(&model, x.view(), false, 0).unwrap();
        assert!((score - expected).abs() < 1e-12);
    }

    #[test]
    fn satisfied_margin_gives_zero_gradient() {
        let a = arch(3, vec![4], Activation::Relu, false, (0.0, 0.0));
        let mut model = init_fnn(&a, 1).unwrap();
        // score = first input coordinate
        for l in model.hidden.iter_mut() {
            l.w.fill(0.0);
        }
        model.hidden[0].w[(0, 0)] = 1.0;
        model.output.w.fill(0.0);
        model.output.w[(0, 0)] = 1.0;
        let pos = Array2::from_shape_vec((2, 3), vec![5.0, 0.0, 0.0, 6.0, 0.0, 0.0]).unwrap();
        let neg = Array2::from_shape_vec((2, 3), vec![1.0, 0.0, 0.0, 2.0, 0.0, 0.0]).unwrap();
        let out = gradients(&model, pos.view(), neg.view(), 1.0, 0).unwrap();
        assert_eq!(out.mean_loss, 0.0);
        for v in gradient_vector(&model, &out.gradients) {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn duplicated_batch_leaves_mean_gradient_unchanged() {
        let a = arch(4, vec![6], Activation::Relu, false, (0.0, 0.0));
        let model = init_fnn(&a, 2).unwrap();
        let (pos, neg) = random_batch(3, 4, 9);
        let single = gradients(&model, pos.view(), neg.view(), 1.0, 0).unwrap();
        let pos2 = concatenate(Axis(0), &[pos.view(), pos.view()]).unwrap();
        let neg2 = concatenate(Axis(0), &[neg.view(), neg.view()]).unwrap();
        let doubled = gradients(&model, pos2.view(), neg2.view(), 1.0, 0).unwrap();
        let g1 = gradient_vector(&model, &single.gradients);
        let g2 = gradient_vector(&model, &doubled.gradients);
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((single.mean_loss - doubled.mean_loss).abs() < 1e-12);
    }

    #[test]
    fn finite_differences_relu() {
        let a = arch(8, vec![16, 4], Activation::Relu, false, (0.0, 0.0));
        let model = init_fnn(&a, 17).unwrap();
        check_gradients(&model, 6, 31, 1e-4);
    }

    #[test]
    fn finite_differences_selu() {
        let a = arch(6, vec![10, 5], Activation::Selu, false, (0.0, 0.0));
        let model = init_fnn(&a, 23).unwrap();
        check_gradients(&model, 5, 37, 1e-4);
    }

    #[test]
    fn finite_differences_batch_norm() {
        let a = arch(5, vec![8, 4], Activation::Selu, true, (0.0, 0.0));
        let model = init_fnn(&a, 29).unwrap();
        check_gradients(&model, 6, 41, 1e-4);
    }

    #[test]
    fn finite_differences_with_dropout_masks_pinned() {
        let a = arch(6, vec![12], Activation::Relu, false, (0.4, 0.2));
        let model = init_fnn(&a, 31).unwrap();
        check_gradients(&model, 6, 43, 1e-4);
    }

    #[test]
    fn bn_batch_stats_are_reported() {
        let a = arch(4, vec![6, 3], Activation::Relu, true, (0.0, 0.0));
        let model = init_fnn(&a, 5).unwrap();
        let (pos, neg) = random_batch(4, 4, 3);
        let out = gradients(&model, pos.view(), neg.view(), 1.0, 0).unwrap();
        assert_eq!(out.bn_batch_stats.len(), 2);
        assert_eq!(out.bn_batch_stats[0].0.len(), 6);
        assert_eq!(out.bn_batch_stats[1].0.len(), 3);
    }

    #[test]
    fn input_dimension_mismatch_is_an_error() {
        let a = arch(4, vec![6], Activation::Relu, false, (0.0, 0.0));
        let model = init_fnn(&a, 5).unwrap();
        let x = ndarray::arr1(&[1.0, 2.0]);
        assert!(forward(&model, x.view(), false, 0).is_err());
    }
}
