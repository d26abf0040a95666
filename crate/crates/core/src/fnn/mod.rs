//! Feed-forward pairwise ranker.
//!
//! Three input variants share one network shape: the generic scorer sees the
//! segment descriptor alone, the history-conditioned scorer appends the mean
//! history profile, and the early-fusion variant additionally appends the
//! distance features.

mod net;

pub use net::{batch_loss, forward, gradients, GradientOutput};

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PhdError, Result};

pub const FNN_MAGIC: &[u8; 8] = b"PHDFNN01";

/// Standard SELU constants.
pub const SELU_LAMBDA: f64 = 1.05070098;
pub const SELU_ALPHA: f64 = 1.67326324;

/// Momentum of the batch-normalization running statistics.
pub const BN_MOMENTUM: f64 = 0.99;
pub(crate) const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Selu,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Selu => {
                if v > 0.0 {
                    SELU_LAMBDA * v
                } else {
                    SELU_LAMBDA * SELU_ALPHA * (v.exp() - 1.0)
                }
            }
        }
    }

    /// Right derivative at the kink.
    pub fn derivative(self, v: f64) -> f64 {
        match self {
            Activation::Relu => {
                if v >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Selu => {
                if v >= 0.0 {
                    SELU_LAMBDA
                } else {
                    SELU_LAMBDA * SELU_ALPHA * v.exp()
                }
            }
        }
    }
}

/// Which inputs the network consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FnnVariant {
    /// Segment descriptor only.
    Generic,
    /// Segment descriptor concatenated with the mean history profile.
    PhdCa,
    /// Segment, profile and distance features concatenated.
    PhdCaEd,
}

impl FnnVariant {
    pub fn uses_history(self) -> bool {
        !matches!(self, FnnVariant::Generic)
    }

    pub fn uses_distances(self) -> bool {
        matches!(self, FnnVariant::PhdCaEd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnArchitecture {
    pub variant: FnnVariant,
    pub feature_dim: usize,
    /// Capacity of the distance vector (early-fusion variant only).
    pub distance_k: usize,
    pub hidden_sizes: Vec<usize>,
    pub activation: Activation,
    pub dropout_input: f64,
    pub dropout_hidden: f64,
    pub batch_norm: bool,
}

impl FnnArchitecture {
    pub fn input_dim(&self) -> usize {
        match self.variant {
            FnnVariant::Generic => self.feature_dim,
            FnnVariant::PhdCa => 2 * self.feature_dim,
            FnnVariant::PhdCaEd => 2 * self.feature_dim + self.distance_k,
        }
    }

    /// Basic shape validity. An empty hidden list is a plain linear scorer,
    /// which the tests use as a closed-form oracle.
    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 {
            return Err(PhdError::InvalidConfig("feature_dim must be > 0".into()));
        }
        if self.variant.uses_distances() && self.distance_k == 0 {
            return Err(PhdError::InvalidConfig(
                "distance_k must be > 0 for the early-fusion variant".into(),
            ));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(PhdError::InvalidConfig("hidden layer of size 0".into()));
        }
        for d in [self.dropout_input, self.dropout_hidden] {
            if !(0.0..1.0).contains(&d) {
                return Err(PhdError::InvalidConfig(format!(
                    "dropout rate {d} outside [0, 1)"
                )));
            }
        }
        Ok(())
    }

    /// The constraints of the hyperparameter search space: 1-3 hidden layers
    /// of at most 512 units, non-increasing, and the searched dropout ranges.
    pub fn validate_for_search(&self) -> Result<()> {
        self.validate()?;
        if self.hidden_sizes.is_empty() || self.hidden_sizes.len() > 3 {
            return Err(PhdError::InvalidConfig(
                "search space uses 1 to 3 hidden layers".into(),
            ));
        }
        if self.hidden_sizes.iter().any(|&s| s > 512) {
            return Err(PhdError::InvalidConfig(
                "hidden layers are capped at 512 units".into(),
            ));
        }
        if self.hidden_sizes.windows(2).any(|w| w[1] > w[0]) {
            return Err(PhdError::InvalidConfig(
                "hidden sizes must be non-increasing".into(),
            ));
        }
        if !(0.5..=0.8).contains(&self.dropout_input) {
            return Err(PhdError::InvalidConfig(
                "searched input dropout lies in [0.5, 0.8]".into(),
            ));
        }
        if !(0.1..=0.5).contains(&self.dropout_hidden) {
            return Err(PhdError::InvalidConfig(
                "searched hidden dropout lies in [0.1, 0.5]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// (in, out)
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormLayer {
    pub scale: Array1<f64>,
    pub shift: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FnnModel {
    pub arch: FnnArchitecture,
    pub hidden: Vec<DenseLayer>,
    /// Parallel to `hidden`; empty when batch normalization is off.
    pub batch_norm: Vec<BatchNormLayer>,
    pub output: DenseLayer,
    pub rng_seed: u64,
}

/// Gradient (or any same-shaped per-parameter quantity, e.g. optimizer
/// state) for every trainable tensor of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct FnnGradients {
    pub hidden: Vec<DenseLayer>,
    pub batch_norm: Vec<BnGrad>,
    pub output: DenseLayer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnGrad {
    pub scale: Array1<f64>,
    pub shift: Array1<f64>,
}

/// Initialize a model: weights uniform in `(-1/sqrt(fan_in), 1/sqrt(fan_in))`,
/// biases zero, deterministic in the seed.
pub fn init_fnn(arch: &FnnArchitecture, seed: u64) -> Result<FnnModel> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dims = vec![arch.input_dim()];
    dims.extend_from_slice(&arch.hidden_sizes);

    let mut hidden = Vec::with_capacity(arch.hidden_sizes.len());
    let mut batch_norm = Vec::new();
    for i in 0..arch.hidden_sizes.len() {
        hidden.push(init_dense(dims[i], dims[i + 1], &mut rng));
        if arch.batch_norm {
            batch_norm.push(BatchNormLayer {
                scale: Array1::ones(dims[i + 1]),
                shift: Array1::zeros(dims[i + 1]),
                running_mean: Array1::zeros(dims[i + 1]),
                running_var: Array1::ones(dims[i + 1]),
            });
        }
    }
    let output = init_dense(*dims.last().expect("non-empty dims"), 1, &mut rng);
    Ok(FnnModel {
        arch: arch.clone(),
        hidden,
        batch_norm,
        output,
        rng_seed: seed,
    })
}

fn init_dense(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> DenseLayer {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let w = Array2::from_shape_fn((fan_in, fan_out), |_| rng.gen_range(-bound..bound));
    DenseLayer {
        w,
        b: Array1::zeros(fan_out),
    }
}

impl FnnModel {
    pub fn zero_gradients(&self) -> FnnGradients {
        FnnGradients {
            hidden: self
                .hidden
                .iter()
                .map(|l| DenseLayer {
                    w: Array2::zeros(l.w.raw_dim()),
                    b: Array1::zeros(l.b.raw_dim()),
                })
                .collect(),
            batch_norm: self
                .batch_norm
                .iter()
                .map(|l| BnGrad {
                    scale: Array1::zeros(l.scale.raw_dim()),
                    shift: Array1::zeros(l.shift.raw_dim()),
                })
                .collect(),
            output: DenseLayer {
                w: Array2::zeros(self.output.w.raw_dim()),
                b: Array1::zeros(self.output.b.raw_dim()),
            },
        }
    }

    /// Eval-mode score of one assembled input.
    pub fn score(&self, input: ArrayView1<f64>) -> Result<f64> {
        net::forward_eval_single(self, input)
    }

    /// Eval-mode scores for a batch of assembled inputs (rows).
    pub fn score_batch(&self, inputs: ndarray::ArrayView2<f64>) -> Result<Array1<f64>> {
        net::forward_eval_batch(self, inputs)
    }

    pub fn parameters_finite(&self) -> bool {
        let dense_ok = |l: &DenseLayer| {
            l.w.iter().all(|v| v.is_finite()) && l.b.iter().all(|v| v.is_finite())
        };
        self.hidden.iter().all(dense_ok)
            && dense_ok(&self.output)
            && self.batch_norm.iter().all(|l| {
                l.scale.iter().all(|v| v.is_finite())
                    && l.shift.iter().all(|v| v.is_finite())
                    && l.running_mean.iter().all(|v| v.is_finite())
                    && l.running_var.iter().all(|v| v.is_finite())
            })
    }

    /// Fold the batch statistics observed during a training forward pass
    /// into the running statistics.
    pub fn absorb_bn_stats(&mut self, stats: &[(Array1<f64>, Array1<f64>)]) {
        for (layer, (mean, var)) in self.batch_norm.iter_mut().zip(stats) {
            layer.running_mean = BN_MOMENTUM * &layer.running_mean + (1.0 - BN_MOMENTUM) * mean;
            layer.running_var = BN_MOMENTUM * &layer.running_var + (1.0 - BN_MOMENTUM) * var;
        }
    }
}

/// The margin hinge on a score difference, with the default margin of 1.
pub fn pairwise_loss(score_pos: f64, score_neg: f64) -> f64 {
    pairwise_loss_margin(score_pos, score_neg, 1.0)
}

pub fn pairwise_loss_margin(score_pos: f64, score_neg: f64, margin: f64) -> f64 {
    (margin - (score_pos - score_neg)).max(0.0)
}

/// Eval-mode score of one segment: assembles the variant's input from the
/// segment descriptor, the history profile and the distance features, then
/// runs a deterministic forward pass.
pub fn score_segment(
    model: &FnnModel,
    segment: &[f64],
    profile: Option<&[f64]>,
    distances: Option<&[f64]>,
) -> Result<f64> {
    let input = assemble_input(&model.arch, segment, profile, distances)?;
    model.score(ndarray::aview1(&input))
}

/// Concatenate the inputs for a variant. `profile` is the mean history
/// vector, `distances` the padded distance features.
pub fn assemble_input(
    arch: &FnnArchitecture,
    segment: &[f64],
    profile: Option<&[f64]>,
    distances: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if segment.len() != arch.feature_dim {
        return Err(PhdError::LengthMismatch {
            context: "assemble_input segment".into(),
            left: segment.len(),
            right: arch.feature_dim,
        });
    }
    let mut input = Vec::with_capacity(arch.input_dim());
    input.extend_from_slice(segment);
    if arch.variant.uses_history() {
        let profile = profile.ok_or_else(|| {
            PhdError::InvalidData("variant requires a history profile".into())
        })?;
        if profile.len() != arch.feature_dim {
            return Err(PhdError::LengthMismatch {
                context: "assemble_input profile".into(),
                left: profile.len(),
                right: arch.feature_dim,
            });
        }
        input.extend_from_slice(profile);
    }
    if arch.variant.uses_distances() {
        let distances = distances.ok_or_else(|| {
            PhdError::InvalidData("variant requires distance features".into())
        })?;
        if distances.len() != arch.distance_k {
            return Err(PhdError::LengthMismatch {
                context: "assemble_input distances".into(),
                left: distances.len(),
                right: arch.distance_k,
            });
        }
        input.extend_from_slice(distances);
    }
    Ok(input)
}

/// Serialize a checkpoint into a writer: magic, architecture descriptor,
/// then parameter tensors in declaration order as little-endian f64.
pub fn write_fnn(model: &FnnModel, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(FNN_MAGIC)?;
    w.write_all(&[
        match model.arch.variant {
            FnnVariant::Generic => 0u8,
            FnnVariant::PhdCa => 1,
            FnnVariant::PhdCaEd => 2,
        },
        match model.arch.activation {
            Activation::Relu => 0u8,
            Activation::Selu => 1,
        },
        u8::from(model.arch.batch_norm),
        0,
    ])?;
    w.write_all(&(model.arch.feature_dim as u32).to_le_bytes())?;
    w.write_all(&(model.arch.distance_k as u32).to_le_bytes())?;
    w.write_all(&(model.arch.hidden_sizes.len() as u32).to_le_bytes())?;
    for &s in &model.arch.hidden_sizes {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    w.write_all(&model.arch.dropout_input.to_le_bytes())?;
    w.write_all(&model.arch.dropout_hidden.to_le_bytes())?;
    w.write_all(&model.rng_seed.to_le_bytes())?;

    let mut write_tensor = |values: &mut dyn Iterator<Item = f64>| -> std::io::Result<()> {
        for v in values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    };
    for (i, layer) in model.hidden.iter().enumerate() {
        write_tensor(&mut layer.w.iter().copied())?;
        write_tensor(&mut layer.b.iter().copied())?;
        if model.arch.batch_norm {
            let bn = &model.batch_norm[i];
            write_tensor(&mut bn.scale.iter().copied())?;
            write_tensor(&mut bn.shift.iter().copied())?;
            write_tensor(&mut bn.running_mean.iter().copied())?;
            write_tensor(&mut bn.running_var.iter().copied())?;
        }
    }
    write_tensor(&mut model.output.w.iter().copied())?;
    write_tensor(&mut model.output.b.iter().copied())?;
    Ok(())
}

/// Write a checkpoint file.
pub fn save_fnn(model: &FnnModel, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| PhdError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_fnn(model, &mut w).map_err(|e| PhdError::io(path, e))?;
    w.flush().map_err(|e| PhdError::io(path, e))?;
    Ok(())
}

/// Deserialize a checkpoint from a reader; `path` labels errors.
pub fn read_fnn(r: &mut impl Read, path: &Path) -> Result<FnnModel> {
    let bad = |message: &str| PhdError::Checkpoint {
        path: path.to_path_buf(),
        message: message.to_string(),
    };

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| PhdError::io(path, e))?;
    if &magic != FNN_MAGIC {
        return Err(bad("wrong magic"));
    }
    let mut flags = [0u8; 4];
    r.read_exact(&mut flags).map_err(|e| PhdError::io(path, e))?;
    let variant = match flags[0] {
        0 => FnnVariant::Generic,
        1 => FnnVariant::PhdCa,
        2 => FnnVariant::PhdCaEd,
        _ => return Err(bad("unknown variant tag")),
    };
    let activation = match flags[1] {
        0 => Activation::Relu,
        1 => Activation::Selu,
        _ => return Err(bad("unknown activation tag")),
    };
    let batch_norm = flags[2] != 0;

    let feature_dim = read_u32(&mut *r, path)? as usize;
    let distance_k = read_u32(&mut *r, path)? as usize;
    let n_hidden = read_u32(&mut *r, path)? as usize;
    if n_hidden > 64 {
        return Err(bad("implausible hidden layer count"));
    }
    let mut hidden_sizes = Vec::with_capacity(n_hidden);
    for _ in 0..n_hidden {
        hidden_sizes.push(read_u32(&mut *r, path)? as usize);
    }
    let dropout_input = read_f64(&mut *r, path)?;
    let dropout_hidden = read_f64(&mut *r, path)?;
    let rng_seed = read_u64(&mut *r, path)?;

    let arch = FnnArchitecture {
        variant,
        feature_dim,
        distance_k,
        hidden_sizes,
        activation,
        dropout_input,
        dropout_hidden,
        batch_norm,
    };
    arch.validate()
        .map_err(|e| bad(&format!("invalid architecture: {e}")))?;

    let mut dims = vec![arch.input_dim()];
    dims.extend_from_slice(&arch.hidden_sizes);
    let mut hidden = Vec::new();
    let mut bn_layers = Vec::new();
    for i in 0..arch.hidden_sizes.len() {
        let w = read_array2(&mut *r, path, dims[i], dims[i + 1])?;
        let b = read_array1(&mut *r, path, dims[i + 1])?;
        hidden.push(DenseLayer { w, b });
        if batch_norm {
            bn_layers.push(BatchNormLayer {
                scale: read_array1(&mut *r, path, dims[i + 1])?,
                shift: read_array1(&mut *r, path, dims[i + 1])?,
                running_mean: read_array1(&mut *r, path, dims[i + 1])?,
                running_var: read_array1(&mut *r, path, dims[i + 1])?,
            });
        }
    }
    let out_w = read_array2(&mut *r, path, *dims.last().expect("dims"), 1)?;
    let out_b = read_array1(&mut *r, path, 1)?;
    let model = FnnModel {
        arch,
        hidden,
        batch_norm: bn_layers,
        output: DenseLayer { w: out_w, b: out_b },
        rng_seed,
    };
    if !model.parameters_finite() {
        return Err(bad("non-finite parameters"));
    }
    Ok(model)
}

/// Load a checkpoint file written by [`save_fnn`].
pub fn load_fnn(path: &Path) -> Result<FnnModel> {
    let file = fs::File::open(path).map_err(|e| PhdError::io(path, e))?;
    let mut r = BufReader::new(file);
    read_fnn(&mut r, path)
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| PhdError::io(path, e))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|e| PhdError::io(path, e))?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read, path: &Path) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r, path)?))
}

fn read_array1(r: &mut impl Read, path: &Path, len: usize) -> Result<Array1<f64>> {
    let mut out = Array1::zeros(len);
    for v in out.iter_mut() {
        *v = read_f64(r, path)?;
    }
    Ok(out)
}

fn read_array2(r: &mut impl Read, path: &Path, rows: usize, cols: usize) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((rows, cols));
    for v in out.iter_mut() {
        *v = read_f64(r, path)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_arch(variant: FnnVariant) -> FnnArchitecture {
        FnnArchitecture {
            variant,
            feature_dim: 4,
            distance_k: 3,
            hidden_sizes: vec![6, 3],
            activation: Activation::Relu,
            dropout_input: 0.0,
            dropout_hidden: 0.0,
            batch_norm: false,
        }
    }

    #[test]
    fn init_is_deterministic() {
        let arch = small_arch(FnnVariant::PhdCa);
        let a = init_fnn(&arch, 42).unwrap();
        let b = init_fnn(&arch, 42).unwrap();
        assert_eq!(a, b);
        let c = init_fnn(&arch, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_biases_are_zero_and_weights_bounded() {
        let arch = FnnArchitecture {
            hidden_sizes: vec![16],
            ..small_arch(FnnVariant::Generic)
        };
        let model = init_fnn(&arch, 7).unwrap();
        for layer in model.hidden.iter().chain(std::iter::once(&model.output)) {
            assert!(layer.b.iter().all(|&b| b == 0.0));
            let bound = 1.0 / (layer.w.nrows() as f64).sqrt();
            assert!(layer.w.iter().all(|w| w.abs() <= bound));
        }
    }

    #[test]
    fn selu_constants() {
        assert_eq!(Activation::Selu.apply(0.0), 0.0);
        assert!((Activation::Selu.derivative(0.0) - SELU_LAMBDA).abs() < 1e-12);
        assert!((SELU_LAMBDA - 1.0507).abs() < 1e-4);
    }

    #[test]
    fn pairwise_loss_values() {
        assert_eq!(pairwise_loss(2.5, 0.5), 0.0);
        assert_eq!(pairwise_loss(1.0, 1.0), 1.0);
        assert_eq!(pairwise_loss(0.0, 1.0), 2.0);
    }

    #[test]
    fn search_constraints_are_enforced() {
        let mut arch = small_arch(FnnVariant::PhdCa);
        arch.dropout_input = 0.71;
        arch.dropout_hidden = 0.18;
        assert!(arch.validate_for_search().is_ok());
        arch.hidden_sizes = vec![64, 128];
        assert!(arch.validate_for_search().is_err());
        arch.hidden_sizes = vec![600];
        assert!(arch.validate_for_search().is_err());
        arch.hidden_sizes = vec![];
        assert!(arch.validate_for_search().is_err());
        // a plain linear scorer is still a valid model outside the search
        assert!(arch.validate().is_ok());
    }

    #[test]
    fn assemble_respects_variant() {
        let arch = small_arch(FnnVariant::PhdCaEd);
        let seg = vec![1.0, 2.0, 3.0, 4.0];
        let prof = vec![5.0, 6.0, 7.0, 8.0];
        let dist = vec![0.1, 0.2, 0.3];
        let x = assemble_input(&arch, &seg, Some(&prof), Some(&dist)).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 0.1, 0.2, 0.3]);
        assert!(assemble_input(&arch, &seg, None, Some(&dist)).is_err());

        let generic = small_arch(FnnVariant::Generic);
        assert_eq!(assemble_input(&generic, &seg, None, None).unwrap(), seg);
    }

    #[test]
    fn score_segment_matches_manual_assembly() {
        let arch = small_arch(FnnVariant::PhdCa);
        let model = init_fnn(&arch, 9).unwrap();
        let seg = vec![0.2, -0.4, 0.6, 0.1];
        let prof = vec![0.5, 0.5, -0.5, 0.0];
        let direct = score_segment(&model, &seg, Some(&prof), None).unwrap();
        let assembled = assemble_input(&arch, &seg, Some(&prof), None).unwrap();
        let expected = model.score(ndarray::aview1(&assembled)).unwrap();
        assert_eq!(direct, expected);
    }

    #[test]
    fn checkpoint_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("model.fnn");
        for bn in [false, true] {
            let arch = FnnArchitecture {
                batch_norm: bn,
                activation: Activation::Selu,
                dropout_input: 0.6,
                dropout_hidden: 0.2,
                ..small_arch(FnnVariant::PhdCaEd)
            };
            let model = init_fnn(&arch, 11).unwrap();
            save_fnn(&model, &path).unwrap();
            let loaded = load_fnn(&path).unwrap();
            assert_eq!(model, loaded);
        }
    }

    #[test]
    fn load_rejects_wrong_magic() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("bogus.fnn");
        std::fs::write(&path, b"NOTMAGIC").unwrap();
        assert!(matches!(load_fnn(&path), Err(PhdError::Checkpoint { .. })));
    }
}
