//! Vector primitives shared by the distance-based scorers: cosine distance,
//! mean aggregation, and the k-nearest distance feature builder.

use serde::{Deserialize, Serialize};

use crate::error::{PhdError, Result};

/// A segment descriptor. Values loaded from a feature store are exact images
/// of 32-bit floats widened to f64.
pub type Feature = Vec<f64>;

/// Padding rule for distance vectors shorter than their capacity.
///
/// `Zero` is the default scheme: a padded slot reads as a perfect match.
/// `MaxDistance` pads with 2.0 (the cosine-distance maximum) instead, for
/// comparison runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistancePad {
    #[default]
    Zero,
    MaxDistance,
}

impl DistancePad {
    fn value(self) -> f64 {
        match self {
            DistancePad::Zero => 0.0,
            DistancePad::MaxDistance => 2.0,
        }
    }
}

/// The k-dimensional vector of cosine distances to the nearest history
/// elements, ascending, padded to capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceFeatures {
    values: Vec<f64>,
}

impl DistanceFeatures {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn capacity(&self) -> usize {
        self.values.len()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn check_dims(a: &[f64], b: &[f64], context: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(PhdError::LengthMismatch {
            context: context.to_string(),
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Cosine distance `1 - a.b / (|a||b|)`, in [0, 2].
///
/// Zero-norm inputs are a domain error: descriptors are expected to be
/// rejected at ingestion if they are identically zero.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b, "cosine_distance")?;
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(PhdError::ZeroNorm {
            context: "cosine_distance".to_string(),
        });
    }
    let d = 1.0 - dot / (na.sqrt() * nb.sqrt());
    // rounding can push the result a hair outside [0, 2]
    Ok(d.clamp(0.0, 2.0))
}

/// Cosine similarity `a.b / (|a||b|)`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(1.0 - cosine_distance(a, b)?)
}

/// Componentwise arithmetic mean of a non-empty list of equal-length vectors.
pub fn aggregate_mean(vectors: &[Feature]) -> Result<Feature> {
    let first = vectors
        .first()
        .ok_or_else(|| PhdError::InvalidData("aggregate_mean of empty list".to_string()))?;
    let dim = first.len();
    let mut mean = vec![0.0; dim];
    for v in vectors {
        check_dims(first, v, "aggregate_mean")?;
        for (m, x) in mean.iter_mut().zip(v.iter()) {
            *m += x;
        }
    }
    let n = vectors.len() as f64;
    for m in &mut mean {
        *m /= n;
    }
    Ok(mean)
}

/// Distances from `segment` to the `k` most similar history elements,
/// ascending; slots beyond the history size are padded.
pub fn distance_features_padded(
    segment: &[f64],
    history: &[Feature],
    k: usize,
    pad: DistancePad,
) -> Result<DistanceFeatures> {
    if history.is_empty() {
        return Err(PhdError::InvalidData(
            "distance_features requires a non-empty history".to_string(),
        ));
    }
    let mut dists = Vec::with_capacity(history.len());
    for g in history {
        dists.push(cosine_distance(segment, g)?);
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    dists.truncate(k);
    dists.resize(k, pad.value());
    Ok(DistanceFeatures { values: dists })
}

/// [`distance_features_padded`] with the default zero padding.
pub fn distance_features(segment: &[f64], history: &[Feature], k: usize) -> Result<DistanceFeatures> {
    distance_features_padded(segment, history, k, DistancePad::Zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn cosine_identity_is_zero() {
        assert!(close(cosine_distance(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0));
    }

    #[test]
    fn cosine_orthogonal_is_one() {
        assert!(close(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0));
    }

    #[test]
    fn cosine_45_degrees() {
        let expected = 1.0 - 1.0 / 2.0_f64.sqrt();
        assert!(close(
            cosine_distance(&[1.0, 1.0], &[1.0, 0.0]).unwrap(),
            expected
        ));
    }

    #[test]
    fn cosine_rejects_zero_norm() {
        assert!(matches!(
            cosine_distance(&[0.0, 0.0], &[1.0, 0.0]),
            Err(PhdError::ZeroNorm { .. })
        ));
    }

    #[test]
    fn cosine_rejects_dim_mismatch() {
        assert!(matches!(
            cosine_distance(&[1.0], &[1.0, 0.0]),
            Err(PhdError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn mean_of_singleton_is_identity() {
        let v = vec![vec![0.5, -2.0, 3.0]];
        assert_eq!(aggregate_mean(&v).unwrap(), v[0]);
    }

    #[test]
    fn mean_of_two() {
        let m = aggregate_mean(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(m, vec![1.0, 1.0]);
    }

    #[test]
    fn mean_rejects_empty() {
        assert!(aggregate_mean(&[]).is_err());
    }

    #[test]
    fn mean_is_permutation_invariant() {
        let vs = vec![vec![1.0, -2.0], vec![0.5, 4.0], vec![-3.0, 0.0]];
        let mut shuffled = vs.clone();
        shuffled.rotate_left(2);
        assert_eq!(aggregate_mean(&vs).unwrap(), aggregate_mean(&shuffled).unwrap());
    }

    #[test]
    fn distance_features_sorts_and_pads() {
        // history engineered so the two distances are 0.5 and ~0.2
        let seg = vec![1.0, 0.0];
        let g1 = vec![0.5, 0.8660254037844386]; // 60 degrees -> d = 0.5
        let g2 = vec![0.8, 0.6]; // d = 0.2
        let d = distance_features(&seg, &[g1, g2], 4).unwrap();
        let v = d.values();
        assert!(close(v[0], 0.19999999999999996) || close(v[0], 0.2));
        assert!(close(v[1], 0.5));
        assert_eq!(&v[2..], &[0.0, 0.0]);
    }

    #[test]
    fn distance_features_keeps_k_smallest() {
        let seg = vec![1.0, 0.0, 0.0];
        let mut hist = Vec::new();
        for i in 0..30 {
            let t = 0.01 + 0.03 * i as f64;
            hist.push(vec![t.cos(), t.sin(), 0.0]);
        }
        let d = distance_features(&seg, &hist, 20).unwrap();
        assert_eq!(d.values().len(), 20);
        // ascending and strictly below the 10 distances we dropped
        let worst_kept = d.values()[19];
        let dropped_best = 1.0 - (0.01f64 + 0.03 * 20.0).cos();
        assert!(worst_kept <= dropped_best + 1e-12);
    }

    #[test]
    fn distance_features_identity_hits_zero() {
        let seg = vec![0.3, 0.4];
        let hist = vec![vec![1.0, 0.0], seg.clone()];
        let d = distance_features(&seg, &hist, 2).unwrap();
        assert!(close(d.values()[0], 0.0));
    }

    #[test]
    fn max_distance_padding() {
        let seg = vec![1.0, 0.0];
        let hist = vec![vec![1.0, 0.0]];
        let d = distance_features_padded(&seg, &hist, 3, DistancePad::MaxDistance).unwrap();
        assert_eq!(d.values(), &[0.0, 2.0, 2.0]);
    }

    fn feature_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, dim).prop_filter("nonzero", |v| {
            v.iter().map(|x| x * x).sum::<f64>() > 1e-6
        })
    }

    proptest! {
        #[test]
        fn cosine_is_symmetric(a in feature_strategy(5), b in feature_strategy(5)) {
            let d1 = cosine_distance(&a, &b).unwrap();
            let d2 = cosine_distance(&b, &a).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-12);
        }

        #[test]
        fn cosine_is_scale_invariant(a in feature_strategy(5), c in 0.01f64..100.0) {
            let scaled: Vec<f64> = a.iter().map(|x| x * c).collect();
            let d = cosine_distance(&a, &scaled).unwrap();
            prop_assert!(d.abs() < 1e-9);
        }

        #[test]
        fn distance_features_ascending(
            seg in feature_strategy(4),
            hist in proptest::collection::vec(feature_strategy(4), 1..12),
            k in 1usize..8,
        ) {
            let d = distance_features(&seg, &hist, k).unwrap();
            let v = d.values();
            let filled = hist.len().min(k);
            for w in v[..filled].windows(2) {
                prop_assert!(w[0] <= w[1] + 1e-12);
            }
            for &x in v {
                prop_assert!((0.0..=2.0).contains(&x));
            }
        }

        #[test]
        fn duplicating_closest_never_increases_entries(
            seg in feature_strategy(4),
            hist in proptest::collection::vec(feature_strategy(4), 6..12),
        ) {
            // only meaningful once the vector is filled: a padded slot reads
            // as a perfect match, and a real distance would displace it
            let k = 6;
            let base = distance_features(&seg, &hist, k).unwrap();
            // index of the closest element
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, g) in hist.iter().enumerate() {
                let d = cosine_distance(&seg, g).unwrap();
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            let mut extended = hist.clone();
            extended.push(hist[best].clone());
            let grown = distance_features(&seg, &extended, k).unwrap();
            for (g, b) in grown.values().iter().zip(base.values()) {
                prop_assert!(g <= &(b + 1e-12));
            }
        }

        #[test]
        fn mean_commutes_with_linear_map(
            vs in proptest::collection::vec(feature_strategy(3), 1..6),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let mapped: Vec<Vec<f64>> = vs
                .iter()
                .map(|v| v.iter().map(|x| a * x + b).collect())
                .collect();
            let lhs = aggregate_mean(&mapped).unwrap();
            let rhs: Vec<f64> = aggregate_mean(&vs)
                .unwrap()
                .iter()
                .map(|x| a * x + b)
                .collect();
            for (l, r) in lhs.iter().zip(rhs.iter()) {
                prop_assert!((l - r).abs() < 1e-9);
            }
        }
    }
}
