//! Manifest (JSONL) and feature-store ingestion, plus the writer used by the
//! synthetic generator.
//!
//! A manifest holds one record per (user, video). Feature files are binary:
//! an 8-byte magic `PHDFEAT1`, `u32` segment count, `u32` feature dimension
//! (both little-endian), then row-major little-endian `f32` values.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::chunk::{chunk_segments, fixed_windows, ChunkMode};
use super::intervals::normalize_union;
use super::{Dataset, Segment, SkippedUser, Split, UserRecord, VideoRecord};
use crate::error::{PhdError, Result};

pub const FEATURE_MAGIC: &[u8; 8] = b"PHDFEAT1";

/// Duration bounds enforced on test-split target videos.
pub const TEST_MIN_DURATION_S: f64 = 15.0;
pub const TEST_MAX_DURATION_S: f64 = 900.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    History,
    Target,
}

/// One manifest line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub user_id: String,
    pub video_id: String,
    pub duration_s: f64,
    pub role: Role,
    pub order: i64,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<Vec<(f64, f64)>>,
    pub gif_intervals: Vec<(f64, f64)>,
    pub feature_ref: String,
}

/// Ingestion knobs. The history-size filter is validation only, so ablation
/// datasets with short histories remain loadable.
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Users with fewer history videos are skipped (recorded, not erased).
    pub min_history_videos: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            min_history_videos: 1,
        }
    }
}

/// Load a dataset from a manifest and its feature store root.
pub fn load_manifest(manifest_path: &Path, feature_store_root: &Path) -> Result<Dataset> {
    load_manifest_with(manifest_path, feature_store_root, LoadOptions::default())
}

pub fn load_manifest_with(
    manifest_path: &Path,
    feature_store_root: &Path,
    options: LoadOptions,
) -> Result<Dataset> {
    let file = fs::File::open(manifest_path).map_err(|e| PhdError::io(manifest_path, e))?;
    let reader = BufReader::new(file);

    let mut by_user: BTreeMap<String, Vec<ManifestRecord>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| PhdError::io(manifest_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ManifestRecord =
            serde_json::from_str(&line).map_err(|e| PhdError::Manifest {
                path: manifest_path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        by_user.entry(record.user_id.clone()).or_default().push(record);
    }

    let mut feature_dim: Option<usize> = None;
    let mut users = Vec::new();
    let mut skipped = Vec::new();

    for (user_id, mut records) in by_user {
        records.sort_by(|a, b| a.order.cmp(&b.order).then(a.video_id.cmp(&b.video_id)));
        let split = records[0].split;
        let mut histories = Vec::new();
        let mut target: Option<VideoRecord> = None;
        let mut bad: Option<PhdError> = None;
        for record in &records {
            if record.split != split {
                bad = Some(PhdError::InvalidData(format!(
                    "user '{user_id}' has records in multiple splits"
                )));
                break;
            }
            match build_video(record, feature_store_root, &mut feature_dim) {
                Ok(video) => match record.role {
                    Role::Target if target.is_some() => {
                        bad = Some(PhdError::InvalidData(format!(
                            "user '{user_id}' has more than one target video"
                        )));
                        break;
                    }
                    Role::Target => target = Some(video),
                    Role::History => histories.push(video),
                },
                Err(e) => {
                    bad = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = bad {
            return Err(e);
        }
        let target = target.ok_or_else(|| {
            PhdError::InvalidData(format!("user '{user_id}' has no target video"))
        })?;
        {
            let mut ids: Vec<&str> = histories
                .iter()
                .map(|v| v.video_id.as_str())
                .chain(std::iter::once(target.video_id.as_str()))
                .collect();
            ids.sort_unstable();
            ids.dedup();
            if ids.len() != histories.len() + 1 {
                return Err(PhdError::InvalidData(format!(
                    "user '{user_id}' repeats a video id"
                )));
            }
        }
        if split == Split::Test
            && !(TEST_MIN_DURATION_S..=TEST_MAX_DURATION_S).contains(&target.duration_s)
        {
            return Err(PhdError::InvalidData(format!(
                "test target '{}' duration {}s outside [{}, {}]",
                target.video_id, target.duration_s, TEST_MIN_DURATION_S, TEST_MAX_DURATION_S
            )));
        }
        if histories.len() < options.min_history_videos {
            skipped.push(SkippedUser {
                user_id,
                reason: format!(
                    "history has {} videos, minimum is {}",
                    histories.len(),
                    options.min_history_videos
                ),
            });
            continue;
        }
        if super::positive_indices(&target).is_empty() {
            skipped.push(SkippedUser {
                user_id,
                reason: "target video has no positive segment".to_string(),
            });
            continue;
        }
        if histories.iter().all(|v| super::positive_indices(v).is_empty()) {
            skipped.push(SkippedUser {
                user_id,
                reason: "no positive segment in any history video".to_string(),
            });
            continue;
        }
        users.push(UserRecord {
            user_id,
            split,
            histories,
            target,
        });
    }

    let feature_dim = feature_dim.ok_or_else(|| {
        PhdError::InvalidData("manifest references no videos".to_string())
    })?;
    Ok(Dataset {
        users,
        feature_dim,
        skipped,
    })
}

fn build_video(
    record: &ManifestRecord,
    store_root: &Path,
    feature_dim: &mut Option<usize>,
) -> Result<VideoRecord> {
    if record.duration_s <= 0.0 {
        return Err(PhdError::InvalidData(format!(
            "video '{}' has non-positive duration",
            record.video_id
        )));
    }
    let gt = normalize_union(&record.gif_intervals);
    if gt
        .iter()
        .any(|&(s, e)| s < -1e-9 || e > record.duration_s + 1e-9)
    {
        return Err(PhdError::InvalidData(format!(
            "video '{}' has gif intervals outside [0, duration]",
            record.video_id
        )));
    }

    // test-split targets are re-cut into fixed windows; everything else uses
    // the provided shots under the train chunking rule
    let boundaries = if record.role == Role::Target && record.split == Split::Test {
        fixed_windows(record.duration_s)
    } else {
        let raw = match &record.shots {
            Some(shots) => {
                validate_shots(record, shots)?;
                shots.clone()
            }
            None => vec![(0.0, record.duration_s)],
        };
        chunk_segments(&raw, ChunkMode::Train)
    };

    let path = store_root.join(&record.feature_ref);
    let (rows, dim, values) = read_feature_file(&path, &record.video_id)?;
    match *feature_dim {
        Some(expected) if expected != dim => {
            return Err(PhdError::DimensionMismatch {
                video_id: record.video_id.clone(),
                expected,
                actual: dim,
            })
        }
        None => *feature_dim = Some(dim),
        _ => {}
    }
    if rows != boundaries.len() {
        return Err(PhdError::RowCountMismatch {
            video_id: record.video_id.clone(),
            expected: boundaries.len(),
            actual: rows,
        });
    }

    let segments = boundaries
        .into_iter()
        .enumerate()
        .map(|(i, (start_s, end_s))| Segment {
            video_id: record.video_id.clone(),
            index: i,
            start_s,
            end_s,
            feature: values[i * dim..(i + 1) * dim]
                .iter()
                .map(|&v| f64::from(v))
                .collect(),
        })
        .collect();

    Ok(VideoRecord {
        video_id: record.video_id.clone(),
        duration_s: record.duration_s,
        segments,
        gt_frames: gt,
        split: record.split,
    })
}

fn validate_shots(record: &ManifestRecord, shots: &[(f64, f64)]) -> Result<()> {
    let mut prev_end = 0.0f64;
    for &(s, e) in shots {
        if e <= s || s < prev_end - 1e-9 || e > record.duration_s + 1e-9 {
            return Err(PhdError::InvalidData(format!(
                "video '{}' has invalid shot list",
                record.video_id
            )));
        }
        prev_end = e;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| PhdError::io(path, e))?;
    Ok(u32::from_le_bytes(buf))
}

/// Read one feature file: returns (rows, dim, values).
pub fn read_feature_file(path: &Path, video_id: &str) -> Result<(usize, usize, Vec<f32>)> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(PhdError::MissingFeatures {
                video_id: video_id.to_string(),
                path: path.to_path_buf(),
            })
        }
        Err(e) => return Err(PhdError::io(path, e)),
    };
    let mut reader = BufReader::new(file);
    let mut magic = [0u8; 8];
    reader
        .read_exact(&mut magic)
        .map_err(|e| PhdError::io(path, e))?;
    if &magic != FEATURE_MAGIC {
        return Err(PhdError::Checkpoint {
            path: path.to_path_buf(),
            message: "bad feature-store magic".to_string(),
        });
    }
    let rows = read_u32(&mut reader, path)? as usize;
    let dim = read_u32(&mut reader, path)? as usize;
    if dim == 0 {
        return Err(PhdError::Checkpoint {
            path: path.to_path_buf(),
            message: "zero feature dimension".to_string(),
        });
    }
    let mut buf = vec![0u8; rows * dim * 4];
    reader
        .read_exact(&mut buf)
        .map_err(|e| PhdError::io(path, e))?;
    let values = buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect::<Vec<f32>>();
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(PhdError::NonFinite {
                location: format!("feature file {} value {}", path.display(), i),
            });
        }
    }
    // zero-norm descriptors signal upstream failure and would poison the
    // cosine-distance scorers
    for (r, row) in values.chunks_exact(dim).enumerate() {
        if row.iter().all(|&v| v == 0.0) {
            return Err(PhdError::ZeroNorm {
                context: format!("video '{video_id}' segment {r}"),
            });
        }
    }
    Ok((rows, dim, values))
}

/// Write one feature file.
pub fn write_feature_file(path: &Path, rows: usize, dim: usize, values: &[f32]) -> Result<()> {
    assert_eq!(values.len(), rows * dim);
    let file = fs::File::create(path).map_err(|e| PhdError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(FEATURE_MAGIC).map_err(|e| PhdError::io(path, e))?;
    w.write_all(&(rows as u32).to_le_bytes())
        .map_err(|e| PhdError::io(path, e))?;
    w.write_all(&(dim as u32).to_le_bytes())
        .map_err(|e| PhdError::io(path, e))?;
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(|e| PhdError::io(path, e))?;
    }
    w.flush().map_err(|e| PhdError::io(path, e))?;
    Ok(())
}

/// Write a dataset as `manifest.jsonl` plus a `features/` directory under
/// `dir`. Feature values are narrowed to f32; datasets loaded from a store
/// (or produced by the generator) round-trip bit-exactly.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    let features_dir = dir.join("features");
    fs::create_dir_all(&features_dir).map_err(|e| PhdError::io(&features_dir, e))?;
    let manifest_path = dir.join("manifest.jsonl");
    let file = fs::File::create(&manifest_path).map_err(|e| PhdError::io(&manifest_path, e))?;
    let mut out = BufWriter::new(file);

    for user in &dataset.users {
        for (order, video) in user.histories.iter().enumerate() {
            write_video(&mut out, user, video, Role::History, order as i64, dir)?;
        }
        write_video(
            &mut out,
            user,
            &user.target,
            Role::Target,
            user.histories.len() as i64,
            dir,
        )?;
    }
    out.flush().map_err(|e| PhdError::io(&manifest_path, e))?;
    Ok(())
}

fn write_video(
    out: &mut impl Write,
    user: &UserRecord,
    video: &VideoRecord,
    role: Role,
    order: i64,
    dir: &Path,
) -> Result<()> {
    let feature_ref = format!("features/{}.phdfeat", video.video_id);
    let dim = video.segments.first().map(|s| s.feature.len()).unwrap_or(0);
    let values: Vec<f32> = video
        .segments
        .iter()
        .flat_map(|s| s.feature.iter().map(|&v| v as f32))
        .collect();
    write_feature_file(&dir.join(&feature_ref), video.segments.len(), dim, &values)?;

    let record = ManifestRecord {
        user_id: user.user_id.clone(),
        video_id: video.video_id.clone(),
        duration_s: video.duration_s,
        role,
        order,
        split: user.split,
        shots: Some(video.segments.iter().map(Segment::interval).collect()),
        gif_intervals: video.gt_frames.clone(),
        feature_ref,
    };
    let line = serde_json::to_string(&record)?;
    let manifest_path = dir.join("manifest.jsonl");
    out.write_all(line.as_bytes())
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| PhdError::io(manifest_path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn write_store(dir: &Path, video_id: &str, rows: usize, dim: usize) {
        let values: Vec<f32> = (0..rows * dim).map(|i| 0.25 + i as f32).collect();
        write_feature_file(
            &dir.join("features").join(format!("{video_id}.phdfeat")),
            rows,
            dim,
            &values,
        )
        .unwrap();
    }

    fn record(user: &str, video: &str, role: &str, order: i64, split: &str) -> String {
        format!(
            r#"{{"user_id":"{user}","video_id":"{video}","duration_s":20.0,"role":"{role}","order":{order},"split":"{split}","shots":[[0.0,5.0],[5.0,10.0],[10.0,15.0],[15.0,20.0]],"gif_intervals":[[0.0,5.0]],"feature_ref":"features/{video}.phdfeat"}}"#
        )
    }

    fn setup(dir: &Path) -> PathBuf {
        fs::create_dir_all(dir.join("features")).unwrap();
        let manifest = dir.join("manifest.jsonl");
        let lines = [
            record("u1", "h1", "history", 0, "train"),
            record("u1", "h2", "history", 1, "train"),
            record("u1", "t1", "target", 2, "train"),
        ];
        fs::write(&manifest, lines.join("\n") + "\n").unwrap();
        for v in ["h1", "h2", "t1"] {
            write_store(dir, v, 4, 3);
        }
        manifest
    }

    #[test]
    fn loads_minimal_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let manifest = setup(tmp.path());
        let ds = load_manifest(&manifest, tmp.path()).unwrap();
        assert_eq!(ds.users.len(), 1);
        assert_eq!(ds.feature_dim, 3);
        let u = &ds.users[0];
        assert_eq!(u.split, Split::Train);
        assert_eq!(u.histories.len(), 2);
        assert_eq!(u.target.video_id, "t1");
        assert_eq!(u.target.segments.len(), 4);
        assert_eq!(ds.split_counts().train, 1);
    }

    #[test]
    fn missing_feature_file_names_the_video() {
        let tmp = tempfile::tempdir().unwrap();
        let manifest = setup(tmp.path());
        fs::remove_file(tmp.path().join("features/h2.phdfeat")).unwrap();
        let err = load_manifest(&manifest, tmp.path()).unwrap_err();
        match err {
            PhdError::MissingFeatures { video_id, .. } => assert_eq!(video_id, "h2"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn dimension_mismatch_names_expected_and_actual() {
        let tmp = tempfile::tempdir().unwrap();
        let manifest = setup(tmp.path());
        write_store(tmp.path(), "t1", 4, 7);
        let err = load_manifest(&manifest, tmp.path()).unwrap_err();
        match err {
            PhdError::DimensionMismatch {
                video_id,
                expected,
                actual,
            } => {
                assert_eq!(video_id, "t1");
                assert_eq!(expected, 3);
                assert_eq!(actual, 7);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let tmp = tempfile::tempdir().unwrap();
        let manifest = setup(tmp.path());
        let mut content = fs::read_to_string(&manifest).unwrap();
        content.push_str("{not json\n");
        fs::write(&manifest, content).unwrap();
        let err = load_manifest(&manifest, tmp.path()).unwrap_err();
        match err {
            PhdError::Manifest { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn row_count_mismatch_is_reported() {
        let tmp = tempfile::tempdir().unwrap();
        let manifest = setup(tmp.path());
        write_store(tmp.path(), "h1", 2, 3);
        let err = load_manifest(&manifest, tmp.path()).unwrap_err();
        match err {
            PhdError::RowCountMismatch {
                video_id,
                expected,
                actual,
            } => {
                assert_eq!(video_id, "h1");
                assert_eq!(expected, 4);
                assert_eq!(actual, 2);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn target_without_positives_is_skipped_and_recorded() {
        let tmp = tempfile::tempdir().unwrap();
        fs::create_dir_all(tmp.path().join("features")).unwrap();
        let manifest = tmp.path().join("manifest.jsonl");
        let mut lines = vec![
            record("u1", "h1", "history", 0, "train"),
            // target whose gif interval covers too little of any segment
            format!(
                r#"{{"user_id":"u1","video_id":"t1","duration_s":20.0,"role":"target","order":1,"split":"train","shots":[[0.0,5.0],[5.0,10.0],[10.0,15.0],[15.0,20.0]],"gif_intervals":[[0.0,1.0]],"feature_ref":"features/t1.phdfeat"}}"#
            ),
        ];
        lines.push(record("u2", "h2", "history", 0, "train"));
        lines.push(record("u2", "t2", "target", 1, "train"));
        fs::write(&manifest, lines.join("\n") + "\n").unwrap();
        for v in ["h1", "t1", "h2", "t2"] {
            write_store(tmp.path(), v, 4, 3);
        }
        let ds = load_manifest(&manifest, tmp.path()).unwrap();
        assert_eq!(ds.users.len(), 1);
        assert_eq!(ds.users[0].user_id, "u2");
        assert_eq!(ds.skipped.len(), 1);
        assert_eq!(ds.skipped[0].user_id, "u1");
    }

    #[test]
    fn min_history_filter_skips_short_users() {
        let tmp = tempfile::tempdir().unwrap();
        let manifest = setup(tmp.path());
        let ds = load_manifest_with(
            &manifest,
            tmp.path(),
            LoadOptions {
                min_history_videos: 4,
            },
        )
        .unwrap();
        assert!(ds.users.is_empty());
        assert_eq!(ds.skipped.len(), 1);
    }

    #[test]
    fn missing_shots_fall_back_to_fixed_chunking() {
        let tmp = tempfile::tempdir().unwrap();
        fs::create_dir_all(tmp.path().join("features")).unwrap();
        let manifest = tmp.path().join("manifest.jsonl");
        // a 20 s video without shots is one long shot, split into 5 s chunks
        let lines = [
            format!(
                r#"{{"user_id":"u1","video_id":"h1","duration_s":20.0,"role":"history","order":0,"split":"train","gif_intervals":[[0.0,5.0]],"feature_ref":"features/h1.phdfeat"}}"#
            ),
            record("u1", "t1", "target", 1, "train"),
        ];
        fs::write(&manifest, lines.join("\n") + "\n").unwrap();
        write_store(tmp.path(), "h1", 4, 3);
        write_store(tmp.path(), "t1", 4, 3);
        let ds = load_manifest(&manifest, tmp.path()).unwrap();
        let h1 = &ds.users[0].histories[0];
        assert_eq!(h1.segments.len(), 4);
        assert_eq!(h1.segments[3].interval(), (15.0, 20.0));
    }

    #[test]
    fn test_targets_are_rewindowed_ignoring_shots() {
        let tmp = tempfile::tempdir().unwrap();
        fs::create_dir_all(tmp.path().join("features")).unwrap();
        let manifest = tmp.path().join("manifest.jsonl");
        let lines = [
            record("u1", "h1", "history", 0, "test"),
            // irregular shots; the target is still cut into fixed windows
            format!(
                r#"{{"user_id":"u1","video_id":"t1","duration_s":18.0,"role":"target","order":1,"split":"test","shots":[[0.0,18.0]],"gif_intervals":[[0.0,5.0]],"feature_ref":"features/t1.phdfeat"}}"#
            ),
        ];
        fs::write(&manifest, lines.join("\n") + "\n").unwrap();
        write_store(tmp.path(), "h1", 4, 3);
        write_store(tmp.path(), "t1", 4, 3);
        let ds = load_manifest(&manifest, tmp.path()).unwrap();
        let t1 = &ds.users[0].target;
        assert_eq!(t1.segments.len(), 4);
        assert_eq!(t1.segments[3].interval(), (15.0, 18.0));
    }

    #[test]
    fn test_targets_outside_duration_bounds_are_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        fs::create_dir_all(tmp.path().join("features")).unwrap();
        let manifest = tmp.path().join("manifest.jsonl");
        let lines = [
            record("u1", "h1", "history", 0, "test"),
            format!(
                r#"{{"user_id":"u1","video_id":"t1","duration_s":10.0,"role":"target","order":1,"split":"test","gif_intervals":[[0.0,5.0]],"feature_ref":"features/t1.phdfeat"}}"#
            ),
        ];
        fs::write(&manifest, lines.join("\n") + "\n").unwrap();
        write_store(tmp.path(), "h1", 4, 3);
        write_store(tmp.path(), "t1", 2, 3);
        let err = load_manifest(&manifest, tmp.path()).unwrap_err();
        assert!(err.to_string().contains("duration"));
    }

    #[test]
    fn zero_norm_descriptors_are_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let manifest = setup(tmp.path());
        let mut values: Vec<f32> = (0..12).map(|i| 0.25 + i as f32).collect();
        values[3..6].fill(0.0);
        write_feature_file(
            &tmp.path().join("features/h1.phdfeat"),
            4,
            3,
            &values,
        )
        .unwrap();
        let err = load_manifest(&manifest, tmp.path()).unwrap_err();
        assert!(matches!(err, PhdError::ZeroNorm { .. }));
    }

    #[test]
    fn feature_file_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("x.phdfeat");
        let values: Vec<f32> = vec![1.5, -2.25, 3.0, 0.125, 9.0, -1.0];
        write_feature_file(&path, 2, 3, &values).unwrap();
        let (rows, dim, loaded) = read_feature_file(&path, "x").unwrap();
        assert_eq!((rows, dim), (2, 3));
        assert_eq!(loaded, values);
    }
}
