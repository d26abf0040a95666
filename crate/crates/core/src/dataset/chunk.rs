//! Deterministic segmentation of raw shots into scoring units.

/// How a video is cut into segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChunkMode {
    /// Shots up to [`MAX_SHOT_S`] pass through; longer shots are split into
    /// consecutive [`CHUNK_S`] pieces with a shorter final remainder.
    Train,
    /// The whole span is cut into consecutive [`CHUNK_S`] windows, ignoring
    /// the raw shot boundaries. The final window may be shorter.
    Test,
}

/// Shots longer than this are split in train mode.
pub const MAX_SHOT_S: f64 = 15.0;
/// Chunk and test-window length.
pub const CHUNK_S: f64 = 5.0;

/// Split ordered, non-overlapping raw shots into segments.
///
/// Remainder chunks shorter than [`CHUNK_S`] are kept rather than merged;
/// dropping tail content would bias duration-based metrics.
pub fn chunk_segments(raw_shots: &[(f64, f64)], mode: ChunkMode) -> Vec<(f64, f64)> {
    if raw_shots.is_empty() {
        return Vec::new();
    }
    match mode {
        ChunkMode::Train => {
            let mut out = Vec::new();
            for &(start, end) in raw_shots {
                let len = end - start;
                if len <= MAX_SHOT_S {
                    out.push((start, end));
                } else {
                    push_windows(&mut out, start, end);
                }
            }
            out
        }
        ChunkMode::Test => {
            let end = raw_shots
                .iter()
                .map(|&(_, e)| e)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut out = Vec::new();
            push_windows(&mut out, 0.0, end);
            out
        }
    }
}

/// Fixed windows covering `[0, duration]`; the segmentation applied to every
/// test-split target video.
pub fn fixed_windows(duration_s: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    push_windows(&mut out, 0.0, duration_s);
    out
}

fn push_windows(out: &mut Vec<(f64, f64)>, start: f64, end: f64) {
    if end <= start {
        return;
    }
    // boundaries computed as start + i * CHUNK_S to avoid drift
    let mut i: u64 = 0;
    loop {
        let s = start + i as f64 * CHUNK_S;
        let e = start + (i + 1) as f64 * CHUNK_S;
        if e < end {
            out.push((s, e));
            i += 1;
        } else {
            out.push((s, end));
            break;
        }
    }
}
