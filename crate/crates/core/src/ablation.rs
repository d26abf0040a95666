//! History-size ablation: rebuild every user's history from only their last
//! `k` videos and re-run the evaluation, producing one row per (scorer, k).

use serde::Serialize;

use crate::dataset::{Dataset, Split};
use crate::error::Result;
use crate::metrics::{evaluate_with_history, MetricSummary};
use crate::scorers::Scorer;

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub scorer: String,
    pub k: usize,
    /// False when the scorer needs a history and k = 0.
    pub applicable: bool,
    pub metrics: Option<MetricSummary>,
    pub n_videos: usize,
}

/// Evaluate each scorer at each history size. `k = 0` evaluates generic
/// scorers only; history-dependent scorers produce a not-applicable row.
/// A `k` beyond a user's history length uses all of that user's videos.
pub fn history_ablation(
    dataset: &Dataset,
    scorers: &[&dyn Scorer],
    k_values: &[usize],
    split: Split,
) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::with_capacity(scorers.len() * k_values.len());
    for &k in k_values {
        for scorer in scorers {
            if k == 0 && scorer.requires_history() {
                rows.push(AblationRow {
                    scorer: scorer.name().to_string(),
                    k,
                    applicable: false,
                    metrics: None,
                    n_videos: 0,
                });
                continue;
            }
            let report = evaluate_with_history(dataset, *scorer, split, Some(k))?;
            rows.push(AblationRow {
                scorer: scorer.name().to_string(),
                k,
                applicable: true,
                metrics: Some(report.metrics),
                n_videos: report.n_videos,
            });
        }
    }
    Ok(rows)
}

/// One CSV row per (scorer, k); not-applicable cells read `na`.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("scorer,k,map,nmsd,recall_at_5,n_videos\n");
    for row in rows {
        match &row.metrics {
            Some(m) => out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.scorer, row.k, m.map, m.nmsd, m.recall_at_5, row.n_videos
            )),
            None => out.push_str(&format!("{},{},na,na,na,0\n", row.scorer, row.k)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth::{generate_in_memory, SynthConfig};
    use crate::metrics::evaluate;
    use crate::scorers::{MaxSimilarityScorer, RandomScorer};

    fn dataset() -> Dataset {
        let config = SynthConfig {
            train_users: 0,
            val_users: 0,
            test_users: 8,
            topics: 3,
            feature_dim: 6,
            history_videos_per_user: 3,
            segments_per_video: 6,
            positives_per_video: 1,
            consistency: 0.9,
            generic_weight: 0.3,
            noise: 0.05,
        };
        generate_in_memory(&config, 4).unwrap().dataset
    }

    #[test]
    fn k_zero_marks_history_scorers_not_applicable() {
        let ds = dataset();
        let random = RandomScorer { seed: 1 };
        let maxsim = MaxSimilarityScorer;
        let rows =
            history_ablation(&ds, &[&random, &maxsim], &[0, 1], Split::Test).unwrap();
        assert_eq!(rows.len(), 4);
        let na: Vec<&AblationRow> = rows.iter().filter(|r| !r.applicable).collect();
        assert_eq!(na.len(), 1);
        assert_eq!(na[0].scorer, "max-sim");
        assert_eq!(na[0].k, 0);
        // the random scorer is evaluable at k = 0
        assert!(rows.iter().any(|r| r.scorer == "random" && r.k == 0 && r.applicable));
    }

    #[test]
    fn saturated_k_reproduces_full_history_evaluation() {
        let ds = dataset();
        let maxsim = MaxSimilarityScorer;
        let full = evaluate(&ds, &maxsim, Split::Test).unwrap();
        let rows = history_ablation(&ds, &[&maxsim], &[50], Split::Test).unwrap();
        let m = rows[0].metrics.as_ref().unwrap();
        assert_eq!(m.map, full.metrics.map);
        assert_eq!(m.nmsd, full.metrics.nmsd);
        assert_eq!(m.recall_at_5, full.metrics.recall_at_5);
        assert_eq!(rows[0].n_videos, full.n_videos);
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let ds = dataset();
        let random = RandomScorer { seed: 1 };
        let maxsim = MaxSimilarityScorer;
        let rows = history_ablation(&ds, &[&random, &maxsim], &[0, 1, 2], Split::Test).unwrap();
        let csv = ablation_csv(&rows);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 1 + 6);
        assert!(lines[1..].iter().any(|l| l.contains(",na,")));
    }
}
