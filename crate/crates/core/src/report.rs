//! Evaluation of a labeled embedding set into a serializable report.
//!
//! Metrics that cannot be computed for a given input (an empty score side,
//! vanished variance, no eligible class) are reported as `null` plus a
//! machine-readable entry in `flags`; the JSON never contains NaN or
//! infinities. Numbers are serialized in shortest round-trip form, so
//! parsing a report back yields bit-identical values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledEmbeddingSet;
use crate::error::{Error, Result};
use crate::intra::{
    attribute_entropy, attribute_std, intra_class_consistency, intra_class_diversity,
    unit_cosine_distance, AttributeTable,
};
use crate::metrics::{
    build_score_set, compute_eer, compute_fdr, compute_fmr100, score_stats, GenuinePairing,
    HistogramSpec, ImpostorPairing, MetricFlag, PairingPolicy, ScoreSet,
    IMPOSTOR_PAIRS_RECOMMENDED,
};

/// Identifies the producing tool inside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: "cone-sampler".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Pairing policy in report form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingSummary {
    pub genuine: String,
    pub impostor: String,
    pub seed: u64,
}

impl From<&PairingPolicy> for PairingSummary {
    fn from(policy: &PairingPolicy) -> Self {
        let genuine = match policy.genuine {
            GenuinePairing::AllPairs => "all-pairs".to_string(),
            GenuinePairing::Sampled { count } => format!("sampled:{count}"),
        };
        let impostor = match policy.impostor {
            ImpostorPairing::AllPairs => "all-pairs".to_string(),
            ImpostorPairing::Sampled { count } => format!("sampled:{count}"),
            ImpostorPairing::SampledMultiplier { factor } => {
                format!("sampled-multiplier:{factor}")
            }
        };
        PairingSummary {
            genuine,
            impostor,
            seed: policy.seed,
        }
    }
}

/// Generation provenance recorded in a report. Fields that the evaluated
/// file does not carry (and the caller did not supply) stay `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub lower_bound: Option<f64>,
    pub samples_per_identity: Option<u32>,
    pub seed: Option<u64>,
    pub omega: Option<f64>,
    pub dim: usize,
    pub observation_cone: Option<f64>,
    pub consistency_threshold: f64,
    pub pairing: PairingSummary,
}

impl ReportConfig {
    /// A config block with nothing but the dimension and defaults filled.
    pub fn bare(dim: usize, policy: &PairingPolicy) -> Self {
        ReportConfig {
            lower_bound: None,
            samples_per_identity: None,
            seed: None,
            omega: None,
            dim,
            observation_cone: None,
            consistency_threshold: crate::intra::DEFAULT_CONSISTENCY_THRESHOLD,
            pairing: PairingSummary::from(policy),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportCounts {
    pub classes: usize,
    pub samples: usize,
    pub genuine_pairs: usize,
    pub impostor_pairs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportMetrics {
    pub eer: Option<f64>,
    pub fmr100: Option<f64>,
    pub genuine_mean: Option<f64>,
    pub genuine_std: Option<f64>,
    pub impostor_mean: Option<f64>,
    pub impostor_std: Option<f64>,
    pub fdr: Option<f64>,
    pub intra_consistency: Option<f64>,
    pub intra_diversity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeReport {
    pub entropy: BTreeMap<String, f64>,
    pub std: BTreeMap<String, f64>,
}

/// The full JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: ToolInfo,
    pub config: ReportConfig,
    pub counts: ReportCounts,
    pub metrics: ReportMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<AttributeReport>,
    pub flags: Vec<String>,
}

impl ReportDocument {
    pub fn to_json_pretty(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// Everything `evaluate` produces, with the score set kept around so the
/// caller can also bin it into a histogram without recomputing pairs.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub scores: ScoreSet,
    pub counts: ReportCounts,
    pub metrics: ReportMetrics,
    pub attributes: Option<AttributeReport>,
    pub flags: Vec<MetricFlag>,
}

/// Runs the full metric battery over `set`.
///
/// `attributes`, when given, must be row-aligned with the set; continuous
/// channels are discretized with the supplied binning for the entropy
/// metric.
pub fn evaluate(
    set: &LabeledEmbeddingSet,
    policy: &PairingPolicy,
    consistency_threshold: f64,
    attributes: Option<(&AttributeTable, &HistogramSpec)>,
) -> Result<Evaluation> {
    let scores = build_score_set(set, policy)?;
    let mut flags = Vec::new();
    let mut metrics = ReportMetrics {
        eer: None,
        fmr100: None,
        genuine_mean: None,
        genuine_std: None,
        impostor_mean: None,
        impostor_std: None,
        fdr: None,
        intra_consistency: None,
        intra_diversity: None,
    };

    if scores.genuine().is_empty() {
        flags.push(MetricFlag::GenuineEmpty);
    }
    if scores.impostor().is_empty() {
        flags.push(MetricFlag::ImpostorEmpty);
    } else if scores.impostor().len() < IMPOSTOR_PAIRS_RECOMMENDED {
        flags.push(MetricFlag::ImpostorCountLow);
    }

    if !scores.genuine().is_empty() && !scores.impostor().is_empty() {
        metrics.eer = Some(compute_eer(&scores)?);
        let fmr100 = compute_fmr100(&scores)?;
        if !fmr100.target_reachable {
            flags.push(MetricFlag::Fmr100TargetUnreachable);
        }
        metrics.fmr100 = Some(fmr100.value);
        let stats = score_stats(&scores)?;
        metrics.genuine_mean = Some(stats.genuine_mean);
        metrics.genuine_std = Some(stats.genuine_std);
        metrics.impostor_mean = Some(stats.impostor_mean);
        metrics.impostor_std = Some(stats.impostor_std);
        match compute_fdr(&stats) {
            Ok(fdr) => metrics.fdr = Some(fdr),
            Err(Error::ZeroVariance) => flags.push(MetricFlag::ZeroVarianceScores),
            Err(e) => return Err(e),
        }
    }

    match intra_class_consistency(set, consistency_threshold) {
        Ok(summary) => {
            metrics.intra_consistency = Some(summary.value);
            if !summary.excluded_classes.is_empty() {
                flags.push(MetricFlag::DegenerateClassCenters {
                    count: summary.excluded_classes.len(),
                });
            }
        }
        Err(Error::NoEligibleClass { .. }) => {
            flags.push(MetricFlag::DegenerateClassCenters {
                count: set.class_count(),
            });
        }
        Err(e) => return Err(e),
    }

    match intra_class_diversity(set, unit_cosine_distance) {
        Ok(summary) => {
            metrics.intra_diversity = Some(summary.value);
            if !summary.excluded_classes.is_empty() {
                flags.push(MetricFlag::ClassesWithoutPairs {
                    count: summary.excluded_classes.len(),
                });
            }
        }
        Err(Error::NoEligibleClass { .. }) => {
            flags.push(MetricFlag::ClassesWithoutPairs {
                count: set.class_count(),
            });
        }
        Err(e) => return Err(e),
    }

    let attributes = match attributes {
        Some((table, binning)) => Some(AttributeReport {
            entropy: attribute_entropy(table, set.labels(), binning)?,
            std: attribute_std(table, set.labels())?,
        }),
        None => None,
    };

    Ok(Evaluation {
        counts: ReportCounts {
            classes: set.class_count(),
            samples: set.len(),
            genuine_pairs: scores.genuine().len(),
            impostor_pairs: scores.impostor().len(),
        },
        metrics,
        attributes,
        flags,
        scores,
    })
}

/// Wraps an [`Evaluation`] into the serializable document.
pub fn assemble(config: ReportConfig, evaluation: &Evaluation) -> ReportDocument {
    ReportDocument {
        tool: ToolInfo::default(),
        config,
        counts: evaluation.counts,
        metrics: evaluation.metrics,
        attributes: evaluation.attributes.clone(),
        flags: evaluation.flags.iter().map(|f| f.to_string()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_set() -> LabeledEmbeddingSet {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for class in 0..4u32 {
            let center = class as f64 * 1.3;
            for k in 0..5 {
                let a = center + 0.02 * k as f64;
                rows.extend_from_slice(&[a.cos(), a.sin()]);
                labels.push(class);
            }
        }
        LabeledEmbeddingSet::new(2, rows, labels).unwrap()
    }

    #[test]
    fn evaluation_populates_every_metric_on_a_healthy_set() {
        let eval = evaluate(&tiny_set(), &PairingPolicy::default(), 0.3, None).unwrap();
        let m = &eval.metrics;
        assert!(m.eer.is_some());
        assert!(m.fmr100.is_some());
        assert!(m.genuine_mean.is_some());
        assert!(m.fdr.is_some());
        assert!(m.intra_consistency.is_some());
        assert!(m.intra_diversity.is_some());
        assert_eq!(eval.counts.genuine_pairs, 4 * 10);
        assert_eq!(eval.counts.impostor_pairs, 400);
    }

    #[test]
    fn single_class_set_is_flagged_not_nan() {
        let set = LabeledEmbeddingSet::new(
            2,
            vec![1.0, 0.0, 0.9, 0.1, 0.8, 0.3],
            vec![0, 0, 0],
        )
        .unwrap();
        let eval = evaluate(&set, &PairingPolicy::default(), 0.3, None).unwrap();
        assert!(eval.metrics.eer.is_none());
        assert!(eval.metrics.fdr.is_none());
        assert!(eval.flags.contains(&MetricFlag::ImpostorEmpty));
        let doc = assemble(
            ReportConfig::bare(2, &PairingPolicy::default()),
            &eval,
        );
        let json = doc.to_json_pretty().unwrap();
        assert!(!json.contains("NaN"));
        assert!(json.contains("impostor-empty"));
    }

    #[test]
    fn report_round_trips_losslessly() {
        let eval = evaluate(&tiny_set(), &PairingPolicy::default(), 0.3, None).unwrap();
        let mut config = ReportConfig::bare(2, &PairingPolicy::default());
        config.lower_bound = Some(0.6181818181818182);
        config.seed = Some(1337);
        let doc = assemble(config, &eval);
        let json = doc.to_json_pretty().unwrap();
        let back = ReportDocument::from_json(&json).unwrap();
        assert_eq!(back, doc);
    }
}
