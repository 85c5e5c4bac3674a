//! Verification metrics over genuine and impostor score distributions.
//!
//! Rate metrics sweep a threshold over the merged score support (the
//! distinct values present in either side). Conventions, fixed so that an
//! independent reimplementation can reproduce results bit for bit:
//!
//! * `FMR(t)` = fraction of impostor scores `>= t` (inclusive),
//! * `FNMR(t)` = fraction of genuine scores `< t`,
//! * equal-error rate: sweep candidates ascending, keep the first threshold
//!   that strictly improves `|FMR - FNMR|`, report the midpoint
//!   `(FMR + FNMR) / 2` there,
//! * FMR100: smallest `FNMR` over candidates with `FMR <= 0.01`; when no
//!   candidate qualifies, the `FNMR` at the largest candidate is reported
//!   and marked.
//!
//! Standard deviations are population (divide by `N`) throughout.

use rand::Rng;

use crate::dataset::LabeledEmbeddingSet;
use crate::error::{Error, Result};
use crate::vector::dot;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// FMR operating point targeted by [`compute_fmr100`].
pub const FMR100_TARGET: f64 = 0.01;

/// Below this many impostor pairs the FMR resolution is coarser than the
/// FMR100 target and results carry [`MetricFlag::ImpostorCountLow`].
pub const IMPOSTOR_PAIRS_RECOMMENDED: usize = 100;

/// Consecutive rejection budget for pair sampling, scaled by sample count
/// inside [`build_score_set`].
const PAIR_REJECTION_CAP: u64 = 100_000;

/// Genuine and impostor similarity scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    genuine: Vec<f64>,
    impostor: Vec<f64>,
}

impl ScoreSet {
    /// Either side may be empty; downstream metrics surface emptiness as
    /// explicit flags. Non-finite scores are rejected.
    pub fn new(genuine: Vec<f64>, impostor: Vec<f64>) -> Result<Self> {
        if genuine.iter().chain(&impostor).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { context: "scores" });
        }
        Ok(ScoreSet { genuine, impostor })
    }

    pub fn genuine(&self) -> &[f64] {
        &self.genuine
    }

    pub fn impostor(&self) -> &[f64] {
        &self.impostor
    }
}

/// How genuine pairs are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenuinePairing {
    /// Every unordered within-class pair.
    AllPairs,
    /// `count` pairs drawn uniformly (with replacement) among within-class
    /// pairs.
    Sampled { count: usize },
}

/// How impostor pairs are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpostorPairing {
    /// Every unordered cross-class pair.
    AllPairs,
    /// `count` pairs drawn uniformly (with replacement) among cross-class
    /// pairs.
    Sampled { count: usize },
    /// Sampled, with the count tied to the genuine side: `factor` times the
    /// number of genuine pairs.
    SampledMultiplier { factor: u32 },
}

/// Pair enumeration policy for [`build_score_set`].
///
/// The default mirrors common verification practice: exhaustive genuine
/// pairs, impostor pairs subsampled to ten times the genuine count under a
/// fixed seed so runs are reproducible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingPolicy {
    pub genuine: GenuinePairing,
    pub impostor: ImpostorPairing,
    pub seed: u64,
}

impl Default for PairingPolicy {
    fn default() -> Self {
        PairingPolicy {
            genuine: GenuinePairing::AllPairs,
            impostor: ImpostorPairing::SampledMultiplier { factor: 10 },
            seed: 1337,
        }
    }
}

/// Moments of the two score distributions (population std).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionStats {
    pub genuine_mean: f64,
    pub genuine_std: f64,
    pub impostor_mean: f64,
    pub impostor_std: f64,
}

/// FMR100 value plus whether the 1% operating point was reachable at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fmr100 {
    /// The reported FNMR.
    pub value: f64,
    /// False when no threshold on the support had `FMR <= 0.01`; `value`
    /// is then the FNMR at the strictest (largest) threshold.
    pub target_reachable: bool,
}

/// Conditions that make individual metrics undefined or unreliable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricFlag {
    GenuineEmpty,
    ImpostorEmpty,
    Fmr100TargetUnreachable,
    ImpostorCountLow,
    ZeroVarianceScores,
    DegenerateClassCenters { count: usize },
    ClassesWithoutPairs { count: usize },
}

impl std::fmt::Display for MetricFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricFlag::GenuineEmpty => write!(f, "genuine-empty"),
            MetricFlag::ImpostorEmpty => write!(f, "impostor-empty"),
            MetricFlag::Fmr100TargetUnreachable => write!(f, "fmr100-target-unreachable"),
            MetricFlag::ImpostorCountLow => write!(f, "impostor-count-low"),
            MetricFlag::ZeroVarianceScores => write!(f, "zero-variance-scores"),
            MetricFlag::DegenerateClassCenters { count } => {
                write!(f, "degenerate-class-centers:{count}")
            }
            MetricFlag::ClassesWithoutPairs { count } => {
                write!(f, "classes-without-pairs:{count}")
            }
        }
    }
}

/// Computes cosine scores for the pairs selected by `policy`.
///
/// Genuine scores come first in class order, then pair order; sampled
/// scores follow draw order. The pair selection is sequential on a stream
/// derived from `policy.seed`, and only the dot products fan out across
/// threads, so the result does not depend on the worker count.
///
/// With a single class the impostor side is returned empty (there are no
/// cross-class pairs); with no multi-member class the genuine side is
/// empty. Both conditions surface later as flags rather than errors.
pub fn build_score_set(set: &LabeledEmbeddingSet, policy: &PairingPolicy) -> Result<ScoreSet> {
    let groups = set.indices_by_class();

    let genuine_pairs: Vec<(usize, usize)> = match policy.genuine {
        GenuinePairing::AllPairs => {
            let mut pairs = Vec::new();
            for members in &groups {
                for (a, &i) in members.iter().enumerate() {
                    for &j in &members[a + 1..] {
                        pairs.push((i, j));
                    }
                }
            }
            pairs
        }
        GenuinePairing::Sampled { count } => {
            let has_pair = groups.iter().any(|g| g.len() >= 2);
            if !has_pair || count == 0 {
                Vec::new()
            } else {
                sample_pairs(set, policy.seed, 0, count, |a, b| {
                    a != b && set.label(a) == set.label(b)
                })?
            }
        }
    };

    let impostor_count = match policy.impostor {
        ImpostorPairing::AllPairs => None,
        ImpostorPairing::Sampled { count } => Some(count),
        ImpostorPairing::SampledMultiplier { factor } => {
            Some(genuine_pairs.len() * factor as usize)
        }
    };

    let impostor_pairs: Vec<(usize, usize)> = match impostor_count {
        None => {
            let mut pairs = Vec::new();
            for (a, ga) in groups.iter().enumerate() {
                for gb in &groups[a + 1..] {
                    for &i in ga {
                        for &j in gb {
                            pairs.push((i, j));
                        }
                    }
                }
            }
            pairs
        }
        Some(count) => {
            if set.class_count() < 2 || count == 0 {
                Vec::new()
            } else {
                sample_pairs(set, policy.seed, 1, count, |a, b| {
                    set.label(a) != set.label(b)
                })?
            }
        }
    };

    let genuine = score_pairs(set, &genuine_pairs);
    let impostor = score_pairs(set, &impostor_pairs);
    ScoreSet::new(genuine, impostor)
}

/// Draws `count` index pairs accepted by `eligible`, sequentially from the
/// pairing stream `(seed, purpose)`.
fn sample_pairs(
    set: &LabeledEmbeddingSet,
    seed: u64,
    purpose: u64,
    count: usize,
    eligible: impl Fn(usize, usize) -> bool,
) -> Result<Vec<(usize, usize)>> {
    use crate::stream::{stream_for, StreamDomain};
    let mut rng = stream_for(seed, StreamDomain::Pairing, purpose);
    let n = set.len();
    let cap = PAIR_REJECTION_CAP.max(1000 * set.class_count() as u64);
    let mut pairs = Vec::with_capacity(count);
    let mut consecutive = 0u64;
    while pairs.len() < count {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if eligible(a, b) {
            pairs.push((a, b));
            consecutive = 0;
        } else {
            consecutive += 1;
            if consecutive > cap {
                return Err(Error::PairSamplingStalled(format!(
                    "{consecutive} consecutive rejections while sampling pairs \
                     ({} of {count} found)",
                    pairs.len()
                )));
            }
        }
    }
    Ok(pairs)
}

fn score_pairs(set: &LabeledEmbeddingSet, pairs: &[(usize, usize)]) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    {
        pairs
            .par_iter()
            .map(|&(i, j)| dot(set.row(i), set.row(j)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        pairs
            .iter()
            .map(|&(i, j)| dot(set.row(i), set.row(j)))
            .collect()
    }
}

/// Distinct values present on either side, ascending.
fn threshold_candidates(scores: &ScoreSet) -> Vec<f64> {
    let mut all: Vec<f64> = scores
        .genuine
        .iter()
        .chain(&scores.impostor)
        .copied()
        .collect();
    all.sort_unstable_by(f64::total_cmp);
    all.dedup();
    all
}

fn sorted(side: &[f64]) -> Vec<f64> {
    let mut s = side.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    s
}

/// Count of elements `< t` in an ascending slice.
fn count_below(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&x| x < t)
}

/// Equal-error rate over the merged score support.
///
/// Errors when either side is empty.
pub fn compute_eer(scores: &ScoreSet) -> Result<f64> {
    require_both_sides(scores)?;
    let gen = sorted(&scores.genuine);
    let imp = sorted(&scores.impostor);
    let ng = gen.len() as f64;
    let ni = imp.len() as f64;
    let mut best_gap = f64::INFINITY;
    let mut best_mid = 0.0;
    for &t in &threshold_candidates(scores) {
        let fmr = (imp.len() - count_below(&imp, t)) as f64 / ni;
        let fnmr = count_below(&gen, t) as f64 / ng;
        let gap = (fmr - fnmr).abs();
        if gap < best_gap {
            best_gap = gap;
            best_mid = (fmr + fnmr) / 2.0;
        }
    }
    Ok(best_mid)
}

/// FNMR at the loosest threshold keeping `FMR <= 0.01`.
///
/// Errors when either side is empty. When the target is unreachable on the
/// support the result carries `target_reachable = false` and the FNMR at
/// the strictest candidate.
pub fn compute_fmr100(scores: &ScoreSet) -> Result<Fmr100> {
    require_both_sides(scores)?;
    let gen = sorted(&scores.genuine);
    let imp = sorted(&scores.impostor);
    let ng = gen.len() as f64;
    let ni = imp.len() as f64;
    let candidates = threshold_candidates(scores);
    let mut best: Option<f64> = None;
    let mut strictest_fnmr = 0.0;
    for &t in &candidates {
        let fmr = (imp.len() - count_below(&imp, t)) as f64 / ni;
        let fnmr = count_below(&gen, t) as f64 / ng;
        strictest_fnmr = fnmr;
        if fmr <= FMR100_TARGET {
            best = Some(match best {
                Some(b) if b <= fnmr => b,
                _ => fnmr,
            });
        }
    }
    Ok(match best {
        Some(value) => Fmr100 {
            value,
            target_reachable: true,
        },
        None => Fmr100 {
            value: strictest_fnmr,
            target_reachable: false,
        },
    })
}

/// Means and population stds of both sides, single pass per side.
pub fn score_stats(scores: &ScoreSet) -> Result<DistributionStats> {
    require_both_sides(scores)?;
    let (genuine_mean, genuine_std) = welford(&scores.genuine);
    let (impostor_mean, impostor_std) = welford(&scores.impostor);
    Ok(DistributionStats {
        genuine_mean,
        genuine_std,
        impostor_mean,
        impostor_std,
    })
}

fn welford(xs: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    (mean, (m2 / xs.len() as f64).sqrt())
}

/// Fisher discriminant ratio `(mean_G - mean_I)^2 / (std_G^2 + std_I^2)`.
///
/// Errors when both variances vanish.
pub fn compute_fdr(stats: &DistributionStats) -> Result<f64> {
    let denom = stats.genuine_std * stats.genuine_std + stats.impostor_std * stats.impostor_std;
    if denom == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let sep = stats.genuine_mean - stats.impostor_mean;
    Ok(sep * sep / denom)
}

fn require_both_sides(scores: &ScoreSet) -> Result<()> {
    if scores.genuine.is_empty() {
        return Err(Error::EmptyScores { side: "genuine" });
    }
    if scores.impostor.is_empty() {
        return Err(Error::EmptyScores { side: "impostor" });
    }
    Ok(())
}

/// Histogram bin layout over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    bins: usize,
    lo: f64,
    hi: f64,
}

impl HistogramSpec {
    pub fn new(bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
        }
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidConfig(format!(
                "histogram range [{lo}, {hi}] is not a finite nonempty interval"
            )));
        }
        Ok(HistogramSpec { bins, lo, hi })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

impl Default for HistogramSpec {
    /// 100 bins over the full cosine range `[-1, 1]`.
    fn default() -> Self {
        HistogramSpec {
            bins: 100,
            lo: -1.0,
            hi: 1.0,
        }
    }
}

/// Per-bin genuine and impostor counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistogram {
    /// `bins + 1` edges; bin `b` covers `[edges[b], edges[b+1])`, the last
    /// bin is closed on the right.
    pub edges: Vec<f64>,
    pub genuine: Vec<u64>,
    pub impostor: Vec<u64>,
}

/// Bins both sides of `scores`.
///
/// Values on an interior edge land in the upper bin; values outside the
/// range are clamped to the first or last bin, so the counts always sum to
/// the score counts.
pub fn score_histogram(scores: &ScoreSet, spec: &HistogramSpec) -> ScoreHistogram {
    let width = (spec.hi - spec.lo) / spec.bins as f64;
    let bin_of = |x: f64| -> usize {
        let idx = ((x - spec.lo) / width).floor();
        if idx < 0.0 {
            0
        } else if idx >= spec.bins as f64 {
            spec.bins - 1
        } else {
            idx as usize
        }
    };
    let mut genuine = vec![0u64; spec.bins];
    for &x in &scores.genuine {
        genuine[bin_of(x)] += 1;
    }
    let mut impostor = vec![0u64; spec.bins];
    for &x in &scores.impostor {
        impostor[bin_of(x)] += 1;
    }
    let mut edges: Vec<f64> = (0..spec.bins)
        .map(|b| spec.lo + b as f64 * width)
        .collect();
    edges.push(spec.hi);
    ScoreHistogram {
        edges,
        genuine,
        impostor,
    }
}
