//! End-to-end simulation: reference identities, perturbed datasets and
//! separability sweeps.
//!
//! The simulated measurement chain for one sample is
//!
//! ```text
//! reference --cone perturbation--> stored sample --observation cone--> embedding
//! ```
//!
//! where the observation stage stands in for everything between the stored
//! vector and a fresh probe of the same identity (re-encoding, sensor and
//! alignment jitter). It reuses the cone sampler with its own bound; an
//! observation cone of 1 is the noiseless limit in which every embedding
//! equals its stored sample exactly.
//!
//! Determinism: each identity consumes only its own random stream, derived
//! from `(base_seed, identity index)`, so datasets are byte-identical
//! across runs and across worker-thread counts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledEmbeddingSet;
use crate::error::{Error, Result};
use crate::geometry::{rotate_toward, sample_cosine, sample_tangent, ConeSpec};
use crate::identity::IdentitySet;
use crate::metrics::{ImpostorPairing, PairingPolicy};
use crate::report::{assemble, evaluate, ReportConfig, ReportDocument};
use crate::stream::{stream_for, substream_seed, SampleStream, StreamDomain};
use crate::vector::{dot, UnitVector};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Consecutive-rejection budget per requested identity in
/// [`generate_reference_set`].
pub const REFERENCE_REJECTION_FACTOR: u64 = 1000;

/// Parameters of dataset generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    /// Cosine lower bound of the perturbation cone.
    pub lower_bound: f64,
    /// Samples drawn per identity (`K`).
    pub samples_per_identity: u32,
    /// Base seed; every stream in a run derives from it.
    pub base_seed: u64,
    /// Ambient dimension, must match the reference set.
    pub dim: usize,
    /// Cosine lower bound of the observation stage, in `(0, 1]`.
    pub observation_cone: f64,
}

impl Default for GenerationConfig {
    /// 50 samples per identity at `d = 512`, seed 1337, bound 0.6, and an
    /// observation cone of 0.95 (calibrated so the noiseless baseline
    /// yields a small but nonzero error rate in sweeps).
    fn default() -> Self {
        GenerationConfig {
            lower_bound: 0.6,
            samples_per_identity: 50,
            base_seed: 1337,
            dim: 512,
            observation_cone: 0.95,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lower_bound.is_finite() || !(0.0..=1.0).contains(&self.lower_bound) {
            return Err(Error::BoundOutOfRange {
                value: self.lower_bound,
                min: 0.0,
                max: 1.0,
            });
        }
        if self.samples_per_identity == 0 {
            return Err(Error::InvalidConfig(
                "samples_per_identity must be at least 1".into(),
            ));
        }
        if self.dim < 2 {
            return Err(Error::DimensionTooSmall {
                dim: self.dim,
                min: 2,
            });
        }
        if !self.observation_cone.is_finite()
            || self.observation_cone <= 0.0
            || self.observation_cone > 1.0
        {
            return Err(Error::InvalidConfig(format!(
                "observation_cone must lie in (0, 1], got {}",
                self.observation_cone
            )));
        }
        Ok(())
    }
}

/// Applies observation jitter to an embedding: a draw from the cone of
/// cosine bound `observation_cone` around `e`.
///
/// A bound of exactly 1 returns `e` unchanged without consuming
/// randomness.
pub fn observe<R: rand::Rng + ?Sized>(
    e: &UnitVector,
    observation_cone: f64,
    rng: &mut R,
) -> Result<UnitVector> {
    if !observation_cone.is_finite() || observation_cone <= 0.0 || observation_cone > 1.0 {
        return Err(Error::InvalidConfig(format!(
            "observation_cone must lie in (0, 1], got {observation_cone}"
        )));
    }
    if observation_cone == 1.0 {
        return Ok(e.clone());
    }
    let spec = ConeSpec::new(observation_cone).expect("validated above");
    let draw = sample_cosine(&spec, rng);
    let u = sample_tangent(e, rng)?;
    rotate_toward(e, &u, draw.angle)
}

/// Draws `count` reference identities uniformly on the sphere, rejecting
/// candidates whose cosine to any accepted identity exceeds
/// `max_pairwise_cos`.
///
/// Fails with a feasibility diagnosis after `1000 * count` consecutive
/// rejections. The nearest-neighbor cache of the returned set is
/// maintained incrementally during acceptance, so no second pairwise scan
/// is needed.
pub fn generate_reference_set(
    count: usize,
    dim: usize,
    max_pairwise_cos: f64,
    seed: u64,
) -> Result<IdentitySet> {
    if count == 0 {
        return Err(Error::InvalidConfig("need at least one identity".into()));
    }
    if dim < 2 {
        return Err(Error::DimensionTooSmall { dim, min: 2 });
    }
    if !max_pairwise_cos.is_finite() || !(-1.0..=1.0).contains(&max_pairwise_cos) {
        return Err(Error::BoundOutOfRange {
            value: max_pairwise_cos,
            min: -1.0,
            max: 1.0,
        });
    }
    let mut rng = stream_for(seed, StreamDomain::Reference, 0);
    let cap = REFERENCE_REJECTION_FACTOR * count as u64;
    let mut data: Vec<f64> = Vec::with_capacity(count * dim);
    let mut nn: Vec<f64> = Vec::with_capacity(count);
    let mut dots: Vec<f64> = Vec::with_capacity(count);
    let mut consecutive = 0u64;
    while nn.len() < count {
        let raw: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let candidate = match UnitVector::new(raw) {
            Ok(v) => v,
            Err(_) => continue,
        };
        dots.clear();
        let mut ok = true;
        for row in data.chunks_exact(dim) {
            let d = dot(&candidate, row);
            if d > max_pairwise_cos {
                ok = false;
                break;
            }
            dots.push(d);
        }
        if !ok {
            consecutive += 1;
            if consecutive > cap {
                return Err(Error::InfeasibleReferenceSet {
                    consecutive,
                    accepted: nn.len(),
                    requested: count,
                    cap: max_pairwise_cos,
                });
            }
            continue;
        }
        consecutive = 0;
        let mut own_nn = -1.0f64;
        for (j, &d) in dots.iter().enumerate() {
            if d > own_nn {
                own_nn = d;
            }
            if d > nn[j] {
                nn[j] = d;
            }
        }
        data.extend_from_slice(&candidate);
        nn.push(own_nn);
    }
    let ids = (0..count as u64).collect();
    Ok(IdentitySet::from_parts_unchecked(dim, data, ids, nn))
}

/// Generates `K` embeddings per identity: cone perturbation around the
/// reference followed by observation jitter.
///
/// Labels are the dense identity indices. Work is split per identity; each
/// identity's stream first serves its `K` perturbation draws, then its `K`
/// observation draws.
pub fn generate_dataset(set: &IdentitySet, cfg: &GenerationConfig) -> Result<LabeledEmbeddingSet> {
    cfg.validate()?;
    if cfg.dim != set.dim() {
        return Err(Error::DimensionMismatch {
            left: cfg.dim,
            right: set.dim(),
        });
    }
    if set.len() > u32::MAX as usize {
        return Err(Error::InvalidConfig("more identities than labels can hold".into()));
    }
    let base = ConeSpec::new(cfg.lower_bound).expect("validated above");
    let k = cfg.samples_per_identity as usize;
    let dim = set.dim();
    let count = set.len();
    let mut embeddings = vec![0.0f64; count * k * dim];

    let fill = |(i, chunk): (usize, &mut [f64])| -> Result<()> {
        let mut rng: SampleStream = stream_for(cfg.base_seed, StreamDomain::Identity, i as u64);
        let samples = set.perturb_identity(i, &base, cfg.samples_per_identity, &mut rng)?;
        for (s, out) in samples.iter().zip(chunk.chunks_exact_mut(dim)) {
            let observed = observe(s, cfg.observation_cone, &mut rng)?;
            out.copy_from_slice(&observed);
        }
        Ok(())
    };

    #[cfg(feature = "parallel")]
    embeddings
        .par_chunks_exact_mut(k * dim)
        .enumerate()
        .try_for_each(fill)?;

    #[cfg(not(feature = "parallel"))]
    embeddings
        .chunks_exact_mut(k * dim)
        .enumerate()
        .try_for_each(fill)?;

    let labels: Vec<u32> = (0..count as u32).flat_map(|i| std::iter::repeat_n(i, k)).collect();
    Ok(LabeledEmbeddingSet::from_parts_unchecked(
        dim, embeddings, labels, count,
    ))
}

/// One sweep point: the bound it was generated with and its full report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub lower_bound: f64,
    pub report: ReportDocument,
}

/// Reports for a sequence of cone bounds under otherwise fixed settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    pub fn to_json_pretty(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// Generates and evaluates one dataset per bound in `lower_bounds`.
///
/// Bounds are deduplicated and visited in descending order (tightest cone
/// first). The same base seed is reused for every bound so that the bound
/// is the only thing that changes between sweep points; pair sampling uses
/// a stream derived from the same seed.
pub fn run_lb_sweep(
    set: &IdentitySet,
    cfg: &GenerationConfig,
    lower_bounds: &[f64],
) -> Result<SweepResult> {
    if lower_bounds.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one bound".into()));
    }
    let mut bounds = lower_bounds.to_vec();
    for &lb in &bounds {
        if !lb.is_finite() || !(0.0..=1.0).contains(&lb) {
            return Err(Error::BoundOutOfRange {
                value: lb,
                min: 0.0,
                max: 1.0,
            });
        }
    }
    bounds.sort_unstable_by(|a, b| b.total_cmp(a));
    bounds.dedup();

    let policy = PairingPolicy {
        impostor: ImpostorPairing::SampledMultiplier { factor: 10 },
        seed: substream_seed(cfg.base_seed, StreamDomain::Pairing, 0),
        ..PairingPolicy::default()
    };

    let mut entries = Vec::with_capacity(bounds.len());
    for lb in bounds {
        let point_cfg = GenerationConfig {
            lower_bound: lb,
            ..*cfg
        };
        let dataset = generate_dataset(set, &point_cfg)?;
        let evaluation = evaluate(
            &dataset,
            &policy,
            crate::intra::DEFAULT_CONSISTENCY_THRESHOLD,
            None,
        )?;
        let config = ReportConfig {
            lower_bound: Some(lb),
            samples_per_identity: Some(point_cfg.samples_per_identity),
            seed: Some(point_cfg.base_seed),
            omega: None,
            dim: point_cfg.dim,
            observation_cone: Some(point_cfg.observation_cone),
            consistency_threshold: crate::intra::DEFAULT_CONSISTENCY_THRESHOLD,
            pairing: (&policy).into(),
        };
        entries.push(SweepEntry {
            lower_bound: lb,
            report: assemble(config, &evaluation),
        });
    }
    Ok(SweepResult { entries })
}
