//! Cosine-bounded perturbation of unit embeddings, with the measurement
//! and separability tooling around it.
//!
//! The central operation draws a random unit vector inside the spherical
//! cap of a given cosine lower bound around a base embedding: the cosine
//! to the base is sampled uniformly from `[lb, 1]`, a tangent direction is
//! drawn isotropically, and the base is rotated toward it. The result has
//! exactly the sampled cosine and unit norm, so the angular deviation is
//! controlled by construction rather than on average.
//!
//! Around that core, the crate provides
//!
//! * reference-identity generation on the sphere with a pairwise cosine
//!   cap, and a per-identity tightening rule that keeps every perturbed
//!   sample closer to its own reference than to any other
//!   ([`identity::IdentitySet::adjusted_lower_bound`]),
//! * an unconstrained additive-noise baseline for comparison
//!   ([`geometry::noise_perturb`]),
//! * a guidance-extrapolation combiner for pairs of model predictions
//!   ([`guidance::cfg_combine`]),
//! * verification metrics over genuine and impostor cosine scores
//!   (equal error rate, false non-match rate at fixed match rate, Fisher
//!   discriminant ratio, histograms),
//! * intra-class consistency, diversity and attribute-spread summaries,
//! * a deterministic simulation pipeline (reference set, dataset, bound
//!   sweep) whose outputs are byte-identical across runs and thread
//!   counts, and
//! * file formats: f32 matrix files readable by numpy, plain-text label
//!   sidecars, attribute CSVs and histogram CSVs.
//!
//! Randomness is never taken from the environment. Every stream derives
//! from an explicit base seed through [`stream::substream_seed`], which is
//! what makes the parallel pipeline reproducible.

pub mod dataset;
pub mod error;
pub mod geometry;
pub mod guidance;
pub mod identity;
pub mod intra;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod stream;
pub mod vector;

pub use dataset::LabeledEmbeddingSet;
pub use error::{Error, Result};
pub use geometry::{
    apply_euclidean_noise, noise_perturb, rotate_toward, sample_cosine, sample_tangent, ConeSpec,
    PerturbationDraw,
};
pub use guidance::{cfg_combine, GuidanceScale, NoisePrediction};
pub use identity::IdentitySet;
pub use intra::{
    attribute_entropy, attribute_std, intra_class_consistency, intra_class_diversity,
    unit_cosine_distance, AttributeColumn, AttributeTable, IntraSummary,
    DEFAULT_CONSISTENCY_THRESHOLD,
};
pub use metrics::{
    build_score_set, compute_eer, compute_fdr, compute_fmr100, score_histogram, score_stats,
    DistributionStats, Fmr100, GenuinePairing, HistogramSpec, ImpostorPairing, MetricFlag,
    PairingPolicy, ScoreHistogram, ScoreSet,
};
pub use pipeline::{
    generate_dataset, generate_reference_set, observe, run_lb_sweep, GenerationConfig,
    SweepEntry, SweepResult,
};
pub use report::{
    assemble, evaluate, Evaluation, ReportConfig, ReportCounts, ReportDocument, ReportMetrics,
};
pub use stream::{stream_for, substream_seed, SampleStream, StreamDomain};
pub use vector::{angle_between, cosine, dot, normalize, UnitVector};
