//! Classifier-free guidance combination of denoiser outputs.
//!
//! Given a conditional prediction, an unconditional prediction and a scale
//! `omega >= 0`, the guided prediction extrapolates from the unconditional
//! toward the conditional one:
//!
//! ```text
//! guided = cond + omega * (cond - uncond)
//! ```
//!
//! which is the usual `(1 + omega) * cond - omega * uncond` rearranged so
//! that the two exactness guarantees hold bitwise in floating point:
//! `omega = 0` returns `cond` unchanged, and identical predictions are a
//! fixed point for every scale.

use crate::error::{Error, Result};

/// Guidance strength. `0` disables guidance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceScale(f64);

impl GuidanceScale {
    pub fn new(omega: f64) -> Result<Self> {
        if !omega.is_finite() || omega < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "guidance scale must be finite and non-negative, got {omega}"
            )));
        }
        Ok(GuidanceScale(omega))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// A denoiser output: any finite vector with at least one component. Unlike
/// embeddings these are not unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePrediction(Vec<f64>);

impl NoisePrediction {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::DimensionTooSmall { dim: 0, min: 1 });
        }
        if components.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: "noise prediction",
            });
        }
        Ok(NoisePrediction(components))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Combines conditional and unconditional predictions under `scale`.
///
/// Errors if the predictions disagree on length or if the extrapolation
/// overflows to a non-finite value.
pub fn cfg_combine(
    cond: &NoisePrediction,
    uncond: &NoisePrediction,
    scale: GuidanceScale,
) -> Result<NoisePrediction> {
    if cond.len() != uncond.len() {
        return Err(Error::DimensionMismatch {
            left: cond.len(),
            right: uncond.len(),
        });
    }
    let omega = scale.value();
    let out: Vec<f64> = cond
        .as_slice()
        .iter()
        .zip(uncond.as_slice())
        .map(|(c, u)| c + omega * (c - u))
        .collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            context: "guided prediction",
        });
    }
    Ok(NoisePrediction(out))
}
