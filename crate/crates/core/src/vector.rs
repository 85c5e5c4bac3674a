//! Unit vectors and the small dense kernels everything else is built on.
//!
//! All geometry in this crate runs in `f64`. The [`UnitVector`] newtype
//! guarantees `||v|| = 1` within 1e-9 for every value that escapes this
//! module, so downstream code can take dot products as cosines directly.

use crate::error::{Error, Result};

/// Norm below which a vector is treated as zero and cannot be normalized
/// or used as a direction.
pub const ZERO_NORM_EPS: f64 = 1e-12;

/// Unit-norm guarantee carried by [`UnitVector`].
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// A vector on the unit hypersphere, `d >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Normalizes `components` onto the unit sphere.
    ///
    /// Errors on non-finite components, dimension below 2 and vanishing
    /// norm. Inputs of extreme magnitude (for example `1e300`) are rescaled
    /// before the norm is taken so the squares cannot overflow.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::DimensionTooSmall {
                dim: components.len(),
                min: 2,
            });
        }
        if components.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: "vector components",
            });
        }
        let mut v = components;
        let max_abs = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if max_abs == 0.0 {
            return Err(Error::ZeroNorm { norm: 0.0 });
        }
        // Divide rather than multiply by a reciprocal: the reciprocal of a
        // subnormal overflows to infinity. After this pass the largest
        // component is exactly 1, so the squared norm is in [1, d].
        for x in v.iter_mut() {
            *x /= max_abs;
        }
        let inv_n = 1.0 / norm(&v);
        for x in v.iter_mut() {
            *x *= inv_n;
        }
        Ok(UnitVector(v))
    }

    /// Wraps a vector that is already unit norm by construction.
    ///
    /// Callers must have produced `v` through an operation that preserves
    /// the norm (rotation of a unit vector, copy of an existing unit
    /// vector). Checked in debug builds.
    pub(crate) fn from_unit_unchecked(v: Vec<f64>) -> Self {
        debug_assert!(v.len() >= 2);
        // Sanity net only. Rotations fed a tangent at the edge of the
        // orthogonality tolerance can sit up to ~1e-6 off the sphere, which
        // is still far from any construction bug this is meant to catch.
        debug_assert!((norm(&v) - 1.0).abs() <= 1e-5);
        UnitVector(v)
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for UnitVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Normalizes a borrowed slice onto the unit sphere.
pub fn normalize(v: &[f64]) -> Result<UnitVector> {
    UnitVector::new(v.to_vec())
}

/// Dot product with four independent accumulators.
///
/// The unrolling breaks the add-latency chain, which matters in the
/// pairwise scans where this runs billions of times. Summation order is
/// fixed, so results are reproducible run to run.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        acc[0] += xa[0] * xb[0];
        acc[1] += xa[1] * xb[1];
        acc[2] += xa[2] * xb[2];
        acc[3] += xa[3] * xb[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Cosine similarity of two unit vectors, which is just their dot product.
pub fn unit_cosine(a: &UnitVector, b: &UnitVector) -> f64 {
    dot(a, b)
}

/// Cosine similarity of arbitrary nonzero vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let na = norm(a);
    let nb = norm(b);
    if na < ZERO_NORM_EPS || nb < ZERO_NORM_EPS {
        return Err(Error::ZeroNorm { norm: na.min(nb) });
    }
    Ok(dot(a, b) / (na * nb))
}

/// Angle in radians between two unit vectors, with the cosine clamped to
/// `[-1, 1]` so accumulated rounding can never produce NaN from `acos`.
pub fn angle_between(a: &UnitVector, b: &UnitVector) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}
