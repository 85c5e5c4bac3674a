//! Sampling inside a cosine cone on the unit hypersphere.
//!
//! A perturbation of a unit vector `v` is built in three steps:
//!
//! 1. draw a cosine `s` uniformly from `[lower_bound, 1]` and set the
//!    deflection angle `theta = arccos(s)`,
//! 2. draw a unit tangent `u` orthogonal to `v` by projecting a standard
//!    normal vector onto the tangent space at `v` (isotropic over tangent
//!    directions),
//! 3. rotate: `v' = cos(theta) * v + sin(theta) * u`.
//!
//! Because `v` and `u` are orthonormal, the result stays on the sphere and
//! satisfies `<v', v> = cos(theta) = s` up to rounding, so the similarity
//! of the perturbed vector to its source never drops below the configured
//! bound. The Euclidean-noise alternative ([`noise_perturb`]) carries no
//! such guarantee regardless of its scale, which is exactly the contrast
//! the verification suite demonstrates.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::vector::{dot, norm, UnitVector, ZERO_NORM_EPS};

/// Orthogonality tolerance accepted by [`rotate_toward`].
pub const ORTHO_TOL: f64 = 1e-6;

/// Residual norm below which a tangent projection is considered degenerate
/// and the normal draw is repeated.
pub const TANGENT_RESIDUAL_EPS: f64 = ZERO_NORM_EPS;

/// Redraw budget for degenerate tangent and noise draws.
pub const MAX_REDRAWS: u32 = 16;

/// A cosine cone: the set of unit vectors whose cosine similarity to the
/// cone axis is at least `lower_bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeSpec {
    lower_bound: f64,
}

impl ConeSpec {
    /// `lower_bound` must lie in `[0, 1]`. The bound `1` denotes the
    /// degenerate cone containing only the axis itself.
    pub fn new(lower_bound: f64) -> Result<Self> {
        if !lower_bound.is_finite() || !(0.0..=1.0).contains(&lower_bound) {
            return Err(Error::BoundOutOfRange {
                value: lower_bound,
                min: 0.0,
                max: 1.0,
            });
        }
        Ok(ConeSpec { lower_bound })
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    /// Half-aperture of the cone in radians, `arccos(lower_bound)`.
    pub fn max_angle(&self) -> f64 {
        self.lower_bound.clamp(-1.0, 1.0).acos()
    }
}

/// One sampled deflection: the cosine drawn uniformly from `[lb, 1]` and
/// the corresponding angle `arccos(cosine)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationDraw {
    pub cosine: f64,
    pub angle: f64,
}

/// Draws a deflection for `spec`, uniform in cosine (not uniform on the
/// spherical cap).
///
/// A bound of exactly 1 short-circuits to `(cosine = 1, angle = 0)` without
/// consuming randomness, so a zero-width cone reproduces its axis bit for
/// bit.
pub fn sample_cosine<R: Rng + ?Sized>(spec: &ConeSpec, rng: &mut R) -> PerturbationDraw {
    if spec.lower_bound == 1.0 {
        return PerturbationDraw {
            cosine: 1.0,
            angle: 0.0,
        };
    }
    let s: f64 = rng.random_range(spec.lower_bound..=1.0);
    let s = s.clamp(-1.0, 1.0);
    PerturbationDraw {
        cosine: s,
        angle: s.acos(),
    }
}

/// Draws a unit tangent at `v`, isotropic over the tangent space.
///
/// A standard normal vector is projected onto the orthogonal complement of
/// `v` and normalized; a second projection pass scrubs the rounding left by
/// the first. Draws whose projection is numerically zero (the normal draw
/// landed on the axis) are repeated, at most [`MAX_REDRAWS`] times.
pub fn sample_tangent<R: Rng + ?Sized>(v: &UnitVector, rng: &mut R) -> Result<UnitVector> {
    let d = v.dim();
    for _ in 0..MAX_REDRAWS {
        let mut n: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let c = dot(&n, v);
        for (ni, vi) in n.iter_mut().zip(v.iter()) {
            *ni -= c * vi;
        }
        let residual = norm(&n);
        if residual < TANGENT_RESIDUAL_EPS {
            continue;
        }
        let inv = 1.0 / residual;
        for x in n.iter_mut() {
            *x *= inv;
        }
        let c2 = dot(&n, v);
        for (ni, vi) in n.iter_mut().zip(v.iter()) {
            *ni -= c2 * vi;
        }
        let inv2 = 1.0 / norm(&n);
        for x in n.iter_mut() {
            *x *= inv2;
        }
        return Ok(UnitVector::from_unit_unchecked(n));
    }
    Err(Error::RetriesExhausted {
        context: "tangent sampling",
        attempts: MAX_REDRAWS,
    })
}

/// Rotates `v` by `angle` radians toward the unit tangent `u`.
///
/// Requires `angle` in `[0, pi/2]` and `|<u, v>| <=` [`ORTHO_TOL`]. For
/// orthonormal inputs the output is unit norm and its cosine against `v`
/// equals `cos(angle)`, both up to rounding on the order of 1e-15; the
/// output is deliberately not renormalized so those identities are
/// observable rather than enforced.
pub fn rotate_toward(v: &UnitVector, u: &UnitVector, angle: f64) -> Result<UnitVector> {
    if v.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            left: v.dim(),
            right: u.dim(),
        });
    }
    if !angle.is_finite() || !(0.0..=std::f64::consts::FRAC_PI_2).contains(&angle) {
        return Err(Error::AngleOutOfRange { angle });
    }
    let uv = dot(u, v);
    if uv.abs() > ORTHO_TOL {
        return Err(Error::NotOrthogonal {
            dot: uv.abs(),
            tol: ORTHO_TOL,
        });
    }
    let (sin, cos) = angle.sin_cos();
    let out: Vec<f64> = v
        .iter()
        .zip(u.iter())
        .map(|(vi, ui)| cos * vi + sin * ui)
        .collect();
    Ok(UnitVector::from_unit_unchecked(out))
}

/// Adds a fixed Euclidean offset to `v` and projects back to the sphere.
///
/// This is the deterministic core of [`noise_perturb`], split out so the
/// degenerate cases (an offset cancelling `v` exactly) can be exercised
/// without rigging a random stream.
pub fn apply_euclidean_noise(v: &UnitVector, offset: &[f64]) -> Result<UnitVector> {
    if v.dim() != offset.len() {
        return Err(Error::DimensionMismatch {
            left: v.dim(),
            right: offset.len(),
        });
    }
    let w: Vec<f64> = v.iter().zip(offset).map(|(vi, ei)| vi + ei).collect();
    UnitVector::new(w)
}

/// Baseline perturbation without an angular guarantee: `v + eps` with
/// `eps ~ N(0, sigma^2 I)`, renormalized.
///
/// Note that no value of `sigma` bounds the angle of the result against
/// `v`; even small scales have positive probability of arbitrarily large
/// deflection, and at `sigma` around 1 the output direction is close to
/// independent of `v` in high dimension.
pub fn noise_perturb<R: Rng + ?Sized>(
    v: &UnitVector,
    sigma: f64,
    rng: &mut R,
) -> Result<UnitVector> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "noise scale must be finite and non-negative, got {sigma}"
        )));
    }
    for _ in 0..MAX_REDRAWS {
        let eps: Vec<f64> = (0..v.dim())
            .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        match apply_euclidean_noise(v, &eps) {
            Ok(out) => return Ok(out),
            Err(Error::ZeroNorm { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetriesExhausted {
        context: "euclidean noise",
        attempts: MAX_REDRAWS,
    })
}
