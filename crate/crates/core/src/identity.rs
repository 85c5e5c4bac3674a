//! Reference identities and identity-aware perturbation.
//!
//! An [`IdentitySet`] holds one unit-norm reference vector per identity
//! plus a cached nearest-neighbor cosine for each row. The cache feeds
//! [`IdentitySet::adjusted_lower_bound`], which widens a requested cone
//! bound just enough that no perturbed sample can land closer to a foreign
//! reference than to its own: if the closest foreign reference sits at
//! angle `phi`, every sample is kept within `phi / 2` by raising the bound
//! to `cos(phi / 2)`. Samples then satisfy the triangle inequality against
//! every other reference by construction.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{rotate_toward, sample_cosine, sample_tangent, ConeSpec};
use crate::vector::{dot, UnitVector};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Row-block edge for the pairwise scans, sized so a block of 512-d rows
/// stays resident in L2 while one row streams against it.
const NN_BLOCK: usize = 64;

/// A set of reference identities with pairwise-similarity metadata.
#[derive(Debug, Clone)]
pub struct IdentitySet {
    dim: usize,
    data: Vec<f64>,
    ids: Vec<u64>,
    nn_cos: Vec<f64>,
}

impl IdentitySet {
    /// Builds a set from unit vectors, assigning ids `0..C`.
    pub fn from_vectors(vectors: Vec<UnitVector>) -> Result<Self> {
        let ids = (0..vectors.len() as u64).collect();
        Self::from_vectors_with_ids(vectors, ids)
    }

    /// Builds a set from unit vectors with caller-chosen distinct ids.
    pub fn from_vectors_with_ids(vectors: Vec<UnitVector>, ids: Vec<u64>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidConfig("identity set is empty".into()));
        }
        if ids.len() != vectors.len() {
            return Err(Error::InvalidConfig(format!(
                "{} ids for {} vectors",
                ids.len(),
                vectors.len()
            )));
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("identity ids must be distinct".into()));
        }
        let dim = vectors[0].dim();
        let mut data = Vec::with_capacity(vectors.len() * dim);
        for v in &vectors {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: v.dim(),
                });
            }
            data.extend_from_slice(v);
        }
        let nn_cos = compute_nn(dim, &data);
        Ok(IdentitySet {
            dim,
            data,
            ids,
            nn_cos,
        })
    }

    /// Builds a set from raw row-major data, normalizing each row.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall { dim, min: 2 });
        }
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::InvalidConfig(format!(
                "data length {} is not a positive multiple of dim {dim}",
                data.len()
            )));
        }
        let count = data.len() / dim;
        let mut vectors = Vec::with_capacity(count);
        for row in data.chunks_exact(dim) {
            vectors.push(UnitVector::new(row.to_vec())?);
        }
        Self::from_vectors(vectors)
    }

    /// Internal constructor for callers that already maintained the
    /// nearest-neighbor cache while building `data` (rows must be unit).
    pub(crate) fn from_parts_unchecked(
        dim: usize,
        data: Vec<f64>,
        ids: Vec<u64>,
        nn_cos: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), ids.len() * dim);
        debug_assert_eq!(ids.len(), nn_cos.len());
        IdentitySet {
            dim,
            data,
            ids,
            nn_cos,
        }
    }

    /// Number of identities `C`.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Reference vector of identity `i` as a raw row.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Reference vector of identity `i`.
    pub fn unit_vector(&self, i: usize) -> UnitVector {
        UnitVector::from_unit_unchecked(self.row(i).to_vec())
    }

    /// Cosine of identity `i` to its angular nearest neighbor, `-1` for a
    /// single-identity set.
    pub fn nearest_cosine(&self, i: usize) -> f64 {
        self.nn_cos[i]
    }

    /// Raises `base`'s lower bound to half the angular distance of the
    /// nearest foreign reference.
    ///
    /// Uses the half-angle identity `cos(phi/2) = sqrt((1 + cos(phi)) / 2)`
    /// on the cached nearest-neighbor cosine; for a single identity the
    /// cache holds `-1`, the half-angle cosine is `0`, and the base bound
    /// comes back unchanged.
    pub fn adjusted_lower_bound(&self, i: usize, base: &ConeSpec) -> f64 {
        let nn = self.nn_cos[i].clamp(-1.0, 1.0);
        let half_angle_cos = ((1.0 + nn) / 2.0).sqrt();
        base.lower_bound().max(half_angle_cos)
    }

    /// Draws `k` samples inside the (identity-adjusted) cone around
    /// reference `i`.
    pub fn perturb_identity<R: Rng + ?Sized>(
        &self,
        i: usize,
        base: &ConeSpec,
        k: u32,
        rng: &mut R,
    ) -> Result<Vec<UnitVector>> {
        assert!(i < self.len(), "identity index {i} out of range");
        let eff = ConeSpec::new(self.adjusted_lower_bound(i, base))
            .expect("adjusted bound stays in [0, 1]");
        let v = self.unit_vector(i);
        let mut out = Vec::with_capacity(k as usize);
        for _ in 0..k {
            let draw = sample_cosine(&eff, rng);
            let u = sample_tangent(&v, rng)?;
            out.push(rotate_toward(&v, &u, draw.angle)?);
        }
        Ok(out)
    }
}

/// Max cosine of each row against every other row, `-1` for a singleton.
///
/// Blocked upper-triangular scan. The maxima are merged with `max`, which
/// is order-independent, so the parallel and sequential paths agree bit
/// for bit.
pub(crate) fn compute_nn(dim: usize, data: &[f64]) -> Vec<f64> {
    let count = data.len() / dim;
    if count <= 1 {
        return vec![-1.0; count];
    }
    let blocks: Vec<usize> = (0..count).step_by(NN_BLOCK).collect();

    #[cfg(feature = "parallel")]
    {
        blocks
            .par_iter()
            .fold(
                || vec![-1.0f64; count],
                |mut nn, &b| {
                    scan_block_pairs(dim, data, count, b, &mut nn);
                    nn
                },
            )
            .reduce(
                || vec![-1.0f64; count],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        if y > *x {
                            *x = y;
                        }
                    }
                    a
                },
            )
    }

    #[cfg(not(feature = "parallel"))]
    {
        let mut nn = vec![-1.0f64; count];
        for &b in &blocks {
            scan_block_pairs(dim, data, count, b, &mut nn);
        }
        nn
    }
}

/// Scans block `[b, b + NN_BLOCK)` against itself and every later row,
/// folding maxima for both sides of each pair into `nn`.
fn scan_block_pairs(dim: usize, data: &[f64], count: usize, b: usize, nn: &mut [f64]) {
    let b_end = (b + NN_BLOCK).min(count);
    for i in b..b_end {
        let row_i = &data[i * dim..(i + 1) * dim];
        for j in (i + 1)..count {
            let d = dot(row_i, &data[j * dim..(j + 1) * dim]);
            if d > nn[i] {
                nn[i] = d;
            }
            if d > nn[j] {
                nn[j] = d;
            }
        }
    }
}
