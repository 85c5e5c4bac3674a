//! Labeled embedding matrices.

use crate::error::{Error, Result};
use crate::vector::UnitVector;

/// `N` unit-norm embeddings with one class label each.
///
/// Rows are stored row-major; labels are dense class indices in
/// `[0, class_count)`. Arbitrary label values are remapped to dense indices
/// by first appearance at construction, which every metric downstream is
/// invariant to.
#[derive(Debug, Clone)]
pub struct LabeledEmbeddingSet {
    dim: usize,
    embeddings: Vec<f64>,
    labels: Vec<u32>,
    class_count: usize,
}

impl LabeledEmbeddingSet {
    /// Builds a set from raw row-major data, normalizing every row.
    pub fn new(dim: usize, embeddings: Vec<f64>, labels: Vec<u32>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall { dim, min: 2 });
        }
        if embeddings.is_empty() || embeddings.len() % dim != 0 {
            return Err(Error::InvalidConfig(format!(
                "embedding buffer length {} is not a positive multiple of dim {dim}",
                embeddings.len()
            )));
        }
        let rows = embeddings.len() / dim;
        if labels.len() != rows {
            return Err(Error::LabelCountMismatch {
                labels: labels.len(),
                rows,
            });
        }
        let mut data = embeddings;
        for (row, chunk) in data.chunks_exact_mut(dim).enumerate() {
            let unit = UnitVector::new(chunk.to_vec())
                .map_err(|e| Error::InvalidConfig(format!("embedding row {row}: {e}")))?;
            chunk.copy_from_slice(&unit);
        }
        let (labels, class_count) = densify(labels);
        Ok(LabeledEmbeddingSet {
            dim,
            embeddings: data,
            labels,
            class_count,
        })
    }

    /// Internal constructor for generators whose rows are already unit and
    /// whose labels are already dense.
    pub(crate) fn from_parts_unchecked(
        dim: usize,
        embeddings: Vec<f64>,
        labels: Vec<u32>,
        class_count: usize,
    ) -> Self {
        debug_assert_eq!(embeddings.len(), labels.len() * dim);
        debug_assert!(labels.iter().all(|&l| (l as usize) < class_count));
        LabeledEmbeddingSet {
            dim,
            embeddings,
            labels,
            class_count,
        }
    }

    /// Number of samples `N`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of distinct classes `C`.
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    /// Embedding `i` as a raw row.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.embeddings[i * self.dim..(i + 1) * self.dim]
    }

    /// Raw row-major embedding buffer.
    pub fn rows(&self) -> &[f64] {
        &self.embeddings
    }

    /// Sample indices grouped by class, classes in dense order, indices
    /// ascending within each class.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.class_count];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l as usize].push(i);
        }
        groups
    }
}

/// Remaps labels to dense `[0, C)` by first appearance.
fn densify(labels: Vec<u32>) -> (Vec<u32>, usize) {
    let mut mapping: std::collections::HashMap<u32, u32> = std::collections::HashMap::new();
    let mut next = 0u32;
    let dense = labels
        .into_iter()
        .map(|l| {
            *mapping.entry(l).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect();
    (dense, next as usize)
}
