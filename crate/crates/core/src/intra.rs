//! Intra-class structure: consistency, diversity and attribute spread.
//!
//! These metrics ask how samples of one class relate to each other rather
//! than how classes separate. Consistency is the fraction of samples close
//! to their class center; diversity is the mean pairwise dissimilarity
//! inside a class; attribute entropy and attribute standard deviation
//! measure the spread of side-channel annotations (pose, illumination and
//! the like) within classes. All four are averaged uniformly over classes,
//! so large classes do not dominate.

use std::collections::BTreeMap;

use crate::dataset::LabeledEmbeddingSet;
use crate::error::{Error, Result};
use crate::metrics::HistogramSpec;
use crate::vector::{dot, norm, ZERO_NORM_EPS};

/// Default cosine threshold for [`intra_class_consistency`].
pub const DEFAULT_CONSISTENCY_THRESHOLD: f64 = 0.3;

/// An averaged per-class value plus the classes that had to be skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct IntraSummary {
    /// Mean over the classes that qualified.
    pub value: f64,
    /// Dense class indices excluded from the average (degenerate center,
    /// or too few members for a pair).
    pub excluded_classes: Vec<u32>,
}

/// Fraction of samples whose cosine to their class center reaches
/// `threshold`, averaged over classes.
///
/// The center is the plain arithmetic mean of the class rows, deliberately
/// not renormalized. A class whose center has numerically zero norm (for
/// example two antipodal samples) has no direction to compare against and
/// is excluded and reported; if every class is excluded an error is
/// returned.
pub fn intra_class_consistency(
    set: &LabeledEmbeddingSet,
    threshold: f64,
) -> Result<IntraSummary> {
    if !threshold.is_finite() || !(-1.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!(
            "consistency threshold must lie in [-1, 1], got {threshold}"
        )));
    }
    let dim = set.dim();
    let mut total = 0.0;
    let mut included = 0usize;
    let mut excluded = Vec::new();
    for (class, members) in set.indices_by_class().into_iter().enumerate() {
        let mut center = vec![0.0f64; dim];
        for &i in &members {
            for (c, x) in center.iter_mut().zip(set.row(i)) {
                *c += x;
            }
        }
        let inv = 1.0 / members.len() as f64;
        for c in center.iter_mut() {
            *c *= inv;
        }
        let center_norm = norm(&center);
        if center_norm < ZERO_NORM_EPS {
            excluded.push(class as u32);
            continue;
        }
        let hits = members
            .iter()
            .filter(|&&i| dot(set.row(i), &center) / center_norm >= threshold)
            .count();
        total += hits as f64 / members.len() as f64;
        included += 1;
    }
    if included == 0 {
        return Err(Error::NoEligibleClass {
            metric: "intra-class consistency",
        });
    }
    Ok(IntraSummary {
        value: total / included as f64,
        excluded_classes: excluded,
    })
}

/// Cosine dissimilarity for unit-norm rows, the default pairwise measure
/// for [`intra_class_diversity`].
pub fn unit_cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - dot(a, b)
}

/// Mean pairwise dissimilarity within a class, averaged over classes.
///
/// For a class with `M` members the per-class value is
/// `2 / (M * (M - 1)) * sum over unordered pairs of dissimilarity`.
/// Classes with fewer than two members have no pairs and are excluded and
/// reported; if every class is excluded an error is returned.
pub fn intra_class_diversity<D>(set: &LabeledEmbeddingSet, dissimilarity: D) -> Result<IntraSummary>
where
    D: Fn(&[f64], &[f64]) -> f64,
{
    let mut total = 0.0;
    let mut included = 0usize;
    let mut excluded = Vec::new();
    for (class, members) in set.indices_by_class().into_iter().enumerate() {
        let m = members.len();
        if m < 2 {
            excluded.push(class as u32);
            continue;
        }
        let mut sum = 0.0;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                sum += dissimilarity(set.row(i), set.row(j));
            }
        }
        total += sum * 2.0 / (m * (m - 1)) as f64;
        included += 1;
    }
    if included == 0 {
        return Err(Error::NoEligibleClass {
            metric: "intra-class diversity",
        });
    }
    Ok(IntraSummary {
        value: total / included as f64,
        excluded_classes: excluded,
    })
}

/// One annotation channel: categorical codes or real values.
#[derive(Debug, Clone, PartialEq)]
pub enum AttributeColumn {
    /// Codes into a vocabulary (the vocabulary itself is not needed by the
    /// metrics, only distinctness).
    Discrete(Vec<u32>),
    Continuous(Vec<f64>),
}

impl AttributeColumn {
    fn len(&self) -> usize {
        match self {
            AttributeColumn::Discrete(v) => v.len(),
            AttributeColumn::Continuous(v) => v.len(),
        }
    }
}

/// Named annotation channels aligned row-for-row with an embedding set.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeTable {
    names: Vec<String>,
    columns: Vec<AttributeColumn>,
    rows: usize,
}

impl AttributeTable {
    pub fn new(names: Vec<String>, columns: Vec<AttributeColumn>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InvalidConfig(format!(
                "{} names for {} attribute columns",
                names.len(),
                columns.len()
            )));
        }
        if columns.is_empty() {
            return Err(Error::InvalidConfig("attribute table has no columns".into()));
        }
        let rows = columns[0].len();
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidConfig(
                "attribute columns have unequal lengths".into(),
            ));
        }
        for (name, column) in names.iter().zip(&columns) {
            if let AttributeColumn::Continuous(v) = column {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "attribute column '{name}' contains a non-finite value"
                    )));
                }
            }
        }
        Ok(AttributeTable {
            names,
            columns,
            rows,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[AttributeColumn] {
        &self.columns
    }
}

fn check_alignment(table: &AttributeTable, labels: &[u32]) -> Result<()> {
    if table.rows() != labels.len() {
        return Err(Error::AttributeCountMismatch {
            rows: table.rows(),
            samples: labels.len(),
        });
    }
    Ok(())
}

fn class_members(labels: &[u32]) -> Vec<Vec<usize>> {
    let classes = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut groups = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        groups[l as usize].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Shannon entropy (natural log) of each channel's within-class value
/// distribution, averaged over classes. Continuous channels are
/// discretized with `binning` first (clamped edges, upper-bin boundaries,
/// same convention as the score histogram).
pub fn attribute_entropy(
    table: &AttributeTable,
    labels: &[u32],
    binning: &HistogramSpec,
) -> Result<BTreeMap<String, f64>> {
    check_alignment(table, labels)?;
    let groups = class_members(labels);
    let mut out = BTreeMap::new();
    for (name, column) in table.names().iter().zip(table.columns()) {
        let mut sum = 0.0;
        for members in &groups {
            let codes: Vec<u64> = match column {
                AttributeColumn::Discrete(v) => {
                    members.iter().map(|&i| v[i] as u64).collect()
                }
                AttributeColumn::Continuous(v) => {
                    let width = (binning.hi() - binning.lo()) / binning.bins() as f64;
                    members
                        .iter()
                        .map(|&i| {
                            let idx = ((v[i] - binning.lo()) / width).floor();
                            if idx < 0.0 {
                                0
                            } else if idx >= binning.bins() as f64 {
                                (binning.bins() - 1) as u64
                            } else {
                                idx as u64
                            }
                        })
                        .collect()
                }
            };
            sum += entropy_nats(&codes);
        }
        out.insert(name.clone(), sum / groups.len() as f64);
    }
    Ok(out)
}

fn entropy_nats(codes: &[u64]) -> f64 {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for &c in codes {
        *counts.entry(c).or_insert(0) += 1;
    }
    let n = codes.len() as f64;
    let mut h = 0.0;
    for &count in counts.values() {
        let p = count as f64 / n;
        h -= p * p.ln();
    }
    h
}

/// Population standard deviation of each continuous channel within a
/// class, averaged over classes. Discrete channels are omitted from the
/// result.
pub fn attribute_std(table: &AttributeTable, labels: &[u32]) -> Result<BTreeMap<String, f64>> {
    check_alignment(table, labels)?;
    let groups = class_members(labels);
    let mut out = BTreeMap::new();
    for (name, column) in table.names().iter().zip(table.columns()) {
        let AttributeColumn::Continuous(values) = column else {
            continue;
        };
        let mut sum = 0.0;
        for members in &groups {
            let n = members.len() as f64;
            let mean = members.iter().map(|&i| values[i]).sum::<f64>() / n;
            let var = members
                .iter()
                .map(|&i| {
                    let d = values[i] - mean;
                    d * d
                })
                .sum::<f64>()
                / n;
            sum += var.sqrt();
        }
        out.insert(name.clone(), sum / groups.len() as f64);
    }
    Ok(out)
}
