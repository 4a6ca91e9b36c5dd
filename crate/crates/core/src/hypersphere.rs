//! Vector geometry on the unit hypersphere: length normalization, cosine
//! similarity, and per-recording PCA dimension reduction.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Norm below which an embedding is considered degenerate and cannot be
/// projected onto the sphere.
pub const ZERO_NORM_THRESHOLD: f64 = 1e-30;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("vector norm below {ZERO_NORM_THRESHOLD:e}, cannot normalize")]
    ZeroVector,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("need at least {need} points, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("bad dimension: {0}")]
    BadDimension(String),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

/// An embedding vector as it arrives from upstream extraction, before any
/// post-processing. Entries must be finite and the dimension at least 2.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEmbedding {
    values: Vec<f64>,
}

impl RawEmbedding {
    pub fn new(values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() < 2 {
            return Err(GeometryError::BadDimension(format!(
                "embedding dimension must be >= 2, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// A point on the unit hypersphere: Euclidean norm 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    values: Vec<f64>,
}

impl UnitVector {
    /// Wraps a vector that is already unit-norm; errors if it is not.
    pub fn new(values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() < 2 {
            return Err(GeometryError::BadDimension(format!(
                "unit vector dimension must be >= 2, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        let norm = norm2(&values);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(GeometryError::BadDimension(format!(
                "norm {norm} is not 1 within 1e-12"
            )));
        }
        Ok(Self { values })
    }

    /// Scales an arbitrary vector onto the sphere.
    pub fn from_unnormalized(values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() < 2 {
            return Err(GeometryError::BadDimension(format!(
                "unit vector dimension must be >= 2, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        let norm = norm2(&values);
        if norm < ZERO_NORM_THRESHOLD {
            return Err(GeometryError::ZeroVector);
        }
        let values = values.into_iter().map(|v| v / norm).collect();
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Inner product without a dimension check; callers guarantee equal dims.
    pub(crate) fn dot_unchecked(&self, other: &UnitVector) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        dot(&self.values, &other.values)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Scales `v` to unit Euclidean norm.
pub fn length_normalize(v: &RawEmbedding) -> Result<UnitVector, GeometryError> {
    UnitVector::from_unnormalized(v.values().to_vec())
}

/// Inner product of two unit vectors, clamped to [-1, 1].
pub fn cosine_similarity(u: &UnitVector, v: &UnitVector) -> Result<f64, GeometryError> {
    if u.dim() != v.dim() {
        return Err(GeometryError::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    Ok(u.dot_unchecked(v).clamp(-1.0, 1.0))
}

/// A fitted PCA basis: sample mean, top-k orthonormal directions, and the
/// matching covariance eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct PcaModel {
    mean: Vec<f64>,
    basis: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.len()
    }
}

/// Fits a PCA model on the sample covariance (divisor n-1) of `data`.
///
/// The basis holds the top-k eigenvectors; each vector's first nonzero entry
/// is made positive so the decomposition is deterministic. Tiny negative
/// eigenvalues from roundoff are clamped to zero.
pub fn fit_pca(data: &[RawEmbedding], k: usize) -> Result<PcaModel, GeometryError> {
    if data.len() < 2 {
        return Err(GeometryError::InsufficientData {
            need: 2,
            got: data.len(),
        });
    }
    let d = data[0].dim();
    for (i, row) in data.iter().enumerate() {
        if row.dim() != d {
            return Err(GeometryError::DimensionMismatch {
                left: d,
                right: data[i].dim(),
            });
        }
    }
    if k == 0 || k > d {
        return Err(GeometryError::BadDimension(format!(
            "requested {k} components from {d}-dimensional data"
        )));
    }

    let n = data.len();
    let mut mean = vec![0.0; d];
    for row in data {
        for (m, v) in mean.iter_mut().zip(row.values()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in data {
        let c: Vec<f64> = row.values().iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += c[i] * c[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            cov[(i, j)] /= denom;
            cov[(j, i)] = cov[(i, j)];
        }
    }

    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("covariance eigenvalues are finite")
            .then(a.cmp(&b))
    });

    let mut basis = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let col: DVector<f64> = eig.eigenvectors.column(idx).into();
        let mut v: Vec<f64> = col.iter().copied().collect();
        if let Some(first) = v.iter().find(|x| **x != 0.0) {
            if *first < 0.0 {
                for x in &mut v {
                    *x = -*x;
                }
            }
        }
        basis.push(v);
        eigenvalues.push(eig.eigenvalues[idx].max(0.0));
    }

    Ok(PcaModel {
        mean,
        basis,
        eigenvalues,
    })
}

/// Projects `v` onto the PCA basis: out_j = basis_j . (v - mean).
pub fn pca_project(model: &PcaModel, v: &RawEmbedding) -> Result<RawEmbedding, GeometryError> {
    if v.dim() != model.input_dim() {
        return Err(GeometryError::DimensionMismatch {
            left: model.input_dim(),
            right: v.dim(),
        });
    }
    let centered: Vec<f64> = v
        .values()
        .iter()
        .zip(model.mean())
        .map(|(x, m)| x - m)
        .collect();
    let out: Vec<f64> = model.basis().iter().map(|b| dot(b, &centered)).collect();
    RawEmbedding::new(out)
}
