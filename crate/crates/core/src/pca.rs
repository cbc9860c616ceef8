//! Classical PCA on spectral vectors, the baseline extractor.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Negative eigenvalues down to `-EIGEN_CLAMP * max(1, λ_max)` are rounding
/// noise of a PSD covariance and are clamped to zero.
pub const EIGEN_CLAMP: f64 = 1e-10;

const EIGEN_MAX_ITER: usize = 10_000;

/// A reduced feature vector (the first `d` projected components).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("feature vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite feature value".into()));
        }
        Ok(Self(values))
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Fitted PCA: mean, orthogonal basis (columns by descending eigenvalue)
/// and the eigenvalues themselves.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    pub(crate) mean: DVector<f64>,
    pub(crate) basis: DMatrix<f64>,
    pub(crate) eigenvalues: Vec<f64>,
}

impl PcaModel {
    /// Fits on `samples` (N >= 2 vectors of equal length D).
    ///
    /// The covariance uses the unbiased `1/(N-1)` factor. Each basis column
    /// is signed so that its largest-magnitude component is positive.
    pub fn fit<S: AsRef<[f64]>>(samples: &[S]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "PCA needs at least 2 samples, got {n}"
            )));
        }
        let dim = samples[0].as_ref().len();
        if dim == 0 {
            return Err(Error::Empty("PCA sample"));
        }
        let mut centered = DMatrix::<f64>::zeros(dim, n);
        for (c, s) in samples.iter().enumerate() {
            let s = s.as_ref();
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "PCA sample length",
                    expected: dim,
                    found: s.len(),
                });
            }
            centered.column_mut(c).copy_from_slice(s);
        }
        let mut mean = DVector::<f64>::zeros(dim);
        for c in 0..n {
            mean += centered.column(c);
        }
        mean /= n as f64;
        for mut col in centered.column_iter_mut() {
            col -= &mean;
        }
        let cov = (&centered * centered.transpose()) / (n as f64 - 1.0);
        let (basis, eigenvalues) = sorted_eigen(cov)?;
        Ok(Self {
            mean,
            basis,
            eigenvalues,
        })
    }

    /// Builds a model from parts, checking orthogonality and ordering.
    pub fn from_parts(mean: Vec<f64>, basis: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        let dim = mean.len();
        if basis.shape() != (dim, dim) || eigenvalues.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "PCA model parts",
                expected: dim,
                found: basis.nrows(),
            });
        }
        let ortho = (basis.transpose() * &basis - DMatrix::<f64>::identity(dim, dim)).amax();
        if ortho >= 1e-8 {
            return Err(Error::Numerical(format!(
                "PCA basis is not orthogonal (deviation {ortho:.3e})"
            )));
        }
        Ok(Self {
            mean: DVector::from_vec(mean),
            basis,
            eigenvalues,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn check_query(&self, y: &[f64], d: usize) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "PCA query length",
                expected: self.dim(),
                found: y.len(),
            });
        }
        check_d(d, self.dim())
    }

    /// First `d` components of `Uᵀ(y - mean)`.
    pub fn transform(&self, y: &[f64], d: usize) -> Result<FeatureVector> {
        self.check_query(y, d)?;
        let centered = DVector::from_column_slice(y) - &self.mean;
        let values = (0..d).map(|c| self.basis.column(c).dot(&centered)).collect();
        FeatureVector::new(values)
    }

    /// `mean + U_d · features`, the reconstruction from `d` components.
    pub fn inverse_transform(&self, features: &[f64]) -> Result<Vec<f64>> {
        check_d(features.len(), self.dim())?;
        let mut out = self.mean.clone();
        for (c, f) in features.iter().enumerate() {
            out.axpy(*f, &self.basis.column(c), 1.0);
        }
        Ok(out.as_slice().to_vec())
    }
}

pub(crate) fn check_d(d: usize, dim: usize) -> Result<()> {
    if d == 0 || d > dim {
        return Err(Error::InvalidArgument(format!(
            "feature dimension d = {d} outside 1..={dim}"
        )));
    }
    Ok(())
}

/// Symmetric eigendecomposition sorted descending (stable on ties), columns
/// signed so the largest-magnitude component is positive.
fn sorted_eigen(cov: DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let dim = cov.nrows();
    let eig = SymmetricEigen::try_new(cov, f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let mut basis = DMatrix::<f64>::zeros(dim, dim);
    let mut values = Vec::with_capacity(dim);
    for (c, &src) in order.iter().enumerate() {
        let mut lambda = eig.eigenvalues[src];
        if lambda < 0.0 {
            if lambda < -EIGEN_CLAMP * top {
                return Err(Error::Numerical(format!(
                    "covariance has a negative eigenvalue {lambda:.3e}"
                )));
            }
            lambda = 0.0;
        }
        values.push(lambda);
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for r in 1..dim {
            if col[r].abs() > col[pivot].abs() {
                pivot = r;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        basis.set_column(c, &(col * sign));
    }
    Ok((basis, values))
}
