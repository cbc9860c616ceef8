//! Tensor PCA over C-vectors, fitted once and applied to many queries.
//!
//! Fitting follows the Fourier route: centre the training C-vectors, take
//! their slice-wise DFT, form one complex covariance matrix per frequency
//! and decompose it with the slice SVD conventions of [`crate::linalg`].
//! A query is centred, projected slice by slice with `U(w)^H`, brought back
//! to the spatial domain and collapsed to an ordinary vector by the δ map.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{decompose_slices, CVector, FourierSliceStack};
use crate::pca::{check_d, FeatureVector, PcaModel};
use crate::ring::TensorShape;

/// Fitted tensor PCA state.
#[derive(Clone, Debug, PartialEq)]
pub struct TpcaModel {
    pub(crate) shape: TensorShape,
    pub(crate) mean: CVector,
    /// Per-frequency unitary `D x D` projections, row-major frequency order.
    pub(crate) proj_slices: Vec<DMatrix<Complex64>>,
    /// Per-frequency descending singular values.
    pub(crate) sv_slices: Vec<Vec<f64>>,
}

impl TpcaModel {
    pub fn fit(samples: &[CVector]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "TPCA needs at least 2 samples, got {n}"
            )));
        }
        let shape = samples[0].shape();
        let dim = samples[0].len();
        for s in samples {
            if s.shape() != shape {
                return Err(Error::ShapeMismatch {
                    expected: shape,
                    found: s.shape(),
                });
            }
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "TPCA sample length",
                    expected: dim,
                    found: s.len(),
                });
            }
        }

        // Sequential sum keeps the mean bit-reproducible.
        let mut acc = CVector::zeros(dim, shape)?;
        for s in samples {
            acc = acc.add(s)?;
        }
        let mean = acc.scale(1.0 / n as f64);

        let spectra: Vec<Vec<DVector<Complex64>>> = samples
            .par_iter()
            .map(|s| s.sub(&mean).map(|c| c.dft_slices()))
            .collect::<Result<_>>()?;

        let freqs = shape.len();
        let canonical: Vec<usize> = (0..freqs).filter(|&k| shape.is_canonical(k)).collect();
        let norm = 1.0 / (n as f64 - 1.0);
        let covs: Vec<(usize, DMatrix<Complex64>)> = canonical
            .par_iter()
            .map(|&k| {
                let mut x = DMatrix::<Complex64>::zeros(dim, n);
                for (c, spec) in spectra.iter().enumerate() {
                    x.set_column(c, &spec[k]);
                }
                let g = (&x * x.adjoint()).map(|v| v * norm);
                (k, g)
            })
            .collect();
        drop(spectra);

        let mut slices = vec![DMatrix::<Complex64>::zeros(dim, dim); freqs];
        for (k, g) in covs {
            let mirror = shape.mirror_offset(k);
            if mirror != k {
                slices[mirror] = g.map(|v| v.conj());
            }
            slices[k] = g;
        }
        let factors = decompose_slices(&FourierSliceStack::new(shape, slices)?)?;
        let proj_slices = factors.u.slices().to_vec();
        let sv_slices = (0..freqs)
            .map(|k| factors.singular_values(k / shape.cols(), k % shape.cols()))
            .collect();
        Ok(Self {
            shape,
            mean,
            proj_slices,
            sv_slices,
        })
    }

    /// Builds a model from its stored parts; used by the model loader.
    pub fn from_parts(
        mean: CVector,
        proj_slices: Vec<DMatrix<Complex64>>,
        sv_slices: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let shape = mean.shape();
        let dim = mean.len();
        if proj_slices.len() != shape.len() || sv_slices.len() != shape.len() {
            return Err(Error::DimensionMismatch {
                context: "TPCA frequency count",
                expected: shape.len(),
                found: proj_slices.len().min(sv_slices.len()),
            });
        }
        for (p, s) in proj_slices.iter().zip(&sv_slices) {
            if p.shape() != (dim, dim) || s.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "TPCA projection slice",
                    expected: dim,
                    found: p.nrows(),
                });
            }
        }
        let stack = FourierSliceStack::new(shape, proj_slices)?;
        let defect = stack.symmetry_defect();
        if defect >= 1e-8 {
            return Err(Error::Numerical(format!(
                "projection slices are not conjugate symmetric (defect {defect:.3e})"
            )));
        }
        Ok(Self {
            shape,
            mean,
            proj_slices: stack.slices().to_vec(),
            sv_slices,
        })
    }

    #[inline]
    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &CVector {
        &self.mean
    }

    /// Projection `U(w)` at frequency `(w1, w2)`.
    pub fn projection(&self, w1: usize, w2: usize) -> &DMatrix<Complex64> {
        &self.proj_slices[self.shape.offset(w1, w2)]
    }

    pub fn projections(&self) -> &[DMatrix<Complex64>] {
        &self.proj_slices
    }

    pub fn singular_values(&self, w1: usize, w2: usize) -> &[f64] {
        &self.sv_slices[self.shape.offset(w1, w2)]
    }

    pub fn singular_value_slices(&self) -> &[Vec<f64>] {
        &self.sv_slices
    }

    fn check_query(&self, y: &CVector) -> Result<()> {
        if y.shape() != self.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape,
                found: y.shape(),
            });
        }
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "TPCA query length",
                expected: self.dim(),
                found: y.len(),
            });
        }
        Ok(())
    }

    /// The C-vector feature `Ŷ = U^H ∘ (Y - mean)`, computed slice-wise.
    pub fn project(&self, y: &CVector) -> Result<CVector> {
        self.check_query(y)?;
        let slices: Vec<DVector<Complex64>> = y
            .sub(&self.mean)?
            .dft_slices()
            .iter()
            .zip(&self.proj_slices)
            .map(|(yf, u)| u.ad_mul(yf))
            .collect();
        CVector::from_dft_slices(self.shape, &slices)
    }

    /// `δ(U^H ∘ (Y - mean))` truncated to the first `d` entries, evaluated
    /// through every frequency slice and the inverse DFT.
    pub fn transform(&self, y: &CVector, d: usize) -> Result<FeatureVector> {
        check_d(d, self.dim())?;
        let mut features = delta_map(&self.project(y)?);
        features.truncate(d);
        FeatureVector::new(features)
    }

    /// Same value as [`TpcaModel::transform`], using only the zero-frequency
    /// slice: δ of a C-vector is its DC slice divided by `mn`, and the DC
    /// slice of the projection only involves `U(0,0)`.
    pub fn transform_fast(&self, y: &CVector, d: usize) -> Result<FeatureVector> {
        self.check_query(y)?;
        check_d(d, self.dim())?;
        let dim = self.dim();
        let centered_dc: Vec<f64> = y
            .entries()
            .iter()
            .zip(self.mean.entries())
            .map(|(a, b)| a.sum() - b.sum())
            .collect();
        let u0 = &self.proj_slices[0];
        let scale = 1.0 / self.shape.len() as f64;
        let values = (0..d)
            .map(|c| {
                let mut acc = 0.0;
                for r in 0..dim {
                    acc += u0[(r, c)].re * centered_dc[r];
                }
                acc * scale
            })
            .collect();
        FeatureVector::new(values)
    }

    /// [`TpcaModel::transform_fast`] over many queries in parallel; output
    /// order matches input order.
    pub fn transform_batch(&self, ys: &[CVector], d: usize) -> Result<Vec<FeatureVector>> {
        ys.par_iter().map(|y| self.transform_fast(y, d)).collect()
    }

    /// Views a `1x1`-shaped model as classical PCA. Errors for larger shapes.
    pub fn to_pca(&self) -> Result<PcaModel> {
        if self.shape.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "only a 1x1 tensor model is a PCA model, this one is {}",
                self.shape
            )));
        }
        let u = &self.proj_slices[0];
        if u.iter().any(|c| c.im != 0.0) {
            return Err(Error::Numerical("1x1 projection is not real".into()));
        }
        PcaModel::from_parts(
            self.mean.to_cube(),
            u.map(|c| c.re),
            self.sv_slices[0].clone(),
        )
    }

    /// The `1x1` tensor model equivalent to a PCA model.
    pub fn from_pca(model: &PcaModel) -> Result<Self> {
        let shape = TensorShape::new(1, 1)?;
        let mean = CVector::from_cube(shape, model.dim(), model.mean())?;
        Self::from_parts(
            mean,
            vec![model.basis().map(|v| Complex64::new(v, 0.0))],
            vec![model.eigenvalues().to_vec()],
        )
    }
}

/// δ map: the average over all `mn` positions of each ring entry.
pub fn delta_map(yhat: &CVector) -> Vec<f64> {
    let count = yhat.shape().len() as f64;
    yhat.entries().iter().map(|e| e.sum() / count).collect()
}

/// δ map through the Fourier domain: the zero-frequency slice over `mn`.
pub fn delta_map_dc(yhat: &CVector) -> Vec<f64> {
    let count = yhat.shape().len() as f64;
    yhat.dft_slices()[0].iter().map(|c| c.re / count).collect()
}
