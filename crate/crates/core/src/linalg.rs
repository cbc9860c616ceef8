//! Vectors and matrices over the tensor ring, their slice-wise Fourier
//! representation and the tensor SVD.
//!
//! A C-matrix of size `M x N` over `m x n` ring elements is an order-4
//! array. Its DFT is taken entry by entry; fixing one frequency `(w1, w2)`
//! across all entries gives an ordinary complex `M x N` matrix, the *slice*.
//! Every C-matrix product becomes `mn` independent complex matrix products
//! on those slices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ring::{imag_residue, into_real, Dft2, TensorScalar, TensorShape, RESIDUE_ERROR};

/// Iteration cap handed to the slice SVD solver.
const SVD_MAX_ITER: usize = 10_000;

/// A matrix whose entries are ring elements, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    shape: TensorShape,
    entries: Vec<TensorScalar>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, shape: TensorShape, entries: Vec<TensorScalar>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "C-matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "C-matrix entries",
                expected: rows * cols,
                found: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().find(|e| e.shape() != shape) {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: bad.shape(),
            });
        }
        Ok(Self {
            rows,
            cols,
            shape,
            entries,
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        shape: TensorShape,
        mut f: impl FnMut(usize, usize) -> TensorScalar,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::new(rows, cols, shape, entries)
    }

    pub fn zeros(rows: usize, cols: usize, shape: TensorShape) -> Result<Self> {
        Self::from_fn(rows, cols, shape, |_, _| TensorScalar::zero(shape))
    }

    /// `e_t` on the diagonal, `z_t` elsewhere.
    pub fn identity(dim: usize, shape: TensorShape) -> Result<Self> {
        Self::from_fn(dim, dim, shape, |i, j| {
            if i == j {
                TensorScalar::identity(shape)
            } else {
                TensorScalar::zero(shape)
            }
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &TensorScalar {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[TensorScalar] {
        &self.entries
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector {
            shape: self.shape,
            entries: (0..self.rows).map(|i| self.get(i, j).clone()).collect(),
        }
    }

    fn check_product(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape,
                found: other.shape,
            });
        }
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "C-matrix product inner dimension",
                expected: self.cols,
                found: other.rows,
            });
        }
        Ok(())
    }

    /// Product evaluated from the definition, `[C]_{ij} = Σ_k [X]_{ik} ∘ [Y]_{kj}`,
    /// with brute-force ring products. Reference path.
    pub fn mul_direct(&self, other: &Self) -> Result<Self> {
        self.check_product(other)?;
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = TensorScalar::zero(self.shape);
                for k in 0..self.cols {
                    acc = acc.add(&self.get(i, k).mul(other.get(k, j))?)?;
                }
                entries.push(acc);
            }
        }
        Self::new(self.rows, other.cols, self.shape, entries)
    }

    /// Product computed slice by slice in the Fourier domain.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_product(other)?;
        self.dft().mul(&other.dft())?.idft()
    }

    /// `[X^H]_{ij} = ([X]_{ji})*`.
    pub fn hermitian(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for i in 0..self.cols {
            for j in 0..self.rows {
                entries.push(self.get(j, i).conj());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            shape: self.shape,
            entries,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "C-matrix difference",
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.rows, self.cols, self.shape, entries)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|e| e.scale(alpha)).collect(),
            ..self.clone()
        }
    }

    /// Entrywise DFT reorganised into per-frequency slices.
    pub fn dft(&self) -> FourierSliceStack {
        let plan = Dft2::new(self.shape);
        let freqs = self.shape.len();
        let mut slices = vec![DMatrix::<Complex64>::zeros(self.rows, self.cols); freqs];
        let mut buf = Vec::with_capacity(freqs);
        for i in 0..self.rows {
            for j in 0..self.cols {
                buf.clear();
                buf.extend(self.get(i, j).as_slice().iter().map(|&v| Complex64::new(v, 0.0)));
                plan.forward(&mut buf);
                for (slice, v) in slices.iter_mut().zip(&buf) {
                    slice[(i, j)] = *v;
                }
            }
        }
        FourierSliceStack {
            rows: self.rows,
            cols: self.cols,
            shape: self.shape,
            slices,
        }
    }

    /// True iff both `X^H ∘ X` and `X ∘ X^H` are within `tol` (max-abs) of
    /// the identity C-matrix. Non-square input is never unitary.
    pub fn is_unitary(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let Ok(identity) = Self::identity(self.rows, self.shape) else {
            return false;
        };
        let h = self.hermitian();
        [h.mul(self), self.mul(&h)]
            .into_iter()
            .all(|p| p.is_ok_and(|p| p.max_abs_diff(&identity) < tol))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(TensorScalar::max_abs).fold(0.0, f64::max)
    }

    /// Largest entrywise absolute difference; infinite on any size mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// A column of ring elements; equivalently an `m x n x D` cube.
#[derive(Clone, Debug, PartialEq)]
pub struct CVector {
    shape: TensorShape,
    entries: Vec<TensorScalar>,
}

impl CVector {
    pub fn new(shape: TensorShape, entries: Vec<TensorScalar>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("C-vector"));
        }
        if let Some(bad) = entries.iter().find(|e| e.shape() != shape) {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: bad.shape(),
            });
        }
        Ok(Self { shape, entries })
    }

    pub fn zeros(len: usize, shape: TensorShape) -> Result<Self> {
        Self::new(shape, vec![TensorScalar::zero(shape); len])
    }

    /// Builds a C-vector from a cube laid out `[i][j][k]` (position-major,
    /// `k` indexing the vector).
    pub fn from_cube(shape: TensorShape, len: usize, cube: &[f64]) -> Result<Self> {
        if cube.len() != shape.len() * len {
            return Err(Error::DimensionMismatch {
                context: "C-vector cube",
                expected: shape.len() * len,
                found: cube.len(),
            });
        }
        let entries = (0..len)
            .map(|k| {
                let vals = (0..shape.len()).map(|p| cube[p * len + k]).collect();
                TensorScalar::new(shape, vals)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(shape, entries)
    }

    /// Inverse of [`CVector::from_cube`].
    pub fn to_cube(&self) -> Vec<f64> {
        let len = self.entries.len();
        let mut out = vec![0.0; self.shape.len() * len];
        for (k, e) in self.entries.iter().enumerate() {
            for (p, v) in e.as_slice().iter().enumerate() {
                out[p * len + k] = *v;
            }
        }
        out
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Always false: a C-vector holds at least one entry.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    #[inline]
    pub fn get(&self, k: usize) -> &TensorScalar {
        &self.entries[k]
    }

    pub fn entries(&self) -> &[TensorScalar] {
        &self.entries
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape,
                found: other.shape,
            });
        }
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                context: "C-vector length",
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(Self {
            shape: self.shape,
            entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(Self {
            shape: self.shape,
            entries,
        })
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            shape: self.shape,
            entries: self.entries.iter().map(|e| e.scale(alpha)).collect(),
        }
    }

    /// Column C-matrix view (`len x 1`).
    pub fn to_matrix(&self) -> CMatrix {
        CMatrix {
            rows: self.entries.len(),
            cols: 1,
            shape: self.shape,
            entries: self.entries.clone(),
        }
    }

    /// Per-frequency Fourier slices, each a length-`len` complex vector.
    pub fn dft_slices(&self) -> Vec<DVector<Complex64>> {
        let plan = Dft2::new(self.shape);
        let mut slices = vec![DVector::<Complex64>::zeros(self.len()); self.shape.len()];
        let mut buf = Vec::with_capacity(self.shape.len());
        for (k, e) in self.entries.iter().enumerate() {
            buf.clear();
            buf.extend(e.as_slice().iter().map(|&v| Complex64::new(v, 0.0)));
            plan.forward(&mut buf);
            for (slice, v) in slices.iter_mut().zip(&buf) {
                slice[k] = *v;
            }
        }
        slices
    }

    /// Inverse of [`CVector::dft_slices`] for conjugate-symmetric input.
    pub fn from_dft_slices(shape: TensorShape, slices: &[DVector<Complex64>]) -> Result<Self> {
        if slices.len() != shape.len() {
            return Err(Error::DimensionMismatch {
                context: "fourier slice count",
                expected: shape.len(),
                found: slices.len(),
            });
        }
        let len = slices[0].len();
        let plan = Dft2::new(shape);
        let entries = (0..len)
            .map(|k| {
                let mut buf: Vec<Complex64> = slices.iter().map(|s| s[k]).collect();
                plan.inverse(&mut buf);
                into_real(buf, "C-vector inverse DFT")
                    .map(|vals| TensorScalar::from_vec_unchecked(shape, vals))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(shape, entries)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// The Fourier image of a C-matrix: one complex `rows x cols` matrix per
/// frequency, indexed row-major by `(w1, w2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSliceStack {
    rows: usize,
    cols: usize,
    shape: TensorShape,
    slices: Vec<DMatrix<Complex64>>,
}

impl FourierSliceStack {
    pub fn new(shape: TensorShape, slices: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if slices.len() != shape.len() {
            return Err(Error::DimensionMismatch {
                context: "fourier slice count",
                expected: shape.len(),
                found: slices.len(),
            });
        }
        let (rows, cols) = slices[0].shape();
        if let Some(bad) = slices.iter().find(|s| s.shape() != (rows, cols)) {
            return Err(Error::DimensionMismatch {
                context: "fourier slice size",
                expected: rows * cols,
                found: bad.nrows() * bad.ncols(),
            });
        }
        Ok(Self {
            rows,
            cols,
            shape,
            slices,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    #[inline]
    pub fn slice(&self, w1: usize, w2: usize) -> &DMatrix<Complex64> {
        &self.slices[self.shape.offset(w1, w2)]
    }

    pub fn slices(&self) -> &[DMatrix<Complex64>] {
        &self.slices
    }

    /// Slice-wise product (the Fourier image of the C-matrix product).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape,
                found: other.shape,
            });
        }
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "slice product inner dimension",
                expected: self.cols,
                found: other.rows,
            });
        }
        let slices = self
            .slices
            .par_iter()
            .zip(other.slices.par_iter())
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            shape: self.shape,
            slices,
        })
    }

    /// Conjugate transpose of every slice, the Fourier image of `X^H`.
    pub fn adjoint(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            shape: self.shape,
            slices: self.slices.iter().map(|s| s.adjoint()).collect(),
        }
    }

    /// Largest `|S(w) - conj(S(-w))|` over all slices and entries.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.slices.len())
            .map(|k| {
                let mirror = &self.slices[self.shape.mirror_offset(k)];
                (&self.slices[k] - mirror.map(|c| c.conj())).camax()
            })
            .fold(0.0, f64::max)
    }

    /// Inverse transform back to a real C-matrix.
    pub fn idft(&self) -> Result<CMatrix> {
        let plan = Dft2::new(self.shape);
        let mut entries = Vec::with_capacity(self.rows * self.cols);
        let mut buf = Vec::with_capacity(self.shape.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                buf.clear();
                buf.extend(self.slices.iter().map(|s| s[(i, j)]));
                plan.inverse(&mut buf);
                let vals = into_real(std::mem::take(&mut buf), "C-matrix inverse DFT")?;
                entries.push(TensorScalar::from_vec_unchecked(self.shape, vals));
            }
        }
        CMatrix::new(self.rows, self.cols, self.shape, entries)
    }

    /// Largest relative imaginary residue the inverse transform would discard.
    pub fn idft_residue(&self) -> f64 {
        let plan = Dft2::new(self.shape);
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let mut buf: Vec<Complex64> = self.slices.iter().map(|s| s[(i, j)]).collect();
                plan.inverse(&mut buf);
                worst = worst.max(imag_residue(&buf));
            }
        }
        worst
    }
}

/// Tensor SVD factors `G = U ∘ S ∘ V^H`, kept in the Fourier domain.
#[derive(Clone, Debug, PartialEq)]
pub struct TsvdFactors {
    pub u: FourierSliceStack,
    pub s: FourierSliceStack,
    pub v: FourierSliceStack,
}

impl TsvdFactors {
    /// Descending singular values of the slice at frequency `(w1, w2)`.
    pub fn singular_values(&self, w1: usize, w2: usize) -> Vec<f64> {
        let s = self.s.slice(w1, w2);
        (0..s.nrows()).map(|i| s[(i, i)].re).collect()
    }

    /// Spatial-domain factors `(U, S, V)`.
    pub fn to_spatial(&self) -> Result<(CMatrix, CMatrix, CMatrix)> {
        Ok((self.u.idft()?, self.s.idft()?, self.v.idft()?))
    }

    /// `U ∘ S ∘ V^H` evaluated in the spatial domain with direct products.
    pub fn reconstruct(&self) -> Result<CMatrix> {
        let (u, s, v) = self.to_spatial()?;
        u.mul_direct(&s)?.mul_direct(&v.hermitian())
    }
}

/// Tensor SVD of a square real C-matrix, computed slice-wise in the
/// Fourier domain.
pub fn tsvd(g: &CMatrix) -> Result<TsvdFactors> {
    if g.rows() != g.cols() {
        return Err(Error::DimensionMismatch {
            context: "tsvd requires a square C-matrix",
            expected: g.rows(),
            found: g.cols(),
        });
    }
    decompose_slices(&g.dft())
}

/// Per-frequency SVD of a conjugate-symmetric stack of square slices.
///
/// Only the canonical member of each mirrored frequency pair is decomposed;
/// its partner receives the entrywise conjugate factors, so the spatial
/// factors are exactly real. Self-mirrored slices are real and go through a
/// real SVD. Singular values are sorted descending (stable on ties) and each
/// left singular vector is rotated so its largest-magnitude component is
/// real and positive, with the right vector taking the same rotation.
pub fn decompose_slices(stack: &FourierSliceStack) -> Result<TsvdFactors> {
    let shape = stack.shape();
    let dim = stack.rows();
    if dim != stack.cols() {
        return Err(Error::DimensionMismatch {
            context: "slice SVD requires square slices",
            expected: dim,
            found: stack.cols(),
        });
    }
    let defect = stack.symmetry_defect();
    let scale = stack.slices.iter().map(|s| s.camax()).fold(1.0, f64::max);
    if defect / scale >= RESIDUE_ERROR {
        return Err(Error::Numerical(format!(
            "slice stack is not conjugate symmetric (defect {defect:.3e})"
        )));
    }

    let canonical: Vec<usize> = (0..shape.len()).filter(|&k| shape.is_canonical(k)).collect();
    let computed = canonical
        .par_iter()
        .map(|&k| {
            let slice = &stack.slices[k];
            let res = if shape.mirror_offset(k) == k {
                real_slice_svd(slice.map(|c| c.re))
            } else {
                complex_slice_svd(slice.clone())
            };
            res.ok_or(Error::SvdFailure {
                w1: k / shape.cols(),
                w2: k % shape.cols(),
            })
            .map(|f| (k, f))
        })
        .collect::<Result<Vec<_>>>()?;

    let empty = DMatrix::<Complex64>::zeros(dim, dim);
    let mut u = vec![empty.clone(); shape.len()];
    let mut s = vec![empty.clone(); shape.len()];
    let mut v = vec![empty; shape.len()];
    for (k, (uk, sk, vk)) in computed {
        let mirror = shape.mirror_offset(k);
        if mirror != k {
            u[mirror] = uk.map(|c| c.conj());
            v[mirror] = vk.map(|c| c.conj());
            s[mirror] = sk.clone();
        }
        u[k] = uk;
        s[k] = sk;
        v[k] = vk;
    }
    Ok(TsvdFactors {
        u: FourierSliceStack::new(shape, u)?,
        s: FourierSliceStack::new(shape, s)?,
        v: FourierSliceStack::new(shape, v)?,
    })
}

type SliceFactors = (DMatrix<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>);

/// Stable descending order of singular values.
fn descending_order(sv: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    order
}

/// Index of the first component of largest magnitude.
fn pivot_index(mags: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, m) in mags.enumerate() {
        if m > best.1 {
            best = (i, m);
        }
    }
    best.0
}

fn real_slice_svd(a: DMatrix<f64>) -> Option<SliceFactors> {
    let dim = a.nrows();
    let svd = nalgebra::SVD::try_new_unordered(a, true, true, f64::EPSILON, SVD_MAX_ITER)?;
    let u = svd.u?;
    let v = svd.v_t?.transpose();
    let order = descending_order(&svd.singular_values);
    let mut uo = DMatrix::<Complex64>::zeros(dim, dim);
    let mut vo = DMatrix::<Complex64>::zeros(dim, dim);
    let mut so = DMatrix::<Complex64>::zeros(dim, dim);
    for (c, &src) in order.iter().enumerate() {
        let p = pivot_index(u.column(src).iter().map(|x| x.abs()));
        let sign = if u[(p, src)] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..dim {
            uo[(r, c)] = Complex64::new(sign * u[(r, src)], 0.0);
            vo[(r, c)] = Complex64::new(sign * v[(r, src)], 0.0);
        }
        so[(c, c)] = Complex64::new(svd.singular_values[src], 0.0);
    }
    Some((uo, so, vo))
}

fn complex_slice_svd(a: DMatrix<Complex64>) -> Option<SliceFactors> {
    let dim = a.nrows();
    let svd = nalgebra::SVD::try_new_unordered(a, true, true, f64::EPSILON, SVD_MAX_ITER)?;
    let u = svd.u?;
    let v = svd.v_t?.adjoint();
    let order = descending_order(&svd.singular_values);
    let mut uo = DMatrix::<Complex64>::zeros(dim, dim);
    let mut vo = DMatrix::<Complex64>::zeros(dim, dim);
    let mut so = DMatrix::<Complex64>::zeros(dim, dim);
    for (c, &src) in order.iter().enumerate() {
        let p = pivot_index(u.column(src).iter().map(|x| x.norm()));
        let pivot = u[(p, src)];
        let rot = if pivot.norm() > 0.0 {
            (pivot / pivot.norm()).conj()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for r in 0..dim {
            uo[(r, c)] = u[(r, src)] * rot;
            vo[(r, c)] = v[(r, src)] * rot;
        }
        // Exactly real and positive after rotation.
        uo[(p, c)] = Complex64::new(uo[(p, c)].norm(), 0.0);
        so[(c, c)] = Complex64::new(svd.singular_values[src], 0.0);
    }
    Some((uo, so, vo))
}
