//! The ring of fixed-size `m x n` real tensors.
//!
//! Addition and scalar multiplication are entrywise. Multiplication is the
//! two-way circular convolution
//!
//! ```text
//! (x ∘ y)(i, j) = Σ_{k1, k2} x(k1, k2) · y((i - k1) mod m, (j - k2) mod n)
//! ```
//!
//! which the 2D DFT diagonalises: `F(x ∘ y) = F(x) · F(y)` entrywise.
//!
//! Indices in this crate are 0-based. Index `0` is the position the
//! one-based formulas call `1`, so `mod(i - k, m) + 1` becomes
//! `(i - k) mod m` and the identity element has its unit at `(0, 0)`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Imaginary residue (relative to the magnitude of the result) below which
/// an inverse transform of nominally real data is silently made real.
pub const RESIDUE_DISCARD: f64 = 1e-10;

/// Imaginary residue at or above which an inverse transform of nominally
/// real data is rejected as a symmetry bug.
pub const RESIDUE_ERROR: f64 = 1e-6;

/// Size `m x n` shared by every ring element in one algebraic context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorShape {
    m: usize,
    n: usize,
}

impl TensorShape {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument(format!(
                "tensor shape must be at least 1x1, got {m}x{n}"
            )));
        }
        Ok(Self { m, n })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.n
    }

    /// Number of entries (and of Fourier frequencies), `m * n`.
    #[inline]
    pub fn len(&self) -> usize {
        self.m * self.n
    }

    /// Always false: a valid shape holds at least one entry.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major flat offset of `(i, j)`.
    #[inline]
    pub fn offset(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// The frequency (or position) `(-w1 mod m, -w2 mod n)`.
    ///
    /// For the DFT of real data, the value at `mirror(w)` is the complex
    /// conjugate of the value at `w`. The same index map defines ring
    /// conjugation in the spatial domain.
    #[inline]
    pub fn mirror(&self, w1: usize, w2: usize) -> (usize, usize) {
        ((self.m - w1 % self.m) % self.m, (self.n - w2 % self.n) % self.n)
    }

    #[inline]
    pub fn mirror_offset(&self, offset: usize) -> usize {
        let (w1, w2) = self.mirror(offset / self.n, offset % self.n);
        self.offset(w1, w2)
    }

    /// True when `offset` is the lexicographically smaller member of its
    /// mirrored pair (self-mirrored frequencies count as canonical).
    #[inline]
    pub fn is_canonical(&self, offset: usize) -> bool {
        offset <= self.mirror_offset(offset)
    }
}

impl fmt::Display for TensorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.m, self.n)
    }
}

/// One element of the ring: an `m x n` grid of reals, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorScalar {
    shape: TensorShape,
    entries: Vec<f64>,
}

impl TensorScalar {
    /// Builds a ring element from row-major entries. All entries must be finite.
    pub fn new(shape: TensorShape, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != shape.len() {
            return Err(Error::DimensionMismatch {
                context: "tensor entries",
                expected: shape.len(),
                found: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tensor entries must be finite, found {bad}"
            )));
        }
        Ok(Self { shape, entries })
    }

    /// Builds a ring element from nested rows, e.g. `&[[1.0, 2.0], [3.0, 4.0]]`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        let shape = TensorShape::new(m, n)?;
        let mut entries = Vec::with_capacity(m * n);
        for row in rows {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "tensor row length",
                    expected: n,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(shape, entries)
    }

    pub fn from_fn(shape: TensorShape, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(shape.len());
        for i in 0..shape.m {
            for j in 0..shape.n {
                entries.push(f(i, j));
            }
        }
        Self { shape, entries }
    }

    /// Entries are trusted to be finite.
    pub(crate) fn from_vec_unchecked(shape: TensorShape, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), shape.len());
        Self { shape, entries }
    }

    /// The additive identity `z_t`.
    pub fn zero(shape: TensorShape) -> Self {
        Self {
            shape,
            entries: vec![0.0; shape.len()],
        }
    }

    /// The multiplicative identity `e_t`: one at `(0, 0)`, zero elsewhere.
    pub fn identity(shape: TensorShape) -> Self {
        let mut t = Self::zero(shape);
        t.entries[0] = 1.0;
        t
    }

    #[inline]
    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[self.shape.offset(i, j)]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape,
                found: other.shape,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_vec_unchecked(self.shape, entries))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_vec_unchecked(self.shape, entries))
    }

    /// Multiplication by a field scalar.
    pub fn scale(&self, alpha: f64) -> Self {
        let entries = self.entries.iter().map(|v| alpha * v).collect();
        Self::from_vec_unchecked(self.shape, entries)
    }

    /// Circular convolution evaluated directly from the double sum,
    /// `(mn)^2` multiplies. This is the reference path.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let TensorShape { m, n } = self.shape;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0;
                for k1 in 0..m {
                    let r = (i + m - k1) % m;
                    for k2 in 0..n {
                        let c = (j + n - k2) % n;
                        acc += self.entries[k1 * n + k2] * other.entries[r * n + c];
                    }
                }
                out[i * n + j] = acc;
            }
        }
        Ok(Self::from_vec_unchecked(self.shape, out))
    }

    /// Circular convolution through the 2D DFT: `idft2(dft2(x) · dft2(y))`.
    pub fn mul_fft(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let plan = Dft2::new(self.shape);
        let mut a = to_complex(&self.entries);
        let mut b = to_complex(&other.entries);
        plan.forward(&mut a);
        plan.forward(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= y;
        }
        plan.inverse(&mut a);
        let entries = into_real(a, "ring product")?;
        Ok(Self::from_vec_unchecked(self.shape, entries))
    }

    /// Ring conjugate: `x*(i, j) = x(-i mod m, -j mod n)`.
    pub fn conj(&self) -> Self {
        let shape = self.shape;
        Self::from_fn(shape, |i, j| {
            let (a, b) = shape.mirror(i, j);
            self.get(a, b)
        })
    }

    /// Unnormalized forward 2D DFT.
    pub fn dft(&self) -> FourierScalar {
        let mut buf = to_complex(&self.entries);
        Dft2::new(self.shape).forward(&mut buf);
        FourierScalar {
            shape: self.shape,
            entries: buf,
        }
    }

    /// Sum of all entries (the zero-frequency DFT coefficient).
    pub fn sum(&self) -> f64 {
        self.entries.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Largest entrywise absolute difference; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// The 2D DFT of a ring element: an `m x n` grid of complex values.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierScalar {
    shape: TensorShape,
    entries: Vec<Complex64>,
}

impl FourierScalar {
    pub fn new(shape: TensorShape, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != shape.len() {
            return Err(Error::DimensionMismatch {
                context: "fourier entries",
                expected: shape.len(),
                found: entries.len(),
            });
        }
        Ok(Self { shape, entries })
    }

    #[inline]
    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    #[inline]
    pub fn get(&self, w1: usize, w2: usize) -> Complex64 {
        self.entries[self.shape.offset(w1, w2)]
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.entries
    }

    /// Entrywise product, the Fourier image of the ring product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape,
                found: other.shape,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self {
            shape: self.shape,
            entries,
        })
    }

    /// Largest deviation from conjugate symmetry, `|X(w) - conj(X(-w))|`.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.shape.len())
            .map(|k| (self.entries[k] - self.entries[self.shape.mirror_offset(k)].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Inverse DFT (with the `1/(mn)` factor) back to a real ring element.
    ///
    /// The imaginary residue is discarded below [`RESIDUE_DISCARD`], logged
    /// as a warning up to [`RESIDUE_ERROR`] and rejected above it.
    pub fn idft(&self) -> Result<TensorScalar> {
        let mut buf = self.entries.clone();
        Dft2::new(self.shape).inverse(&mut buf);
        let entries = into_real(buf, "inverse DFT")?;
        Ok(TensorScalar::from_vec_unchecked(self.shape, entries))
    }
}

/// Reusable twiddle tables for the separable 2D DFT of one shape.
///
/// Each axis is a direct O(len^2) DFT, so any length works and no
/// power-of-two padding is involved.
#[derive(Clone, Debug)]
pub(crate) struct Dft2 {
    shape: TensorShape,
    row_tw: Vec<Complex64>,
    col_tw: Vec<Complex64>,
}

fn twiddles(len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|k| {
            let theta = -2.0 * PI * k as f64 / len as f64;
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect()
}

impl Dft2 {
    pub(crate) fn new(shape: TensorShape) -> Self {
        Self {
            shape,
            row_tw: twiddles(shape.m),
            col_tw: twiddles(shape.n),
        }
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    /// Inverse transform including the `1/(mn)` normalization.
    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / self.shape.len() as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let TensorShape { m, n } = self.shape;
        debug_assert_eq!(buf.len(), m * n);
        let tw = |table: &[Complex64], k: usize| {
            let w = table[k];
            if inverse {
                w.conj()
            } else {
                w
            }
        };
        if n > 1 {
            let mut tmp = vec![Complex64::default(); n];
            for row in buf.chunks_exact_mut(n) {
                for (k, out) in tmp.iter_mut().enumerate() {
                    let mut acc = Complex64::default();
                    for (j, v) in row.iter().enumerate() {
                        acc += v * tw(&self.col_tw, (j * k) % n);
                    }
                    *out = acc;
                }
                row.copy_from_slice(&tmp);
            }
        }
        if m > 1 {
            let mut tmp = vec![Complex64::default(); m];
            for c in 0..n {
                for (k, out) in tmp.iter_mut().enumerate() {
                    let mut acc = Complex64::default();
                    for i in 0..m {
                        acc += buf[i * n + c] * tw(&self.row_tw, (i * k) % m);
                    }
                    *out = acc;
                }
                for (i, v) in tmp.iter().enumerate() {
                    buf[i * n + c] = *v;
                }
            }
        }
    }
}

pub(crate) fn to_complex(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Largest imaginary part relative to `max(1, max |re|)`.
pub(crate) fn imag_residue(values: &[Complex64]) -> f64 {
    let scale = values.iter().fold(1.0_f64, |acc, v| acc.max(v.re.abs()));
    values.iter().fold(0.0_f64, |acc, v| acc.max(v.im.abs())) / scale
}

/// Drops the imaginary part of nominally real data, enforcing the residue policy.
pub(crate) fn into_real(values: Vec<Complex64>, what: &str) -> Result<Vec<f64>> {
    let residue = imag_residue(&values);
    if residue >= RESIDUE_ERROR {
        return Err(Error::Numerical(format!(
            "{what}: imaginary residue {residue:.3e} on data declared real"
        )));
    }
    if residue >= RESIDUE_DISCARD {
        log::warn!("{what}: discarding imaginary residue {residue:.3e}");
    }
    Ok(values.into_iter().map(|v| v.re).collect())
}
