//! Hyperspectral cubes, label maps, neighbourhood tensorization and the
//! seeded train/test split.
//!
//! On disk a cube is `<name>.cube` (raw `f32` little-endian, `[row][col][band]`)
//! described by the sidecar `<name>.json`:
//!
//! ```json
//! {"height": 145, "width": 145, "bands": 200, "dtype": "f32le", "order": "hwc"}
//! ```
//!
//! Labels are `<name>.labels` (raw `u16` little-endian, `[row][col]`, `0` means
//! unlabeled) with `label_height` / `label_width` in the sidecar next to them.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::ring::{TensorScalar, TensorShape};

/// Hyperspectral data cube, `height x width x bands`, band-interleaved per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct HsiCube {
    height: usize,
    width: usize,
    bands: usize,
    data: Vec<f64>,
}

impl HsiCube {
    pub fn new(height: usize, width: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || bands == 0 {
            return Err(Error::InvalidArgument(format!(
                "cube dimensions must be positive, got {height}x{width}x{bands}"
            )));
        }
        if data.len() != height * width * bands {
            return Err(Error::DimensionMismatch {
                context: "cube payload",
                expected: height * width * bands,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("cube contains non-finite values".into()));
        }
        Ok(Self {
            height,
            width,
            bands,
            data,
        })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Spectrum of pixel `(row, col)`.
    #[inline]
    pub fn spectrum(&self, row: usize, col: usize) -> &[f64] {
        let at = (row * self.width + col) * self.bands;
        &self.data[at..at + self.bands]
    }

    /// Global affine rescale of all values to `[0, 1]`.
    pub fn normalized(&self) -> Result<Self> {
        let (lo, hi) = self
            .data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if hi <= lo {
            return Err(Error::DegenerateRange(lo));
        }
        let span = hi - lo;
        Ok(Self {
            data: self.data.iter().map(|v| (v - lo) / span).collect(),
            ..self.clone()
        })
    }
}

/// Per-pixel class ids; `0` is unlabeled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    labels: Vec<u16>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, labels: Vec<u16>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!(
                "label map dimensions must be positive, got {height}x{width}"
            )));
        }
        if labels.len() != height * width {
            return Err(Error::DimensionMismatch {
                context: "label payload",
                expected: height * width,
                found: labels.len(),
            });
        }
        Ok(Self {
            height,
            width,
            labels,
        })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.labels[row * self.width + col]
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.labels
    }

    /// Sorted set of class ids present, excluding `0`.
    pub fn classes(&self) -> Vec<u16> {
        self.labels
            .iter()
            .copied()
            .filter(|&l| l != 0)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Labeled pixels in row-major order.
    pub fn labeled_pixels(&self) -> Vec<Pixel> {
        (0..self.height)
            .flat_map(|row| (0..self.width).map(move |col| Pixel { row, col }))
            .filter(|p| self.get(p.row, p.col) != 0)
            .collect()
    }

    /// Errors unless the map matches the cube's spatial size.
    pub fn check_pairs_with(&self, cube: &HsiCube) -> Result<()> {
        if self.height != cube.height() || self.width != cube.width() {
            return Err(Error::InvalidArgument(format!(
                "label map is {}x{} but cube is {}x{}",
                self.height,
                self.width,
                cube.height(),
                cube.width()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

/// Square spatial window around a pixel, with mirror padding at borders.
///
/// Window offset `0` maps to ring index `0`, `+1..=+r` to indices `1..=r`
/// and `-r..=-1` to indices `r+1..=2r`, i.e. offsets are stored at their
/// circular position. The centre pixel therefore sits where the identity
/// element has its unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    pub radius: usize,
}

impl Default for NeighborhoodSpec {
    fn default() -> Self {
        Self { radius: 1 }
    }
}

impl NeighborhoodSpec {
    pub fn shape(&self) -> TensorShape {
        let side = 2 * self.radius + 1;
        TensorShape::new(side, side).expect("side is positive")
    }

    /// Spatial offset stored at ring index `a`.
    #[inline]
    pub fn offset(&self, a: usize) -> isize {
        let side = (2 * self.radius + 1) as isize;
        let a = a as isize;
        if a <= self.radius as isize {
            a
        } else {
            a - side
        }
    }
}

/// Mirror reflection without edge repetition: `-1 -> 1`, `len -> len - 2`.
pub fn reflect(idx: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut i = idx.rem_euclid(period);
    if i >= len as isize {
        i = period - i;
    }
    i as usize
}

/// C-vector of the neighbourhood of pixel `(row, col)`: entry `k` is the
/// window of band `k`.
pub fn tensorize(cube: &HsiCube, row: usize, col: usize, spec: NeighborhoodSpec) -> Result<CVector> {
    if row >= cube.height() || col >= cube.width() {
        return Err(Error::InvalidArgument(format!(
            "pixel ({row}, {col}) outside {}x{} image",
            cube.height(),
            cube.width()
        )));
    }
    let shape = spec.shape();
    let side = shape.rows();
    let mut sources = Vec::with_capacity(shape.len());
    for a in 0..side {
        let r = reflect(row as isize + spec.offset(a), cube.height());
        for b in 0..side {
            let c = reflect(col as isize + spec.offset(b), cube.width());
            sources.push(cube.spectrum(r, c));
        }
    }
    let entries = (0..cube.bands())
        .map(|k| TensorScalar::from_vec_unchecked(shape, sources.iter().map(|s| s[k]).collect()))
        .collect();
    CVector::new(shape, entries)
}

/// [`tensorize`] over many pixels in parallel, in input order.
pub fn tensorize_all(cube: &HsiCube, pixels: &[Pixel], spec: NeighborhoodSpec) -> Result<Vec<CVector>> {
    pixels
        .par_iter()
        .map(|p| tensorize(cube, p.row, p.col, spec))
        .collect()
}

/// Seeded uniform training draw over labeled pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_fraction: f64,
}

impl SplitSpec {
    pub const DEFAULT_TRAIN_FRACTION: f64 = 0.10;

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            train_fraction: Self::DEFAULT_TRAIN_FRACTION,
        }
    }
}

/// Disjoint train/test pixel lists, each sorted row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<Pixel>,
    pub test: Vec<Pixel>,
}

/// Draws `ceil(fraction * count)` labeled pixels for training (clamped so
/// both sides are non-empty); the rest are test pixels.
///
/// The draw is a partial Fisher-Yates shuffle of the row-major list of
/// labeled pixels driven by ChaCha8 seeded with `seed_from_u64(seed)`. Step
/// `i` swaps position `i` with `i + ((r * (count - i)) >> 64)` where `r` is
/// the next `u64` output (multiply-shift range reduction, no rejection).
pub fn split(labels: &LabelMap, spec: SplitSpec) -> Result<Split> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let mut pool = labels.labeled_pixels();
    let count = pool.len();
    if count == 0 {
        return Err(Error::Empty("labeled pixel set"));
    }
    if count < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 labeled pixels to split".into(),
        ));
    }
    // Tolerance keeps e.g. 0.1 * 100 from rounding up to 11.
    let wanted = (spec.train_fraction * count as f64 - 1e-9).ceil() as usize;
    let n_train = wanted.clamp(1, count - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for i in 0..n_train {
        let remaining = (count - i) as u128;
        let j = i + ((rng.next_u64() as u128 * remaining) >> 64) as usize;
        pool.swap(i, j);
    }
    let mut test = pool.split_off(n_train);
    let mut train = pool;
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    #[serde(skip_serializing_if = "Option::is_none")]
    height: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bands: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dtype: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label_height: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label_width: Option<usize>,
}

/// `<name>.json` next to `<name>.cube` / `<name>.labels`.
pub fn sidecar_path(data_path: &Path) -> PathBuf {
    data_path.with_extension("json")
}

fn read_sidecar(data_path: &Path) -> Result<(PathBuf, Sidecar)> {
    let path = sidecar_path(data_path);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let sidecar = serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    Ok((path, sidecar))
}

fn update_sidecar(data_path: &Path, edit: impl FnOnce(&mut Sidecar)) -> Result<()> {
    let path = sidecar_path(data_path);
    let mut sidecar = if path.exists() {
        read_sidecar(data_path)?.1
    } else {
        Sidecar::default()
    };
    edit(&mut sidecar);
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn require(path: &Path, field: &str, v: Option<usize>) -> Result<usize> {
    match v {
        Some(v) if v > 0 => Ok(v),
        Some(_) => Err(Error::format(path, format!("field `{field}` must be positive"))),
        None => Err(Error::format(path, format!("missing field `{field}`"))),
    }
}

fn read_payload(path: &Path, expected: usize) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < expected {
        return Err(Error::format(
            path,
            format!("payload truncated: {} bytes, expected {expected}", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(Error::format(
            path,
            format!("payload too long: {} bytes, expected {expected}", bytes.len()),
        ));
    }
    Ok(bytes)
}

/// Cube dimensions as recorded in the sidecar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CubeInfo {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
}

/// Reads only the sidecar of a cube file.
pub fn read_cube_info(path: impl AsRef<Path>) -> Result<CubeInfo> {
    let (meta_path, meta) = read_sidecar(path.as_ref())?;
    let height = require(&meta_path, "height", meta.height)?;
    let width = require(&meta_path, "width", meta.width)?;
    let bands = require(&meta_path, "bands", meta.bands)?;
    if meta.dtype.as_deref() != Some("f32le") {
        return Err(Error::format(&meta_path, "dtype must be \"f32le\""));
    }
    if meta.order.as_deref() != Some("hwc") {
        return Err(Error::format(&meta_path, "order must be \"hwc\""));
    }
    Ok(CubeInfo {
        height,
        width,
        bands,
    })
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<HsiCube> {
    let path = path.as_ref();
    let CubeInfo {
        height,
        width,
        bands,
    } = read_cube_info(path)?;
    let bytes = read_payload(path, height * width * bands * 4)?;
    let data: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")) as f64)
        .collect();
    if let Some(at) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::format(path, format!("non-finite value at element {at}")));
    }
    HsiCube::new(height, width, bands, data)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let (meta_path, meta) = read_sidecar(path)?;
    let height = require(&meta_path, "label_height", meta.label_height)?;
    let width = require(&meta_path, "label_width", meta.label_width)?;
    let bytes = read_payload(path, height * width * 2)?;
    let labels = bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    LabelMap::new(height, width, labels)
}

/// Writes the cube as `f32` and records its dimensions in the sidecar.
pub fn write_cube(path: impl AsRef<Path>, cube: &HsiCube) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(cube.data.len() * 4);
    for v in &cube.data {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    update_sidecar(path, |s| {
        s.height = Some(cube.height);
        s.width = Some(cube.width);
        s.bands = Some(cube.bands);
        s.dtype = Some("f32le".into());
        s.order = Some("hwc".into());
    })
}

pub fn write_labels(path: impl AsRef<Path>, labels: &LabelMap) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = labels.labels.iter().flat_map(|l| l.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    update_sidecar(path, |s| {
        s.label_height = Some(labels.height);
        s.label_width = Some(labels.width);
    })
}
