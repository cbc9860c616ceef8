//! Binary model files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "TPCA"                      4 bytes magic
//! version                     u32 (= 1)
//! m, n, D                     u32 each
//! mean cube                   m*n*D f64, [w1][w2][k] order
//! projections                 m*n matrices of D*D complex (re, im f64),
//!                             frequencies row-major, each matrix row-major
//! singular values             m*n*D f64, frequencies row-major
//! ```
//!
//! A PCA model is stored as the equivalent `1x1` tensor model.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::pca::PcaModel;
use crate::ring::TensorShape;
use crate::tpca::TpcaModel;

pub const MAGIC: &[u8; 4] = b"TPCA";
pub const FORMAT_VERSION: u32 = 1;

/// Header fields of a model file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelHeader {
    pub version: u32,
    pub m: u32,
    pub n: u32,
    pub dim: u32,
}

impl TpcaModel {
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.dim();
        w.write_all(MAGIC)?;
        for v in [
            FORMAT_VERSION,
            self.shape.rows() as u32,
            self.shape.cols() as u32,
            dim as u32,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.mean.to_cube() {
            w.write_all(&v.to_le_bytes())?;
        }
        for u in &self.proj_slices {
            for r in 0..dim {
                for c in 0..dim {
                    let z = u[(r, c)];
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
        for sv in &self.sv_slices {
            for v in sv {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// Reads a model; `origin` names the source in error messages.
    pub fn read_from<R: Read>(r: R, origin: &Path) -> Result<Self> {
        let mut reader = ModelReader { r, origin };
        let header = reader.header()?;
        let shape = TensorShape::new(header.m as usize, header.n as usize)
            .map_err(|e| Error::format(origin, e.to_string()))?;
        let dim = header.dim as usize;
        let cube = reader.f64s(shape.len() * dim)?;
        let mean = CVector::from_cube(shape, dim, &cube).map_err(|e| Error::format(origin, e.to_string()))?;
        let mut proj = Vec::with_capacity(shape.len());
        for _ in 0..shape.len() {
            let raw = reader.f64s(2 * dim * dim)?;
            let mut u = DMatrix::<Complex64>::zeros(dim, dim);
            for r in 0..dim {
                for c in 0..dim {
                    let at = 2 * (r * dim + c);
                    u[(r, c)] = Complex64::new(raw[at], raw[at + 1]);
                }
            }
            proj.push(u);
        }
        let sv = (0..shape.len())
            .map(|_| reader.f64s(dim))
            .collect::<Result<Vec<_>>>()?;
        reader.expect_eof()?;
        TpcaModel::from_parts(mean, proj, sv)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), path)
    }
}

impl PcaModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        TpcaModel::from_pca(self)?.save(path)
    }

    /// Loads a `1x1` model file as PCA.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let model = TpcaModel::load(path)?;
        if model.shape().len() != 1 {
            return Err(Error::format(
                path,
                format!("expected a 1x1 (PCA) model, found shape {}", model.shape()),
            ));
        }
        model.to_pca()
    }
}

/// Reads just the header of a model file.
pub fn read_header(path: impl AsRef<Path>) -> Result<ModelHeader> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ModelReader {
        r: BufReader::new(file),
        origin: path,
    }
    .header()
}

struct ModelReader<'a, R> {
    r: R,
    origin: &'a Path,
}

impl<R: Read> ModelReader<'_, R> {
    fn exact(&mut self, buf: &mut [u8]) -> Result<()> {
        self.r.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::format(self.origin, "model file is truncated")
            } else {
                Error::io(self.origin, e)
            }
        })
    }

    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn header(&mut self) -> Result<ModelHeader> {
        let mut magic = [0u8; 4];
        self.exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::format(self.origin, format!("bad magic bytes {magic:?}")));
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::format(
                self.origin,
                format!("unsupported model format version {version}"),
            ));
        }
        let (m, n, dim) = (self.u32()?, self.u32()?, self.u32()?);
        if m == 0 || n == 0 || dim == 0 {
            return Err(Error::format(
                self.origin,
                format!("invalid header dimensions m={m} n={n} D={dim}"),
            ));
        }
        Ok(ModelHeader { version, m, n, dim })
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let mut bytes = vec![0u8; count * 8];
        self.exact(&mut bytes)?;
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(self.origin, "non-finite value in model payload"));
        }
        Ok(values)
    }

    fn expect_eof(&mut self) -> Result<()> {
        let mut extra = [0u8; 1];
        match self.r.read(&mut extra) {
            Ok(0) => Ok(()),
            Ok(_) => Err(Error::format(self.origin, "trailing bytes after model payload")),
            Err(e) => Err(Error::io(self.origin, e)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::TensorScalar;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fitted(seed: u64, dim: usize) -> (TpcaModel, Vec<CVector>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sh = TensorShape::new(3, 3).unwrap();
        let samples: Vec<CVector> = (0..20)
            .map(|_| {
                let entries = (0..dim)
                    .map(|_| TensorScalar::from_fn(sh, |_, _| rng.random_range(0.0..1.0)))
                    .collect();
                CVector::new(sh, entries).unwrap()
            })
            .collect();
        (TpcaModel::fit(&samples).unwrap(), samples)
    }

    #[test]
    fn save_load_is_bit_exact() {
        let (model, samples) = fitted(31, 5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tpca");
        model.save(&path).unwrap();
        let loaded = TpcaModel::load(&path).unwrap();
        assert_eq!(loaded, model);
        for s in &samples {
            assert_eq!(model.transform(s, 3).unwrap(), loaded.transform(s, 3).unwrap());
        }
        let header = read_header(&path).unwrap();
        assert_eq!((header.m, header.n, header.dim), (3, 3, 5));
        let expected_len = 4 + 16 + 8 * (9 * 5 + 9 * 2 * 25 + 9 * 5);
        assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, expected_len);
    }

    #[test]
    fn pca_model_round_trip() {
        let samples = [[0.0, 1.0, 2.0], [1.0, 0.5, -1.0], [2.0, 2.0, 0.0], [0.3, -0.2, 0.9]];
        let pca = PcaModel::fit(&samples).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pca.tpca");
        pca.save(&path).unwrap();
        let loaded = PcaModel::load(&path).unwrap();
        assert_eq!(loaded, pca);
        let (tpca, _) = fitted(32, 3);
        tpca.save(&path).unwrap();
        assert!(matches!(PcaModel::load(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let (model, _) = fitted(33, 4);
        let mut bytes = Vec::new();
        model.write_to(&mut bytes).unwrap();
        let origin = Path::new("mem");

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            TpcaModel::read_from(&bad_magic[..], origin),
            Err(Error::Format { .. })
        ));

        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        assert!(matches!(
            TpcaModel::read_from(&bad_version[..], origin),
            Err(Error::Format { .. })
        ));

        let truncated = &bytes[..bytes.len() - 3];
        assert!(matches!(
            TpcaModel::read_from(truncated, origin),
            Err(Error::Format { .. })
        ));

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(matches!(
            TpcaModel::read_from(&trailing[..], origin),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_against_query() {
        let (model, _) = fitted(34, 4);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tpca");
        model.save(&path).unwrap();
        let loaded = TpcaModel::load(&path).unwrap();
        let sh = TensorShape::new(3, 3).unwrap();
        let query = CVector::zeros(6, sh).unwrap();
        assert!(matches!(
            loaded.transform(&query, 2),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
