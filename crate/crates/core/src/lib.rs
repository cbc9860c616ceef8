//! Tensor PCA for hyperspectral pixel classification.
//!
//! Pixels are represented as vectors of small `m x n` real tensors (one tensor
//! per band, holding the spatial neighbourhood). Tensors multiply by 2D
//! circular convolution, so matrices over them factor slice by slice in the
//! Fourier domain.

pub mod error;
pub mod eval;
pub mod hsi;
pub mod linalg;
pub mod model_io;
pub mod pca;
pub mod pipeline;
pub mod ring;
pub mod synth;
pub mod tpca;

pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, EvalReport, Extractor, NearestNeighbor, SweepRow};
pub use hsi::{HsiCube, LabelMap, NeighborhoodSpec, Pixel, Split, SplitSpec};
pub use linalg::{tsvd, CMatrix, CVector, FourierSliceStack, TsvdFactors};
pub use pca::{FeatureVector, PcaModel};
pub use ring::{FourierScalar, TensorScalar, TensorShape};
pub use tpca::TpcaModel;
