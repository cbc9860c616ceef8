//! Synthetic two-class scenes whose classes share a mean spectrum and a
//! per-pixel variance but differ in spatial texture.
//!
//! Every pixel is `base + amplitude * a(r, c) * direction + noise`. For the
//! smooth class the latent `a` is a 3x3 box average of white noise (rescaled
//! to unit variance), so neighbours are strongly correlated; for the rough
//! class `a` is white. A single pixel spectrum carries no class signal in
//! distribution; only its neighbourhood does.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::hsi::{HsiCube, LabelMap};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoTextureScene {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    /// Side of the square class tiles (checkerboard layout).
    pub tile: usize,
    pub amplitude: f64,
    pub noise: f64,
}

impl Default for TwoTextureScene {
    fn default() -> Self {
        Self {
            height: 40,
            width: 40,
            bands: 8,
            tile: 10,
            amplitude: 1.0,
            noise: 0.3,
        }
    }
}

pub const SMOOTH_CLASS: u16 = 1;
pub const ROUGH_CLASS: u16 = 2;

impl TwoTextureScene {
    pub fn class_at(&self, row: usize, col: usize) -> u16 {
        if (row / self.tile + col / self.tile).is_multiple_of(2) {
            SMOOTH_CLASS
        } else {
            ROUGH_CLASS
        }
    }

    pub fn generate(&self, seed: u64) -> Result<(HsiCube, LabelMap)> {
        let (h, w, d) = (self.height, self.width, self.bands);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

        let white: Vec<f64> = (0..h * w).map(|_| normal()).collect();
        let rough: Vec<f64> = (0..h * w).map(|_| normal()).collect();
        let smooth = box_average(&white, h, w);

        let base: Vec<f64> = (0..d).map(|k| 2.0 + (0.9 * k as f64).sin()).collect();
        let direction: Vec<f64> = {
            let raw: Vec<f64> = (0..d).map(|k| 1.0 + 0.5 * (0.4 * k as f64).cos()).collect();
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            raw.into_iter().map(|v| v / norm).collect()
        };

        let mut labels = Vec::with_capacity(h * w);
        let mut data = Vec::with_capacity(h * w * d);
        for r in 0..h {
            for c in 0..w {
                let class = self.class_at(r, c);
                labels.push(class);
                let latent = if class == SMOOTH_CLASS {
                    smooth[r * w + c]
                } else {
                    rough[r * w + c]
                };
                for k in 0..d {
                    data.push(base[k] + self.amplitude * latent * direction[k] + self.noise * normal());
                }
            }
        }
        Ok((HsiCube::new(h, w, d, data)?, LabelMap::new(h, w, labels)?))
    }
}

/// 3x3 box sum with wrap-around, scaled by 1/3 so white input keeps unit variance.
fn box_average(field: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for dr in [h - 1, 0, 1] {
                for dc in [w - 1, 0, 1] {
                    acc += field[((r + dr) % h) * w + (c + dc) % w];
                }
            }
            out[r * w + c] = acc / 3.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_determinism() {
        let scene = TwoTextureScene::default();
        let (cube, labels) = scene.generate(3).unwrap();
        assert_eq!((cube.height(), cube.width(), cube.bands()), (40, 40, 8));
        assert_eq!(labels.classes(), vec![SMOOTH_CLASS, ROUGH_CLASS]);
        let (again, _) = scene.generate(3).unwrap();
        assert_eq!(cube, again);
        let ones = labels.as_slice().iter().filter(|&&l| l == SMOOTH_CLASS).count();
        assert_eq!(ones, 800);
    }

    #[test]
    fn classes_share_mean_and_variance_per_pixel() {
        let scene = TwoTextureScene {
            height: 120,
            width: 120,
            ..Default::default()
        };
        let (cube, labels) = scene.generate(9).unwrap();
        let stats = |class: u16| {
            let vals: Vec<f64> = (0..120)
                .flat_map(|r| (0..120).map(move |c| (r, c)))
                .filter(|&(r, c)| labels.get(r, c) == class)
                .map(|(r, c)| cube.spectrum(r, c)[0])
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            (mean, var)
        };
        let (m1, v1) = stats(SMOOTH_CLASS);
        let (m2, v2) = stats(ROUGH_CLASS);
        assert!((m1 - m2).abs() < 0.05, "{m1} vs {m2}");
        assert!((v1 / v2 - 1.0).abs() < 0.2, "{v1} vs {v2}");
    }
}
