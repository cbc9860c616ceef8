//! Fit / transform / classify / evaluate on a labeled scene.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{ConfusionMatrix, EvalReport, Extractor, NearestNeighbor, SweepRow};
use crate::hsi::{split, tensorize_all, HsiCube, LabelMap, NeighborhoodSpec, Pixel, Split, SplitSpec};
use crate::pca::PcaModel;
use crate::tpca::TpcaModel;

/// A normalized cube paired with its label map.
#[derive(Clone, Debug)]
pub struct Scene {
    cube: HsiCube,
    labels: LabelMap,
    classes: Vec<u16>,
}

impl Scene {
    /// Pairs `cube` with `labels` and applies global min-max normalization.
    pub fn new(cube: &HsiCube, labels: LabelMap) -> Result<Self> {
        labels.check_pairs_with(cube)?;
        let classes = labels.classes();
        if classes.is_empty() {
            return Err(Error::Empty("labeled pixel set"));
        }
        Ok(Self {
            cube: cube.normalized()?,
            labels,
            classes,
        })
    }

    pub fn cube(&self) -> &HsiCube {
        &self.cube
    }

    pub fn labels(&self) -> &LabelMap {
        &self.labels
    }

    pub fn classes(&self) -> &[u16] {
        &self.classes
    }

    pub fn bands(&self) -> usize {
        self.cube.bands()
    }

    pub fn labels_of(&self, pixels: &[Pixel]) -> Vec<u16> {
        pixels.iter().map(|p| self.labels.get(p.row, p.col)).collect()
    }
}

/// An extractor fitted on a set of training pixels.
#[derive(Clone, Debug)]
pub enum FittedExtractor {
    Raw { bands: usize },
    Pca(PcaModel),
    Tpca(TpcaModel, NeighborhoodSpec),
}

impl FittedExtractor {
    pub fn fit(kind: Extractor, scene: &Scene, train: &[Pixel]) -> Result<Self> {
        match kind {
            Extractor::Raw => Ok(Self::Raw {
                bands: scene.bands(),
            }),
            Extractor::Pca => {
                let samples: Vec<&[f64]> = train
                    .iter()
                    .map(|p| scene.cube.spectrum(p.row, p.col))
                    .collect();
                Ok(Self::Pca(PcaModel::fit(&samples)?))
            }
            Extractor::Tpca => {
                let spec = NeighborhoodSpec::default();
                let samples = tensorize_all(&scene.cube, train, spec)?;
                Ok(Self::Tpca(TpcaModel::fit(&samples)?, spec))
            }
        }
    }

    pub fn kind(&self) -> Extractor {
        match self {
            Self::Raw { .. } => Extractor::Raw,
            Self::Pca(_) => Extractor::Pca,
            Self::Tpca(..) => Extractor::Tpca,
        }
    }

    /// Largest admissible `d`.
    pub fn max_dim(&self) -> usize {
        match self {
            Self::Raw { bands } => *bands,
            Self::Pca(m) => m.dim(),
            Self::Tpca(m, _) => m.dim(),
        }
    }

    /// Features of `pixels`, truncated to `d` (raw features ignore `d` and
    /// keep every band).
    pub fn features(&self, scene: &Scene, pixels: &[Pixel], d: usize) -> Result<Vec<Vec<f64>>> {
        crate::pca::check_d(d, self.max_dim())?;
        match self {
            Self::Raw { .. } => Ok(pixels
                .iter()
                .map(|p| scene.cube.spectrum(p.row, p.col).to_vec())
                .collect()),
            Self::Pca(m) => pixels
                .iter()
                .map(|p| m.transform(scene.cube.spectrum(p.row, p.col), d).map(|f| f.into_vec()))
                .collect(),
            Self::Tpca(m, spec) => {
                let tensors = tensorize_all(&scene.cube, pixels, *spec)?;
                Ok(m.transform_batch(&tensors, d)?
                    .into_iter()
                    .map(|f| f.into_vec())
                    .collect())
            }
        }
    }
}

/// Outcome of one seeded run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub split: Split,
    pub report: EvalReport,
    /// Predictions for `split.test`, in the same order.
    pub test_predictions: Vec<u16>,
}

/// Features are truncated to `d`; raw runs report `d` as the band count.
fn report_d(kind: Extractor, d: usize, bands: usize) -> usize {
    if kind == Extractor::Raw {
        bands
    } else {
        d
    }
}

fn classify_truncated(
    train_features: &[Vec<f64>],
    train_labels: &[u16],
    test_features: &[Vec<f64>],
    d: usize,
) -> Result<Vec<u16>> {
    let cut = |f: &Vec<f64>| f[..d.min(f.len())].to_vec();
    let train: Vec<Vec<f64>> = train_features.iter().map(cut).collect();
    let test: Vec<Vec<f64>> = test_features.iter().map(cut).collect();
    NearestNeighbor::new(&train, train_labels)?.classify_batch(&test)
}

/// Split, fit, transform and classify once, with 1-NN on the test pixels.
pub fn run_once(scene: &Scene, kind: Extractor, d: usize, spec: SplitSpec) -> Result<RunOutcome> {
    let split = split(&scene.labels, spec)?;
    let model = FittedExtractor::fit(kind, scene, &split.train)?;
    let train_f = model.features(scene, &split.train, d)?;
    let test_f = model.features(scene, &split.test, d)?;
    let train_labels = scene.labels_of(&split.train);
    let truth = scene.labels_of(&split.test);
    let pred = NearestNeighbor::new(&train_f, &train_labels)?.classify_batch(&test_f)?;
    let cm = ConfusionMatrix::new(scene.classes(), &truth, &pred)?;
    let report = EvalReport::new(&cm, spec.seed, kind, report_d(kind, d, scene.bands()))?;
    Ok(RunOutcome {
        split,
        report,
        test_predictions: pred,
    })
}

/// Mean over repetitions plus the individual runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanReport {
    pub oa: f64,
    pub kappa: f64,
    /// Per-class accuracy averaged over the runs in which the class had test pixels.
    pub per_class: Vec<Option<f64>>,
    pub classes: Vec<u16>,
    /// Counts summed over all runs.
    pub confusion: Vec<u64>,
    pub seed: u64,
    pub extractor: Extractor,
    pub d: usize,
    pub classifier: String,
    pub repetitions: usize,
    pub runs: Vec<EvalReport>,
}

impl MeanReport {
    pub fn from_runs(runs: Vec<EvalReport>) -> Result<Self> {
        let first = runs.first().ok_or(Error::Empty("repetition list"))?;
        let count = runs.len() as f64;
        let k = first.classes.len();
        let mut per_class = Vec::with_capacity(k);
        for c in 0..k {
            let vals: Vec<f64> = runs.iter().filter_map(|r| r.per_class[c]).collect();
            per_class.push((!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64));
        }
        let mut confusion = vec![0u64; k * k];
        for r in &runs {
            for (acc, v) in confusion.iter_mut().zip(&r.confusion) {
                *acc += v;
            }
        }
        Ok(Self {
            oa: runs.iter().map(|r| r.oa).sum::<f64>() / count,
            kappa: runs.iter().map(|r| r.kappa).sum::<f64>() / count,
            per_class,
            classes: first.classes.clone(),
            confusion,
            seed: first.seed,
            extractor: first.extractor,
            d: first.d,
            classifier: first.classifier.clone(),
            repetitions: runs.len(),
            runs,
        })
    }
}

/// Runs `repetitions` independent splits with seeds `seed, seed + 1, ...`.
pub fn evaluate_repeated(
    scene: &Scene,
    kind: Extractor,
    d: usize,
    seed: u64,
    train_fraction: f64,
    repetitions: usize,
) -> Result<MeanReport> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    let runs = (0..repetitions as u64)
        .map(|i| {
            let spec = SplitSpec {
                seed: seed.wrapping_add(i),
                train_fraction,
            };
            run_once(scene, kind, d, spec).map(|o| o.report)
        })
        .collect::<Result<Vec<_>>>()?;
    MeanReport::from_runs(runs)
}

/// Accuracy curves: for each extractor and each `d`, mean OA/κ over the
/// repetition seeds. Each model is fitted once per split and shared by all
/// `d`; features are computed at full dimension and truncated, which equals
/// transforming at each `d` because truncation keeps a prefix.
pub fn sweep(
    scene: &Scene,
    extractors: &[Extractor],
    dims: &[usize],
    seed: u64,
    train_fraction: f64,
    repetitions: usize,
) -> Result<Vec<SweepRow>> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    if let Some(&bad) = dims.iter().find(|&&d| d == 0 || d > scene.bands()) {
        return Err(Error::InvalidArgument(format!(
            "sweep dimension {bad} outside 1..={}",
            scene.bands()
        )));
    }
    let mut sums = vec![(0.0, 0.0); extractors.len() * dims.len()];
    for i in 0..repetitions as u64 {
        let spec = SplitSpec {
            seed: seed.wrapping_add(i),
            train_fraction,
        };
        let split = split(&scene.labels, spec)?;
        let train_labels = scene.labels_of(&split.train);
        let truth = scene.labels_of(&split.test);
        for (e, &kind) in extractors.iter().enumerate() {
            let model = FittedExtractor::fit(kind, scene, &split.train)?;
            let full = model.max_dim();
            let train_f = model.features(scene, &split.train, full)?;
            let test_f = model.features(scene, &split.test, full)?;
            for (j, &d) in dims.iter().enumerate() {
                let pred = classify_truncated(&train_f, &train_labels, &test_f, d)?;
                let cm = ConfusionMatrix::new(scene.classes(), &truth, &pred)?;
                let report = EvalReport::new(&cm, spec.seed, kind, d)?;
                let slot = &mut sums[e * dims.len() + j];
                slot.0 += report.oa;
                slot.1 += report.kappa;
            }
        }
    }
    let reps = repetitions as f64;
    let mut rows = Vec::with_capacity(sums.len());
    for (e, &kind) in extractors.iter().enumerate() {
        for (j, &d) in dims.iter().enumerate() {
            let (oa, kappa) = sums[e * dims.len() + j];
            rows.push(SweepRow {
                extractor: kind,
                d,
                oa: oa / reps,
                kappa: kappa / reps,
            });
        }
    }
    rows.sort_by_key(|r| (r.extractor, r.d));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::TwoTextureScene;

    fn scene() -> Scene {
        let (cube, labels) = TwoTextureScene::default().generate(5).unwrap();
        Scene::new(&cube, labels).unwrap()
    }

    #[test]
    fn single_dim_sweep_matches_single_run() {
        let s = scene();
        for kind in [Extractor::Pca, Extractor::Tpca] {
            let run = run_once(&s, kind, 4, SplitSpec::new(11)).unwrap();
            let rows = sweep(&s, &[kind], &[4], 11, 0.1, 1).unwrap();
            assert_eq!(rows.len(), 1);
            assert_eq!(rows[0].oa, run.report.oa);
            assert_eq!(rows[0].kappa, run.report.kappa);
        }
    }

    #[test]
    fn one_repetition_mean_is_the_run() {
        let s = scene();
        let mean = evaluate_repeated(&s, Extractor::Tpca, 3, 2, 0.1, 1).unwrap();
        let run = run_once(&s, Extractor::Tpca, 3, SplitSpec::new(2)).unwrap();
        assert_eq!(mean.oa, run.report.oa);
        assert_eq!(mean.runs, vec![run.report]);
    }

    #[test]
    fn mean_is_arithmetic_mean() {
        let s = scene();
        let mean = evaluate_repeated(&s, Extractor::Pca, 2, 40, 0.1, 4).unwrap();
        let expected = mean.runs.iter().map(|r| r.oa).sum::<f64>() / 4.0;
        assert_eq!(mean.oa, expected);
        let seeds: Vec<u64> = mean.runs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![40, 41, 42, 43]);
    }

    #[test]
    fn sweep_rejects_bad_dims() {
        let s = scene();
        assert!(sweep(&s, &[Extractor::Pca], &[0], 1, 0.1, 1).is_err());
        assert!(sweep(&s, &[Extractor::Pca], &[9], 1, 0.1, 1).is_err());
        let rows = sweep(&s, &[Extractor::Tpca, Extractor::Pca], &[5, 2], 1, 0.1, 1).unwrap();
        let keys: Vec<(Extractor, usize)> = rows.iter().map(|r| (r.extractor, r.d)).collect();
        assert_eq!(
            keys,
            vec![
                (Extractor::Pca, 2),
                (Extractor::Pca, 5),
                (Extractor::Tpca, 2),
                (Extractor::Tpca, 5)
            ]
        );
    }
}
