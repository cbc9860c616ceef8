use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use tpca_core::eval::sweep_csv;
use tpca_core::hsi::{load_cube, load_labels, split, write_cube, write_labels, NeighborhoodSpec};
use tpca_core::pipeline::{evaluate_repeated, sweep, FittedExtractor, Scene};
use tpca_core::synth::TwoTextureScene;
use tpca_core::{ConfusionMatrix, Extractor, NearestNeighbor, PcaModel, Pixel, Split, SplitSpec, TpcaModel};

use crate::config::{Needs, Overrides, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::ppm;

pub fn prepare(config: &Path, overrides: &Overrides, needs: Needs) -> CliResult<PipelineConfig> {
    let mut cfg = PipelineConfig::load(config)?;
    cfg.apply(overrides);
    cfg.validate(needs)?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::io(&cfg.output_dir, e))?;
    Ok(cfg)
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, text)
}

fn load_scene(cfg: &PipelineConfig) -> CliResult<Scene> {
    let cube = load_cube(&cfg.cube)?;
    let labels = load_labels(&cfg.labels)?;
    Ok(Scene::new(&cube, labels)?)
}

/// Contents of `split.json`.
#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train_fraction: f64,
    pub train: Vec<Pixel>,
    pub test: Vec<Pixel>,
}

fn read_split(cfg: &PipelineConfig) -> CliResult<Split> {
    let path = cfg.split_path();
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let m: SplitManifest = serde_json::from_str(&text).map_err(|e| CliError::data(&path, e.to_string()))?;
    if m.seed != cfg.seed || m.train_fraction != cfg.train_fraction {
        return Err(CliError::Config(format!(
            "{} was written with seed {} and train_fraction {}; run `fit` again",
            path.display(),
            m.seed,
            m.train_fraction
        )));
    }
    Ok(Split {
        train: m.train,
        test: m.test,
    })
}

/// Loads the fitted extractor matching `cfg.extractor` from the output directory.
fn load_fitted(cfg: &PipelineConfig, scene: &Scene) -> CliResult<FittedExtractor> {
    let path = cfg.model_path();
    let fitted = match cfg.extractor {
        Extractor::Raw => FittedExtractor::Raw {
            bands: scene.bands(),
        },
        Extractor::Pca => FittedExtractor::Pca(PcaModel::load(&path)?),
        Extractor::Tpca => {
            let model = TpcaModel::load(&path)?;
            let sh = model.shape();
            let spec = NeighborhoodSpec {
                radius: sh.rows() / 2,
            };
            if sh.rows() != sh.cols() || spec.shape() != sh {
                return Err(CliError::data(&path, format!("{sh} is not a square neighborhood shape")));
            }
            FittedExtractor::Tpca(model, spec)
        }
    };
    if fitted.max_dim() != scene.bands() {
        return Err(CliError::data(
            &path,
            format!("model has {} bands, cube has {}", fitted.max_dim(), scene.bands()),
        ));
    }
    Ok(fitted)
}

pub fn fit(cfg: &PipelineConfig) -> CliResult<()> {
    let scene = load_scene(cfg)?;
    let spec = SplitSpec {
        seed: cfg.seed,
        train_fraction: cfg.train_fraction,
    };
    let split = split(scene.labels(), spec)?;
    info!("{} training / {} test pixels", split.train.len(), split.test.len());
    let model_path = cfg.model_path();
    match FittedExtractor::fit(cfg.extractor, &scene, &split.train)? {
        FittedExtractor::Raw { .. } => {
            if model_path.exists() {
                fs::remove_file(&model_path).map_err(|e| CliError::io(&model_path, e))?;
            }
            info!("raw extractor has no model; only the split is written");
        }
        FittedExtractor::Pca(m) => {
            m.save(&model_path)?;
            info!("wrote {}", model_path.display());
        }
        FittedExtractor::Tpca(m, _) => {
            m.save(&model_path)?;
            info!("wrote {}", model_path.display());
        }
    }
    write_json(
        &cfg.split_path(),
        &SplitManifest {
            seed: cfg.seed,
            train_fraction: cfg.train_fraction,
            train: split.train,
            test: split.test,
        },
    )
}

pub fn transform(cfg: &PipelineConfig) -> CliResult<()> {
    let scene = load_scene(cfg)?;
    let fitted = load_fitted(cfg, &scene)?;
    let pixels = scene.labels().labeled_pixels();
    let features = fitted.features(&scene, &pixels, cfg.d)?;
    let width = features.first().map_or(0, Vec::len);
    let mut out = String::from("row,col,label");
    for k in 1..=width {
        write!(out, ",f{k}").unwrap();
    }
    out.push('\n');
    for (p, f) in pixels.iter().zip(&features) {
        write!(out, "{},{},{}", p.row, p.col, scene.labels().get(p.row, p.col)).unwrap();
        for v in f {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    write_file(&cfg.features_path(), out)
}

pub fn classify(cfg: &PipelineConfig) -> CliResult<()> {
    let scene = load_scene(cfg)?;
    let split = read_split(cfg)?;
    let fitted = load_fitted(cfg, &scene)?;
    let train = fitted.features(&scene, &split.train, cfg.d)?;
    let nn = NearestNeighbor::new(&train, &scene.labels_of(&split.train))?;

    let pixels = scene.labels().labeled_pixels();
    let pred = nn.classify_batch(&fitted.features(&scene, &pixels, cfg.d)?)?;
    let truth = scene.labels_of(&pixels);

    let is_test: Vec<bool> = pixels.iter().map(|p| split.test.binary_search(p).is_ok()).collect();
    let pick = |v: &[u16]| -> Vec<u16> { v.iter().zip(&is_test).filter(|(_, &t)| t).map(|(l, _)| *l).collect() };
    let cm = ConfusionMatrix::new(scene.classes(), &pick(&truth), &pick(&pred))?;
    info!("test OA {:.4}", tpca_core::eval::overall_accuracy(&cm)?);

    let mut out = String::from("row,col,truth,pred\n");
    for ((p, t), y) in pixels.iter().zip(&truth).zip(&pred) {
        writeln!(out, "{},{},{t},{y}", p.row, p.col).unwrap();
    }
    write_file(&cfg.predictions_path(), out)
}

pub fn evaluate(cfg: &PipelineConfig) -> CliResult<()> {
    let scene = load_scene(cfg)?;
    let report = evaluate_repeated(
        &scene,
        cfg.extractor,
        cfg.d,
        cfg.seed,
        cfg.train_fraction,
        cfg.repetitions,
    )?;
    info!(
        "{} d={} over {} runs: OA {:.4}, kappa {:.4}",
        report.extractor, report.d, report.repetitions, report.oa, report.kappa
    );
    write_json(&cfg.report_path(), &report)
}

pub fn run_sweep(cfg: &PipelineConfig) -> CliResult<()> {
    let scene = load_scene(cfg)?;
    let rows = sweep(
        &scene,
        &[Extractor::Pca, Extractor::Tpca],
        &cfg.dims,
        cfg.seed,
        cfg.train_fraction,
        cfg.repetitions,
    )?;
    write_file(&cfg.sweep_path(), sweep_csv(&rows))
}

fn read_predictions(path: &Path, height: usize, width: usize) -> CliResult<Vec<u16>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("row,col,truth,pred") {
        return Err(CliError::data(path, "missing header `row,col,truth,pred`"));
    }
    let mut pred = vec![0u16; height * width];
    for (i, line) in lines.enumerate() {
        let bad = |why: &str| CliError::data(path, format!("line {}: {why}", i + 2));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad("not a non-negative integer"));
        let (r, c, p) = (num(fields[0])?, num(fields[1])?, num(fields[3])?);
        if r >= height || c >= width {
            return Err(bad("pixel outside the label map"));
        }
        pred[r * width + c] = u16::try_from(p).map_err(|_| bad("class id out of range"))?;
    }
    Ok(pred)
}

pub fn render_map(cfg: &PipelineConfig) -> CliResult<()> {
    let labels = load_labels(&cfg.labels)?;
    let path = cfg.predictions_path();
    let pred = read_predictions(&path, labels.height(), labels.width())?;
    if let Some(p) = labels.labeled_pixels().into_iter().find(|p| pred[p.row * labels.width() + p.col] == 0) {
        return Err(CliError::data(&path, format!("no prediction for labeled pixel ({}, {})", p.row, p.col)));
    }
    let palette = cfg.palette.clone().unwrap_or_else(ppm::default_palette);
    write_file(&cfg.map_path(), ppm::render(&labels, &pred, &palette)?)
}

/// Writes `<name>.cube`, `<name>.labels` and their shared `<name>.json`.
pub fn synth(scene: &TwoTextureScene, seed: u64, out_dir: &Path, name: &str) -> CliResult<(PathBuf, PathBuf)> {
    if scene.height == 0 || scene.width == 0 || scene.bands == 0 || scene.tile == 0 {
        return Err(CliError::Config("synthetic scene dimensions must be positive".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let (cube, labels) = scene.generate(seed)?;
    let cube_path = out_dir.join(format!("{name}.cube"));
    let labels_path = out_dir.join(format!("{name}.labels"));
    write_cube(&cube_path, &cube)?;
    write_labels(&labels_path, &labels)?;
    info!("wrote {} and {}", cube_path.display(), labels_path.display());
    Ok((cube_path, labels_path))
}

