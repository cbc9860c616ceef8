//! Pipeline configuration: one flat JSON object.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Defaults: `train_fraction` 0.10, `repetitions` 10, `dims` empty
//! (required by `sweep`), `palette` the built-in table in [`crate::ppm`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use tpca_core::hsi::{read_cube_info, sidecar_path};
use tpca_core::Extractor;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub cube: PathBuf,
    pub labels: PathBuf,
    pub extractor: Extractor,
    pub d: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub dims: Vec<usize>,
    #[serde(default)]
    pub palette: Option<BTreeMap<u16, [u8; 3]>>,
}

fn default_train_fraction() -> f64 {
    0.10
}

fn default_repetitions() -> usize {
    10
}

/// Command-line values that replace config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub extractor: Option<Extractor>,
    pub d: Option<usize>,
}

/// What a subcommand needs from the config beyond the common fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Needs {
    pub dims: bool,
}

impl PipelineConfig {
    pub fn from_json(text: &str, base: &Path) -> CliResult<Self> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for p in [&mut cfg.cube, &mut cfg.labels, &mut cfg.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(extractor) = o.extractor {
            self.extractor = extractor;
        }
        if let Some(d) = o.d {
            self.d = d;
        }
    }

    /// Checks every field, the presence of the input files and `d` against
    /// the band count recorded in the cube sidecar. No payload is read.
    pub fn validate(&self, needs: Needs) -> CliResult<()> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("field `{field}`: {msg}")));
        if self.d == 0 {
            return bad("d", "must be at least 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction", format!("must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.repetitions == 0 {
            return bad("repetitions", "must be at least 1".into());
        }
        if needs.dims && self.dims.is_empty() {
            return bad("dims", "sweep needs a non-empty list".into());
        }
        if let Some(&zero) = self.dims.iter().find(|&&d| d == 0) {
            return bad("dims", format!("entries must be at least 1, found {zero}"));
        }
        for (field, path) in [("cube", &self.cube), ("labels", &self.labels)] {
            if !path.is_file() {
                return bad(field, format!("{} does not exist", path.display()));
            }
            if !sidecar_path(path).is_file() {
                return bad(field, format!("sidecar {} does not exist", sidecar_path(path).display()));
            }
        }
        let bands = read_cube_info(&self.cube)?.bands;
        if self.d > bands {
            return bad("d", format!("{} exceeds the {bands} bands of the cube", self.d));
        }
        if let Some(&big) = self.dims.iter().find(|&&d| d > bands) {
            return bad("dims", format!("{big} exceeds the {bands} bands of the cube"));
        }
        Ok(())
    }

    pub fn model_path(&self) -> PathBuf {
        self.output_dir.join("model.tpca")
    }

    pub fn split_path(&self) -> PathBuf {
        self.output_dir.join("split.json")
    }

    pub fn predictions_path(&self) -> PathBuf {
        self.output_dir.join("predictions.csv")
    }

    pub fn features_path(&self) -> PathBuf {
        self.output_dir.join("features.csv")
    }

    pub fn report_path(&self) -> PathBuf {
        self.output_dir.join("report.json")
    }

    pub fn sweep_path(&self) -> PathBuf {
        self.output_dir.join("sweep.csv")
    }

    pub fn map_path(&self) -> PathBuf {
        self.output_dir.join("map.ppm")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"cube": "a.cube", "labels": "a.labels", "extractor": "tpca",
        "d": 3, "seed": 1, "output_dir": "out"}"#;

    #[test]
    fn defaults_and_relative_paths() {
        let cfg = PipelineConfig::from_json(MINIMAL, Path::new("/data")).unwrap();
        assert_eq!(cfg.train_fraction, 0.10);
        assert_eq!(cfg.repetitions, 10);
        assert!(cfg.dims.is_empty());
        assert_eq!(cfg.cube, Path::new("/data/a.cube"));
        assert_eq!(cfg.output_dir, Path::new("/data/out"));
    }

    #[test]
    fn unknown_and_missing_fields_are_config_errors() {
        let extra = MINIMAL.replace("\"seed\": 1", "\"seed\": 1, \"sed\": 2");
        let err = PipelineConfig::from_json(&extra, Path::new(".")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let missing = MINIMAL.replace("\"d\": 3,", "");
        assert!(PipelineConfig::from_json(&missing, Path::new(".")).is_err());
        let bad_extractor = MINIMAL.replace("tpca", "lda");
        assert!(PipelineConfig::from_json(&bad_extractor, Path::new(".")).is_err());
    }

    #[test]
    fn palette_keys_are_class_ids() {
        let text = MINIMAL.replace("\"seed\": 1", "\"seed\": 1, \"palette\": {\"3\": [1, 2, 3]}");
        let cfg = PipelineConfig::from_json(&text, Path::new(".")).unwrap();
        assert_eq!(cfg.palette.unwrap()[&3], [1, 2, 3]);
    }

    #[test]
    fn overrides_replace_fields() {
        let mut cfg = PipelineConfig::from_json(MINIMAL, Path::new(".")).unwrap();
        cfg.apply(&Overrides {
            seed: Some(9),
            extractor: Some(Extractor::Pca),
            d: None,
        });
        assert_eq!((cfg.seed, cfg.extractor, cfg.d), (9, Extractor::Pca, 3));
    }

    #[test]
    fn field_checks_precede_file_checks() {
        let mut cfg = PipelineConfig::from_json(MINIMAL, Path::new("/nonexistent")).unwrap();
        cfg.repetitions = 0;
        let msg = cfg.validate(Needs { dims: false }).unwrap_err().to_string();
        assert!(msg.contains("repetitions"), "{msg}");
        cfg.repetitions = 1;
        let msg = cfg.validate(Needs { dims: true }).unwrap_err().to_string();
        assert!(msg.contains("dims"), "{msg}");
        let msg = cfg.validate(Needs { dims: false }).unwrap_err().to_string();
        assert!(msg.contains("cube"), "{msg}");
    }
}
