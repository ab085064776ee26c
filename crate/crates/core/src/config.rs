//! JSON run configuration shared by all subcommands. Unknown keys are
//! rejected; every key has a default so a config file may be partial.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Mode;
use crate::forest::ForestParams;
use crate::ingest::SignalFormat;
use crate::learn::{ClassifierKind, Hyperparams};
use crate::score::EnvelopeParams;
use crate::sigfeat::FeatureConfig;
use crate::synth::{Method, MAX_ALPHA};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalInput {
    /// Directory scanned for `*.csv` signal files (sorted by name).
    pub dir: Option<PathBuf>,
    /// Explicit signal files; used instead of `dir` when non-empty.
    pub paths: Vec<PathBuf>,
    pub format: SignalFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisConfig {
    pub method: Method,
    /// Target balance for the `synthesize` and `roc` commands.
    pub alpha: f64,
    pub k: usize,
    /// Defaults to the master seed.
    pub seed: Option<u64>,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            method: Method::Smote,
            alpha: 1.0,
            k: 5,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSettings {
    /// Synthesis draws averaged per grid point.
    pub repeats: usize,
    pub steepness: f64,
    pub forest: ForestParams,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        OptimizeSettings {
            repeats: 20,
            steepness: EnvelopeParams::DEFAULT_STEEPNESS,
            forest: ForestParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSettings {
    pub repeats: usize,
    pub train_fraction: f64,
    /// Skip the optimization run and use this coefficient as alpha*.
    pub alpha_star: Option<f64>,
}

impl Default for EvaluateSettings {
    fn default() -> Self {
        EvaluateSettings {
            repeats: 100,
            train_fraction: 0.8,
            alpha_star: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub signals: SignalInput,
    pub features: FeatureConfig,
    /// Feature table read by `synthesize`, `optimize`, `evaluate` and `roc`.
    pub features_csv: Option<PathBuf>,
    pub synthesis: SynthesisConfig,
    /// Balance grid; `None` means multiples of 0.05 from alpha0 + 0.05 to 1.2.
    pub alphas: Option<Vec<f64>>,
    pub optimize: OptimizeSettings,
    pub evaluate: EvaluateSettings,
    pub mode: Mode,
    pub classifiers: Vec<ClassifierKind>,
    /// Per-kind hyperparameters (`classifier.<kind>.<param>`).
    pub classifier: Hyperparams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            threads: None,
            out: PathBuf::from("out"),
            signals: SignalInput::default(),
            features: FeatureConfig::default(),
            features_csv: None,
            synthesis: SynthesisConfig::default(),
            alphas: None,
            optimize: OptimizeSettings::default(),
            evaluate: EvaluateSettings::default(),
            mode: Mode::Paper,
            classifiers: ClassifierKind::ALL.to_vec(),
            classifier: Hyperparams::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        RunConfig::from_json(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn synthesis_seed(&self) -> u64 {
        self.synthesis.seed.unwrap_or(self.seed)
    }

    /// Checks that do not need any data.
    pub fn validate(&self) -> Result<()> {
        if self.threads == Some(0) {
            return Err(Error::config("threads must be >= 1"));
        }
        if self.synthesis.k == 0 {
            return Err(Error::config("synthesis.k must be >= 1"));
        }
        if !(self.synthesis.alpha > 0.0 && self.synthesis.alpha <= MAX_ALPHA) {
            return Err(Error::config(format!(
                "synthesis.alpha must be in (0, {MAX_ALPHA}]"
            )));
        }
        if self.optimize.repeats == 0 || self.evaluate.repeats == 0 {
            return Err(Error::config("repeats must be >= 1"));
        }
        if !(self.optimize.steepness > 0.0) {
            return Err(Error::config("optimize.steepness must be positive"));
        }
        if !(self.evaluate.train_fraction > 0.0 && self.evaluate.train_fraction < 1.0) {
            return Err(Error::config("evaluate.train_fraction must be in (0, 1)"));
        }
        if self.classifiers.is_empty() {
            return Err(Error::config("classifiers must not be empty"));
        }
        if let Some(a) = &self.alphas {
            if a.is_empty()
                || a.windows(2).any(|w| !(w[0] < w[1]))
                || a.iter().any(|v| !(*v > 0.0 && *v <= MAX_ALPHA))
            {
                return Err(Error::config(
                    "alphas must be a non-empty ascending list within (0, 10]",
                ));
            }
        }
        let f = &self.features;
        if f.filter_order < 2 || !f.filter_order.is_multiple_of(2) {
            return Err(Error::config("features.filter_order must be even and >= 2"));
        }
        if !(f.band_low_hz > 0.0 && f.band_low_hz < f.band_high_hz) {
            return Err(Error::config(
                "features band must satisfy 0 < band_low_hz < band_high_hz",
            ));
        }
        if f.sampen_m == 0 || !(f.sampen_r > 0.0) {
            return Err(Error::config(
                "features.sampen_m must be >= 1 and sampen_r > 0",
            ));
        }
        if self.signals.format.channels == 0 {
            return Err(Error::config("signals.format.channels must be >= 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = RunConfig::from_json(
            r#"{"seed": 7, "synthesis": {"method": "adasyn", "alpha": 0.8},
                "classifiers": ["svc", "gbc"], "classifier": {"svc": {"epochs": 10}}}"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.synthesis.method, Method::Adasyn);
        assert_eq!(cfg.synthesis.k, 5);
        assert_eq!(
            cfg.classifiers,
            vec![ClassifierKind::Svc, ClassifierKind::Gbc]
        );
        assert_eq!(cfg.classifier.svc.epochs, 10);
        assert_eq!(cfg.classifier.svc.lambda, 1e-2);
        assert_eq!(cfg.synthesis_seed(), 7);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            RunConfig::from_json(r#"{"sede": 1}"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::from_json(r#"{"classifier": {"svc": {"gamma": 1}}}"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::from_json(r#"{"features": {"chanel": 1}}"#),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut cfg = RunConfig::default();
        cfg.validate().unwrap();
        cfg.alphas = Some(vec![0.5, 0.4]);
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.features.filter_order = 3;
        assert!(cfg.validate().is_err());
    }
}
