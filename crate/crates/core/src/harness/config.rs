use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cca::{DEFAULT_CALIBRATION_REPS, DEFAULT_RIDGE};
use crate::classifier::SvmParams;
use crate::error::{Error, Result};
use crate::sim::{DriftKind, GeometryParams};

/// Everything a run needs. Loaded from TOML; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of days, reference included.
    pub days: usize,
    pub seed: u64,
    pub drift: DriftKind,
    pub magnitude: f64,
    /// Per-day feature noise; `None` means a quarter of the within-cluster spread.
    pub noise_std: Option<f64>,
    pub calibration_reps: usize,
    /// Repetitions per gesture held out of day-1 training.
    pub test_reps: usize,
    pub sessions_per_day: usize,
    pub ridge: f64,
    pub center: bool,
    pub geometry: GeometryParams,
    pub svm: SvmParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            days: 10,
            seed: 42,
            drift: DriftKind::Rotation,
            magnitude: 1.0,
            noise_std: None,
            calibration_reps: DEFAULT_CALIBRATION_REPS,
            test_reps: 2,
            sessions_per_day: 1,
            ridge: DEFAULT_RIDGE,
            center: true,
            geometry: GeometryParams::default(),
            svm: SvmParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Serialized form with every default made explicit.
    pub fn to_toml_string(&self) -> Result<String> {
        let mut resolved = self.clone();
        resolved.noise_std = Some(self.noise_std());
        toml::to_string(&resolved).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std.unwrap_or(0.25 * self.geometry.within_std)
    }

    pub fn validate(&self) -> Result<()> {
        let reps = self.geometry.reps_per_gesture;
        if self.days < 2 {
            return Err(Error::Config(format!("days must be at least 2, got {}", self.days)));
        }
        if self.calibration_reps == 0 || self.calibration_reps > reps {
            return Err(Error::Config(format!(
                "calibration_reps must be in 1..={reps}, got {}",
                self.calibration_reps
            )));
        }
        if self.test_reps == 0 || self.test_reps >= reps {
            return Err(Error::Config(format!("test_reps must be in 1..{reps}, got {}", self.test_reps)));
        }
        if self.sessions_per_day == 0 {
            return Err(Error::Config("sessions_per_day must be at least 1".into()));
        }
        if !(self.magnitude >= 0.0 && self.magnitude.is_finite()) {
            return Err(Error::Config(format!("magnitude must be >= 0, got {}", self.magnitude)));
        }
        if !(self.noise_std() >= 0.0 && self.noise_std().is_finite()) {
            return Err(Error::Config(format!("noise_std must be >= 0, got {}", self.noise_std())));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::Config(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        if self.svm.reg_c.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || self.svm.epochs == 0 {
            return Err(Error::Config("svm.reg_c must be > 0 and svm.epochs >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_explicit_when_serialized() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.noise_std(), 0.0625);
        let text = cfg.to_toml_string().unwrap();
        assert!(text.contains("seed = 42"));
        assert!(text.contains("noise_std = 0.0625"));
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.noise_std(), cfg.noise_std());
        assert_eq!(back.svm, cfg.svm);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "days = 3\ndrift = \"general-linear\"\n[geometry]\nreps_per_gesture = 4\n[svm]\nreg_c = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.days, 3);
        assert_eq!(cfg.drift, DriftKind::GeneralLinear);
        assert_eq!(cfg.geometry.reps_per_gesture, 4);
        assert_eq!(cfg.geometry.n_channels, 8);
        assert_eq!(cfg.svm.epochs, 200);
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn validation_errors() {
        let too_many = ExperimentConfig { calibration_reps: 9, ..Default::default() };
        assert!(matches!(too_many.validate(), Err(Error::Config(_))));
        let one_day = ExperimentConfig { days: 1, ..Default::default() };
        assert!(one_day.validate().is_err());
        let no_train = ExperimentConfig { test_reps: 8, ..Default::default() };
        assert!(no_train.validate().is_err());
    }
}
