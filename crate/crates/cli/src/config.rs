//! Experiment configuration: JSON file with defaults, overridden by flags.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use moment_control::gram::default_digits;
use moment_control::precision::PrecisionContext;
use moment_control::spectral::{
    fractional_spectrum, make_power_law_spectrum, make_two_sided_spectrum, periodic_kdv_spectrum, Kind,
    SpectralSystem,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// λ_n = R n^α, n ≥ 1
    PowerLaw,
    /// λ_{±n} = ±R n^α, dispersive
    TwoSided,
    PeriodicKdv,
    FractionalHeat,
    FractionalSchrodinger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    /// power-law presets only; the others fix α themselves
    pub alpha: Option<f64>,
    pub rate: f64,
    pub modes: usize,
    /// overrides the preset's own kind
    pub kind: Option<Kind>,
    /// domain length; 2π for periodic KdV and π for the fractional presets when unset
    pub length: Option<f64>,
    pub gamma: f64,
    pub perturb: f64,
    pub t_grid: Vec<f64>,
    pub delta: f64,
    /// 64 for parabolic, 30 for dispersive when unset
    pub digits: Option<u32>,
    pub seed: u64,
    pub out: PathBuf,
    /// synth: modal initial data as [re, im] pairs; random unit data from `seed` when unset
    pub y0: Option<Vec<[f64; 2]>>,
    /// synth: samples of the Gram control on [0, T]
    pub samples: usize,
    /// cost-sweep: also compute the biorthogonal upper estimate
    pub biorthogonal: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: Preset::PowerLaw,
            alpha: None,
            rate: 1.0,
            modes: 8,
            kind: None,
            length: None,
            gamma: 1.0,
            perturb: 0.0,
            t_grid: vec![0.5, 0.35, 0.25, 0.18, 0.12, 0.08],
            delta: 0.05,
            digits: None,
            seed: 0,
            out: PathBuf::from("out"),
            y0: None,
            samples: 20001,
            biorthogonal: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.t_grid.is_empty() || self.t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return bad(format!("t_grid must be a non-empty list of positive times, got {:?}", self.t_grid));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.modes == 0 {
            return bad("modes must be at least 1".into());
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return bad(format!("rate must be positive, got {}", self.rate));
        }
        if let Some(l) = self.length {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("length must be positive, got {l}"));
            }
        }
        if let Some(d) = self.digits {
            PrecisionContext::new(d).map_err(|e| CliError::Config(e.to_string()))?;
        }
        if self.samples < 4 {
            return bad(format!("samples must be at least 4, got {}", self.samples));
        }
        Ok(())
    }

    pub fn build_system(&self) -> Result<SpectralSystem, CliError> {
        let alpha = self.alpha.unwrap_or(2.0);
        let sys = match self.preset {
            Preset::PowerLaw => make_power_law_spectrum(alpha, self.rate, self.modes, self.perturb, self.seed),
            Preset::TwoSided => make_two_sided_spectrum(alpha, self.rate, self.modes, self.perturb, self.seed),
            Preset::PeriodicKdv => periodic_kdv_spectrum(self.length.unwrap_or(2.0 * PI), self.modes),
            Preset::FractionalHeat => {
                fractional_spectrum(self.gamma, self.length.unwrap_or(PI), self.modes, Kind::Parabolic)
            }
            Preset::FractionalSchrodinger => {
                fractional_spectrum(self.gamma, self.length.unwrap_or(PI), self.modes, Kind::Dispersive)
            }
        };
        let sys = sys.map_err(|e| CliError::Config(e.to_string()))?;
        match self.kind {
            Some(k) if k != sys.kind() => sys.with_kind(k).map_err(|e| CliError::Config(e.to_string())),
            _ => Ok(sys),
        }
    }

    pub fn precision_for(&self, kind: Kind) -> Result<PrecisionContext, CliError> {
        PrecisionContext::new(self.digits.unwrap_or_else(|| default_digits(kind)))
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// T grid sorted from largest to smallest, duplicates removed.
    pub fn sorted_t_grid(&self) -> Vec<f64> {
        let mut t = self.t_grid.clone();
        t.sort_by(|a, b| b.total_cmp(a));
        t.dedup();
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_fields() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"preset": "periodic-kdv", "modes": 3}"#).unwrap();
        assert_eq!(c.modes, 3);
        assert_eq!(c.delta, 0.05);
        let sys = c.build_system().unwrap();
        assert_eq!(sys.lambdas()[3], 1.0);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"mode": 3}"#).is_err());
    }

    #[test]
    fn fractional_gamma_below_one_is_a_config_error() {
        let c = ExperimentConfig {
            preset: Preset::FractionalHeat,
            gamma: 0.4,
            ..Default::default()
        };
        assert!(matches!(c.build_system(), Err(CliError::Config(_))));
    }

    #[test]
    fn validation_rejects_bad_grids() {
        let mut c = ExperimentConfig::default();
        assert!(c.validate().is_ok());
        c.t_grid = vec![0.5, -0.1];
        assert!(c.validate().is_err());
        c.t_grid = vec![0.2, 0.5, 0.2];
        assert_eq!(c.sorted_t_grid(), vec![0.5, 0.2]);
        c.delta = 1.0;
        assert!(c.validate().is_err());
    }
}
