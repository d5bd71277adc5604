//! `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, units are fixed per key.
//! Unknown and repeated keys are rejected; missing keys keep their defaults.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::ac_phase::total_rectified_phase;
use crate::error::{Error, Result};
use crate::geometry::{DiskTrajectory, FieldConfig};
use crate::physics::{NVParameters, NvSystem, PhysicalConstants};
use crate::sequence::{build_echo_schedule, optimal_readout_lag, EchoSchedule, RunSetup, StarkModel};
use crate::stats::ReadoutModel;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { key: String, line: usize },

    #[error("line {line}: unknown key `{key}`")]
    Unknown { key: String, line: usize },

    #[error("invalid `{key}`: {reason}")]
    Constraint { key: String, reason: String },

    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A value that may be left for the program to choose.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Auto<T> {
    #[default]
    Auto,
    Value(T),
}

impl<T: fmt::Display> fmt::Display for Auto<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Auto::Auto => f.write_str("auto"),
            Auto::Value(v) => v.fmt(f),
        }
    }
}

pub const KEYS: [&str; 16] = [
    "r", "f", "E0", "n", "T2", "D", "g", "B_z", "R2E", "tilt", "lag", "alpha0", "alpha1", "C", "N", "seed",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Disk radius, m.
    pub r: f64,
    /// Rotation frequency, Hz.
    pub f: f64,
    /// Plate field, V/m.
    pub e0: f64,
    /// Rotations per run. `auto` means `f·T2`.
    pub n: Auto<f64>,
    /// s; `inf` disables dephasing.
    pub t2: f64,
    /// Hz
    pub d: f64,
    pub g: f64,
    /// T
    pub b_z: f64,
    /// Hz per (V/cm)
    pub r2e: f64,
    /// rad
    pub tilt: f64,
    /// rad. `auto` puts `E0` at maximum fringe slope.
    pub lag: Auto<f64>,
    pub alpha0: f64,
    pub alpha1: f64,
    /// Contrast used by the analytic sensitivity.
    pub c: f64,
    /// Ensemble size.
    pub ensemble: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let nv = NVParameters::default();
        let readout = ReadoutModel::default();
        Self {
            r: 0.01,
            f: 4000.0,
            e0: 3e7,
            n: Auto::Auto,
            t2: nv.t2,
            d: nv.d,
            g: nv.g,
            b_z: nv.b_z,
            r2e: nv.r2e,
            tilt: 0.0,
            lag: Auto::Auto,
            alpha0: readout.alpha0,
            alpha1: readout.alpha1,
            c: 0.05,
            ensemble: 1e11,
            seed: 1,
        }
    }
}

fn constraint(key: &str, reason: &str) -> ConfigError {
    ConfigError::Constraint {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

fn number<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| constraint(key, &format!("`{value}` is not a valid number")))
}

fn auto_number(key: &str, value: &str) -> std::result::Result<Auto<f64>, ConfigError> {
    if value.eq_ignore_ascii_case("auto") {
        Ok(Auto::Auto)
    } else {
        number(key, value).map(Auto::Value)
    }
}

impl ExperimentConfig {
    /// Assigns one key from its textual value, without cross-key checks.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "r" => self.r = number(key, value)?,
            "f" => self.f = number(key, value)?,
            "E0" => self.e0 = number(key, value)?,
            "n" => self.n = auto_number(key, value)?,
            "T2" => self.t2 = number(key, value)?,
            "D" => self.d = number(key, value)?,
            "g" => self.g = number(key, value)?,
            "B_z" => self.b_z = number(key, value)?,
            "R2E" => self.r2e = number(key, value)?,
            "tilt" => self.tilt = number(key, value)?,
            "lag" => self.lag = auto_number(key, value)?,
            "alpha0" => self.alpha0 = number(key, value)?,
            "alpha1" => self.alpha1 = number(key, value)?,
            "C" => self.c = number(key, value)?,
            "N" => self.ensemble = number(key, value)?,
            "seed" => self.seed = number(key, value)?,
            _ => {
                return Err(ConfigError::Unknown {
                    key: key.to_string(),
                    line: 0,
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(constraint(key, "must be positive"))
            }
        };
        let non_negative = |key: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(constraint(key, "must be non-negative"))
            }
        };
        positive("r", self.r)?;
        positive("f", self.f)?;
        non_negative("E0", self.e0)?;
        if let Auto::Value(n) = self.n {
            positive("n", n)?;
        }
        if !(self.t2 > 0.0) {
            return Err(constraint("T2", "must be positive"));
        }
        positive("D", self.d)?;
        positive("g", self.g)?;
        non_negative("B_z", self.b_z)?;
        non_negative("R2E", self.r2e)?;
        if !self.tilt.is_finite() {
            return Err(constraint("tilt", "must be finite"));
        }
        if let Auto::Value(lag) = self.lag {
            if !lag.is_finite() {
                return Err(constraint("lag", "must be finite"));
            }
        }
        non_negative("alpha1", self.alpha1)?;
        if !(self.alpha0.is_finite() && self.alpha0 > self.alpha1) {
            return Err(constraint("alpha0", "must exceed alpha1"));
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(constraint("C", "must lie in (0, 1]"));
        }
        if !(self.ensemble.is_finite() && self.ensemble >= 1.0) {
            return Err(constraint("N", "must be at least 1"));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> std::result::Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen: Vec<&str> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Parse {
                    line,
                    message: "empty key or value".to_string(),
                });
            }
            if seen.contains(&key) {
                return Err(ConfigError::Duplicate {
                    key: key.to_string(),
                    line,
                });
            }
            cfg.set(key, value).map_err(|e| match e {
                ConfigError::Unknown { key, .. } => ConfigError::Unknown { key, line },
                ConfigError::Constraint { key, reason } => ConfigError::Parse {
                    line,
                    message: format!("`{key}`: {reason}"),
                },
                other => other,
            })?;
            seen.push(key);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> std::result::Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Serialized form that [`ExperimentConfig::parse`] reads back.
    pub fn to_conf_string(&self) -> String {
        format!(
            "r = {}\nf = {}\nE0 = {}\nn = {}\nT2 = {}\nD = {}\ng = {}\nB_z = {}\nR2E = {}\ntilt = {}\nlag = {}\nalpha0 = {}\nalpha1 = {}\nC = {}\nN = {}\nseed = {}\n",
            self.r, self.f, self.e0, self.n, self.t2, self.d, self.g, self.b_z, self.r2e, self.tilt, self.lag,
            self.alpha0, self.alpha1, self.c, self.ensemble, self.seed
        )
    }

    pub fn system(&self) -> Result<NvSystem> {
        let nv = NVParameters::new(self.d, self.g, self.r2e, self.t2, self.b_z)?;
        Ok(NvSystem::new(nv, PhysicalConstants::CODATA_2018))
    }

    /// Rotations for the closed-form phase; `auto` gives `f·T2`.
    pub fn phase_rotations(&self) -> Result<f64> {
        match self.n {
            Auto::Value(n) => Ok(n),
            Auto::Auto if self.t2.is_finite() => Ok(self.f * self.t2),
            Auto::Auto => Err(Error::invalid("n", "auto needs a finite T2")),
        }
    }

    /// Whole rotations for an echo run; `auto` gives `⌊f·T2⌋`.
    pub fn run_rotations(&self) -> Result<u32> {
        let n = match self.n {
            Auto::Value(n) if n.fract() != 0.0 => {
                return Err(Error::invalid("n", "echo runs need a whole number of rotations"))
            }
            Auto::Value(n) => n,
            Auto::Auto => self.phase_rotations()?.floor(),
        };
        if !(1.0..=1e6).contains(&n) {
            return Err(Error::invalid("n", "need between 1 and 1e6 rotations"));
        }
        Ok(n as u32)
    }

    pub fn trajectory(&self) -> Result<DiskTrajectory> {
        DiskTrajectory::from_station_a(self.r, self.f, self.tilt)
    }

    pub fn field(&self) -> Result<FieldConfig> {
        FieldConfig::along_x(self.e0)
    }

    pub fn run_setup(&self) -> Result<RunSetup> {
        Ok(RunSetup::new(self.trajectory()?, self.field()?, self.system()?))
    }

    /// Phase accumulated at `E0` over the echo run.
    pub fn run_phase(&self) -> Result<f64> {
        total_rectified_phase(self.r, self.e0, self.run_rotations()? as f64, &self.system()?)
    }

    pub fn resolved_lag(&self) -> Result<f64> {
        match self.lag {
            Auto::Value(lag) => Ok(lag),
            Auto::Auto => optimal_readout_lag(self.run_phase()?),
        }
    }

    pub fn schedule(&self) -> Result<EchoSchedule> {
        build_echo_schedule(self.run_rotations()?, self.f, self.resolved_lag()?)
    }

    pub fn readout_model(&self) -> Result<ReadoutModel> {
        ReadoutModel::new(self.alpha0, self.alpha1)
    }

    pub fn stark_model(&self) -> Result<StarkModel> {
        StarkModel::new(self.r2e, 0.0)
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_key_keeps_defaults() {
        let cfg = ExperimentConfig::parse("E0 = 3.0e7\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let cfg = ExperimentConfig::parse("# comment\n\nf = 3000 # trailing\n").unwrap();
        assert_eq!(cfg.f, 3000.0);
        assert_eq!(cfg.r, 0.01);
    }

    #[test]
    fn constraint_names_key() {
        match ExperimentConfig::parse("r = -1") {
            Err(ConfigError::Constraint { key, .. }) => assert_eq!(key, "r"),
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::parse("alpha0 = 0.01\nalpha1 = 0.02") {
            Err(ConfigError::Constraint { key, .. }) => assert_eq!(key, "alpha0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_and_unknown_keys() {
        assert!(matches!(
            ExperimentConfig::parse("r = 0.01\nr = 0.02"),
            Err(ConfigError::Duplicate { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("\nradius = 1"),
            Err(ConfigError::Unknown { line: 2, .. })
        ));
    }

    #[test]
    fn parse_errors_carry_line() {
        assert!(matches!(
            ExperimentConfig::parse("r = 0.01\njunk"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("f = fast"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(matches!(ExperimentConfig::parse("f ="), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("n", "5").unwrap();
        cfg.set("lag", "0.25").unwrap();
        cfg.set("T2", "inf").unwrap();
        cfg.set("seed", "99").unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.to_conf_string()).unwrap(), cfg);
        assert_eq!(
            ExperimentConfig::parse(&ExperimentConfig::default().to_conf_string()).unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn shipped_default_file_matches_defaults() {
        let text = include_str!("../configs/default.conf");
        assert_eq!(ExperimentConfig::parse(text).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn rotations() {
        let cfg = ExperimentConfig::default();
        assert!((cfg.phase_rotations().unwrap() - 7.2).abs() < 1e-12);
        assert_eq!(cfg.run_rotations().unwrap(), 7);
        let frac = ExperimentConfig::parse("n = 7.2").unwrap();
        assert_eq!(frac.phase_rotations().unwrap(), 7.2);
        assert_eq!(frac.run_rotations().unwrap_err().exit_code(), 3);
        let inf = ExperimentConfig::parse("T2 = inf").unwrap();
        assert!(inf.phase_rotations().is_err());
    }

    #[test]
    fn auto_lag_is_quadrature() {
        let cfg = ExperimentConfig::default();
        let phi = cfg.run_phase().unwrap();
        let lag = cfg.resolved_lag().unwrap();
        assert!(((phi - lag).sin().abs() - 1.0).abs() < 1e-12);
        let fixed = ExperimentConfig::parse("lag = 0.5").unwrap();
        assert_eq!(fixed.resolved_lag().unwrap(), 0.5);
    }
}
