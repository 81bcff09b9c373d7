//! Experiment configuration, read from JSON and overridable from the CLI.

use std::path::{Path, PathBuf};

use improper_core::oracle::GridSpec;
use improper_core::par::Execution;
use improper_core::signal_model::ComplexRepr;
use improper_core::{Complex64, JointOptions, RateProfile, RateUnit, SeparateOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{named_channel, ChannelName};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Region,
    Ratio,
    Maxmin,
    Table,
}

/// Where the channel realizations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum InstanceSource {
    /// One of the built-in channels.
    Named { name: ChannelName },
    /// Gains given row by row, `h[k][j]` from transmitter `j` to receiver `k`.
    Literal { h: [[ComplexRepr; 2]; 2] },
    /// Independent CSCG draws, stream `i` of `seed` for channel `i`.
    Ensemble {
        seed: u64,
        count: usize,
        var_direct: f64,
        var_cross: f64,
    },
}

impl InstanceSource {
    /// Gains of a single-channel source.
    pub fn literal_gains(&self) -> Option<[[Complex64; 2]; 2]> {
        match self {
            InstanceSource::Named { name } => Some(named_channel(*name)),
            InstanceSource::Literal { h } => Some(h.map(|row| row.map(Complex64::from))),
            InstanceSource::Ensemble { .. } => None,
        }
    }
}

/// Rate profiles to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileSpec {
    /// `alpha_1 = i / (n + 1)` for `i = 1..=n`.
    Sweep(usize),
    List(Vec<RateProfile>),
}

impl ProfileSpec {
    pub fn profiles(&self) -> Vec<RateProfile> {
        match self {
            ProfileSpec::Sweep(n) => RateProfile::sweep(*n),
            ProfileSpec::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Randomization trials of the joint method.
    pub trials: usize,
    /// Randomization seed of the joint method.
    pub seed: u64,
    /// Bisection tolerance in nats.
    pub tol: f64,
    pub grid: GridSpec,
    pub exec: Execution,
    /// Whether region sweeps also run the grid oracle.
    pub oracle: bool,
    /// Product cuts in the joint relaxation.
    pub product_cuts: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let j = JointOptions::default();
        SolverConfig {
            trials: j.trials,
            seed: j.seed,
            tol: j.tol,
            grid: GridSpec::default(),
            exec: Execution::default(),
            oracle: true,
            product_cuts: j.product_cuts,
        }
    }
}

impl SolverConfig {
    pub fn joint(&self) -> JointOptions {
        JointOptions {
            trials: self.trials,
            seed: self.seed,
            tol: self.tol,
            exec: self.exec,
            product_cuts: self.product_cuts,
        }
    }

    pub fn separate(&self) -> SeparateOptions {
        SeparateOptions {
            tol: self.tol,
            exec: self.exec,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub source: InstanceSource,
    /// SNR values `P / sigma^2` in dB; the noise power is fixed at `1`.
    #[serde(default = "default_snr")]
    pub snr_db: Vec<f64>,
    #[serde(default = "default_profiles")]
    pub profiles: ProfileSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_units")]
    pub units: RateUnit,
    /// Largest tolerated fraction of failed rows before exiting with status 3.
    #[serde(default = "default_failure_threshold")]
    pub failure_threshold: f64,
}

fn default_snr() -> Vec<f64> {
    vec![0.0]
}

fn default_profiles() -> ProfileSpec {
    ProfileSpec::Sweep(99)
}

fn default_units() -> RateUnit {
    RateUnit::Bits
}

fn default_failure_threshold() -> f64 {
    0.05
}

/// `-10:5:40` dB.
pub fn maxmin_snr_grid() -> Vec<f64> {
    (0..11).map(|i| -10.0 + 5.0 * i as f64).collect()
}

impl ExperimentConfig {
    /// Defaults of each experiment kind.
    pub fn preset(kind: ExperimentKind) -> Self {
        let (source, snr_db, profiles) = match kind {
            ExperimentKind::Region => (
                InstanceSource::Named {
                    name: ChannelName::H1,
                },
                vec![0.0],
                ProfileSpec::Sweep(99),
            ),
            ExperimentKind::Ratio => (
                InstanceSource::Ensemble {
                    seed: 1,
                    count: 500,
                    var_direct: 1.0,
                    var_cross: 1.0,
                },
                vec![0.0],
                ProfileSpec::List(vec![RateProfile::symmetric()]),
            ),
            ExperimentKind::Maxmin => (
                InstanceSource::Ensemble {
                    seed: 2,
                    count: 500,
                    var_direct: 1.0,
                    var_cross: 0.2,
                },
                maxmin_snr_grid(),
                ProfileSpec::List(vec![RateProfile::symmetric()]),
            ),
            ExperimentKind::Table => (
                InstanceSource::Named {
                    name: ChannelName::Table,
                },
                vec![10.0],
                ProfileSpec::List(vec![crate::experiments::table_profile()]),
            ),
        };
        ExperimentConfig {
            kind,
            source,
            snr_db,
            profiles,
            solver: SolverConfig::default(),
            output: None,
            units: RateUnit::Bits,
            failure_threshold: default_failure_threshold(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db must be a nonempty list of finite values".into());
        }
        if let InstanceSource::Ensemble {
            count,
            var_direct,
            var_cross,
            ..
        } = self.source
        {
            if count == 0 {
                return bad("ensemble count must be positive".into());
            }
            if !(var_direct >= 0.0 && var_cross >= 0.0) {
                return bad(format!(
                    "variances must be nonnegative, got {var_direct}, {var_cross}"
                ));
            }
        }
        if let ProfileSpec::Sweep(0) = self.profiles {
            return bad("profile sweep needs at least one point".into());
        }
        if self.solver.trials == 0 {
            return bad("trials must be positive".into());
        }
        if !(self.solver.tol > 0.0) {
            return bad(format!(
                "tolerance must be positive, got {}",
                self.solver.tol
            ));
        }
        self.solver
            .grid
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.failure_threshold) {
            return bad(format!(
                "failure_threshold must lie in [0, 1], got {}",
                self.failure_threshold
            ));
        }
        if self.kind == ExperimentKind::Table && self.source.literal_gains().is_none() {
            return bad("table experiment needs a single channel".into());
        }
        if self.kind == ExperimentKind::Region && self.source.literal_gains().is_none() {
            return bad("region experiment needs a single channel".into());
        }
        Ok(())
    }

    /// Single-line JSON echo written into output headers.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Transmit power for `snr_db` with unit noise.
pub fn power_from_snr(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}
