//! Rate profiles and the Pareto points produced by the solvers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal_model::SisoStrategy;
use crate::{nats_to_bits, siso_rates, SisoIcInstance};

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("profile weights must be positive, got ({0}, {1})")]
    NonPositive(f64, f64),
    #[error("profile weights must sum to one, got {0}")]
    NotNormalized(f64),
}

/// Direction `alpha` of a ray from the origin of the rate region.
///
/// The Pareto point on that ray maximizes `R` subject to `R_k >= alpha_k R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct RateProfile {
    alpha: [f64; 2],
}

impl RateProfile {
    pub fn new(a1: f64, a2: f64) -> Result<Self, ProfileError> {
        if !(a1 > 0.0 && a2 > 0.0) {
            return Err(ProfileError::NonPositive(a1, a2));
        }
        if (a1 + a2 - 1.0).abs() > 1e-12 {
            return Err(ProfileError::NotNormalized(a1 + a2));
        }
        Ok(RateProfile { alpha: [a1, a2] })
    }

    /// `(alpha, 1 - alpha)`.
    pub fn from_first(a1: f64) -> Result<Self, ProfileError> {
        Self::new(a1, 1.0 - a1)
    }

    /// The equal-weight profile `(1/2, 1/2)`; its Pareto point is the max-min point.
    pub fn symmetric() -> Self {
        RateProfile { alpha: [0.5, 0.5] }
    }

    /// `n` profiles `alpha_1 = i / (n + 1)` for `i = 1..=n`.
    pub fn sweep(n: usize) -> Vec<Self> {
        (1..=n)
            .map(|i| {
                let a = i as f64 / (n + 1) as f64;
                RateProfile {
                    alpha: [a, 1.0 - a],
                }
            })
            .collect()
    }

    pub fn alpha(&self) -> [f64; 2] {
        self.alpha
    }

    pub fn get(&self, k: usize) -> f64 {
        self.alpha[k]
    }

    /// `min_k R_k / alpha_k`, the objective achieved by a rate pair.
    pub fn objective(&self, rates: [f64; 2]) -> f64 {
        (rates[0] / self.alpha[0]).min(rates[1] / self.alpha[1])
    }
}

impl TryFrom<[f64; 2]> for RateProfile {
    type Error = ProfileError;
    fn try_from(a: [f64; 2]) -> Result<Self, Self::Error> {
        RateProfile::new(a[0], a[1])
    }
}

impl From<RateProfile> for [f64; 2] {
    fn from(p: RateProfile) -> Self {
        p.alpha
    }
}

/// Bisection and relaxation outcome of the joint method.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SdrDiagnostics {
    /// Largest probe found feasible (nats).
    pub r_sdr_lower: f64,
    /// Smallest probe found infeasible, an upper bound on the relaxation (nats).
    pub r_sdr_upper: f64,
    /// Whether both relaxed matrices at the final feasible probe are rank one.
    pub rank_one: bool,
    pub trials: usize,
    pub seed: u64,
    /// Index of the winning randomization trial; `0` is the principal component.
    pub best_trial: usize,
    pub bisection_steps: usize,
    /// Probes where the barrier solver could not decide.
    pub undecided: usize,
}

/// Outcome of the two-step separate method.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeparateDiagnostics {
    /// Optimal profile-scaled rate with proper signaling (nats).
    pub r_proper: f64,
    /// Candidate phase of the second user's pseudo-covariance that was used.
    pub theta: Option<f64>,
    pub candidates: usize,
    pub bisection_steps: usize,
}

/// Outcome of the grid oracle.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleDiagnostics {
    pub evaluations: usize,
    pub refinements: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sdr: Option<SdrDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub separate: Option<SeparateDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle: Option<OracleDiagnostics>,
}

/// A point of the achievable rate region together with its strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub profile: RateProfile,
    /// `min_k R_k / alpha_k` in nats.
    pub objective: f64,
    /// Per-user rates in nats.
    pub rates: [f64; 2],
    pub strategies: [SisoStrategy; 2],
    #[serde(default)]
    pub diagnostics: PointDiagnostics,
}

impl ParetoPoint {
    /// Evaluates `strategies` on `instance` and fills rates and objective.
    pub fn evaluate(
        instance: &SisoIcInstance,
        profile: RateProfile,
        strategies: [SisoStrategy; 2],
    ) -> Self {
        let rates = siso_rates(instance, &strategies);
        ParetoPoint {
            profile,
            objective: profile.objective(rates),
            rates,
            strategies,
            diagnostics: PointDiagnostics::default(),
        }
    }

    pub fn with_diagnostics(mut self, diagnostics: PointDiagnostics) -> Self {
        self.diagnostics = diagnostics;
        self
    }

    /// Sum rate in nats.
    pub fn sum_rate(&self) -> f64 {
        self.rates[0] + self.rates[1]
    }

    pub fn rates_bits(&self) -> [f64; 2] {
        self.rates.map(nats_to_bits)
    }

    pub fn sum_rate_bits(&self) -> f64 {
        nats_to_bits(self.sum_rate())
    }
}
