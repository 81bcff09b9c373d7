//! Reference points: brute-force grid search over SISO strategies, TDMA, and
//! a max-min dispatcher over every method.
//!
//! The grid fixes `Ct_1` real and nonnegative, so a strategy pair is
//! `(C_1, C_2, mu_1, mu_2, theta)` with `Ct_1 = mu_1 C_1` and
//! `Ct_2 = mu_2 C_2 e^{i theta}`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::joint::{joint_pareto_point, JointOptions};
use crate::par::{map_range, Execution};
use crate::profile::{OracleDiagnostics, ParetoPoint, PointDiagnostics, RateProfile};
use crate::rate::siso_rates;
use crate::separate::{improper_pareto_point, proper_pareto_point, SeparateOptions};
use crate::signal_model::{SisoIcInstance, SisoStrategy};
use crate::wrap_phase;

/// Local refinement evaluates this many points per axis around the incumbent.
const REFINE_POINTS: usize = 5;
/// Each refinement round shrinks every axis range by this factor.
const REFINE_SHRINK: f64 = 4.0;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid axis `{axis}` needs at least 2 points, got {got}")]
    TooCoarse { axis: &'static str, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_power: usize,
    pub n_mag: usize,
    pub n_theta: usize,
    pub refine: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_power: 21,
            n_mag: 11,
            n_theta: 72,
            refine: 3,
        }
    }
}

impl GridSpec {
    pub fn new(
        n_power: usize,
        n_mag: usize,
        n_theta: usize,
        refine: usize,
    ) -> Result<Self, GridError> {
        let spec = GridSpec {
            n_power,
            n_mag,
            n_theta,
            refine,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        for (axis, got) in [
            ("n_power", self.n_power),
            ("n_mag", self.n_mag),
            ("n_theta", self.n_theta),
        ] {
            if got < 2 {
                return Err(GridError::TooCoarse { axis, got });
            }
        }
        Ok(())
    }

    /// Number of coarse-grid evaluations of the full search.
    pub fn coarse_size(&self) -> usize {
        self.n_power * self.n_power * self.n_mag * self.n_mag * self.n_theta
    }

    /// Total evaluations including refinement rounds.
    pub fn total_size(&self) -> usize {
        self.coarse_size() + self.refine * REFINE_POINTS.pow(5)
    }
}

/// Which strategies the grid explores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchSpace {
    #[default]
    Improper,
    /// Pseudo-covariances fixed at zero.
    ProperOnly,
}

/// `(C_1, C_2, mu_1, mu_2, theta)`.
type GridPoint = [f64; 5];

fn strategies_at(p: &GridPoint) -> [SisoStrategy; 2] {
    [
        SisoStrategy::new(p[0], Complex64::new(p[2] * p[0], 0.0)),
        SisoStrategy::new(p[1], Complex64::from_polar(p[3] * p[1], p[4])),
    ]
}

fn objective_at(instance: &SisoIcInstance, profile: RateProfile, p: &GridPoint) -> f64 {
    profile.objective(siso_rates(instance, &strategies_at(p)))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// `n` phases evenly covering `(-pi, pi]`.
fn phase_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| -PI + TAU * i as f64 / n as f64).collect()
}

/// Best point of a product grid, scanned in lexicographic index order with
/// slices of the first axis in parallel. Ties keep the smallest index.
fn scan(
    instance: &SisoIcInstance,
    profile: RateProfile,
    axes: &[Vec<f64>; 5],
    exec: Execution,
) -> (GridPoint, f64, usize) {
    let slices = map_range(exec, axes[0].len(), |i| {
        let mut best: Option<(GridPoint, f64)> = None;
        for &c2 in &axes[1] {
            for &m1 in &axes[2] {
                for &m2 in &axes[3] {
                    for &th in &axes[4] {
                        let p = [axes[0][i], c2, m1, m2, th];
                        let v = objective_at(instance, profile, &p);
                        if best.is_none_or(|(_, bv)| v > bv) {
                            best = Some((p, v));
                        }
                    }
                }
            }
        }
        best
    });
    let count = axes.iter().map(Vec::len).product();
    let mut best: Option<(GridPoint, f64)> = None;
    for (p, v) in slices.into_iter().flatten() {
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((p, v));
        }
    }
    let (p, v) = best.expect("grid axes are nonempty");
    (p, v, count)
}

/// Brute-force maximizer of `min_k R_k / alpha_k` over the improper strategy grid.
pub fn grid_oracle(
    instance: &SisoIcInstance,
    profile: RateProfile,
    spec: &GridSpec,
    exec: Execution,
) -> ParetoPoint {
    grid_oracle_in(instance, profile, spec, SearchSpace::Improper, exec)
}

pub fn grid_oracle_in(
    instance: &SisoIcInstance,
    profile: RateProfile,
    spec: &GridSpec,
    space: SearchSpace,
    exec: Execution,
) -> ParetoPoint {
    let [p1, p2] = instance.powers();
    let proper = space == SearchSpace::ProperOnly;
    let (n_mag, n_theta) = if proper {
        (1, 1)
    } else {
        (spec.n_mag, spec.n_theta)
    };
    let axes = [
        linspace(0.0, p1, spec.n_power),
        linspace(0.0, p2, spec.n_power),
        linspace(0.0, 1.0, n_mag),
        linspace(0.0, 1.0, n_mag),
        if proper {
            vec![0.0]
        } else {
            phase_grid(n_theta)
        },
    ];
    let (mut best, mut value, mut evaluations) = scan(instance, profile, &axes, exec);

    // Half-widths of the refinement boxes; round zero spans one coarse cell.
    let mut half = [
        p1 / (spec.n_power - 1) as f64,
        p2 / (spec.n_power - 1) as f64,
        if proper {
            0.0
        } else {
            1.0 / (spec.n_mag - 1) as f64
        },
        if proper {
            0.0
        } else {
            1.0 / (spec.n_mag - 1) as f64
        },
        if proper {
            0.0
        } else {
            TAU / spec.n_theta as f64
        },
    ];
    let upper = [p1, p2, 1.0, 1.0, PI];
    for _ in 0..spec.refine {
        let axes: [Vec<f64>; 5] = std::array::from_fn(|a| {
            if half[a] == 0.0 {
                return vec![best[a]];
            }
            let mut pts: Vec<f64> = linspace(best[a] - half[a], best[a] + half[a], REFINE_POINTS)
                .into_iter()
                .map(|x| {
                    if a == 4 {
                        wrap_phase(x)
                    } else {
                        x.clamp(0.0, upper[a])
                    }
                })
                .collect();
            // the incumbent sits in the middle, keep it exact
            pts[REFINE_POINTS / 2] = best[a];
            pts
        });
        let (p, v, n) = scan(instance, profile, &axes, exec);
        evaluations += n;
        if v > value {
            best = p;
            value = v;
        }
        half = half.map(|h| h / REFINE_SHRINK);
    }

    ParetoPoint::evaluate(instance, profile, strategies_at(&best)).with_diagnostics(
        PointDiagnostics {
            oracle: Some(OracleDiagnostics {
                evaluations,
                refinements: spec.refine,
            }),
            ..Default::default()
        },
    )
}

/// Per-user TDMA rates (nats): each user alone for half the time at power `P_k`.
pub fn tdma_rates(instance: &SisoIcInstance) -> [f64; 2] {
    [0, 1].map(|k| 0.5 * (instance.gain_sq(k, k) * instance.power(k) / instance.noise()).ln_1p())
}

/// `min_k (1/2) ln(1 + |h_kk|^2 P_k / sigma^2)` in nats.
pub fn tdma_maxmin(instance: &SisoIcInstance) -> f64 {
    let r = tdma_rates(instance);
    r[0].min(r[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxMinMethod {
    Proper,
    Separate,
    Joint,
    Oracle,
    Tdma,
}

impl MaxMinMethod {
    pub const ALL: [MaxMinMethod; 5] = [
        MaxMinMethod::Proper,
        MaxMinMethod::Separate,
        MaxMinMethod::Joint,
        MaxMinMethod::Oracle,
        MaxMinMethod::Tdma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MaxMinMethod::Proper => "proper",
            MaxMinMethod::Separate => "separate",
            MaxMinMethod::Joint => "joint",
            MaxMinMethod::Oracle => "oracle",
            MaxMinMethod::Tdma => "tdma",
        }
    }
}

impl std::str::FromStr for MaxMinMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MaxMinMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// Solver settings shared by the max-min dispatcher.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MaxMinOptions {
    pub separate: SeparateOptions,
    pub joint: JointOptions,
    pub grid: GridSpec,
}

/// Max-min point of `method`, i.e. its Pareto point at `alpha = (1/2, 1/2)`.
///
/// The figure of merit is the smaller of the two rates. For TDMA the
/// strategies are proper at full power and the rates are the time-shared ones.
pub fn maxmin_point(
    instance: &SisoIcInstance,
    method: MaxMinMethod,
    opts: &MaxMinOptions,
) -> ParetoPoint {
    let profile = RateProfile::symmetric();
    match method {
        MaxMinMethod::Proper => {
            proper_pareto_point(instance, profile, opts.separate.tol).to_point(instance, profile)
        }
        MaxMinMethod::Separate => improper_pareto_point(instance, profile, &opts.separate),
        MaxMinMethod::Joint => joint_pareto_point(instance, profile, &opts.joint),
        MaxMinMethod::Oracle => grid_oracle(instance, profile, &opts.grid, opts.joint.exec),
        MaxMinMethod::Tdma => {
            let rates = tdma_rates(instance);
            ParetoPoint {
                profile,
                objective: profile.objective(rates),
                rates,
                strategies: instance.powers().map(SisoStrategy::proper),
                diagnostics: PointDiagnostics::default(),
            }
        }
    }
}

/// `min(R_1, R_2)` of a point, in nats.
pub fn min_rate(point: &ParetoPoint) -> f64 {
    point.rates[0].min(point.rates[1])
}
