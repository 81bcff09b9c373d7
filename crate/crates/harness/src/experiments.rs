//! The experiment drivers. Every driver returns plain rows; writing them is
//! left to [`crate::output`].

use std::panic::{catch_unwind, AssertUnwindSafe};

use improper_core::oracle::{
    grid_oracle, maxmin_point, min_rate, tdma_maxmin, MaxMinMethod, MaxMinOptions,
};
use improper_core::par::{map_range, Execution};
use improper_core::separate::proper_pareto_point;
use improper_core::signal_model::{complex_to_real, real_to_complex, ComplexRepr};
use improper_core::{
    improper_pareto_point, joint_pareto_point, nats_to_bits, ParetoPoint, RateProfile, RateUnit,
    SisoIcInstance, SisoStrategy,
};
use serde::{Deserialize, Serialize};

use crate::channels::{at_snr, channel_gains};
use crate::config::{ExperimentConfig, InstanceSource, SolverConfig};

/// Sum rate (bits) of the fixed reference rate pair of the sum-rate case.
pub const REFERENCE_SUM_BITS: f64 = 4.6775;
/// First-user rate (bits) of that reference pair.
pub const REFERENCE_FIRST_BITS: f64 = 2.8673;

/// Profile along the reference rate pair, rounded to four digits.
pub fn table_profile() -> RateProfile {
    let a = (REFERENCE_FIRST_BITS / REFERENCE_SUM_BITS * 1e4).round() / 1e4;
    RateProfile::from_first(a).expect("ratio lies in (0, 1)")
}

/// Runs `f`, turning a panic or a non-finite objective into an error message.
fn guarded(f: impl FnOnce() -> ParetoPoint) -> Result<ParetoPoint, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(p) if p.objective.is_finite() && p.rates.iter().all(|r| r.is_finite()) => Ok(p),
        Ok(p) => Err(format!("non-finite result {:?}", p.rates)),
        Err(e) => Err(e
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| e.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "solver panicked".into())),
    }
}

/// Solver settings for work running inside an already parallel loop.
fn inner(solver: &SolverConfig) -> SolverConfig {
    SolverConfig {
        exec: Execution::Sequential,
        ..*solver
    }
}

fn ensemble(cfg: &ExperimentConfig) -> (u64, usize, f64, f64) {
    match cfg.source {
        InstanceSource::Ensemble {
            seed,
            count,
            var_direct,
            var_cross,
        } => (seed, count, var_direct, var_cross),
        _ => (0, 1, 0.0, 0.0),
    }
}

/// Channel `i` of the configured source (the literal channel for `i = 0`).
fn gains_of(cfg: &ExperimentConfig, i: usize) -> [[improper_core::Complex64; 2]; 2] {
    match cfg.source.literal_gains() {
        Some(g) => g,
        None => {
            let (seed, _, vd, vc) = ensemble(cfg);
            channel_gains(seed, i, vd, vc)
        }
    }
}

fn count_of(cfg: &ExperimentConfig) -> usize {
    match cfg.source.literal_gains() {
        Some(_) => 1,
        None => ensemble(cfg).1,
    }
}

// ---------------------------------------------------------------------------
// Rate region sweep
// ---------------------------------------------------------------------------

/// One profile of a region sweep. Rates are in the configured unit; a
/// method that failed leaves its columns empty and fills `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub snr_db: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub proper_r1: Option<f64>,
    pub proper_r2: Option<f64>,
    pub separate_r1: Option<f64>,
    pub separate_r2: Option<f64>,
    pub joint_r1: Option<f64>,
    pub joint_r2: Option<f64>,
    pub oracle_r1: Option<f64>,
    pub oracle_r2: Option<f64>,
    pub separate_theta: Option<f64>,
    pub sdr_upper: Option<f64>,
    pub sdr_rank_one: Option<bool>,
    pub sdr_best_trial: Option<usize>,
    pub sdr_undecided: Option<usize>,
    pub oracle_evaluations: Option<usize>,
    pub error: String,
}

impl RegionRow {
    pub fn failed(&self) -> bool {
        !self.error.is_empty()
    }
}

pub fn run_region(cfg: &ExperimentConfig) -> Vec<RegionRow> {
    let gains = cfg
        .source
        .literal_gains()
        .expect("validated: single channel");
    let profiles = cfg.profiles.profiles();
    let solver = inner(&cfg.solver);
    let unit = cfg.units;
    let mut rows = Vec::new();
    for &snr in &cfg.snr_db {
        let inst = at_snr(gains, snr);
        rows.extend(map_range(cfg.solver.exec, profiles.len(), |i| {
            region_row(&inst, snr, profiles[i], &solver, unit)
        }));
    }
    rows
}

fn region_row(
    inst: &SisoIcInstance,
    snr_db: f64,
    profile: RateProfile,
    solver: &SolverConfig,
    unit: RateUnit,
) -> RegionRow {
    let mut errors = Vec::new();
    let mut run = |name: &str, f: &dyn Fn() -> ParetoPoint| match guarded(f) {
        Ok(p) => Some(p),
        Err(e) => {
            errors.push(format!("{name}: {e}"));
            None
        }
    };
    let proper = run("proper", &|| {
        proper_pareto_point(inst, profile, solver.tol).to_point(inst, profile)
    });
    let separate = run("separate", &|| {
        improper_pareto_point(inst, profile, &solver.separate())
    });
    let joint = run("joint", &|| {
        joint_pareto_point(inst, profile, &solver.joint())
    });
    let oracle = if solver.oracle {
        run("oracle", &|| {
            grid_oracle(inst, profile, &solver.grid, solver.exec)
        })
    } else {
        None
    };
    let r = |p: &Option<ParetoPoint>, k: usize| p.as_ref().map(|p| unit.from_nats(p.rates[k]));
    let sdr = joint.as_ref().and_then(|p| p.diagnostics.sdr.clone());
    RegionRow {
        snr_db,
        alpha1: profile.get(0),
        alpha2: profile.get(1),
        proper_r1: r(&proper, 0),
        proper_r2: r(&proper, 1),
        separate_r1: r(&separate, 0),
        separate_r2: r(&separate, 1),
        joint_r1: r(&joint, 0),
        joint_r2: r(&joint, 1),
        oracle_r1: r(&oracle, 0),
        oracle_r2: r(&oracle, 1),
        separate_theta: separate
            .as_ref()
            .and_then(|p| p.diagnostics.separate.as_ref()?.theta),
        sdr_upper: sdr.as_ref().map(|d| unit.from_nats(d.r_sdr_upper)),
        sdr_rank_one: sdr.as_ref().map(|d| d.rank_one),
        sdr_best_trial: sdr.as_ref().map(|d| d.best_trial),
        sdr_undecided: sdr.as_ref().map(|d| d.undecided),
        oracle_evaluations: oracle
            .as_ref()
            .and_then(|p| p.diagnostics.oracle.as_ref().map(|d| d.evaluations)),
        error: errors.join("; "),
    }
}

// ---------------------------------------------------------------------------
// Approximation ratio of the relaxation
// ---------------------------------------------------------------------------

/// Objectives in the configured unit; `ratio = oracle / joint`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub index: usize,
    pub snr_db: f64,
    pub oracle: f64,
    pub joint: f64,
    pub sdr_upper: f64,
    pub ratio: f64,
    pub best_trial: usize,
    /// Joint objective does not exceed the relaxation bound.
    pub bound_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub requested: usize,
    pub failures: usize,
    pub mean: f64,
    pub min: f64,
    pub p05: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioOutcome {
    pub rows: Vec<RatioRow>,
    pub summary: RatioSummary,
    pub failures: Vec<(usize, String)>,
}

/// Nearest-rank percentile of sorted data.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

pub fn run_ratio(cfg: &ExperimentConfig) -> RatioOutcome {
    let snr = cfg.snr_db[0];
    let profile = cfg
        .profiles
        .profiles()
        .first()
        .copied()
        .unwrap_or_else(RateProfile::symmetric);
    let solver = inner(&cfg.solver);
    let unit = cfg.units;
    let n = count_of(cfg);
    let results = map_range(cfg.solver.exec, n, |i| {
        let inst = at_snr(gains_of(cfg, i), snr);
        let joint = guarded(|| joint_pareto_point(&inst, profile, &solver.joint()))?;
        let oracle = guarded(|| grid_oracle(&inst, profile, &solver.grid, Execution::Sequential))?;
        let sdr = joint.diagnostics.sdr.clone().unwrap_or_default();
        if !(joint.objective > 0.0) {
            return Err("joint objective is zero".to_string());
        }
        Ok(RatioRow {
            index: i,
            snr_db: snr,
            oracle: unit.from_nats(oracle.objective),
            joint: unit.from_nats(joint.objective),
            sdr_upper: unit.from_nats(sdr.r_sdr_upper),
            ratio: oracle.objective / joint.objective,
            best_trial: sdr.best_trial,
            bound_ok: joint.objective <= sdr.r_sdr_upper + 1e-6,
        })
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                log::warn!("channel {i}: {e}");
                failures.push((i, e));
            }
        }
    }
    let mut sorted: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    sorted.sort_by(f64::total_cmp);
    let summary = RatioSummary {
        requested: n,
        failures: failures.len(),
        mean: sorted.iter().sum::<f64>() / sorted.len().max(1) as f64,
        min: sorted.first().copied().unwrap_or(f64::NAN),
        p05: percentile(&sorted, 5.0),
        p50: percentile(&sorted, 50.0),
        p95: percentile(&sorted, 95.0),
        max: sorted.last().copied().unwrap_or(f64::NAN),
    };
    RatioOutcome {
        rows,
        summary,
        failures,
    }
}

// ---------------------------------------------------------------------------
// Max-min rate versus SNR
// ---------------------------------------------------------------------------

/// Max-min rate (the smaller user rate) of one channel for every method,
/// in the configured unit. `NaN` marks a failed method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxminInstanceRow {
    pub snr_db: f64,
    pub index: usize,
    pub values: Vec<(MaxMinMethod, f64)>,
}

/// Ensemble averages at one SNR; a method's average skips its failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxminRow {
    pub snr_db: f64,
    pub count: usize,
    pub failures: usize,
    pub proper: Option<f64>,
    pub separate: Option<f64>,
    pub joint: Option<f64>,
    pub oracle: Option<f64>,
    pub tdma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxminOutcome {
    pub rows: Vec<MaxminRow>,
    pub instances: Vec<MaxminInstanceRow>,
}

pub fn run_maxmin(cfg: &ExperimentConfig, methods: &[MaxMinMethod]) -> MaxminOutcome {
    let solver = inner(&cfg.solver);
    let opts = MaxMinOptions {
        separate: solver.separate(),
        joint: solver.joint(),
        grid: solver.grid,
    };
    let unit = cfg.units;
    let n = count_of(cfg);
    let mut rows = Vec::new();
    let mut instances = Vec::new();
    for &snr in &cfg.snr_db {
        let per = map_range(cfg.solver.exec, n, |i| {
            let inst = at_snr(gains_of(cfg, i), snr);
            let values = methods
                .iter()
                .map(|&m| {
                    let v = match m {
                        MaxMinMethod::Tdma => Ok(tdma_maxmin(&inst)),
                        _ => guarded(|| maxmin_point(&inst, m, &opts)).map(|p| min_rate(&p)),
                    };
                    let v = v.unwrap_or_else(|e| {
                        log::warn!("snr {snr} channel {i} {}: {e}", m.as_str());
                        f64::NAN
                    });
                    (m, unit.from_nats(v))
                })
                .collect();
            MaxminInstanceRow {
                snr_db: snr,
                index: i,
                values,
            }
        });
        let avg = |m: MaxMinMethod| -> Option<f64> {
            let v: Vec<f64> = per
                .iter()
                .filter_map(|r| r.values.iter().find(|(k, _)| *k == m).map(|(_, v)| *v))
                .collect();
            if v.is_empty() {
                return None;
            }
            let ok: Vec<f64> = v.into_iter().filter(|x| x.is_finite()).collect();
            Some(ok.iter().sum::<f64>() / ok.len().max(1) as f64)
        };
        let failures = per
            .iter()
            .filter(|r| r.values.iter().any(|(_, v)| !v.is_finite()))
            .count();
        rows.push(MaxminRow {
            snr_db: snr,
            count: n,
            failures,
            proper: avg(MaxMinMethod::Proper),
            separate: avg(MaxMinMethod::Separate),
            joint: avg(MaxMinMethod::Joint),
            oracle: avg(MaxMinMethod::Oracle),
            tdma: avg(MaxMinMethod::Tdma),
        });
        instances.extend(per);
    }
    MaxminOutcome { rows, instances }
}

// ---------------------------------------------------------------------------
// Sum-rate case
// ---------------------------------------------------------------------------

/// A strategy in both representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyForms {
    pub c: f64,
    pub ct: ComplexRepr,
    pub ct_magnitude: f64,
    pub ct_phase: f64,
    /// Covariance of `[Re x; Im x]`, row-major.
    pub q: [[f64; 2]; 2],
    /// Largest entry error of the complex -> real -> complex roundtrip.
    pub roundtrip_error: f64,
}

impl From<&SisoStrategy> for StrategyForms {
    fn from(s: &SisoStrategy) -> Self {
        let q = complex_to_real(s);
        let back = real_to_complex(&q).expect("composite of a strategy is symmetric");
        StrategyForms {
            c: s.power,
            ct: s.pseudo.into(),
            ct_magnitude: s.pseudo.norm(),
            ct_phase: s.pseudo.arg(),
            q: [[q[(0, 0)], q[(0, 1)]], [q[(1, 0)], q[(1, 1)]]],
            roundtrip_error: (back.power - s.power)
                .abs()
                .max((back.pseudo - s.pseudo).norm()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    /// Per-user rates in bits.
    pub rates: [f64; 2],
    pub sum: f64,
    /// Sum-rate gain over the reference pair, in percent.
    pub improvement_pct: f64,
    pub strategies: [StrategyForms; 2],
    pub point: ParetoPoint,
}

impl MethodReport {
    fn new(p: ParetoPoint) -> Self {
        let sum = p.sum_rate_bits();
        MethodReport {
            rates: p.rates_bits(),
            sum,
            improvement_pct: 100.0 * (sum / REFERENCE_SUM_BITS - 1.0),
            strategies: [
                StrategyForms::from(&p.strategies[0]),
                StrategyForms::from(&p.strategies[1]),
            ],
            point: p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub snr_db: f64,
    pub profile: RateProfile,
    pub reference_sum: f64,
    pub proper: MethodReport,
    pub separate: MethodReport,
    pub joint: MethodReport,
    /// Joint sum is at least the separate sum minus 0.01 bits.
    pub joint_not_worse: bool,
    pub notes: Vec<String>,
}

pub fn run_table_case(cfg: &ExperimentConfig) -> TableReport {
    let gains = cfg
        .source
        .literal_gains()
        .expect("validated: single channel");
    let snr = cfg.snr_db[0];
    let inst = at_snr(gains, snr);
    let profile = cfg
        .profiles
        .profiles()
        .first()
        .copied()
        .unwrap_or_else(table_profile);
    let solver = &cfg.solver;
    let proper =
        MethodReport::new(proper_pareto_point(&inst, profile, solver.tol).to_point(&inst, profile));
    let separate = MethodReport::new(improper_pareto_point(&inst, profile, &solver.separate()));
    let joint = MethodReport::new(joint_pareto_point(&inst, profile, &solver.joint()));
    let joint_not_worse = joint.sum >= separate.sum - 0.01;
    let mut notes = Vec::new();
    if !joint_not_worse {
        let sdr = joint.point.diagnostics.sdr.clone().unwrap_or_default();
        notes.push(format!(
            "joint sum {:.4} below separate sum {:.4}; relaxation bound {:.4} bits, rank one: {}, best trial {}",
            joint.sum,
            separate.sum,
            nats_to_bits(sdr.r_sdr_upper),
            sdr.rank_one,
            sdr.best_trial
        ));
    }
    TableReport {
        snr_db: snr,
        profile,
        reference_sum: REFERENCE_SUM_BITS,
        proper,
        separate,
        joint,
        joint_not_worse,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentKind, ProfileSpec};
    use improper_core::oracle::GridSpec;

    #[test]
    fn table_profile_from_reference_pair() {
        let p = table_profile();
        assert!((p.get(0) - 0.6130).abs() < 1e-12);
        assert!((p.get(1) - 0.3870).abs() < 1e-12);
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(percentile(&v, 5.0), 1.0);
        assert_eq!(percentile(&v, 50.0), 10.0);
        assert_eq!(percentile(&v, 100.0), 20.0);
        assert!(percentile(&[], 50.0).is_nan());
    }

    #[test]
    fn guarded_catches_panics() {
        let e = guarded(|| panic!("boom")).unwrap_err();
        assert_eq!(e, "boom");
    }

    fn quick(kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::preset(kind);
        c.solver.trials = 50;
        c.solver.grid = GridSpec::new(7, 4, 12, 1).unwrap();
        c
    }

    #[test]
    fn region_rows_cover_profiles() {
        let mut c = quick(ExperimentKind::Region);
        c.profiles = ProfileSpec::Sweep(3);
        let rows = run_region(&c);
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!(!r.failed(), "{}", r.error);
            assert!(r.separate_r1.unwrap() >= 0.0);
        }
    }

    #[test]
    fn ratio_rows_are_in_index_order() {
        let mut c = quick(ExperimentKind::Ratio);
        c.source = InstanceSource::Ensemble {
            seed: 4,
            count: 6,
            var_direct: 1.0,
            var_cross: 1.0,
        };
        let out = run_ratio(&c);
        assert_eq!(out.rows.len() + out.failures.len(), 6);
        assert!(out.rows.windows(2).all(|w| w[0].index < w[1].index));
        assert!(out.rows.iter().all(|r| r.bound_ok));
    }

    #[test]
    fn maxmin_tdma_column_is_exact() {
        let mut c = quick(ExperimentKind::Maxmin);
        c.source = InstanceSource::Ensemble {
            seed: 4,
            count: 4,
            var_direct: 1.0,
            var_cross: 0.2,
        };
        c.snr_db = vec![10.0];
        let out = run_maxmin(&c, &[MaxMinMethod::Proper, MaxMinMethod::Tdma]);
        for r in &out.instances {
            let inst = at_snr(gains_of(&c, r.index), 10.0);
            let t = r
                .values
                .iter()
                .find(|(m, _)| *m == MaxMinMethod::Tdma)
                .unwrap()
                .1;
            assert_eq!(t, nats_to_bits(tdma_maxmin(&inst)));
        }
        assert!(out.rows[0].separate.is_none());
    }
}
