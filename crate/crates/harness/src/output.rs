//! CSV and JSON writers. Every CSV starts with `#` lines carrying the
//! library version, the config echo, the seeds and the unit.

use std::io::Write;

use serde::Serialize;

use crate::config::{ExperimentConfig, InstanceSource};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn header_lines(cfg: &ExperimentConfig) -> Vec<String> {
    let mut seeds = format!("trials_seed={}", cfg.solver.seed);
    if let InstanceSource::Ensemble { seed, .. } = cfg.source {
        seeds = format!("channel_seed={seed} {seeds}");
    }
    vec![
        format!("# improper-ic {VERSION}"),
        format!("# config: {}", cfg.echo()),
        format!("# seeds: {seeds}"),
        format!("# units: {}", cfg.units.as_str()),
    ]
}

/// Writes the header lines followed by `rows` as CSV.
pub fn write_csv<W: Write, R: Serialize>(
    mut out: W,
    cfg: &ExperimentConfig,
    rows: &[R],
) -> std::io::Result<()> {
    for line in header_lines(cfg) {
        writeln!(out, "{line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(std::io::Error::other)?;
    }
    w.flush()
}

/// Reads rows back, skipping `#` lines.
pub fn read_csv<R: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<R>, csv::Error> {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    csv::Reader::from_reader(body.as_bytes())
        .deserialize()
        .collect()
}

/// Pretty JSON with a `meta` block next to the payload.
pub fn write_json<W: Write, T: Serialize>(
    mut out: W,
    cfg: &ExperimentConfig,
    payload: &T,
) -> std::io::Result<()> {
    let doc = serde_json::json!({
        "meta": {
            "version": VERSION,
            "config": cfg,
            "units": cfg.units.as_str(),
        },
        "result": payload,
    });
    serde_json::to_writer_pretty(&mut out, &doc).map_err(std::io::Error::other)?;
    writeln!(out)
}

/// Column documentation of every CSV output.
pub const SCHEMA: &str = "\
region (one row per SNR and profile; rates in the configured unit)
  snr_db              P / sigma^2 in dB, sigma^2 = 1
  alpha1, alpha2      rate profile
  proper_r1, _r2      Pareto point with proper signaling
  separate_r1, _r2    two-step improper method
  joint_r1, _r2       relaxation plus randomization
  oracle_r1, _r2      grid search (empty when disabled)
  separate_theta      phase of the second pseudo-covariance, radians
  sdr_upper           upper bound on the relaxed objective
  sdr_rank_one        relaxed solution was rank one
  sdr_best_trial      winning randomization trial, 0 = principal component
  sdr_undecided       bisection probes the SDP solver could not decide
  oracle_evaluations  rate evaluations of the grid search
  error               empty, or `method: message` for failed methods

ratio (one row per channel, failed channels omitted and logged)
  index               channel index in the ensemble
  snr_db
  oracle              grid-search objective min_k R_k / alpha_k
  joint               objective of the randomized relaxation
  sdr_upper           relaxation bound
  ratio               oracle / joint
  best_trial          winning randomization trial
  bound_ok            joint <= sdr_upper + 1e-6 nats

ratio summary (second CSV, `--summary`)
  requested, failures, mean, min, p05, p50, p95, max   of the ratio column

maxmin (one row per SNR; ensemble averages of min(R_1, R_2))
  snr_db, count, failures
  proper, separate, joint, oracle, tdma   empty when the method was not run
";
