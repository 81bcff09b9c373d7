use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use improper_core::oracle::{GridSpec, MaxMinMethod};
use improper_core::par::{stream_rng, Execution};
use improper_core::signal_model::{complex_to_real, real_to_complex};
use improper_core::widely_linear::{augmented_sqrt, sample_improper};
use improper_core::{Complex64, RateUnit, SisoStrategy};
use improper_harness::channels::channel_gains;
use improper_harness::config::{ExperimentConfig, ExperimentKind, InstanceSource, ProfileSpec};
use improper_harness::experiments::{run_maxmin, run_ratio, run_region, run_table_case};
use improper_harness::output::{write_csv, write_json, SCHEMA};
use improper_harness::{exit, ChannelName};

#[derive(Parser)]
#[command(
    name = "improper-ic",
    version,
    about = "Improper Gaussian signaling experiments for the two-user SISO interference channel"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pareto boundary of one channel for every method.
    Region {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        channel: Option<ChannelName>,
        /// Number of interior profiles of the sweep.
        #[arg(long)]
        profiles: Option<usize>,
    },
    /// Grid-oracle over randomized-relaxation objective ratios on an ensemble.
    Ratio {
        #[command(flatten)]
        common: Common,
        /// Also write the summary statistics as CSV here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Average max-min rate versus SNR on an ensemble.
    Maxmin {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of proper,separate,joint,oracle,tdma.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<MaxMinMethod>>,
    },
    /// Sum-rate comparison case as a JSON report.
    Table {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        channel: Option<ChannelName>,
    },
    /// Converts a scalar strategy between complex and real-composite form.
    Convert {
        #[command(subcommand)]
        dir: ConvertDir,
    },
    /// Writes an ensemble of channel gains as CSV.
    GenChannels {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 1.0)]
        var_direct: f64,
        #[arg(long, default_value_t = 1.0)]
        var_cross: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Widely linear precoder of a scalar strategy and its sample statistics.
    PrecodeDemo {
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 0.0)]
        ct_re: f64,
        #[arg(long, default_value_t = 0.8)]
        ct_im: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Documents the columns of every CSV output.
    Schema,
}

#[derive(Subcommand)]
enum ConvertDir {
    /// `C`, `|Ct|`, `arg Ct` to the 2x2 real covariance.
    ToReal {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        ct_mag: f64,
        #[arg(long, allow_hyphen_values = true)]
        ct_phase: f64,
    },
    /// Row-major `q11,q12,q21,q22` to `C` and `Ct`.
    ToComplex {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        q: Vec<f64>,
    },
}

/// Flags shared by the experiment subcommands; each overrides the matching
/// config key.
#[derive(Args)]
struct Common {
    /// JSON experiment config; the subcommand's preset is used without it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output without it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    units: Option<Units>,
    /// Channel seed of an ensemble source.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of channels of an ensemble source.
    #[arg(long)]
    count: Option<usize>,
    /// Comma-separated SNR values in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    /// Randomization trials of the joint method.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    trial_seed: Option<u64>,
    /// Bisection tolerance in nats.
    #[arg(long)]
    tol: Option<f64>,
    /// Oracle grid as `n_power,n_mag,n_theta,refine`.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Skip the grid oracle in region sweeps.
    #[arg(long)]
    no_oracle: bool,
    /// Solve the joint relaxation without the product cuts.
    #[arg(long)]
    no_product_cuts: bool,
    #[arg(long)]
    sequential: bool,
    /// Largest tolerated fraction of failed rows.
    #[arg(long)]
    failure_threshold: Option<f64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Units {
    Bits,
    Nats,
}

impl Common {
    fn build(&self, kind: ExperimentKind) -> Result<ExperimentConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).map_err(|e| e.to_string())?,
            None => ExperimentConfig::preset(kind),
        };
        if cfg.kind != kind {
            return Err(format!("config describes a {:?} experiment", cfg.kind));
        }
        if let Some(u) = self.units {
            cfg.units = match u {
                Units::Bits => RateUnit::Bits,
                Units::Nats => RateUnit::Nats,
            };
        }
        if let InstanceSource::Ensemble { seed, count, .. } = &mut cfg.source {
            if let Some(s) = self.seed {
                *seed = s;
            }
            if let Some(c) = self.count {
                *count = c;
            }
        } else if self.seed.is_some() || self.count.is_some() {
            return Err("--seed and --count need an ensemble source".into());
        }
        if let Some(s) = &self.snr {
            cfg.snr_db = s.clone();
        }
        if let Some(t) = self.trials {
            cfg.solver.trials = t;
        }
        if let Some(s) = self.trial_seed {
            cfg.solver.seed = s;
        }
        if let Some(t) = self.tol {
            cfg.solver.tol = t;
        }
        if let Some(g) = &self.grid {
            if g.len() != 4 {
                return Err(format!("--grid takes 4 values, got {}", g.len()));
            }
            cfg.solver.grid = GridSpec::new(g[0], g[1], g[2], g[3]).map_err(|e| e.to_string())?;
        }
        if self.no_oracle {
            cfg.solver.oracle = false;
        }
        if self.no_product_cuts {
            cfg.solver.product_cuts = false;
        }
        if self.sequential {
            cfg.solver.exec = Execution::Sequential;
        }
        if let Some(f) = self.failure_threshold {
            cfg.failure_threshold = f;
        }
        if let Some(o) = &self.out {
            cfg.output = Some(o.clone());
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn sink(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

enum Failure {
    Config(String),
    Io(io::Error),
    Solver(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn check_failures(failed: usize, total: usize, threshold: f64) -> Result<(), Failure> {
    if total > 0 && failed as f64 > threshold * total as f64 {
        return Err(Failure::Solver(format!("{failed} of {total} rows failed")));
    }
    if failed > 0 {
        log::warn!("{failed} of {total} rows failed");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Region {
            common,
            channel,
            profiles,
        } => {
            let mut cfg = common
                .build(ExperimentKind::Region)
                .map_err(Failure::Config)?;
            if let Some(name) = channel {
                cfg.source = InstanceSource::Named { name };
            }
            if let Some(n) = profiles {
                cfg.profiles = ProfileSpec::Sweep(n);
                cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
            }
            log::info!(
                "region: {} profiles, {} oracle evaluations each",
                cfg.profiles.profiles().len(),
                cfg.solver.grid.total_size()
            );
            let rows = run_region(&cfg);
            write_csv(sink(&cfg.output)?, &cfg, &rows)?;
            check_failures(
                rows.iter().filter(|r| r.failed()).count(),
                rows.len(),
                cfg.failure_threshold,
            )
        }
        Cmd::Ratio { common, summary } => {
            let cfg = common
                .build(ExperimentKind::Ratio)
                .map_err(Failure::Config)?;
            let out = run_ratio(&cfg);
            write_csv(sink(&cfg.output)?, &cfg, &out.rows)?;
            if let Some(p) = summary {
                write_csv(sink(&Some(p))?, &cfg, std::slice::from_ref(&out.summary))?;
            }
            log::info!(
                "ratio mean {:.4} over {} channels",
                out.summary.mean,
                out.rows.len()
            );
            check_failures(
                out.summary.failures,
                out.summary.requested,
                cfg.failure_threshold,
            )
        }
        Cmd::Maxmin { common, methods } => {
            let cfg = common
                .build(ExperimentKind::Maxmin)
                .map_err(Failure::Config)?;
            let methods = methods.unwrap_or_else(|| MaxMinMethod::ALL.to_vec());
            let out = run_maxmin(&cfg, &methods);
            write_csv(sink(&cfg.output)?, &cfg, &out.rows)?;
            let failed: usize = out.rows.iter().map(|r| r.failures).sum();
            check_failures(failed, out.instances.len(), cfg.failure_threshold)
        }
        Cmd::Table { common, channel } => {
            let mut cfg = common
                .build(ExperimentKind::Table)
                .map_err(Failure::Config)?;
            if let Some(name) = channel {
                cfg.source = InstanceSource::Named { name };
            }
            let report = run_table_case(&cfg);
            for n in &report.notes {
                log::warn!("{n}");
            }
            write_json(sink(&cfg.output)?, &cfg, &report)?;
            Ok(())
        }
        Cmd::Convert { dir } => {
            let mut out = io::stdout().lock();
            match dir {
                ConvertDir::ToReal {
                    c,
                    ct_mag,
                    ct_phase,
                } => {
                    let s = SisoStrategy::polar(c, ct_mag, ct_phase);
                    if !s.validate(f64::INFINITY).psd_ok() {
                        return Err(Failure::Config(format!("|Ct| = {ct_mag} exceeds C = {c}")));
                    }
                    let q = complex_to_real(&s);
                    writeln!(
                        out,
                        "{:.4} {:.4}\n{:.4} {:.4}",
                        q[(0, 0)],
                        q[(0, 1)],
                        q[(1, 0)],
                        q[(1, 1)]
                    )?;
                }
                ConvertDir::ToComplex { q } => {
                    if q.len() != 4 {
                        return Err(Failure::Config(format!(
                            "--q takes 4 values, got {}",
                            q.len()
                        )));
                    }
                    let m = nalgebra::Matrix2::new(q[0], q[1], q[2], q[3]);
                    let s = real_to_complex(&m).map_err(|e| Failure::Config(e.to_string()))?;
                    writeln!(
                        out,
                        "C = {:.4}, Ct = {:.4} e^(i {:.4})",
                        s.power,
                        s.pseudo.norm(),
                        s.pseudo.arg()
                    )?;
                }
            }
            Ok(())
        }
        Cmd::GenChannels {
            seed,
            count,
            var_direct,
            var_cross,
            out,
        } => {
            if !(var_direct >= 0.0 && var_cross >= 0.0) {
                return Err(Failure::Config("variances must be nonnegative".into()));
            }
            let mut w = sink(&out)?;
            writeln!(w, "# improper-ic {}", improper_harness::output::VERSION)?;
            writeln!(
                w,
                "# seed={seed} var_direct={var_direct} var_cross={var_cross}"
            )?;
            writeln!(
                w,
                "index,h11_re,h11_im,h12_re,h12_im,h21_re,h21_im,h22_re,h22_im"
            )?;
            for i in 0..count {
                let g = channel_gains(seed, i, var_direct, var_cross);
                let cells: Vec<String> = g
                    .iter()
                    .flatten()
                    .flat_map(|z| [z.re, z.im])
                    .map(|x| x.to_string())
                    .collect();
                writeln!(w, "{i},{}", cells.join(","))?;
            }
            w.flush()?;
            Ok(())
        }
        Cmd::PrecodeDemo {
            c,
            ct_re,
            ct_im,
            samples,
            seed,
        } => {
            let s = SisoStrategy::new(c, Complex64::new(ct_re, ct_im)).to_matrix();
            let f = augmented_sqrt(&s).map_err(|e| Failure::Config(e.to_string()))?;
            let mut rng = stream_rng(seed, 0);
            let xs = sample_improper(&s, samples, &mut rng)
                .map_err(|e| Failure::Config(e.to_string()))?;
            let n = xs.len().max(1) as f64;
            let cov: f64 = xs.iter().map(|x| x[0].norm_sqr()).sum::<f64>() / n;
            let pseudo: Complex64 = xs.iter().map(|x| x[0] * x[0]).sum::<Complex64>() / n;
            let mut out = io::stdout().lock();
            writeln!(out, "B1 = {:.6}", f.b1[(0, 0)])?;
            writeln!(out, "B2 = {:.6}", f.b2[(0, 0)])?;
            writeln!(
                out,
                "target:    C = {c:.6}, Ct = {:.6}",
                Complex64::new(ct_re, ct_im)
            )?;
            writeln!(
                out,
                "empirical: C = {cov:.6}, Ct = {pseudo:.6} ({samples} samples, seed {seed})"
            )?;
            Ok(())
        }
        Cmd::Schema => {
            print!("{SCHEMA}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(exit::CONFIG as u8)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
        Err(Failure::Solver(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(exit::SOLVER_FAILURES as u8)
        }
    }
}
