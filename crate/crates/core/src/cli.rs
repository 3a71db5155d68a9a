//! Seeded batch driver behind the `bornlab` binary.
//!
//! [`RunOptions`] holds what the user typed; [`RunOptions::resolve`] fills
//! per-command defaults and validates, producing the [`RunConfig`] that is
//! embedded verbatim in every report. Reports contain no timestamps, so a
//! rerun with identical flags produces identical bytes; the wall-clock time
//! goes to a `<report>.meta.json` sidecar.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::amplitude::{Configuration, Unitary};
use crate::cauchy::{
    check_additive_equation_real, check_multiplicative_equation, fit_power_exponent, log_uniform,
    log_uniform_pairs, DEFAULT_MAGNITUDE_RANGE,
};
use crate::error::{Error, Result};
use crate::isometry::{estimate_generator_dimension, min_samples, GeneratorConstraintSystem, DEFAULT_RANK_TOLERANCE};
use crate::process::{born_frequency_test, run_trajectory, total_weight_drift, trial_rng, ProcessSchedule};

pub const TOOL_NAME: &str = "bornlab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status for bad input, unknown commands and I/O failures.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status when a rank estimate has no clean spectral gap.
pub const EXIT_AMBIGUOUS_RANK: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    IsometryScan,
    CauchyCheck,
    FitExponent,
    Drift,
    Simulate,
    BornTest,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::IsometryScan,
        Command::CauchyCheck,
        Command::FitExponent,
        Command::Drift,
        Command::Simulate,
        Command::BornTest,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::IsometryScan => "isometry-scan",
            Command::CauchyCheck => "cauchy-check",
            Command::FitExponent => "fit-exponent",
            Command::Drift => "drift",
            Command::Simulate => "simulate",
            Command::BornTest => "born-test",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown command {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

/// Reversible step inserted before each record stage of `simulate` and
/// `born-test`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Evolution {
    #[default]
    Identity,
    Hadamard,
    Haar,
}

impl FromStr for Evolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Evolution::Identity),
            "hadamard" => Ok(Evolution::Hadamard),
            "haar" => Ok(Evolution::Haar),
            other => Err(Error::InvalidArgument(format!("unknown evolution {other:?}"))),
        }
    }
}

/// Unresolved command-line input.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub n_values: Option<Vec<usize>>,
    pub p_values: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
    pub amps: Option<Vec<f64>>,
    pub phases: Option<Vec<f64>>,
    pub evolution: Option<Evolution>,
    pub stages: Option<usize>,
}

/// Fully resolved run description, serialized into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub n_values: Vec<usize>,
    pub p_values: Vec<f64>,
    /// Per-cell sample count; for `isometry-scan`, `None` means `20 n²`
    /// constraint rows per dimension.
    pub trials: Option<u64>,
    pub seed: u64,
    pub output_path: PathBuf,
    pub format: Format,
    pub amps: Vec<f64>,
    pub phases: Option<Vec<f64>>,
    pub evolution: Evolution,
    pub stages: usize,
}

const ALL_EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, 4.0];

impl RunOptions {
    pub fn resolve(self, command: Command) -> Result<RunConfig> {
        use Command::*;
        let default_p: &[f64] = match command {
            IsometryScan | Drift => &ALL_EXPONENTS,
            CauchyCheck | FitExponent => &[0.5, 1.0, 1.5, 2.0, 3.0, 4.0],
            Simulate | BornTest => &[2.0],
        };
        let default_trials = match command {
            IsometryScan => None,
            CauchyCheck => Some(10_000),
            FitExponent => Some(100),
            Drift => Some(100),
            Simulate => Some(10),
            BornTest => Some(100_000),
        };
        let amps = self.amps.unwrap_or_else(|| vec![0.5, 0.5]);
        let n_values = match command {
            Simulate | BornTest => {
                if self.n_values.is_some() {
                    return Err(Error::InvalidArgument(format!(
                        "{command} takes its dimension from --amps, not --n"
                    )));
                }
                vec![amps.len()]
            }
            _ => self.n_values.unwrap_or_else(|| vec![2, 3, 4]),
        };
        let format = self.format.unwrap_or_default();
        let config = RunConfig {
            command,
            n_values,
            p_values: self.p_values.unwrap_or_else(|| default_p.to_vec()),
            trials: self.trials.or(default_trials),
            seed: self.seed.unwrap_or(0),
            output_path: self
                .output_path
                .unwrap_or_else(|| PathBuf::from(format!("{}.{}", command.name(), format.extension()))),
            format,
            amps,
            phases: self.phases,
            evolution: self.evolution.unwrap_or_default(),
            stages: self.stages.unwrap_or(1),
        };
        config.validate()?;
        Ok(config)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.p_values.is_empty() {
            return Err(Error::InvalidArgument("empty --n or --p grid".into()));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidArgument(format!("dimension must be >= 2, got {n}")));
        }
        if let Some(&p) = self.p_values.iter().find(|&&p| p <= 0.0 || !p.is_finite()) {
            return Err(Error::InvalidExponent(p));
        }
        match (self.command, self.trials) {
            (Command::IsometryScan, Some(m)) => {
                let needed = self.n_values.iter().map(|&n| min_samples(n)).max().unwrap_or(0);
                if (m as usize) < needed {
                    return Err(Error::InvalidArgument(format!(
                        "isometry-scan needs --trials >= {needed} constraint rows"
                    )));
                }
            }
            (Command::IsometryScan, None) => {}
            (Command::BornTest, Some(t)) if t < crate::process::MIN_FREQUENCY_TRIALS => {
                return Err(Error::InvalidArgument(format!("born-test needs --trials >= 1000, got {t}")));
            }
            (Command::FitExponent, Some(t)) if t < 2 => {
                return Err(Error::InvalidArgument("fit-exponent needs --trials >= 2".into()));
            }
            (_, Some(0)) | (_, None) => {
                return Err(Error::InvalidArgument("--trials must be positive".into()));
            }
            _ => {}
        }
        if matches!(self.command, Command::Simulate | Command::BornTest) {
            if self.stages == 0 {
                return Err(Error::InvalidArgument("--stages must be >= 1".into()));
            }
            if self.evolution == Evolution::Hadamard && self.amps.len() != 2 {
                return Err(Error::InvalidArgument("hadamard evolution needs exactly 2 amplitudes".into()));
            }
            self.schedule()?;
        }
        Ok(())
    }

    /// Schedule for `simulate` / `born-test`: `stages` rounds of
    /// (evolution, standard-basis record `r<k>`).
    pub fn schedule(&self) -> Result<ProcessSchedule> {
        let initial = Configuration::from_squared_magnitudes(&self.amps, self.phases.as_deref())?;
        let n = initial.len();
        // Haar steps come from their own stream so they do not depend on trial count.
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::MAX);
        let mut builder = ProcessSchedule::builder(initial);
        for stage in 1..=self.stages {
            builder = match self.evolution {
                Evolution::Identity => builder,
                Evolution::Hadamard => builder.evolve(Unitary::hadamard()),
                Evolution::Haar => builder.evolve(Unitary::haar(n, &mut rng)),
            };
            builder = builder.record_standard(format!("r{stage}"));
        }
        builder.build()
    }

    fn schedule_id(&self) -> String {
        let evolution = match self.evolution {
            Evolution::Identity => "identity",
            Evolution::Hadamard => "hadamard",
            Evolution::Haar => "haar",
        };
        format!("{evolution}-x{}", self.stages)
    }

    fn cell_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::AmbiguousRank { .. } => EXIT_AMBIGUOUS_RANK,
        _ => EXIT_VALIDATION,
    }
}

/// What a run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub report_path: PathBuf,
    pub metadata_path: PathBuf,
    /// One human-readable line per grid cell.
    pub summary: Vec<String>,
}

#[derive(Serialize)]
struct JsonReport<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    results: T,
}

#[derive(Serialize)]
struct Metadata<'a> {
    report: &'a Path,
    created_unix_seconds: u64,
}

#[derive(Serialize)]
struct CauchyCell {
    p: f64,
    multiplicative: crate::cauchy::ResidualReport<f64>,
    additive: crate::cauchy::ResidualReport<f64>,
}

#[derive(Serialize)]
struct FitCell {
    p: f64,
    fit: crate::cauchy::ExponentFit,
    num_samples: u64,
}

#[derive(Serialize)]
struct DriftCell {
    n: usize,
    p: f64,
    num_unitaries: u64,
    max_drift: f64,
}

#[derive(Serialize)]
struct SimulateCell {
    p: f64,
    trial: u64,
    trajectory: crate::process::TrajectoryResult,
}

#[derive(Serialize)]
struct BornCell {
    schedule_id: String,
    p: f64,
    report: crate::process::FrequencyReport,
}

/// Runs the configured command, writes the report and its sidecar, and
/// prints one summary line per grid cell to `out`.
pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<RunOutcome> {
    config.validate()?;
    let (body, summary) = match config.command {
        Command::IsometryScan => isometry_scan(config)?,
        Command::CauchyCheck => cauchy_check(config)?,
        Command::FitExponent => fit_exponent(config)?,
        Command::Drift => drift(config)?,
        Command::Simulate => simulate(config)?,
        Command::BornTest => born_test(config)?,
    };
    let report_path = config.output_path.clone();
    write_file(&report_path, &body)?;
    let metadata_path = sidecar_path(&report_path);
    let created_unix_seconds = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::to_vec_pretty(&Metadata {
        report: &report_path,
        created_unix_seconds,
    })?;
    write_file(&metadata_path, &meta)?;
    for line in &summary {
        writeln!(out, "{line}")?;
    }
    Ok(RunOutcome {
        report_path,
        metadata_path,
        summary,
    })
}

pub fn sidecar_path(report: &Path) -> PathBuf {
    let mut name = report.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    report.with_file_name(name)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

/// CSV body preceded by `#` lines carrying the tool version and config.
fn csv_report(config: &RunConfig, header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut body = Vec::new();
    writeln!(body, "# {TOOL_NAME} {TOOL_VERSION}")?;
    writeln!(body, "# config: {}", serde_json::to_string(config)?)?;
    {
        let mut w = csv::Writer::from_writer(&mut body);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    Ok(body)
}

fn json_report<T: Serialize>(config: &RunConfig, results: T) -> Result<Vec<u8>> {
    let mut body = serde_json::to_vec_pretty(&JsonReport {
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        config,
        results,
    })?;
    body.push(b'\n');
    Ok(body)
}

type Rendered = (Vec<u8>, Vec<String>);

fn isometry_scan(config: &RunConfig) -> Result<Rendered> {
    let mut results = Vec::new();
    let mut summary = Vec::new();
    for &n in &config.n_values {
        for &p in &config.p_values {
            let m = config.trials.map_or(min_samples(n), |t| t as usize);
            let system = GeneratorConstraintSystem::build(n, p, m, &mut config.cell_rng())?;
            let result = estimate_generator_dimension(&system, DEFAULT_RANK_TOLERANCE)?;
            summary.push(format!(
                "isometry-scan n={n} p={p}: generator dimension {} (n = {n}, n^2 = {}), rank gap {:.3e}",
                result.estimated_dimension,
                n * n,
                result.rank_gap
            ));
            results.push(result);
        }
    }
    let body = match config.format {
        Format::Json => json_report(config, &results)?,
        Format::Csv => csv_report(
            config,
            &["n", "p", "estimated_dimension", "rank_gap", "seed"],
            results
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.p.to_string(),
                        r.estimated_dimension.to_string(),
                        r.rank_gap.to_string(),
                        config.seed.to_string(),
                    ]
                })
                .collect(),
        )?,
    };
    Ok((body, summary))
}

fn cauchy_check(config: &RunConfig) -> Result<Rendered> {
    let trials = config.trials.unwrap_or(0) as usize;
    let (lo, hi) = DEFAULT_MAGNITUDE_RANGE;
    let mut cells = Vec::new();
    let mut summary = Vec::new();
    for &p in &config.p_values {
        let pairs = log_uniform_pairs(trials, lo, hi, &mut config.cell_rng());
        let power = |x: f64| x.abs().powf(p);
        let multiplicative = check_multiplicative_equation(power, &pairs)?;
        let additive = check_additive_equation_real(power, &pairs)?;
        summary.push(format!(
            "cauchy-check p={p}: multiplicative max residual {:.3e}, additive max residual {:.3e}",
            multiplicative.max_residual, additive.max_residual
        ));
        cells.push(CauchyCell {
            p,
            multiplicative,
            additive,
        });
    }
    let body = match config.format {
        Format::Json => json_report(config, &cells)?,
        Format::Csv => {
            let mut rows = Vec::new();
            for cell in &cells {
                for (name, r) in [("multiplicative", &cell.multiplicative), ("additive", &cell.additive)] {
                    rows.push(vec![
                        cell.p.to_string(),
                        name.to_string(),
                        r.max_residual.to_string(),
                        r.mean_residual.to_string(),
                        r.num_samples.to_string(),
                        config.seed.to_string(),
                    ]);
                }
            }
            csv_report(
                config,
                &["p", "equation", "max_residual", "mean_residual", "num_samples", "seed"],
                rows,
            )?
        }
    };
    Ok((body, summary))
}

fn fit_exponent(config: &RunConfig) -> Result<Rendered> {
    let trials = config.trials.unwrap_or(0);
    let (lo, hi) = DEFAULT_MAGNITUDE_RANGE;
    let mut cells = Vec::new();
    let mut summary = Vec::new();
    for &p in &config.p_values {
        let mut rng = config.cell_rng();
        let samples: Vec<(f64, f64)> = (0..trials)
            .map(|_| {
                let x = log_uniform(lo, hi, &mut rng);
                (x, x.powf(p))
            })
            .collect();
        let fit = fit_power_exponent(&samples)?;
        summary.push(format!(
            "fit-exponent p={p}: p_hat {:.12}, rms {:.3e}",
            fit.p_hat, fit.residual_rms
        ));
        cells.push(FitCell {
            p,
            fit,
            num_samples: trials,
        });
    }
    let body = match config.format {
        Format::Json => json_report(config, &cells)?,
        Format::Csv => csv_report(
            config,
            &["p", "p_hat", "residual_rms", "min_x", "max_x", "num_samples", "seed"],
            cells
                .iter()
                .map(|c| {
                    vec![
                        c.p.to_string(),
                        c.fit.p_hat.to_string(),
                        c.fit.residual_rms.to_string(),
                        c.fit.sample_range.0.to_string(),
                        c.fit.sample_range.1.to_string(),
                        c.num_samples.to_string(),
                        config.seed.to_string(),
                    ]
                })
                .collect(),
        )?,
    };
    Ok((body, summary))
}

fn drift(config: &RunConfig) -> Result<Rendered> {
    let num_unitaries = config.trials.unwrap_or(0);
    let mut cells = Vec::new();
    let mut summary = Vec::new();
    for &n in &config.n_values {
        for &p in &config.p_values {
            let max_drift = total_weight_drift(n, p, num_unitaries as usize, &mut config.cell_rng())?;
            summary.push(format!("drift n={n} p={p}: max relative drift {max_drift:.3e} over {num_unitaries} unitaries"));
            cells.push(DriftCell {
                n,
                p,
                num_unitaries,
                max_drift,
            });
        }
    }
    let body = match config.format {
        Format::Json => json_report(config, &cells)?,
        Format::Csv => csv_report(
            config,
            &["n", "p", "num_unitaries", "max_drift", "seed"],
            cells
                .iter()
                .map(|c| {
                    vec![
                        c.n.to_string(),
                        c.p.to_string(),
                        c.num_unitaries.to_string(),
                        c.max_drift.to_string(),
                        config.seed.to_string(),
                    ]
                })
                .collect(),
        )?,
    };
    Ok((body, summary))
}

fn simulate(config: &RunConfig) -> Result<Rendered> {
    let schedule = config.schedule()?;
    let trials = config.trials.unwrap_or(0);
    let mut cells = Vec::new();
    let mut summary = Vec::new();
    for &p in &config.p_values {
        for trial in 0..trials {
            let trajectory = run_trajectory(&schedule, p, &mut trial_rng(config.seed, trial))?;
            cells.push(SimulateCell { p, trial, trajectory });
        }
        let mean_joint = cells
            .iter()
            .filter(|c| c.p == p)
            .map(|c| c.trajectory.joint_weight)
            .sum::<f64>()
            / trials as f64;
        summary.push(format!("simulate p={p}: {trials} trajectories, mean joint weight {mean_joint:.6}"));
    }
    let body = match config.format {
        Format::Json => json_report(config, &cells)?,
        Format::Csv => csv_report(
            config,
            &["trial", "p", "outcome_sequence", "joint_weight", "seed"],
            cells
                .iter()
                .map(|c| {
                    let outcomes: Vec<usize> = c.trajectory.records.iter().map(|r| r.outcome_index).collect();
                    vec![
                        c.trial.to_string(),
                        c.p.to_string(),
                        schedule.outcome_key(&outcomes),
                        c.trajectory.joint_weight.to_string(),
                        config.seed.to_string(),
                    ]
                })
                .collect(),
        )?,
    };
    Ok((body, summary))
}

fn born_test(config: &RunConfig) -> Result<Rendered> {
    let schedule = config.schedule()?;
    let trials = config.trials.unwrap_or(0);
    let mut cells = Vec::new();
    let mut summary = Vec::new();
    for &p in &config.p_values {
        let report = born_frequency_test(&schedule, p, trials, config.seed)?;
        summary.push(format!(
            "born-test p={p}: chi-square {:.4} on {} dof, p-value {:.4}",
            report.chi_square, report.degrees_of_freedom, report.p_value
        ));
        cells.push(BornCell {
            schedule_id: config.schedule_id(),
            p,
            report,
        });
    }
    let body = match config.format {
        Format::Json => json_report(config, &cells)?,
        Format::Csv => {
            let mut rows = Vec::new();
            for cell in &cells {
                for (sequence, weight) in &cell.report.expected {
                    rows.push(vec![
                        cell.schedule_id.clone(),
                        cell.p.to_string(),
                        cell.report.trials.to_string(),
                        sequence.clone(),
                        cell.report.counts[sequence].to_string(),
                        weight.to_string(),
                        config.seed.to_string(),
                    ]);
                }
            }
            csv_report(
                config,
                &["schedule_id", "p", "trials", "outcome_sequence", "count", "expected_weight", "seed"],
                rows,
            )?
        }
    };
    Ok((body, summary))
}
