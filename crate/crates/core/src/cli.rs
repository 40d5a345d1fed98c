//! Experiment orchestration behind the `risuav` binary.
//!
//! Every command writes deterministic numeric outputs (CSV and
//! `summary.json`); wall-clock times go to a separate `timing.json` so that
//! reruns with the same configuration and seed are byte-identical.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    heuristic_trajectory, npb_rate, t_npb_optimize, Algorithm, NpbMode, RateEstimate,
};
use crate::beamforming::{average_rate, optimal_phases, PhaseSchedule};
use crate::channel::Fading;
use crate::convexity::{sample_points, verify_points, SweepDomain, VerificationReport};
use crate::error::{Error, Result};
use crate::io;
use crate::sca::{run_sca, IterationRecord, ScaOptions};
use crate::scenario::{Scenario, Trajectory, DEFAULT_CONFIG};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;
/// Solver or I/O failures that are none of the above.
pub const EXIT_RUNTIME: i32 = 1;

/// Knobs shared by every experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub seed: u64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub npb_mode: NpbMode,
    /// Redraw fading every slot instead of once per flight.
    pub per_slot_fading: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 0,
            epsilon: 1e-4,
            max_iter: 500,
            npb_mode: NpbMode::default(),
            per_slot_fading: false,
        }
    }
}

impl RunOptions {
    fn sca(&self) -> ScaOptions {
        ScaOptions {
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            ..Default::default()
        }
    }
}

/// One algorithm's outcome as recorded in `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub scenario_hash: String,
    pub t_s: f64,
    pub avg_rate_bps_hz: f64,
    pub stderr: f64,
    /// Phase policy for the non-aligned algorithms.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub npb_mode: Option<NpbMode>,
    pub trajectory_file: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phases_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iteration_log_file: Option<String>,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub trajectory: Trajectory,
    #[serde(skip)]
    pub history: Vec<IterationRecord>,
    #[serde(skip)]
    pub wall_clock_s: f64,
}

fn sample_fading(scenario: &Scenario, opts: &RunOptions) -> Result<Fading> {
    Fading::sample(scenario, opts.seed, opts.per_slot_fading)
}

fn check_before_write(traj: &Trajectory, scenario: &Scenario, label: &str) -> Result<()> {
    let report = traj.check_mobility(scenario);
    match report.violations.first() {
        None => Ok(()),
        Some(v) => Err(Error::Solver(format!("{label} trajectory violates the mobility constraints: {v}"))),
    }
}

fn dir_name(alg: Algorithm) -> &'static str {
    match alg {
        Algorithm::JtPb => "jtpb",
        Algorithm::TNpb => "t_npb",
        Algorithm::HtPb => "ht_pb",
        Algorithm::HtNpb => "ht_npb",
    }
}

/// Parses `jtpb`, `t_npb`, `ht_pb`, `ht_npb` (or the display labels).
pub fn parse_algorithm(s: &str) -> Result<Algorithm> {
    let norm = s.trim().to_ascii_lowercase().replace(['/', '&', '-'], "_");
    match norm.as_str() {
        "jtpb" | "jt_pb" => Ok(Algorithm::JtPb),
        "t_npb" | "tnpb" => Ok(Algorithm::TNpb),
        "ht_pb" | "htpb" => Ok(Algorithm::HtPb),
        "ht_npb" | "htnpb" => Ok(Algorithm::HtNpb),
        _ => Err(Error::invalid("algorithms", format!("unknown algorithm `{s}`"))),
    }
}

/// Runs one algorithm on a fixed realization without touching the disk.
pub fn run_algorithm(
    alg: Algorithm,
    scenario: &Scenario,
    fading: &Fading,
    opts: &RunOptions,
) -> Result<(ExperimentResult, Option<PhaseSchedule>)> {
    let start = Instant::now();
    let sca = opts.sca();
    let (trajectory, rate, schedule, history, iterations, converged, npb) = match alg {
        Algorithm::JtPb => {
            let out = run_sca(scenario, fading, &sca)?;
            let rate = RateEstimate::exact(out.final_rate());
            (out.trajectory, rate, Some(out.schedule), out.history, out.iterations, out.converged, None)
        }
        Algorithm::TNpb => {
            let (out, rate) = t_npb_optimize(scenario, fading, &sca, opts.npb_mode, opts.seed)?;
            (out.trajectory, rate, None, out.history, out.iterations, out.converged, Some(opts.npb_mode))
        }
        Algorithm::HtPb => {
            let traj = heuristic_trajectory(scenario)?;
            let schedule = optimal_phases(&traj, fading, scenario)?;
            let rate = RateEstimate::exact(average_rate(&traj, &schedule, fading, scenario)?);
            (traj, rate, Some(schedule), Vec::new(), 0, true, None)
        }
        Algorithm::HtNpb => {
            let traj = heuristic_trajectory(scenario)?;
            let rate = npb_rate(&traj, fading, scenario, opts.npb_mode, opts.seed)?;
            (traj, rate, None, Vec::new(), 0, true, Some(opts.npb_mode))
        }
    };
    check_before_write(&trajectory, scenario, alg.label())?;
    let result = ExperimentResult {
        algorithm: alg,
        seed: opts.seed,
        scenario_hash: scenario.hash(),
        t_s: scenario.t_total,
        avg_rate_bps_hz: rate.mean,
        stderr: rate.stderr,
        npb_mode: npb,
        trajectory_file: String::new(),
        phases_file: None,
        iteration_log_file: None,
        iterations,
        converged,
        trajectory,
        history,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    Ok((result, schedule))
}

/// Writes the per-algorithm files under `dir` (names relative to `root`).
fn write_algorithm_files(
    result: &mut ExperimentResult,
    schedule: Option<&PhaseSchedule>,
    root: &Path,
    dir: &Path,
) -> Result<()> {
    let rel = |name: &str| -> String {
        dir.join(name)
            .strip_prefix(root)
            .map(|p| p.to_string_lossy().replace('\\', "/"))
            .unwrap_or_else(|_| name.to_string())
    };
    io::write_file(&dir.join("trajectory.csv"), &io::trajectory_csv(&result.trajectory)?)?;
    result.trajectory_file = rel("trajectory.csv");
    if let Some(s) = schedule {
        io::write_file(&dir.join("phases.csv"), &io::phases_csv(s)?)?;
        result.phases_file = Some(rel("phases.csv"));
    }
    if !result.history.is_empty() {
        io::write_file(&dir.join("iterations.csv"), &io::iteration_log_csv(&result.history)?)?;
        result.iteration_log_file = Some(rel("iterations.csv"));
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_timing(out_dir: &Path, entries: BTreeMap<String, f64>) -> Result<()> {
    io::write_file(&out_dir.join("timing.json"), &to_json(&entries)?)
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    command: &'a str,
    scenario: &'a Scenario,
    options: &'a RunOptions,
    results: T,
}

/// JT&PB: trajectory, phases, iteration log, realization and summary.
pub fn cmd_optimize(scenario: &Scenario, opts: &RunOptions, out_dir: &Path) -> Result<ExperimentResult> {
    let fading = sample_fading(scenario, opts)?;
    let (mut result, schedule) = run_algorithm(Algorithm::JtPb, scenario, &fading, opts)?;
    write_algorithm_files(&mut result, schedule.as_ref(), out_dir, out_dir)?;
    if let Fading::Static(r) = &fading {
        io::write_file(&out_dir.join("realization.json"), &format!("{}\n", r.to_json()))?;
    }
    let summary = Summary {
        command: "optimize",
        scenario,
        options: opts,
        results: &result,
    };
    io::write_file(&out_dir.join("summary.json"), &to_json(&summary)?)?;
    write_timing(out_dir, BTreeMap::from([(Algorithm::JtPb.label().to_string(), result.wall_clock_s)]))?;
    Ok(result)
}

/// Runs `algorithms` concurrently on one realization and writes one
/// subdirectory per algorithm plus `comparison.csv`.
pub fn cmd_benchmark(
    scenario: &Scenario,
    opts: &RunOptions,
    algorithms: &[Algorithm],
    out_dir: &Path,
) -> Result<Vec<ExperimentResult>> {
    if algorithms.is_empty() {
        return Err(Error::invalid("algorithms", "select at least one algorithm"));
    }
    let mut algs = algorithms.to_vec();
    algs.sort();
    algs.dedup();
    let fading = sample_fading(scenario, opts)?;
    let runs: Vec<_> = algs
        .par_iter()
        .map(|&a| run_algorithm(a, scenario, &fading, opts))
        .collect::<Result<_>>()?;
    let mut results = Vec::with_capacity(runs.len());
    for (mut result, schedule) in runs {
        let dir = out_dir.join(dir_name(result.algorithm));
        write_algorithm_files(&mut result, schedule.as_ref(), out_dir, &dir)?;
        results.push(result);
    }
    let rows: Vec<io::ComparisonRow> = results
        .iter()
        .map(|r| io::ComparisonRow {
            algorithm: r.algorithm.label().to_string(),
            avg_rate_bps_hz: r.avg_rate_bps_hz,
            stderr: r.stderr,
            iterations: r.iterations,
            converged: r.converged,
            trajectory_file: r.trajectory_file.clone(),
        })
        .collect();
    io::write_file(&out_dir.join("comparison.csv"), &io::comparison_csv(&rows)?)?;
    let summary = Summary {
        command: "benchmark",
        scenario,
        options: opts,
        results: &results,
    };
    io::write_file(&out_dir.join("summary.json"), &to_json(&summary)?)?;
    write_timing(
        out_dir,
        results.iter().map(|r| (r.algorithm.label().to_string(), r.wall_clock_s)).collect(),
    )?;
    Ok(results)
}

/// Rate of every algorithm for each flight time. The fading realization is
/// drawn once from `scenario` and reused for every `T`.
pub fn sweep_rows(scenario: &Scenario, t_values: &[f64], opts: &RunOptions) -> Result<Vec<(io::SweepRow, f64)>> {
    if t_values.is_empty() {
        return Err(Error::invalid("t_values", "give at least one flight time"));
    }
    let scenarios: Vec<Scenario> = t_values.iter().map(|&t| scenario.with_total_time(t)).collect::<Result<_>>()?;
    let fading = if opts.per_slot_fading {
        None
    } else {
        Some(sample_fading(scenario, opts)?)
    };
    let jobs: Vec<(usize, Algorithm)> = (0..scenarios.len())
        .flat_map(|i| Algorithm::ALL.into_iter().map(move |a| (i, a)))
        .collect();
    jobs.par_iter()
        .map(|&(i, alg)| {
            let s = &scenarios[i];
            let own;
            let f = match &fading {
                Some(f) => f,
                None => {
                    own = sample_fading(s, opts)?;
                    &own
                }
            };
            let (r, _) = run_algorithm(alg, s, f, opts)?;
            Ok((
                io::SweepRow {
                    t_s: s.t_total,
                    algorithm: alg.label().to_string(),
                    avg_rate_bps_hz: r.avg_rate_bps_hz,
                    stderr: r.stderr,
                },
                r.wall_clock_s,
            ))
        })
        .collect()
}

pub fn cmd_sweep_t(scenario: &Scenario, t_values: &[f64], opts: &RunOptions, out_dir: &Path) -> Result<Vec<io::SweepRow>> {
    let rows = sweep_rows(scenario, t_values, opts)?;
    let timing = rows
        .iter()
        .map(|(r, secs)| (format!("T={}/{}", r.t_s, r.algorithm), *secs))
        .collect();
    let rows: Vec<io::SweepRow> = rows.into_iter().map(|(r, _)| r).collect();
    io::write_file(&out_dir.join("sweep.csv"), &io::sweep_csv(&rows)?)?;
    let summary = Summary {
        command: "sweep-t",
        scenario,
        options: opts,
        results: &rows,
    };
    io::write_file(&out_dir.join("summary.json"), &to_json(&summary)?)?;
    write_timing(out_dir, timing)?;
    Ok(rows)
}

pub fn cmd_verify_lemma(seed: u64, points: usize, out_dir: Option<&Path>) -> Result<VerificationReport> {
    let pts = sample_points(&SweepDomain::default(), points, seed);
    let report = verify_points(&pts, 1e-5, 1e-10)?;
    if let Some(dir) = out_dir {
        io::write_file(&dir.join("lemma_report.json"), &to_json(&report)?)?;
    }
    Ok(report)
}

#[derive(Debug, Parser)]
#[command(name = "risuav", version, about = "UAV trajectory and RIS phase optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario JSON; defaults to the built-in reference setup (T = 740 s).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Phase policy of the non-beamforming benchmarks.
    #[arg(long, default_value = "random", value_parser = ["zero", "random", "no-ris"])]
    pub npb_mode: String,
    /// Number of phase draws averaged in random mode.
    #[arg(long, default_value_t = NpbMode::DEFAULT_DRAWS)]
    pub npb_draws: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Redraw the fading every slot instead of once per flight.
    #[arg(long)]
    pub per_slot_fading: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Joint trajectory and phase optimization.
    Optimize(CommonArgs),
    /// Compare algorithms on one realization.
    Benchmark {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated subset of jtpb, t_npb, ht_pb, ht_npb.
        #[arg(long, default_value = "jtpb,t_npb,ht_pb,ht_npb", value_delimiter = ',')]
        algorithms: Vec<String>,
    },
    /// Average rate of every algorithm versus flight time.
    SweepT {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated flight times in seconds.
        #[arg(long, default_value = "200,300,500,740", value_delimiter = ',')]
        t_values: Vec<f64>,
    },
    /// Numerically check the convexity certificate.
    VerifyLemma {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        points: usize,
        /// Also write lemma_report.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl CommonArgs {
    fn scenario(&self) -> Result<Scenario> {
        match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::invalid("config", format!("cannot read {}: {e}", path.display())))?;
                Scenario::from_config_str(&text)
            }
            None => Scenario::from_config_str(DEFAULT_CONFIG),
        }
    }

    fn options(&self) -> Result<RunOptions> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", "must be finite and > 0"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        let npb_mode = match NpbMode::from_str(&self.npb_mode)? {
            NpbMode::Random { .. } => NpbMode::Random { draws: self.npb_draws },
            m => m,
        };
        Ok(RunOptions {
            seed: self.seed,
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            npb_mode,
            per_slot_fading: self.per_slot_fading,
        })
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        e if e.is_config_error() => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Optimize(c) => {
            let r = cmd_optimize(&c.scenario()?, &c.options()?, &c.out)?;
            println!("{} {:.6} bps/Hz ({} iterations) -> {}", r.algorithm, r.avg_rate_bps_hz, r.iterations, c.out.display());
        }
        Command::Benchmark { common, algorithms } => {
            let algs: Vec<Algorithm> = algorithms.iter().map(|a| parse_algorithm(a)).collect::<Result<_>>()?;
            for r in cmd_benchmark(&common.scenario()?, &common.options()?, &algs, &common.out)? {
                println!("{:<7} {:.6} ± {:.6} bps/Hz", r.algorithm.label(), r.avg_rate_bps_hz, r.stderr);
            }
        }
        Command::SweepT { common, t_values } => {
            for r in cmd_sweep_t(&common.scenario()?, &t_values, &common.options()?, &common.out)? {
                println!("T={:<6} {:<7} {:.6} ± {:.6}", r.t_s, r.algorithm, r.avg_rate_bps_hz, r.stderr);
            }
        }
        Command::VerifyLemma { seed, points, out } => {
            let report = cmd_verify_lemma(seed, points, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !report.passed {
                return Ok(EXIT_VERIFICATION);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names() {
        for a in Algorithm::ALL {
            assert_eq!(parse_algorithm(dir_name(a)).unwrap(), a);
            assert_eq!(parse_algorithm(a.label()).unwrap(), a);
        }
        assert!(parse_algorithm("best").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::MissingKey("T".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Infeasible("x".into())), EXIT_INFEASIBLE);
        assert_eq!(exit_code(&Error::Solver("x".into())), EXIT_RUNTIME);
    }

    #[test]
    fn bad_flags_are_config_errors() {
        assert_eq!(main_with_args(["risuav", "optimize", "--npb-mode", "sometimes"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["risuav", "optimize", "--epsilon", "0"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["risuav", "frobnicate"]), EXIT_CONFIG);
    }
}
