//! Command-line front end: `identify`, `simulate`, `validate`, `bench` and `gen`.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::datagen::{add_noise, decaying_exp_dataset, mixer_signals, snr_db, NoiseSpec};
use crate::error::{Result, VttnError};
use crate::io::{format_report, load_csv, load_model, save_csv, save_model, save_outputs_csv};
use crate::model::{full_count, SystemShape};
use crate::oracle::solve_direct;
use crate::regressor::{relative, simulate_series, TimeSeriesDataset};
use crate::solvers::{identify, Algorithm, SolverConfig, SvdTolerance};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

/// Sample count of the reference protocol that triggers the 700-sample training split.
const PROTOCOL_SAMPLES: usize = 5000;
const PROTOCOL_TRAIN: usize = 700;

#[derive(Debug, Parser)]
#[command(name = "vttn", version, about = "Tensor-network identification of MIMO Volterra systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Identify a model from a CSV dataset.
    Identify(IdentifyArgs),
    /// Write simulated outputs of a model for the inputs of a dataset.
    Simulate(SimulateArgs),
    /// Relative residual (and SNR against a clean reference) of a model on a dataset.
    Validate(ValidateArgs),
    /// Decaying-exponential benchmark table.
    Bench(BenchArgs),
    /// Generate a synthetic dataset.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub l: usize,
    #[arg(long = "M")]
    pub memory: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value = "mals")]
    pub algo: Algorithm,
    /// Interior ranks r1,...,r_{d-1} (required for ALS, optional start for MALS).
    #[arg(long, value_delimiter = ',')]
    pub ranks: Vec<usize>,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 50)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 50)]
    pub max_rank: usize,
    /// Super-core truncation: `machine`, `abs:<tau>` or `rel:<fraction>`.
    #[arg(long, default_value = "machine", value_parser = parse_svd_tol)]
    pub svd_tol: SvdTolerance,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training samples taken from the start of the data.
    #[arg(long)]
    pub train_n: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Report destination; printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// First sample of the scored range (the model is still run from sample 0).
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    #[arg(long)]
    pub end: Option<usize>,
    /// Dataset holding the noise-free outputs, for the simulated-output SNR.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub degrees: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "direct,als,mals")]
    pub methods: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "M", default_value_t = 7)]
    pub memory: usize,
    #[arg(long, default_value_t = 5000)]
    pub samples: usize,
    #[arg(long, default_value_t = 700)]
    pub train_n: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Uniform interior rank for ALS, clamped to the structural bounds.
    #[arg(long, default_value_t = 8)]
    pub als_rank: usize,
    /// Largest (pM+1)^d the direct solve attempts; larger cells print NA.
    #[arg(long, default_value_t = 4096)]
    pub direct_max_columns: u128,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Uniform input through the decaying-exponential kernels.
    Exp {
        #[arg(long)]
        d: usize,
        #[arg(long = "M", default_value_t = 7)]
        memory: usize,
        #[arg(long, default_value_t = 5000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mixer surrogate, optionally with output noise at a given SNR.
    Mixer {
        #[arg(long, default_value_t = 5000.0)]
        fs: f64,
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the noise-free dataset here.
        #[arg(long)]
        clean_out: Option<PathBuf>,
    },
}

fn parse_svd_tol(s: &str) -> std::result::Result<SvdTolerance, String> {
    let value = |v: &str| v.parse::<f64>().map_err(|e| format!("invalid tolerance {v:?}: {e}"));
    match s.split_once(':') {
        None if s == "machine" => Ok(SvdTolerance::MachineDefault),
        Some(("abs", v)) => Ok(SvdTolerance::Absolute(value(v)?)),
        Some(("rel", v)) => Ok(SvdTolerance::Relative(value(v)?)),
        _ => Err(format!("expected machine, abs:<tau> or rel:<fraction>, got {s:?}")),
    }
}

impl clap::ValueEnum for Algorithm {
    fn value_variants<'a>() -> &'a [Self] {
        &[Algorithm::Als, Algorithm::Mals]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            Algorithm::Als => "als",
            Algorithm::Mals => "mals",
        }))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Identify(a) => cmd_identify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(g) => cmd_gen(g),
    }
}

fn default_train_n(total: usize) -> usize {
    if total == PROTOCOL_SAMPLES {
        PROTOCOL_TRAIN
    } else {
        total
    }
}

pub fn cmd_identify(a: IdentifyArgs) -> Result<i32> {
    let shape = SystemShape::new(a.p, a.l, a.memory, a.d)?;
    let data = load_csv(&a.data)?;
    let train_n = a.train_n.unwrap_or_else(|| default_train_n(data.len()));
    if train_n == 0 || train_n > data.len() {
        return Err(VttnError::Config(format!(
            "--train-n {train_n} must be between 1 and the {} available samples",
            data.len()
        )));
    }
    let train = data.head(train_n)?;
    let config = SolverConfig {
        algorithm: a.algo,
        ranks: a.ranks,
        residual_tol: a.tol,
        max_sweeps: a.max_sweeps,
        max_rank: a.max_rank,
        svd_tol: a.svd_tol,
        seed: a.seed,
        ..SolverConfig::default()
    };
    let start = Instant::now();
    let (model, report) = identify(&train, shape, &config)?;
    let elapsed = start.elapsed().as_secs_f64();
    save_model(&a.out, &model)?;

    let text = format_report(
        &report,
        &[
            ("train_n", train_n.to_string()),
            ("parameters", model.parameter_count().to_string()),
            ("seconds", format!("{elapsed:.3}")),
        ],
    );
    match &a.report {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn cmd_simulate(a: SimulateArgs) -> Result<i32> {
    let model = load_model(&a.model)?;
    let data = load_csv(&a.data)?;
    let y = simulate_series(&model, &data)?;
    save_outputs_csv(&a.out, &y)?;
    Ok(EXIT_OK)
}

fn range_residual(y: &[Vec<f64>], yhat: &nalgebra::DMatrix<f64>, start: usize, end: usize) -> f64 {
    let (mut err, mut norm) = (0.0, 0.0);
    for (i, ch) in y.iter().enumerate() {
        for t in start..end {
            err += (ch[t] - yhat[(t, i)]).powi(2);
            norm += ch[t] * ch[t];
        }
    }
    relative(err.sqrt(), norm.sqrt())
}

pub fn cmd_validate(a: ValidateArgs) -> Result<i32> {
    let model = load_model(&a.model)?;
    let data = load_csv(&a.data)?;
    if data.l() != model.shape().l {
        return Err(VttnError::Mismatch(format!(
            "model has {} outputs, data has {}",
            model.shape().l,
            data.l()
        )));
    }
    let end = a.end.unwrap_or(data.len());
    if a.start >= end || end > data.len() {
        return Err(VttnError::Config(format!(
            "invalid range {}..{end} for {} samples",
            a.start,
            data.len()
        )));
    }
    let yhat = simulate_series(&model, &data)?;
    println!("samples={}", end - a.start);
    println!("relative_residual={:.16e}", range_residual(data.outputs(), &yhat, a.start, end));
    if let Some(path) = &a.reference {
        let reference = load_csv(path)?;
        if reference.len() < end || reference.l() != data.l() {
            return Err(VttnError::Mismatch("reference outputs do not cover the data".into()));
        }
        let clean: Vec<f64> = reference.outputs().iter().flat_map(|c| c[a.start..end].to_vec()).collect();
        let sim: Vec<f64> = (0..data.l())
            .flat_map(|i| (a.start..end).map(move |t| (i, t)))
            .map(|(i, t)| yhat[(t, i)])
            .collect();
        println!("sim_snr_db={:.4}", snr_db(&clean, &sim));
    }
    Ok(EXIT_OK)
}

/// One row of the benchmark table.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub degree: usize,
    pub method: String,
    /// Validation residual, `None` when the cell is not available.
    pub residual: Option<f64>,
    pub max_rank: Option<usize>,
    pub full_count: u128,
    pub seconds: Option<f64>,
    pub note: String,
}

fn validation_residual(data: &TimeSeriesDataset, yhat: &nalgebra::DMatrix<f64>, train_n: usize) -> f64 {
    range_residual(data.outputs(), yhat, train_n, data.len())
}

fn bench_cell(a: &BenchArgs, degree: usize, method: &str) -> Result<BenchRow> {
    let shape = SystemShape::new(1, 1, a.memory, degree)?;
    let count = full_count(1, a.memory, degree).unwrap_or(u128::MAX);
    let data = decaying_exp_dataset(degree, a.memory, a.samples, a.seed)?;
    if a.train_n == 0 || a.train_n >= data.len() {
        return Err(VttnError::Config("--train-n must leave validation samples".into()));
    }
    let train = data.head(a.train_n)?;
    let mut row = BenchRow {
        degree,
        method: method.to_string(),
        residual: None,
        max_rank: None,
        full_count: count,
        seconds: None,
        note: String::new(),
    };
    let start = Instant::now();
    let finish = |row: &mut BenchRow, yhat: nalgebra::DMatrix<f64>, rank: Option<usize>| {
        row.residual = Some(validation_residual(&data, &yhat, a.train_n));
        row.max_rank = rank;
        row.seconds = Some(start.elapsed().as_secs_f64());
    };
    match method {
        "direct" => {
            if count > a.direct_max_columns {
                row.note = "NA".into();
                return Ok(row);
            }
            let sol = solve_direct(&train, shape)?;
            finish(&mut row, sol.simulate(&data)?, None);
        }
        "als" | "mals" => {
            let config = if method == "als" {
                let ranks = clamp_ranks(shape, a.als_rank);
                SolverConfig::als(ranks)
            } else {
                SolverConfig::mals()
            };
            let config = SolverConfig {
                residual_tol: a.tol,
                seed: a.seed,
                ..config
            };
            let (model, report) = identify(&train, shape, &config)?;
            finish(&mut row, simulate_series(&model, &data)?, Some(report.max_rank()));
            if !report.converged {
                row.note = "not converged".into();
            }
        }
        other => return Err(VttnError::Config(format!("unknown method {other:?}"))),
    }
    Ok(row)
}

/// Uniform interior rank clipped to `min(l·n^k, n^{d−k})`.
fn clamp_ranks(shape: SystemShape, rank: usize) -> Vec<usize> {
    let n = shape.n() as u128;
    (1..shape.degree)
        .map(|k| {
            let left = (shape.l as u128).saturating_mul(n.saturating_pow(k as u32));
            let right = n.saturating_pow((shape.degree - k) as u32);
            (rank as u128).min(left).min(right) as usize
        })
        .collect()
}

pub fn bench_rows(a: &BenchArgs) -> Result<Vec<BenchRow>> {
    if a.degrees.is_empty() {
        return Err(VttnError::Config("--degrees must list at least one degree".into()));
    }
    if a.methods.is_empty() {
        return Err(VttnError::Config("--methods must list at least one method".into()));
    }
    let mut rows = Vec::new();
    for &d in &a.degrees {
        for m in &a.methods {
            let row = bench_cell(a, d, m).unwrap_or_else(|e| BenchRow {
                degree: d,
                method: m.clone(),
                residual: None,
                max_rank: None,
                full_count: full_count(1, a.memory, d).unwrap_or(u128::MAX),
                seconds: None,
                note: format!("failed: {e}"),
            });
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Tab-separated table; run times are informational.
pub fn format_bench(rows: &[BenchRow]) -> String {
    let mut out = String::from("degree\tmethod\tresidual\tmax_rank\tfull_count\tseconds\tnote\n");
    for r in rows {
        let na = || "NA".to_string();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.degree,
            r.method,
            r.residual.map_or_else(na, |v| format!("{v:.3e}")),
            r.max_rank.map_or_else(na, |v| v.to_string()),
            r.full_count,
            r.seconds.map_or_else(na, |v| format!("{v:.2}")),
            r.note
        ));
    }
    out
}

pub fn cmd_bench(a: BenchArgs) -> Result<i32> {
    let text = format_bench(&bench_rows(&a)?);
    match &a.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

pub fn cmd_gen(g: GenCommand) -> Result<i32> {
    match g {
        GenCommand::Exp {
            d,
            memory,
            samples,
            seed,
            out,
        } => save_csv(&out, &decaying_exp_dataset(d, memory, samples, seed)?)?,
        GenCommand::Mixer {
            fs,
            duration,
            snr,
            seed,
            out,
            clean_out,
        } => {
            let clean = mixer_signals(fs, duration)?;
            if let Some(path) = &clean_out {
                save_csv(path, &clean)?;
            }
            let data = match snr {
                Some(snr_db) => {
                    let noisy = add_noise(&clean.outputs()[0], NoiseSpec { snr_db, seed })?;
                    clean.with_outputs(vec![noisy])?
                }
                None => clean,
            };
            save_csv(&out, &data)?;
        }
    }
    Ok(EXIT_OK)
}
