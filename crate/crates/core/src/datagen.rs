//! Synthetic systems and signals: decaying-exponential kernels, the mixer
//! surrogate, planted TN models and calibrated output noise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, VttnError};
use crate::model::{SystemShape, TnCore, VolterraModel};
use crate::regressor::{build_ut, TimeSeriesDataset};
use crate::tensor::{increment_index, DenseTensor};

/// Grid spacing of the kernel lag values, `h_i` is evaluated at `0.1·k`.
pub const EXP_GRID_STEP: f64 = 0.1;

fn exp_tap(k: usize) -> f64 {
    let x = EXP_GRID_STEP * k as f64;
    x * x
}

/// `h_i(k₁,…,k_i) = exp(−Σ (0.1·k_j)²)` for lags `0..memory`.
///
/// Each entry is evaluated once on the sorted index so the tensor is exactly symmetric.
pub fn decaying_exp_kernel(degree: usize, memory: usize) -> Result<DenseTensor> {
    if degree == 0 || memory == 0 {
        return Err(VttnError::Size("kernel degree and memory must be positive".into()));
    }
    let dims = vec![memory; degree];
    let mut t = DenseTensor::zeros(dims.clone())?;
    let mut idx = vec![0usize; degree];
    let mut sorted = idx.clone();
    for off in 0..t.len() {
        sorted.copy_from_slice(&idx);
        sorted.sort_unstable();
        let s: f64 = sorted.iter().map(|&k| exp_tap(k)).sum();
        t.data_mut()[off] = (-s).exp();
        increment_index(&mut idx, &dims);
    }
    Ok(t)
}

/// Output of `Σ_{i=1}^{degree} h_i` applied to a single input with zero prehistory; `h₀ = 0`.
///
/// The kernels factor as `h_i = g^{⊗i}` with `g(k) = exp(−(0.1k)²)`, so each
/// degree contributes `(Σ_k g(k)·u(t−k))^i` without materializing `h_i`.
pub fn simulate_truth_exp(degree: usize, memory: usize, input: &[f64]) -> Vec<f64> {
    let g: Vec<f64> = (0..memory).map(|k| (-exp_tap(k)).exp()).collect();
    (0..input.len())
        .map(|t| {
            let z: f64 = g
                .iter()
                .enumerate()
                .filter(|&(k, _)| k <= t)
                .map(|(k, gk)| gk * input[t - k])
                .sum();
            (1..=degree as i32).map(|i| z.powi(i)).sum()
        })
        .collect()
}

/// Uniform `[0, 1)` input with the decaying-exponential output, `n` samples.
pub fn decaying_exp_dataset(degree: usize, memory: usize, n: usize, seed: u64) -> Result<TimeSeriesDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y = simulate_truth_exp(degree, memory, &u);
    TimeSeriesDataset::new(vec![u], vec![y], None)
}

/// Ideal double-balanced mixer: 100 Hz sine LO times a 300 Hz square IF leading by π/8.
pub fn mixer_signals(fs: f64, duration: f64) -> Result<TimeSeriesDataset> {
    let n = (fs * duration).round() as usize;
    if n == 0 || !fs.is_finite() || fs <= 0.0 {
        return Err(VttnError::Dataset(format!("no samples for fs = {fs}, duration = {duration}")));
    }
    let mut lo = Vec::with_capacity(n);
    let mut sq = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fs;
        lo.push((2.0 * PI * 100.0 * t).sin());
        sq.push(if (2.0 * PI * 300.0 * t + PI / 8.0).sin() >= 0.0 { 1.0 } else { -1.0 });
    }
    let y = lo.iter().zip(&sq).map(|(a, b)| a * b).collect();
    TimeSeriesDataset::new(vec![lo, sq], vec![y], Some(fs))
}

/// Additive white Gaussian noise at a fixed SNR `20·log10(‖y‖/‖n‖)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

/// Adds seeded Gaussian noise rescaled so the achieved SNR equals `spec.snr_db`.
pub fn add_noise(y: &[f64], spec: NoiseSpec) -> Result<Vec<f64>> {
    if spec.snr_db == f64::INFINITY {
        return Ok(y.to_vec());
    }
    if spec.snr_db.is_nan() {
        return Err(VttnError::Config("SNR must not be NaN".into()));
    }
    let signal = norm(y);
    if signal == 0.0 {
        return Err(VttnError::ZeroSignal);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise: Vec<f64> = y.iter().map(|_| rng.sample(StandardNormal)).collect();
    let scale = signal / 10f64.powf(spec.snr_db / 20.0) / norm(&noise);
    Ok(y.iter().zip(&noise).map(|(v, e)| v + scale * e).collect())
}

/// `20·log10(‖reference‖ / ‖reference − estimate‖)`.
pub fn snr_db(reference: &[f64], estimate: &[f64]) -> f64 {
    let err: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    20.0 * (norm(reference) / err).log10()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Number of unit-uniform samples used to calibrate planted models.
const PLANT_CALIBRATION_SAMPLES: usize = 256;

/// Seeded random TN model whose outputs on unit-uniform inputs have RMS 1.
///
/// The core entries are standard normal; only the first core is rescaled.
/// The kernels of such a model are generally not symmetric, so the data only
/// determine their symmetric parts, whose TN ranks can exceed `ranks`.
pub fn planted_tn_model(shape: SystemShape, ranks: &[usize], seed: u64) -> Result<VolterraModel> {
    shape.validate_ranks(ranks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.n();
    let mut cores = Vec::with_capacity(shape.degree);
    for k in 0..shape.degree {
        let len = ranks[k] * n * ranks[k + 1];
        let data = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        cores.push(TnCore::new(ranks[k], n, ranks[k + 1], data)?);
    }
    normalize_rms(VolterraModel::new(shape, cores)?, &mut rng)
}

/// Seeded model `Σ_s c_s ⊗ a_s^{⊗d}` with `terms` summands.
///
/// Every output kernel is symmetric and all interior ranks equal `terms`, so the
/// planted tensor is the minimal-norm solution of its own noiseless data.
pub fn planted_symmetric_model(shape: SystemShape, terms: usize, seed: u64) -> Result<VolterraModel> {
    let (n, l, d) = (shape.n(), shape.l, shape.degree);
    if terms == 0 {
        return Err(VttnError::InvalidRanks("at least one term is required".into()));
    }
    let mut ranks = vec![terms; d + 1];
    ranks[0] = l;
    ranks[d] = 1;
    shape.validate_ranks(&ranks)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<Vec<f64>> = (0..terms).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let c: Vec<Vec<f64>> = (0..terms).map(|_| (0..l).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let cores = if d == 1 {
        let data = (0..l * n)
            .map(|off| (0..terms).map(|s| c[s][off % l] * a[s][off / l]).sum())
            .collect();
        vec![TnCore::new(l, n, 1, data)?]
    } else {
        let mut first = vec![0.0; l * n * terms];
        let mut mid = vec![0.0; terms * n * terms];
        let mut last = vec![0.0; terms * n];
        for s in 0..terms {
            for j in 0..n {
                for i in 0..l {
                    first[i + l * (j + n * s)] = c[s][i] * a[s][j];
                }
                mid[s + terms * (j + n * s)] = a[s][j];
                last[s + terms * j] = a[s][j];
            }
        }
        let mut cores = vec![TnCore::new(l, n, terms, first)?];
        for _ in 1..d - 1 {
            cores.push(TnCore::new(terms, n, terms, mid.clone())?);
        }
        cores.push(TnCore::new(terms, n, 1, last)?);
        cores
    };
    normalize_rms(VolterraModel::new(shape, cores)?, &mut rng)
}

/// Rescales the first core so outputs on unit-uniform probe inputs have RMS 1.
fn normalize_rms(model: VolterraModel, rng: &mut ChaCha8Rng) -> Result<VolterraModel> {
    let shape = model.shape();
    let n = shape.n();
    let probe: Vec<Vec<f64>> = (0..shape.p)
        .map(|_| (0..PLANT_CALIBRATION_SAMPLES).map(|_| rng.random::<f64>()).collect())
        .collect();
    let probe = TimeSeriesDataset::inputs_only(probe, None)?;
    let mut sq = 0.0;
    for t in 0..probe.len() {
        let y = model.simulate_sample(&build_ut(&probe, t, shape.memory)?)?;
        sq += y.iter().map(|v| v * v).sum::<f64>();
    }
    let rms = (sq / (probe.len() * shape.l) as f64).sqrt();
    if rms == 0.0 {
        return Ok(model);
    }
    let mut cores = model.into_cores();
    let first = &cores[0];
    let scaled = first.as_slice().iter().map(|v| v / rms).collect();
    cores[0] = TnCore::new(first.left_rank(), n, first.right_rank(), scaled)?;
    VolterraModel::new(shape, cores)
}

/// Noiseless outputs of `model` for seeded unit-uniform inputs.
pub fn planted_dataset(model: &VolterraModel, n: usize, seed: u64) -> Result<TimeSeriesDataset> {
    let shape = model.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Vec<f64>> = (0..shape.p).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
    let data = TimeSeriesDataset::inputs_only(inputs, None)?;
    let y = crate::regressor::simulate_series(model, &data)?;
    let outputs = (0..shape.l).map(|i| y.column(i).iter().copied().collect()).collect();
    data.with_outputs(outputs)
}
