//! Regression matrices of the identification problem.
//!
//! Row block `t` of every system holds `l` rows, one per output, so stacked
//! right-hand sides are `vec(Yᵀ)` with the output index fastest.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, VttnError};
use crate::linalg::{default_rcond, numerical_rank};
use crate::model::{SystemShape, TnCore, VolterraModel};
use crate::tensor::{check_budget, kron_power};

/// Aligned input/output channels.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
    sample_rate: Option<f64>,
}

impl TimeSeriesDataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<Vec<f64>>, sample_rate: Option<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(VttnError::Dataset("at least one input channel is required".into()));
        }
        let n = inputs[0].len();
        if n == 0 {
            return Err(VttnError::Dataset("dataset has no samples".into()));
        }
        if let Some((i, c)) = inputs.iter().enumerate().find(|(_, c)| c.len() != n) {
            return Err(VttnError::Dataset(format!(
                "input channel {} has {} samples, expected {n}",
                i + 1,
                c.len()
            )));
        }
        if let Some((i, c)) = outputs.iter().enumerate().find(|(_, c)| c.len() != n) {
            return Err(VttnError::Dataset(format!(
                "output channel {} has {} samples, expected {n}",
                i + 1,
                c.len()
            )));
        }
        Ok(Self {
            inputs,
            outputs,
            sample_rate,
        })
    }

    /// Dataset without measured outputs, for simulation.
    pub fn inputs_only(inputs: Vec<Vec<f64>>, sample_rate: Option<f64>) -> Result<Self> {
        Self::new(inputs, Vec::new(), sample_rate)
    }

    pub fn p(&self) -> usize {
        self.inputs.len()
    }

    pub fn l(&self) -> usize {
        self.outputs.len()
    }

    pub fn len(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> Option<f64> {
        self.sample_rate
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.outputs
    }

    pub fn input(&self, channel: usize, t: usize) -> f64 {
        self.inputs[channel][t]
    }

    /// First `n` samples.
    pub fn head(&self, n: usize) -> Result<Self> {
        self.slice(0..n)
    }

    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(VttnError::Dataset(format!(
                "sample range {range:?} is empty or exceeds {} samples",
                self.len()
            )));
        }
        let cut = |chs: &[Vec<f64>]| chs.iter().map(|c| c[range.clone()].to_vec()).collect();
        Ok(Self {
            inputs: cut(&self.inputs),
            outputs: cut(&self.outputs),
            sample_rate: self.sample_rate,
        })
    }

    /// Replaces the outputs, keeping inputs and sample rate.
    pub fn with_outputs(&self, outputs: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.inputs.clone(), outputs, self.sample_rate)
    }

    /// Output matrix `Y` (N × l).
    pub fn output_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), self.l(), |t, i| self.outputs[i][t])
    }
}

/// Handling of samples whose regressor reaches before `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prehistory {
    /// Inputs before the first sample are zero.
    #[default]
    ZeroPad,
    /// Rows with `t < M − 1` are dropped from the regression.
    Trim,
}

impl Prehistory {
    pub fn rows(self, n_samples: usize, memory: usize) -> Range<usize> {
        match self {
            Prehistory::ZeroPad => 0..n_samples,
            Prehistory::Trim => (memory - 1).min(n_samples)..n_samples,
        }
    }
}

/// Extended input vector `(1, u₁(t), …, u_p(t), u₁(t−1), …, u_p(t−M+1))`.
pub fn build_ut(data: &TimeSeriesDataset, t: usize, memory: usize) -> Result<Vec<f64>> {
    if t >= data.len() {
        return Err(VttnError::IndexOutOfRange {
            index: t,
            len: data.len(),
        });
    }
    let p = data.p();
    let mut u = Vec::with_capacity(p * memory + 1);
    u.push(1.0);
    for lag in 0..memory {
        for ch in 0..p {
            u.push(if lag <= t { data.input(ch, t - lag) } else { 0.0 });
        }
    }
    Ok(u)
}

/// Regressor rows and targets for a sample range, shared by every sweep step.
#[derive(Debug, Clone)]
pub struct Regression {
    shape: SystemShape,
    rows: Vec<DVector<f64>>,
    targets: DVector<f64>,
    first_sample: usize,
}

impl Regression {
    pub fn new(data: &TimeSeriesDataset, shape: SystemShape, prehistory: Prehistory) -> Result<Self> {
        check_dataset(data, shape, true)?;
        let range = prehistory.rows(data.len(), shape.memory);
        if range.is_empty() {
            return Err(VttnError::Dataset(format!(
                "no usable samples: N = {} with memory {}",
                data.len(),
                shape.memory
            )));
        }
        let l = shape.l;
        let mut rows = Vec::with_capacity(range.len());
        let mut targets = DVector::zeros(l * range.len());
        for (row, t) in range.clone().enumerate() {
            rows.push(DVector::from_vec(build_ut(data, t, shape.memory)?));
            for i in 0..l {
                targets[i + l * row] = data.outputs()[i][t];
            }
        }
        Ok(Self {
            shape,
            rows,
            targets,
            first_sample: range.start,
        })
    }

    pub fn shape(&self) -> SystemShape {
        self.shape
    }

    pub fn inputs(&self) -> &[DVector<f64>] {
        &self.rows
    }

    /// `vec(Yᵀ)` over the used samples.
    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    /// Number of equations `l·N`.
    pub fn equations(&self) -> usize {
        self.targets.len()
    }

    pub fn samples(&self) -> usize {
        self.rows.len()
    }

    pub fn first_sample(&self) -> usize {
        self.first_sample
    }

    pub fn target_norm(&self) -> f64 {
        self.targets.norm()
    }

    /// Model output stacked as `vec(Ŷᵀ)`.
    pub fn predict(&self, model: &VolterraModel) -> Result<DVector<f64>> {
        let l = self.shape.l;
        let mut out = DVector::zeros(self.equations());
        for (t, u) in self.rows.iter().enumerate() {
            let y = model.simulate_sample(u.as_slice())?;
            out.rows_mut(l * t, l).copy_from_slice(&y);
        }
        Ok(out)
    }

    /// `‖Y − Ŷ‖_F / ‖Y‖_F` (absolute when `Y = 0`).
    pub fn relative_residual(&self, model: &VolterraModel) -> Result<f64> {
        let err = (self.predict(model)? - &self.targets).norm();
        Ok(relative(err, self.target_norm()))
    }
}

pub(crate) fn relative(err: f64, norm: f64) -> f64 {
    if norm > 0.0 {
        err / norm
    } else {
        err
    }
}

pub(crate) fn check_dataset(data: &TimeSeriesDataset, shape: SystemShape, need_outputs: bool) -> Result<()> {
    if data.p() != shape.p {
        return Err(VttnError::Mismatch(format!(
            "model expects {} inputs, data has {}",
            shape.p,
            data.p()
        )));
    }
    if need_outputs && data.l() != shape.l {
        return Err(VttnError::Mismatch(format!(
            "model expects {} outputs, data has {}",
            shape.l,
            data.l()
        )));
    }
    Ok(())
}

/// Simulated outputs `Ŷ` (N × l) over every sample of `data`, zero prehistory.
pub fn simulate_series(model: &VolterraModel, data: &TimeSeriesDataset) -> Result<DMatrix<f64>> {
    check_dataset(data, model.shape(), false)?;
    crate::model::simulate_rows(model, &regressor_rows(data, model.shape().memory)?)
}

/// Full regression matrix `U` (N × (pM+1)^d), row `t` = `(u_t^{⊗d})ᵀ`.
pub fn build_full_u(data: &TimeSeriesDataset, memory: usize, degree: usize) -> Result<DMatrix<f64>> {
    let n = data.p() * memory + 1;
    let cols = (n as u128).saturating_pow(degree as u32);
    check_budget(cols.saturating_mul(data.len() as u128))?;
    let cols = cols as usize;
    let mut u = DMatrix::zeros(data.len(), cols);
    for t in 0..data.len() {
        let row = kron_power(&build_ut(data, t, memory)?, degree)?;
        for (j, v) in row.into_iter().enumerate() {
            u[(t, j)] = v;
        }
    }
    Ok(u)
}

/// Binomial coefficient `C(n, k)`, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Maximal rank of `U`: `C(pM + d, pM)`, the number of distinct monomials.
pub fn excitation_bound(p: usize, memory: usize, degree: usize) -> u128 {
    let pm = (p * memory) as u64;
    binomial(pm + degree as u64, pm).unwrap_or(u128::MAX)
}

/// Numerical rank of the full `U` and whether it attains [`excitation_bound`].
///
/// Oracle scale only: `U` is materialized.
pub fn excitation_rank(data: &TimeSeriesDataset, memory: usize, degree: usize) -> Result<(usize, u128)> {
    let u = build_full_u(data, memory, degree)?;
    let rank = numerical_rank(&u, Some(default_rcond(u.nrows(), u.ncols())))?;
    Ok((rank, excitation_bound(data.p(), memory, degree)))
}

pub fn is_persistently_exciting(data: &TimeSeriesDataset, memory: usize, degree: usize) -> Result<bool> {
    let (rank, bound) = excitation_rank(data, memory, degree)?;
    Ok(rank as u128 == bound)
}

/// Per-sample partial products of the cores left of a position.
///
/// `left_envs(model, inputs, k)[t]` is `(V⁽¹⁾×₂u_tᵀ)⋯(V⁽ᵏ⁾×₂u_tᵀ)`, an
/// `l × r_k` matrix (`I_l` for `k = 0`).
pub fn left_envs(model: &VolterraModel, inputs: &[DVector<f64>], k: usize) -> Vec<DMatrix<f64>> {
    let l = model.shape().l;
    let mut envs: Vec<DMatrix<f64>> = inputs.iter().map(|_| DMatrix::identity(l, l)).collect();
    for core in &model.cores()[..k] {
        advance_left(&mut envs, core, inputs);
    }
    envs
}

/// Per-sample partial products of the cores from position `k` to the end.
///
/// `right_envs(model, inputs, k)[t]` has length `r_k` (the scalar 1 for `k = d`).
pub fn right_envs(model: &VolterraModel, inputs: &[DVector<f64>], k: usize) -> Vec<DVector<f64>> {
    let mut envs: Vec<DVector<f64>> = inputs.iter().map(|_| DVector::from_element(1, 1.0)).collect();
    for core in model.cores()[k..].iter().rev() {
        advance_right(&mut envs, core, inputs);
    }
    envs
}

/// Appends one core to every left environment.
pub fn advance_left(envs: &mut [DMatrix<f64>], core: &TnCore, inputs: &[DVector<f64>]) {
    for (env, u) in envs.iter_mut().zip(inputs) {
        *env = &*env * core.contract_input(u.as_slice());
    }
}

/// Prepends one core to every right environment.
pub fn advance_right(envs: &mut [DVector<f64>], core: &TnCore, inputs: &[DVector<f64>]) {
    for (env, u) in envs.iter_mut().zip(inputs) {
        *env = core.contract_input(u.as_slice()) * &*env;
    }
}

/// Stacks the rows `v_{k+1}ᵀ ⊗ u_tᵀ ⊗ v_{k−1}` for a single-core unknown.
pub fn assemble_core_system(
    lefts: &[DMatrix<f64>],
    rights: &[DVector<f64>],
    inputs: &[DVector<f64>],
) -> DMatrix<f64> {
    let l = lefts[0].nrows();
    let ra = lefts[0].ncols();
    let rb = rights[0].len();
    let n = inputs[0].len();
    let mut a = DMatrix::zeros(l * inputs.len(), ra * n * rb);
    for (t, ((left, right), u)) in lefts.iter().zip(rights).zip(inputs).enumerate() {
        for b in 0..rb {
            for j in 0..n {
                let w = right[b] * u[j];
                if w == 0.0 {
                    continue;
                }
                for a_idx in 0..ra {
                    let col = a_idx + ra * (j + n * b);
                    for i in 0..l {
                        a[(i + l * t, col)] = w * left[(i, a_idx)];
                    }
                }
            }
        }
    }
    a
}

/// Stacks the rows `v_{k+2}ᵀ ⊗ (u_tᵀ)^{⊗2} ⊗ v_{k−1}` for a super-core unknown.
///
/// Column order is `vec` of the super-core `(r_{k−1}, n, n, r_{k+1})` with the
/// left core's physical index before the right core's.
pub fn assemble_pair_system(
    lefts: &[DMatrix<f64>],
    rights: &[DVector<f64>],
    inputs: &[DVector<f64>],
) -> DMatrix<f64> {
    let l = lefts[0].nrows();
    let ra = lefts[0].ncols();
    let rb = rights[0].len();
    let n = inputs[0].len();
    let mut a = DMatrix::zeros(l * inputs.len(), ra * n * n * rb);
    for (t, ((left, right), u)) in lefts.iter().zip(rights).zip(inputs).enumerate() {
        for b in 0..rb {
            for j2 in 0..n {
                let w2 = right[b] * u[j2];
                if w2 == 0.0 {
                    continue;
                }
                for j1 in 0..n {
                    let w = w2 * u[j1];
                    if w == 0.0 {
                        continue;
                    }
                    for a_idx in 0..ra {
                        let col = a_idx + ra * (j1 + n * (j2 + n * b));
                        for i in 0..l {
                            a[(i + l * t, col)] = w * left[(i, a_idx)];
                        }
                    }
                }
            }
        }
    }
    a
}

/// Reduced ALS matrix `U_k` (lN × r_{k−1}(pM+1)r_k) for zero-based core `k`.
pub fn build_uk(data: &TimeSeriesDataset, model: &VolterraModel, k: usize) -> Result<DMatrix<f64>> {
    let d = model.shape().degree;
    if k >= d {
        return Err(VttnError::IndexOutOfRange { index: k, len: d });
    }
    check_dataset(data, model.shape(), false)?;
    let inputs = regressor_rows(data, model.shape().memory)?;
    let lefts = left_envs(model, &inputs, k);
    let rights = right_envs(model, &inputs, k + 1);
    Ok(assemble_core_system(&lefts, &rights, &inputs))
}

/// Reduced MALS matrix `U_{k,k+1}` (lN × r_{k−1}(pM+1)²r_{k+1}) for zero-based pair `(k, k+1)`.
pub fn build_uk_pair(data: &TimeSeriesDataset, model: &VolterraModel, k: usize) -> Result<DMatrix<f64>> {
    let d = model.shape().degree;
    if d < 2 {
        return Err(VttnError::Config("a super-core needs degree at least 2".into()));
    }
    if k + 1 >= d {
        return Err(VttnError::IndexOutOfRange { index: k, len: d - 1 });
    }
    check_dataset(data, model.shape(), false)?;
    let inputs = regressor_rows(data, model.shape().memory)?;
    let lefts = left_envs(model, &inputs, k);
    let rights = right_envs(model, &inputs, k + 2);
    Ok(assemble_pair_system(&lefts, &rights, &inputs))
}

/// Contraction of cores `k` and `k+1` over their shared rank, dims `(r_{k−1}, n², r_{k+1})`.
pub fn supercore(left: &TnCore, right: &TnCore) -> Result<crate::tensor::DenseTensor> {
    if left.right_rank() != right.left_rank() {
        return Err(VttnError::InvalidRanks(format!(
            "cannot contract cores with ranks {} and {}",
            left.right_rank(),
            right.left_rank()
        )));
    }
    let n = left.dim();
    let w = left.left_unfolding() * right.right_unfolding();
    crate::tensor::DenseTensor::new(
        vec![left.left_rank(), n * right.dim(), right.right_rank()],
        w.as_slice().to_vec(),
    )
}

fn regressor_rows(data: &TimeSeriesDataset, memory: usize) -> Result<Vec<DVector<f64>>> {
    (0..data.len())
        .map(|t| build_ut(data, t, memory).map(DVector::from_vec))
        .collect()
}
