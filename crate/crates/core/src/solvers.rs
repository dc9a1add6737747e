//! ALS and MALS sweeps over the cores of a [`VolterraModel`].
//!
//! Both algorithms keep the model in mixed-canonical form: before core `k` (or
//! the pair `k, k+1`) is solved, every core to its left is left orthogonal and
//! every core to its right is right orthogonal. Core and pair indices in this
//! module are zero-based; error messages report them one-based.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, VttnError};
use crate::linalg::{lstsq_vec, thin_qr, Svd, EPS};
use crate::model::{SystemShape, TnCore, VolterraModel};
use crate::regressor::{
    advance_left, advance_right, assemble_core_system, assemble_pair_system, relative, Prehistory, Regression,
    TimeSeriesDataset,
};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Als,
    Mals,
}

impl std::str::FromStr for Algorithm {
    type Err = VttnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "als" => Ok(Algorithm::Als),
            "mals" => Ok(Algorithm::Mals),
            other => Err(VttnError::Config(format!("unknown algorithm {other:?} (expected als or mals)"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Als => "als",
            Algorithm::Mals => "mals",
        })
    }
}

/// Singular-value threshold `τ` used when splitting a super-core.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SvdTolerance {
    /// `ε·s₁·max(rows, cols)`.
    MachineDefault,
    Absolute(f64),
    /// Fraction of `s₁`.
    Relative(f64),
}

impl SvdTolerance {
    pub fn threshold(self, s1: f64, rows: usize, cols: usize) -> f64 {
        match self {
            SvdTolerance::MachineDefault => EPS * s1 * rows.max(cols) as f64,
            SvdTolerance::Absolute(tau) => tau,
            SvdTolerance::Relative(frac) => frac * s1,
        }
    }
}

/// Distribution of the initial core entries before right-orthogonalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitDistribution {
    /// Uniform on `[0, 1)`.
    #[default]
    Uniform,
    StandardNormal,
}

/// When the residual is compared against `residual_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Termination {
    /// After every half-sweep.
    #[default]
    HalfSweep,
    /// Only after complete left-to-right plus right-to-left sweeps.
    FullSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Interior ranks `r_1..r_{d-1}`. Fixed for ALS; the starting ranks for MALS
    /// (all ones when empty).
    pub ranks: Vec<usize>,
    pub residual_tol: f64,
    /// Full sweeps, each a left-to-right and a right-to-left half-sweep.
    pub max_sweeps: usize,
    pub svd_tol: SvdTolerance,
    pub max_rank: usize,
    /// Relative cutoff for the minimal-norm solves; `None` means `ε·max(rows, cols)`.
    pub ls_rcond: Option<f64>,
    pub seed: u64,
    pub init: InitDistribution,
    pub prehistory: Prehistory,
    pub termination: Termination,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Mals,
            ranks: Vec::new(),
            residual_tol: 1e-4,
            max_sweeps: 50,
            svd_tol: SvdTolerance::MachineDefault,
            max_rank: 50,
            ls_rcond: None,
            seed: 0,
            init: InitDistribution::Uniform,
            prehistory: Prehistory::ZeroPad,
            termination: Termination::HalfSweep,
        }
    }
}

impl SolverConfig {
    pub fn als(ranks: Vec<usize>) -> Self {
        Self {
            algorithm: Algorithm::Als,
            ranks,
            ..Self::default()
        }
    }

    pub fn mals() -> Self {
        Self::default()
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self, degree: usize) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(VttnError::Config("residual_tol must be positive".into()));
        }
        if self.max_sweeps == 0 {
            return Err(VttnError::Config("max_sweeps must be at least 1".into()));
        }
        if self.max_rank == 0 {
            return Err(VttnError::Config("max_rank must be at least 1".into()));
        }
        match self.svd_tol {
            SvdTolerance::Absolute(t) | SvdTolerance::Relative(t) if !(t >= 0.0) => {
                return Err(VttnError::Config("SVD tolerance must be non-negative".into()));
            }
            _ => {}
        }
        if self.algorithm == Algorithm::Als && self.ranks.len() != degree - 1 {
            return Err(VttnError::Config(format!(
                "ALS needs {} interior ranks for degree {degree}, got {}",
                degree - 1,
                self.ranks.len()
            )));
        }
        if self.algorithm == Algorithm::Mals && !self.ranks.is_empty() && self.ranks.len() != degree - 1 {
            return Err(VttnError::Config(format!(
                "expected {} starting ranks for degree {degree}, got {}",
                degree - 1,
                self.ranks.len()
            )));
        }
        if self.ranks.contains(&0) {
            return Err(VttnError::Config("ranks must be at least 1".into()));
        }
        Ok(())
    }

    fn interior_ranks(&self, degree: usize) -> Vec<usize> {
        if self.ranks.is_empty() {
            vec![1; degree - 1]
        } else {
            self.ranks.clone()
        }
    }
}

/// One core or super-core update.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveStep {
    pub half_sweep: usize,
    /// Zero-based core, or first core of the pair.
    pub core: usize,
    pub residual_before: f64,
    pub residual_after_solve: f64,
    /// After orthogonalization (ALS) or truncation (MALS).
    pub residual_after_update: f64,
    /// `sqrt(Σ s_i²)` over dropped singular values; zero for ALS.
    pub discarded_energy: f64,
    /// `r_k` after the update.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub algorithm: Algorithm,
    pub initial_residual: f64,
    /// Relative training residual after each half-sweep.
    pub residual_trace: Vec<f64>,
    pub solve_trace: Vec<SolveStep>,
    /// Largest orthogonality defect after each half-sweep.
    pub orthogonality_audit: Vec<f64>,
    pub final_ranks: Vec<usize>,
    pub half_sweeps: usize,
    pub sweeps_used: usize,
    pub converged: bool,
}

impl SolverReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_trace.last().copied().unwrap_or(self.initial_residual)
    }

    pub fn max_rank(&self) -> usize {
        let r = &self.final_ranks;
        r[1..r.len() - 1].iter().copied().max().unwrap_or(1)
    }
}

/// Random model with cores `2..d` right orthogonal.
///
/// `ranks` is the full chain `r_0 = l, .., r_d = 1`.
pub fn init_right_orthogonal(
    shape: SystemShape,
    ranks: &[usize],
    seed: u64,
    init: InitDistribution,
) -> Result<VolterraModel> {
    shape.validate_ranks(ranks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.n();
    let mut cores = Vec::with_capacity(shape.degree);
    for k in 0..shape.degree {
        let len = ranks[k] * n * ranks[k + 1];
        let data: Vec<f64> = match init {
            InitDistribution::Uniform => (0..len).map(|_| rng.random::<f64>()).collect(),
            InitDistribution::StandardNormal => (0..len).map(|_| rng.sample(StandardNormal)).collect(),
        };
        cores.push(TnCore::new(ranks[k], n, ranks[k + 1], data)?);
    }
    for k in (1..shape.degree).rev() {
        let (prev, core) = orthogonalize_right(&cores[k - 1], &cores[k])?;
        cores[k - 1] = prev;
        cores[k] = core;
    }
    VolterraModel::new(shape, cores)
}

/// Makes `core` left orthogonal and moves the triangular factor into `next`.
fn orthogonalize_left(core: &TnCore, next: &TnCore) -> Result<(TnCore, TnCore)> {
    let (q, r) = thin_qr(&core.left_unfolding());
    let next = TnCore::from_right_unfolding(&(r * next.right_unfolding()), next.dim())?;
    Ok((TnCore::from_left_unfolding(&q, core.dim())?, next))
}

/// Makes `core` right orthogonal and moves the triangular factor into `prev`.
fn orthogonalize_right(prev: &TnCore, core: &TnCore) -> Result<(TnCore, TnCore)> {
    let (q, r) = thin_qr(&core.right_unfolding().transpose());
    let prev = TnCore::from_left_unfolding(&(prev.left_unfolding() * r.transpose()), prev.dim())?;
    Ok((prev, TnCore::from_right_unfolding(&q.transpose(), core.dim())?))
}

/// Minimal-norm solution of `U_k·x ≈ y`; returns `x` and `‖U_k·x − y‖`.
///
/// An all-zero `U_k` gives `x = 0` with residual `‖y‖`.
pub fn solve_core(uk: &DMatrix<f64>, y: &DVector<f64>, rcond: Option<f64>) -> Result<(DVector<f64>, f64)> {
    let (x, res, _) = lstsq_vec(uk, y, rcond)?;
    Ok((x, res))
}

/// Result of splitting a super-core.
#[derive(Debug, Clone)]
pub struct Split {
    pub left: TnCore,
    pub right: TnCore,
    pub rank: usize,
    pub discarded_energy: f64,
}

/// Truncated SVD of the `r_{k−1}n × n·r_{k+1}` unfolding of `w`.
///
/// Left-to-right keeps `U` as the left core (left orthogonal) and `S·Vᵀ` as the
/// right core; right-to-left keeps `U·S` and `Vᵀ` (right orthogonal).
pub fn split_supercore(w: &DenseTensor, direction: Direction, tol: SvdTolerance, max_rank: usize) -> Result<Split> {
    let dims = w.dims();
    if dims.len() != 3 {
        return Err(VttnError::Size(format!("super-core must be 3-way, got dims {dims:?}")));
    }
    let (ra, nn, rb) = (dims[0], dims[1], dims[2]);
    let n = (nn as f64).sqrt().round() as usize;
    if n * n != nn {
        return Err(VttnError::Size(format!("super-core middle dimension {nn} is not a square")));
    }
    let (rows, cols) = (ra * n, n * rb);
    let m = DMatrix::from_column_slice(rows, cols, w.data());
    let svd = Svd::new(&m)?;
    let s1 = svd.largest();
    let tau = tol.threshold(s1, rows, cols);
    let kept = if s1 > 0.0 { svd.count_at_least(tau) } else { 1 };
    let rank = kept.clamp(1, max_rank.max(1)).min(rows.min(cols));
    let discarded_energy = svd.s[rank..].iter().map(|s| s * s).sum::<f64>().sqrt();

    let u = svd.u.columns(0, rank).into_owned();
    let v_t = svd.v_t.rows(0, rank).into_owned();
    let s = DMatrix::from_diagonal(&DVector::from_column_slice(&svd.s[..rank]));
    let (lm, rm) = match direction {
        Direction::LeftToRight => (u, s * v_t),
        Direction::RightToLeft => (u * s, v_t),
    };
    Ok(Split {
        left: TnCore::from_left_unfolding(&lm, n)?,
        right: TnCore::from_right_unfolding(&rm, n)?,
        rank,
        discarded_energy,
    })
}

/// Per-position stacks of left environments, `stack[k]` covering cores `0..k`.
fn left_stack(model: &VolterraModel, inputs: &[DVector<f64>], upto: usize) -> Vec<Vec<DMatrix<f64>>> {
    let l = model.shape().l;
    let mut cur: Vec<DMatrix<f64>> = inputs.iter().map(|_| DMatrix::identity(l, l)).collect();
    let mut stack = Vec::with_capacity(upto + 1);
    for k in 0..upto {
        stack.push(cur.clone());
        advance_left(&mut cur, model.core(k), inputs);
    }
    stack.push(cur);
    stack
}

/// Per-position stacks of right environments, `stack[k]` covering cores `k..d`.
/// Only positions `from..=d` are filled.
fn right_stack(model: &VolterraModel, inputs: &[DVector<f64>], from: usize) -> Vec<Vec<DVector<f64>>> {
    let d = model.shape().degree;
    let mut cur: Vec<DVector<f64>> = inputs.iter().map(|_| DVector::from_element(1, 1.0)).collect();
    let mut stack = vec![Vec::new(); d + 1];
    for k in (from..d).rev() {
        stack[k + 1] = cur.clone();
        advance_right(&mut cur, model.core(k), inputs);
    }
    stack[from] = cur;
    stack
}

/// Sweep state shared by the half-sweep drivers.
struct Sweep<'a> {
    reg: &'a Regression,
    rcond: Option<f64>,
    target_norm: f64,
    steps: Vec<SolveStep>,
}

impl<'a> Sweep<'a> {
    fn new(reg: &'a Regression, rcond: Option<f64>) -> Self {
        Self {
            reg,
            rcond,
            target_norm: reg.target_norm(),
            steps: Vec::new(),
        }
    }

    fn rel(&self, err: f64) -> f64 {
        relative(err, self.target_norm)
    }

    fn solve(&self, a: &DMatrix<f64>, current: &[f64]) -> Result<(DVector<f64>, f64, f64)> {
        let y = self.reg.targets();
        let before = (a * DVector::from_column_slice(current) - y).norm();
        let (x, res) = solve_core(a, y, self.rcond)?;
        Ok((x, self.rel(before), self.rel(res)))
    }
}

/// One ALS half-sweep with fixed ranks.
pub fn als_half_sweep(model: VolterraModel, reg: &Regression, direction: Direction, rcond: Option<f64>) -> Result<VolterraModel> {
    als_half_sweep_traced(model, reg, direction, rcond, 0).map(|(m, _)| m)
}

fn als_half_sweep_traced(
    mut model: VolterraModel,
    reg: &Regression,
    direction: Direction,
    rcond: Option<f64>,
    half_sweep: usize,
) -> Result<(VolterraModel, Vec<SolveStep>)> {
    let shape = model.shape();
    let d = shape.degree;
    let n = shape.n();
    let inputs = reg.inputs();
    let mut sweep = Sweep::new(reg, rcond);

    let order: Vec<usize> = match (d, direction) {
        (1, _) => vec![0],
        (_, Direction::LeftToRight) => (0..d - 1).collect(),
        (_, Direction::RightToLeft) => (1..d).rev().collect(),
    };

    let lefts = left_stack(&model, inputs, if direction == Direction::RightToLeft { d - 1 } else { 0 });
    let rights = right_stack(&model, inputs, if direction == Direction::LeftToRight { 1 } else { d });
    let mut cur_left = lefts[0].clone();
    let mut cur_right = rights[d].clone();

    for &k in &order {
        let core = model.core(k);
        let (ra, rb) = (core.left_rank(), core.right_rank());
        let unknowns = ra * n * rb;
        if reg.equations() < unknowns {
            return Err(VttnError::UnderdeterminedCore {
                core: k + 1,
                rows: reg.equations(),
                unknowns,
            });
        }
        let (left_env, right_env) = match direction {
            Direction::LeftToRight => (&cur_left, &rights[k + 1]),
            Direction::RightToLeft => (&lefts[k], &cur_right),
        };
        let a = assemble_core_system(left_env, right_env, inputs);
        let (x, before, after_solve) = sweep.solve(&a, core.as_slice())?;
        let solved = TnCore::new(ra, n, rb, x.as_slice().to_vec())?;

        let cores = model.cores_mut();
        cores[k] = solved;
        if d > 1 {
            match direction {
                Direction::LeftToRight => {
                    let (c, next) = orthogonalize_left(&cores[k], &cores[k + 1])?;
                    cores[k] = c;
                    cores[k + 1] = next;
                    advance_left(&mut cur_left, &cores[k], inputs);
                }
                Direction::RightToLeft => {
                    let (prev, c) = orthogonalize_right(&cores[k - 1], &cores[k])?;
                    cores[k - 1] = prev;
                    cores[k] = c;
                    advance_right(&mut cur_right, &cores[k], inputs);
                }
            }
        }
        let after_update = reg.relative_residual(&model)?;
        sweep.steps.push(SolveStep {
            half_sweep,
            core: k,
            residual_before: before,
            residual_after_solve: after_solve,
            residual_after_update: after_update,
            discarded_energy: 0.0,
            rank: model.core(k).right_rank(),
        });
    }
    Ok((model, sweep.steps))
}

/// After a left-to-right split shrinks `r_{k+1}`, bonds left of core `k` can
/// exceed `n·r_{k+1}`. Re-splits each such bond exactly, moving the factor `U`
/// into the left neighbour, so both cores stay left orthogonal.
fn restore_bounds_leftward(cores: &mut [TnCore], k: usize) -> Result<()> {
    let mut j = k;
    while j >= 1 && cores[j].left_rank() > cores[j].dim() * cores[j].right_rank() {
        let n = cores[j].dim();
        let svd = Svd::new(&cores[j].right_unfolding())?;
        let q = svd.s.len();
        let s = DMatrix::from_diagonal(&DVector::from_column_slice(&svd.s));
        cores[j] = TnCore::from_right_unfolding(&(s * &svd.v_t), n)?;
        cores[j - 1] = TnCore::from_left_unfolding(&(cores[j - 1].left_unfolding() * svd.u.columns(0, q)), n)?;
        j -= 1;
    }
    Ok(())
}

/// Mirror of [`restore_bounds_leftward`] for right-to-left sweeps, starting at
/// the right-orthogonal core `k`.
fn restore_bounds_rightward(cores: &mut [TnCore], k: usize) -> Result<()> {
    let mut j = k;
    while j + 1 < cores.len() && cores[j].right_rank() > cores[j].dim() * cores[j].left_rank() {
        let n = cores[j].dim();
        let svd = Svd::new(&cores[j].left_unfolding())?;
        let q = svd.s.len();
        let s = DMatrix::from_diagonal(&DVector::from_column_slice(&svd.s));
        cores[j] = TnCore::from_left_unfolding(&(svd.u.columns(0, q) * s), n)?;
        cores[j + 1] = TnCore::from_right_unfolding(&(&svd.v_t * cores[j + 1].right_unfolding()), n)?;
        j += 1;
    }
    Ok(())
}

/// One MALS half-sweep over all adjacent pairs.
pub fn mals_half_sweep(
    model: VolterraModel,
    reg: &Regression,
    direction: Direction,
    config: &SolverConfig,
) -> Result<VolterraModel> {
    mals_half_sweep_traced(model, reg, direction, config, 0).map(|(m, _)| m)
}

fn mals_half_sweep_traced(
    mut model: VolterraModel,
    reg: &Regression,
    direction: Direction,
    config: &SolverConfig,
    half_sweep: usize,
) -> Result<(VolterraModel, Vec<SolveStep>)> {
    let shape = model.shape();
    let d = shape.degree;
    if d < 2 {
        return Err(VttnError::Config("MALS needs degree at least 2".into()));
    }
    let n = shape.n();
    let inputs = reg.inputs();
    let mut sweep = Sweep::new(reg, config.ls_rcond);

    let order: Vec<usize> = match direction {
        Direction::LeftToRight => (0..d - 1).collect(),
        Direction::RightToLeft => (0..d - 1).rev().collect(),
    };
    let lefts = if direction == Direction::RightToLeft {
        left_stack(&model, inputs, d - 2)
    } else {
        Vec::new()
    };
    let rights = if direction == Direction::LeftToRight {
        right_stack(&model, inputs, 2)
    } else {
        Vec::new()
    };
    let l = shape.l;
    let mut cur_left: Vec<DMatrix<f64>> = inputs.iter().map(|_| DMatrix::identity(l, l)).collect();
    let mut cur_right: Vec<DVector<f64>> = inputs.iter().map(|_| DVector::from_element(1, 1.0)).collect();

    for &k in &order {
        let (ra, rb) = (model.core(k).left_rank(), model.core(k + 1).right_rank());
        let unknowns = ra * n * n * rb;
        if reg.equations() < unknowns {
            return Err(VttnError::UnderdeterminedPair {
                core: k + 1,
                rows: reg.equations(),
                unknowns,
            });
        }
        let (left_env, right_env) = match direction {
            Direction::LeftToRight => (&cur_left, &rights[k + 2]),
            Direction::RightToLeft => (&lefts[k], &cur_right),
        };
        let a = assemble_pair_system(left_env, right_env, inputs);
        let current = crate::regressor::supercore(model.core(k), model.core(k + 1))?;
        let (x, before, after_solve) = sweep.solve(&a, current.data())?;
        let w = DenseTensor::new(vec![ra, n * n, rb], x.as_slice().to_vec())?;
        let split = split_supercore(&w, direction, config.svd_tol, config.max_rank)?;

        let cores = model.cores_mut();
        cores[k] = split.left;
        cores[k + 1] = split.right;
        // Environments first: compression rewrites the cores they cover
        // without changing their product.
        match direction {
            Direction::LeftToRight => {
                advance_left(&mut cur_left, &cores[k], inputs);
                restore_bounds_leftward(cores, k)?;
            }
            Direction::RightToLeft => {
                advance_right(&mut cur_right, &cores[k + 1], inputs);
                restore_bounds_rightward(cores, k + 1)?;
            }
        }
        let after_update = reg.relative_residual(&model)?;
        sweep.steps.push(SolveStep {
            half_sweep,
            core: k,
            residual_before: before,
            residual_after_solve: after_solve,
            residual_after_update: after_update,
            discarded_energy: split.discarded_energy,
            rank: split.rank,
        });
    }
    Ok((model, sweep.steps))
}

/// Largest orthogonality defect of the cores a half-sweep in `direction` leaves canonical.
pub fn orthogonality_defect(model: &VolterraModel, direction: Direction) -> f64 {
    let d = model.shape().degree;
    match direction {
        Direction::LeftToRight => model.cores()[..d - 1]
            .iter()
            .map(TnCore::left_orthogonality_defect)
            .fold(0.0, f64::max),
        Direction::RightToLeft => model.cores()[1..]
            .iter()
            .map(TnCore::right_orthogonality_defect)
            .fold(0.0, f64::max),
    }
}

/// Identifies a TN Volterra model from `data`.
///
/// Alternates half-sweeps starting left to right and stops after the first
/// half-sweep whose training residual is below `residual_tol`, or after
/// `max_sweeps` full sweeps.
pub fn identify(data: &TimeSeriesDataset, shape: SystemShape, config: &SolverConfig) -> Result<(VolterraModel, SolverReport)> {
    config.validate(shape.degree)?;
    if config.algorithm == Algorithm::Mals && shape.degree < 2 {
        return Err(VttnError::Config("MALS needs degree at least 2; use ALS for a linear model".into()));
    }
    let reg = Regression::new(data, shape, config.prehistory)?;
    let ranks = shape.rank_chain(&config.interior_ranks(shape.degree))?;
    let mut model = init_right_orthogonal(shape, &ranks, config.seed, config.init)?;

    let mut report = SolverReport {
        algorithm: config.algorithm,
        initial_residual: reg.relative_residual(&model)?,
        residual_trace: Vec::new(),
        solve_trace: Vec::new(),
        orthogonality_audit: Vec::new(),
        final_ranks: Vec::new(),
        half_sweeps: 0,
        sweeps_used: 0,
        converged: false,
    };

    for half in 0..2 * config.max_sweeps {
        let direction = if half % 2 == 0 {
            Direction::LeftToRight
        } else {
            Direction::RightToLeft
        };
        let (next, steps) = match config.algorithm {
            Algorithm::Als => als_half_sweep_traced(model, &reg, direction, config.ls_rcond, half)?,
            Algorithm::Mals => mals_half_sweep_traced(model, &reg, direction, config, half)?,
        };
        model = next;
        report.solve_trace.extend(steps);
        report.orthogonality_audit.push(orthogonality_defect(&model, direction));
        let residual = reg.relative_residual(&model)?;
        report.residual_trace.push(residual);
        report.half_sweeps = half + 1;
        // A degree-1 model is linear in its only core, so one solve is the global optimum.
        let boundary = config.termination == Termination::HalfSweep || direction == Direction::RightToLeft;
        if (boundary && residual < config.residual_tol) || shape.degree == 1 {
            report.converged = true;
            break;
        }
    }
    report.sweeps_used = report.half_sweeps.div_ceil(2);
    report.final_ranks = model.ranks();
    Ok((model, report))
}
