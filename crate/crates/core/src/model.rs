//! Tensor-network representation of a MIMO Volterra system.
//!
//! A degree-`d` model with `p` inputs, `l` outputs and memory `M` is a chain of
//! `d` three-way cores. Core `k` (zero-based) has dims `(r_k, n, r_{k+1})` with
//! `n = pM + 1`, `r_0 = l` and `r_d = 1`; the leading rank of the first core
//! carries the output index. The output for an extended input vector `u_t` is
//! the matrix product `(V⁽¹⁾ ×₂ u_tᵀ)(V⁽²⁾ ×₂ u_tᵀ)⋯(V⁽ᵈ⁾ ×₂ u_tᵀ)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, VttnError};
use crate::linalg::identity_deviation;
use crate::tensor::{check_budget, DenseTensor};

/// Default tolerance for orthogonality checks.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

/// System dimensions shared by models, regressors and solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemShape {
    /// Number of inputs.
    pub p: usize,
    /// Number of outputs.
    pub l: usize,
    /// Memory length in samples.
    pub memory: usize,
    /// Degree of the Volterra series.
    pub degree: usize,
}

impl SystemShape {
    pub fn new(p: usize, l: usize, memory: usize, degree: usize) -> Result<Self> {
        if p == 0 || l == 0 || memory == 0 || degree == 0 {
            return Err(VttnError::Config(format!(
                "p, l, M and d must be positive (got p={p}, l={l}, M={memory}, d={degree})"
            )));
        }
        Ok(Self {
            p,
            l,
            memory,
            degree,
        })
    }

    /// Length of the extended input vector, `pM + 1`.
    pub fn n(&self) -> usize {
        self.p * self.memory + 1
    }

    /// Checks a full rank chain `r_0..r_d` for this shape.
    pub fn validate_ranks(&self, ranks: &[usize]) -> Result<()> {
        let d = self.degree;
        let n = self.n();
        if ranks.len() != d + 1 {
            return Err(VttnError::InvalidRanks(format!(
                "expected {} ranks r_0..r_d, got {}",
                d + 1,
                ranks.len()
            )));
        }
        if ranks[0] != self.l {
            return Err(VttnError::InvalidRanks(format!(
                "r_0 must equal the output count {}, got {}",
                self.l, ranks[0]
            )));
        }
        if ranks[d] != 1 {
            return Err(VttnError::InvalidRanks(format!("r_d must be 1, got {}", ranks[d])));
        }
        if let Some(k) = ranks.iter().position(|&r| r == 0) {
            return Err(VttnError::InvalidRanks(format!("r_{k} is zero")));
        }
        for k in 1..d {
            let bound = (ranks[k - 1] * n).min(n * ranks[k + 1]);
            if ranks[k] > bound {
                return Err(VttnError::InvalidRanks(format!(
                    "r_{k} = {} exceeds the structural bound min(r_{}·n, n·r_{}) = {bound}",
                    ranks[k],
                    k - 1,
                    k + 1
                )));
            }
        }
        Ok(())
    }

    /// Builds `l, r_1, .., r_{d-1}, 1` from the interior ranks.
    pub fn rank_chain(&self, interior: &[usize]) -> Result<Vec<usize>> {
        if interior.len() != self.degree - 1 {
            return Err(VttnError::InvalidRanks(format!(
                "degree {} needs {} interior ranks, got {}",
                self.degree,
                self.degree - 1,
                interior.len()
            )));
        }
        let mut chain = Vec::with_capacity(self.degree + 1);
        chain.push(self.l);
        chain.extend_from_slice(interior);
        chain.push(1);
        self.validate_ranks(&chain)?;
        Ok(chain)
    }
}

/// One three-way core of dims `(left_rank, dim, right_rank)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TnCore {
    data: DenseTensor,
}

impl TnCore {
    pub fn new(left_rank: usize, dim: usize, right_rank: usize, data: Vec<f64>) -> Result<Self> {
        Ok(Self {
            data: DenseTensor::new(vec![left_rank, dim, right_rank], data)?,
        })
    }

    pub fn zeros(left_rank: usize, dim: usize, right_rank: usize) -> Self {
        Self {
            data: DenseTensor::new(
                vec![left_rank, dim, right_rank],
                vec![0.0; left_rank * dim * right_rank],
            )
            .expect("positive dims"),
        }
    }

    pub fn from_tensor(data: DenseTensor) -> Result<Self> {
        if data.order() != 3 {
            return Err(VttnError::Size(format!(
                "a core must be 3-way, got dims {:?}",
                data.dims()
            )));
        }
        Ok(Self { data })
    }

    pub fn left_rank(&self) -> usize {
        self.data.dims()[0]
    }

    pub fn dim(&self) -> usize {
        self.data.dims()[1]
    }

    pub fn right_rank(&self) -> usize {
        self.data.dims()[2]
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.data
    }

    pub fn as_slice(&self) -> &[f64] {
        self.data.data()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `reshape(core, [r_{k-1}·n, r_k])`.
    pub fn left_unfolding(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.left_rank() * self.dim(), self.right_rank(), self.as_slice())
    }

    /// `reshape(core, [r_{k-1}, n·r_k])`.
    pub fn right_unfolding(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.left_rank(), self.dim() * self.right_rank(), self.as_slice())
    }

    pub fn from_left_unfolding(m: &DMatrix<f64>, dim: usize) -> Result<Self> {
        if !m.nrows().is_multiple_of(dim) {
            return Err(VttnError::Size(format!(
                "{} rows are not a multiple of the core dimension {dim}",
                m.nrows()
            )));
        }
        Self::new(m.nrows() / dim, dim, m.ncols(), m.as_slice().to_vec())
    }

    pub fn from_right_unfolding(m: &DMatrix<f64>, dim: usize) -> Result<Self> {
        if !m.ncols().is_multiple_of(dim) {
            return Err(VttnError::Size(format!(
                "{} columns are not a multiple of the core dimension {dim}",
                m.ncols()
            )));
        }
        Self::new(m.nrows(), dim, m.ncols() / dim, m.as_slice().to_vec())
    }

    /// `V ×₂ uᵀ`: the `left_rank × right_rank` matrix `Σ_j V[:, j, :]·u_j`.
    pub fn contract_input(&self, u: &[f64]) -> DMatrix<f64> {
        let (ra, n, rb) = (self.left_rank(), self.dim(), self.right_rank());
        debug_assert_eq!(u.len(), n);
        let data = self.as_slice();
        let mut out = vec![0.0; ra * rb];
        for b in 0..rb {
            let col = &mut out[ra * b..ra * (b + 1)];
            for (j, &uj) in u.iter().enumerate() {
                if uj == 0.0 {
                    continue;
                }
                let fiber = &data[ra * (j + n * b)..ra * (j + n * b + 1)];
                for (o, v) in col.iter_mut().zip(fiber) {
                    *o += uj * v;
                }
            }
        }
        DMatrix::from_vec(ra, rb, out)
    }

    /// Max-abs deviation of `AᵀA` from the identity, `A` the left unfolding.
    pub fn left_orthogonality_defect(&self) -> f64 {
        let a = self.left_unfolding();
        identity_deviation(&(a.transpose() * &a))
    }

    /// Max-abs deviation of `AAᵀ` from the identity, `A` the right unfolding.
    pub fn right_orthogonality_defect(&self) -> f64 {
        let a = self.right_unfolding();
        identity_deviation(&(&a * a.transpose()))
    }
}

pub fn is_left_orthogonal(core: &TnCore, tol: f64) -> bool {
    core.left_orthogonality_defect() <= tol
}

pub fn is_right_orthogonal(core: &TnCore, tol: f64) -> bool {
    core.right_orthogonality_defect() <= tol
}

/// The identified artifact: system shape plus `d` cores.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraModel {
    shape: SystemShape,
    cores: Vec<TnCore>,
}

impl VolterraModel {
    pub fn new(shape: SystemShape, cores: Vec<TnCore>) -> Result<Self> {
        if cores.len() != shape.degree {
            return Err(VttnError::Size(format!(
                "degree {} needs {} cores, got {}",
                shape.degree,
                shape.degree,
                cores.len()
            )));
        }
        let n = shape.n();
        if let Some(k) = cores.iter().position(|c| c.dim() != n) {
            return Err(VttnError::Size(format!(
                "core {k} has dimension {} but pM+1 = {n}",
                cores[k].dim()
            )));
        }
        if cores[0].left_rank() != shape.l {
            return Err(VttnError::InvalidRanks(format!(
                "first core has left rank {} but l = {}",
                cores[0].left_rank(),
                shape.l
            )));
        }
        for k in 0..cores.len() - 1 {
            if cores[k].right_rank() != cores[k + 1].left_rank() {
                return Err(VttnError::InvalidRanks(format!(
                    "core {k} right rank {} differs from core {} left rank {}",
                    cores[k].right_rank(),
                    k + 1,
                    cores[k + 1].left_rank()
                )));
            }
        }
        if cores[cores.len() - 1].right_rank() != 1 {
            return Err(VttnError::InvalidRanks("last core must have right rank 1".into()));
        }
        Ok(Self { shape, cores })
    }

    /// All-zero model with the given full rank chain.
    pub fn zeros(shape: SystemShape, ranks: &[usize]) -> Result<Self> {
        shape.validate_ranks(ranks)?;
        let n = shape.n();
        let cores = (0..shape.degree)
            .map(|k| TnCore::zeros(ranks[k], n, ranks[k + 1]))
            .collect();
        Self::new(shape, cores)
    }

    pub fn shape(&self) -> SystemShape {
        self.shape
    }

    pub fn cores(&self) -> &[TnCore] {
        &self.cores
    }

    pub fn core(&self, k: usize) -> &TnCore {
        &self.cores[k]
    }

    /// Replaces cores `k` and following in place; callers keep the chain consistent.
    pub(crate) fn cores_mut(&mut self) -> &mut Vec<TnCore> {
        &mut self.cores
    }

    pub fn into_cores(self) -> Vec<TnCore> {
        self.cores
    }

    /// Full rank chain `r_0 = l, r_1, .., r_d = 1`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(TnCore::left_rank).collect();
        r.push(1);
        r
    }

    /// Largest interior rank `max(r_1..r_{d-1})`, or 1 for `d = 1`.
    pub fn max_rank(&self) -> usize {
        let r = self.ranks();
        r[1..r.len() - 1].iter().copied().max().unwrap_or(1)
    }

    /// `Σ_k r_{k-1}·n·r_k`.
    pub fn parameter_count(&self) -> usize {
        self.cores.iter().map(TnCore::len).sum()
    }

    /// Output vector `y(t)` for one extended input vector.
    pub fn simulate_sample(&self, u_t: &[f64]) -> Result<Vec<f64>> {
        if u_t.len() != self.shape.n() {
            return Err(VttnError::Size(format!(
                "u_t has length {} but pM+1 = {}",
                u_t.len(),
                self.shape.n()
            )));
        }
        let mut acc = self.cores[0].contract_input(u_t);
        for core in &self.cores[1..] {
            acc *= core.contract_input(u_t);
        }
        Ok(acc.as_slice().to_vec())
    }

    /// `l × (pM+1)^d` matricization `V₍₁₎` of the full Volterra tensor.
    pub fn reconstruct_full(&self) -> Result<DMatrix<f64>> {
        let n = self.shape.n() as u128;
        let l = self.shape.l as u128;
        check_budget(l.saturating_mul(n.saturating_pow(self.shape.degree as u32)))?;
        // Contract left to right: after k cores, `acc` is (l·n^k) × r_k with
        // the output index fastest, then the physical indices in core order.
        let mut acc = self.cores[0].left_unfolding();
        for core in &self.cores[1..] {
            let (rows, r) = acc.shape();
            let next = &acc * core.right_unfolding();
            // next is rows × (n·r_{k+1}); fold the new physical index into the rows.
            let n = core.dim();
            let rb = core.right_rank();
            debug_assert_eq!(r, core.left_rank());
            acc = DMatrix::from_column_slice(rows * n, rb, next.as_slice());
        }
        let cols = acc.len() / self.shape.l;
        Ok(DMatrix::from_column_slice(self.shape.l, cols, acc.as_slice()))
    }

    /// Frobenius norm of the full Volterra tensor (oracle scale only).
    pub fn full_norm(&self) -> Result<f64> {
        Ok(self.reconstruct_full()?.norm())
    }
}

/// Output of a model across a sequence of extended input vectors.
pub fn simulate_rows(model: &VolterraModel, inputs: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let l = model.shape().l;
    let mut out = DMatrix::zeros(inputs.len(), l);
    for (t, u) in inputs.iter().enumerate() {
        let y = model.simulate_sample(u.as_slice())?;
        for (i, v) in y.into_iter().enumerate() {
            out[(t, i)] = v;
        }
    }
    Ok(out)
}

/// Number of entries `(pM+1)^d` of one output's Volterra kernel tensor.
///
/// Returns `None` when the count does not fit in a `u128`.
pub fn full_count(p: usize, memory: usize, degree: usize) -> Option<u128> {
    let n = (p as u128).checked_mul(memory as u128)?.checked_add(1)?;
    n.checked_pow(degree as u32)
}
