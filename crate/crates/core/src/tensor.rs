//! Dense multiway arrays with first-index-fastest (column-major) linearization.
//!
//! `reshape` only reinterprets dimensions, so `reshape(A, [4, 6])` of the
//! 4×3×2 tensor holding 1..24 has first row `1 5 9 13 17 21`, and
//! `vectorize` returns the flat buffer unchanged.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use itertools::Itertools;
use nalgebra::DMatrix;

use crate::error::{Result, VttnError};

/// Default cap on the number of elements of a dense allocation.
pub const DEFAULT_ELEMENT_BUDGET: usize = 100_000_000;

/// Environment variable that overrides [`DEFAULT_ELEMENT_BUDGET`].
pub const BUDGET_ENV: &str = "VTTN_ELEMENT_BUDGET";

static BUDGET_OVERRIDE: AtomicUsize = AtomicUsize::new(0);
static BUDGET_FROM_ENV: OnceLock<usize> = OnceLock::new();

/// Current dense element budget.
pub fn element_budget() -> usize {
    match BUDGET_OVERRIDE.load(Ordering::Relaxed) {
        0 => *BUDGET_FROM_ENV.get_or_init(|| {
            std::env::var(BUDGET_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<f64>().ok())
                .filter(|v| *v >= 1.0)
                .map(|v| v as usize)
                .unwrap_or(DEFAULT_ELEMENT_BUDGET)
        }),
        n => n,
    }
}

/// Overrides the element budget for the whole process. `0` restores the default.
pub fn set_element_budget(elements: usize) {
    BUDGET_OVERRIDE.store(elements, Ordering::Relaxed);
}

/// Fails with [`VttnError::BudgetExceeded`] if `elements` exceeds the budget.
pub fn check_budget(elements: u128) -> Result<()> {
    let budget = element_budget();
    if elements > budget as u128 {
        return Err(VttnError::BudgetExceeded {
            requested: elements,
            budget,
        });
    }
    Ok(())
}

/// Product of dimensions, saturating instead of overflowing.
pub fn checked_len(dims: &[usize]) -> u128 {
    dims.iter()
        .fold(1u128, |acc, &d| acc.saturating_mul(d as u128))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(VttnError::Size(format!("dimensions must be positive, got {dims:?}")));
        }
        let len = checked_len(&dims);
        if len != data.len() as u128 {
            return Err(VttnError::Size(format!(
                "data length {} does not match dims {:?} (product {})",
                data.len(),
                dims,
                len
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = checked_len(&dims);
        check_budget(len)?;
        Self::new(dims, vec![0.0; len as usize])
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(dims)?;
        let mut idx = vec![0usize; t.dims.len()];
        for value in t.data.iter_mut() {
            *value = f(&idx);
            increment_index(&mut idx, &t.dims);
        }
        Ok(t)
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            dims: Vec::new(),
            data: vec![value],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            dims: vec![data.len().max(1)],
            data: if data.is_empty() { vec![0.0] } else { data },
        }
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            dims: vec![m.nrows(), m.ncols()],
            data: m.as_slice().to_vec(),
        }
    }

    /// Views an order-2 tensor as a matrix (copying into nalgebra storage).
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        match self.dims.as_slice() {
            [r, c] => Ok(DMatrix::from_column_slice(*r, *c, &self.data)),
            [r] => Ok(DMatrix::from_column_slice(*r, 1, &self.data)),
            _ => Err(VttnError::Size(format!(
                "expected a matrix, got a tensor with dims {:?}",
                self.dims
            ))),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_matrix(&DMatrix::identity(n, n))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Linear offset of a multi-index (first index fastest).
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        let mut stride = 1;
        for (&i, &n) in idx.iter().zip(&self.dims) {
            debug_assert!(i < n);
            off += i * stride;
            stride *= n;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let off = self.offset(idx);
        self.data[off] = value;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_cubical(&self) -> bool {
        self.dims.windows(2).all(|w| w[0] == w[1])
    }
}

/// Advances a first-index-fastest multi-index; wraps to all zeros at the end.
pub fn increment_index(idx: &mut [usize], dims: &[usize]) {
    for (i, &n) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < n {
            return;
        }
        *i = 0;
    }
}

/// Reinterprets the flat data under `new_dims`; no entry moves.
pub fn reshape(t: &DenseTensor, new_dims: &[usize]) -> Result<DenseTensor> {
    if new_dims.contains(&0) || checked_len(new_dims) != t.data.len() as u128 {
        return Err(VttnError::Size(format!(
            "cannot reshape dims {:?} ({} elements) into {:?}",
            t.dims,
            t.data.len(),
            new_dims
        )));
    }
    Ok(DenseTensor {
        dims: new_dims.to_vec(),
        data: t.data.clone(),
    })
}

/// `vec(A)`: all entries as one column.
pub fn vectorize(t: &DenseTensor) -> DenseTensor {
    DenseTensor {
        dims: vec![t.data.len()],
        data: t.data.clone(),
    }
}

/// k-mode product `A ×ₖ U` for a matrix `U` of size `p × nₖ` (zero-based `mode`).
pub fn mode_product(t: &DenseTensor, u: &DenseTensor, mode: usize) -> Result<DenseTensor> {
    if mode >= t.order() {
        return Err(VttnError::ModeOutOfRange {
            mode,
            order: t.order(),
        });
    }
    let (rows, cols) = match u.dims() {
        [r, c] => (*r, *c),
        [r] => (*r, 1),
        other => {
            return Err(VttnError::Size(format!(
                "mode product needs a matrix operand, got dims {other:?}"
            )))
        }
    };
    let n_k = t.dims[mode];
    if cols != n_k {
        return Err(VttnError::Size(format!(
            "mode-{mode} product: matrix has {cols} columns but mode has dimension {n_k}"
        )));
    }
    let inner: usize = t.dims[..mode].iter().product();
    let outer: usize = t.dims[mode + 1..].iter().product();
    let mut dims = t.dims.clone();
    dims[mode] = rows;
    let mut out = DenseTensor::zeros(dims)?;
    let ud = u.data();
    for o in 0..outer {
        for i_k in 0..n_k {
            let src = &t.data[(o * n_k + i_k) * inner..(o * n_k + i_k + 1) * inner];
            for j in 0..rows {
                let coeff = ud[j + rows * i_k];
                if coeff == 0.0 {
                    continue;
                }
                let dst = &mut out.data[(o * rows + j) * inner..(o * rows + j + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += coeff * s;
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of two matrices (vectors are treated as columns).
pub fn kronecker(b: &DenseTensor, c: &DenseTensor) -> Result<DenseTensor> {
    let bm = b.to_matrix()?;
    let cm = c.to_matrix()?;
    check_budget((bm.len() as u128) * (cm.len() as u128))?;
    Ok(DenseTensor::from_matrix(&kron_matrix(&bm, &cm)))
}

/// Kronecker product on nalgebra matrices.
pub fn kron_matrix(b: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let (m1, m2) = b.shape();
    let (n1, n2) = c.shape();
    let mut out = DMatrix::zeros(m1 * n1, m2 * n2);
    for j3 in 0..m2 {
        for i3 in 0..m1 {
            let s = b[(i3, j3)];
            if s == 0.0 {
                continue;
            }
            for j in 0..n2 {
                for i in 0..n1 {
                    out[(i3 * n1 + i, j3 * n2 + j)] = s * c[(i, j)];
                }
            }
        }
    }
    out
}

/// `x ⊗ x ⊗ ⋯ ⊗ x` (`d` factors); `d = 0` yields the scalar 1.
pub fn kron_power(x: &[f64], d: usize) -> Result<Vec<f64>> {
    let n = x.len() as u128;
    check_budget(n.saturating_pow(d as u32))?;
    let mut acc = vec![1.0];
    for _ in 0..d {
        let mut next = Vec::with_capacity(acc.len() * x.len());
        for &a in &acc {
            next.extend(x.iter().map(|&v| a * v));
        }
        acc = next;
    }
    Ok(acc)
}

/// Multidimensional contraction `A x^d = A ×₁ xᵀ ×₂ ⋯ ×_d xᵀ` of a cubical tensor.
pub fn contract(t: &DenseTensor, x: &[f64]) -> Result<f64> {
    if t.dims.iter().any(|&n| n != x.len()) {
        return Err(VttnError::Size(format!(
            "cannot contract dims {:?} with a vector of length {}",
            t.dims,
            x.len()
        )));
    }
    Ok(contract_trailing(&t.data, x, t.order())[0])
}

/// Contracts every mode except the first of an `l × n × ⋯ × n` tensor with `x`.
pub fn contract_mimo(t: &DenseTensor, x: &[f64]) -> Result<Vec<f64>> {
    if t.order() == 0 || t.dims[1..].iter().any(|&n| n != x.len()) {
        return Err(VttnError::Size(format!(
            "cannot contract trailing modes of {:?} with a vector of length {}",
            t.dims,
            x.len()
        )));
    }
    let l = t.dims[0];
    let d = t.order() - 1;
    // Transposing is unnecessary: the leading mode is fastest, so contract
    // the trailing modes from the back, keeping a contiguous block of l·n^k.
    let mut cur = t.data.clone();
    let n = x.len();
    for k in (0..d).rev() {
        let block = l * n.pow(k as u32);
        let mut next = vec![0.0; block];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (dst, src) in next.iter_mut().zip(&cur[j * block..(j + 1) * block]) {
                *dst += xj * src;
            }
        }
        cur = next;
    }
    Ok(cur)
}

fn contract_trailing(data: &[f64], x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    let mut cur = data.to_vec();
    for k in (0..order).rev() {
        let block = n.pow(k as u32);
        let mut next = vec![0.0; block];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (dst, src) in next.iter_mut().zip(&cur[j * block..(j + 1) * block]) {
                *dst += xj * src;
            }
        }
        cur = next;
    }
    cur
}

/// Averages a cubical tensor over all permutations of its indices.
pub fn symmetrize(t: &DenseTensor) -> Result<DenseTensor> {
    if !t.is_cubical() {
        return Err(VttnError::NotCubical(t.dims.clone()));
    }
    let d = t.order();
    if d <= 1 {
        return Ok(t.clone());
    }
    let perms: Vec<Vec<usize>> = (0..d).permutations(d).collect();
    let scale = 1.0 / perms.len() as f64;
    let mut out = DenseTensor::zeros(t.dims.clone())?;
    let mut idx = vec![0usize; d];
    let mut permuted = vec![0usize; d];
    for k in 0..t.len() {
        let mut acc = 0.0;
        for p in &perms {
            for (slot, &src) in permuted.iter_mut().zip(p) {
                *slot = idx[src];
            }
            acc += t.get(&permuted);
        }
        out.data[k] = acc * scale;
        increment_index(&mut idx, &t.dims);
    }
    Ok(out)
}

/// Largest absolute difference between a cubical tensor and its symmetrization.
pub fn symmetry_defect(t: &DenseTensor) -> Result<f64> {
    let s = symmetrize(t)?;
    Ok(t.data
        .iter()
        .zip(&s.data)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
