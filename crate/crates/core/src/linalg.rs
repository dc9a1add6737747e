//! Dense factorizations used by the sweeps and the oracle.
//!
//! Thin wrappers over nalgebra and faer that fix the conventions the rest of the crate
//! relies on: singular values sorted in descending order, thin factors, and a
//! minimal-norm least-squares solve with an explicit relative cutoff.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, VttnError};

/// Unit roundoff of `f64`, 2^-52.
pub const EPS: f64 = f64::EPSILON;

/// Thin SVD `A = U diag(s) Vᵀ` with `s` sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

impl Svd {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let (m, n) = a.shape();
        let q = m.min(n);
        if q == 0 {
            return Ok(Self {
                u: DMatrix::zeros(m, 0),
                s: Vec::new(),
                v_t: DMatrix::zeros(0, n),
            });
        }
        // nalgebra's bidiagonal QR iteration loses ~6 digits on clustered
        // singular values; faer's divide-and-conquer SVD does not.
        let svd = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)])
            .thin_svd()
            .map_err(|e| VttnError::Numerical(format!("SVD did not converge: {e:?}")))?;
        let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
        let s: Vec<f64> = (0..q).map(|i| s[i]).collect();
        debug_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        Ok(Self {
            u: DMatrix::from_fn(m, q, |i, j| u[(i, j)]),
            s,
            v_t: DMatrix::from_fn(q, n, |i, j| v[(j, i)]),
        })
    }

    pub fn largest(&self) -> f64 {
        self.s.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values at or above `tau`.
    pub fn count_at_least(&self, tau: f64) -> usize {
        self.s.iter().take_while(|&&s| s >= tau && s > 0.0).count()
    }
}

/// Default relative cutoff `ε·max(rows, cols)`, as used by Matlab's `rank` and `pinv`.
pub fn default_rcond(rows: usize, cols: usize) -> f64 {
    EPS * rows.max(cols) as f64
}

/// Numerical rank: singular values `>= rcond·s₁` (default `ε·max(m,n)`).
pub fn numerical_rank(a: &DMatrix<f64>, rcond: Option<f64>) -> Result<usize> {
    let svd = Svd::new(a)?;
    let rcond = rcond.unwrap_or_else(|| default_rcond(a.nrows(), a.ncols()));
    Ok(svd.count_at_least(rcond * svd.largest()))
}

/// Result of a minimal-norm least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub x: DMatrix<f64>,
    /// Frobenius norm of `A·x − b`.
    pub residual_norm: f64,
    pub rank: usize,
}

/// Minimal-norm solution of `min ‖A·X − B‖_F` through the SVD pseudo-inverse.
///
/// Singular values below `rcond·s₁` are treated as zero. An all-zero `A` yields
/// `X = 0` with residual `‖B‖_F`.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DMatrix<f64>, rcond: Option<f64>) -> Result<LeastSquares> {
    if a.nrows() != b.nrows() {
        return Err(VttnError::Size(format!(
            "least squares with {} equations but {} right-hand-side rows",
            a.nrows(),
            b.nrows()
        )));
    }
    let svd = Svd::new(a)?;
    let rcond = rcond.unwrap_or_else(|| default_rcond(a.nrows(), a.ncols()));
    let s1 = svd.largest();
    let rank = if s1 > 0.0 { svd.count_at_least(rcond * s1) } else { 0 };

    let mut x = DMatrix::zeros(a.ncols(), b.ncols());
    if rank > 0 {
        let u_r = svd.u.columns(0, rank);
        let mut coeff = u_r.transpose() * b;
        for (i, mut row) in coeff.row_iter_mut().enumerate() {
            row /= svd.s[i];
        }
        x = svd.v_t.rows(0, rank).transpose() * coeff;
    }
    let residual_norm = (a * &x - b).norm();
    Ok(LeastSquares {
        x,
        residual_norm,
        rank,
    })
}

/// Single right-hand-side convenience wrapper around [`lstsq_min_norm`].
pub fn lstsq_vec(a: &DMatrix<f64>, b: &DVector<f64>, rcond: Option<f64>) -> Result<(DVector<f64>, f64, usize)> {
    let rhs = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    let sol = lstsq_min_norm(a, &rhs, rcond)?;
    Ok((DVector::from_column_slice(sol.x.as_slice()), sol.residual_norm, sol.rank))
}

/// Thin QR `A = Q·R` with `Q` of size `m × min(m,n)`.
pub fn thin_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = a.clone().qr();
    (qr.q(), qr.r())
}

/// Largest absolute entry of `G − I`.
pub fn identity_deviation(g: &DMatrix<f64>) -> f64 {
    let mut dev = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - target).abs());
        }
    }
    dev
}

/// Condition number over the numerically nonzero singular values.
pub fn condition_number(a: &DMatrix<f64>, rcond: Option<f64>) -> Result<f64> {
    let svd = Svd::new(a)?;
    let rcond = rcond.unwrap_or_else(|| default_rcond(a.nrows(), a.ncols()));
    let r = svd.count_at_least(rcond * svd.largest());
    if r == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(svd.s[0] / svd.s[r - 1])
}
