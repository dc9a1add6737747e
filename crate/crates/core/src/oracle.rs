//! Brute-force reference solutions on the full regression matrix.
//!
//! Everything here materializes `U` (N × (pM+1)^d) and is meant for small
//! problems only.

use nalgebra::DMatrix;

use crate::error::{Result, VttnError};
use crate::linalg::{default_rcond, lstsq_min_norm, Svd};
use crate::model::SystemShape;
use crate::regressor::{build_full_u, build_ut, check_dataset, relative, TimeSeriesDataset};
use crate::tensor::{kron_power, symmetrize, DenseTensor};

/// Largest `(pM+1)^d` the oracle accepts.
pub const ORACLE_MAX_COLUMNS: u128 = 1_000_000;

/// Minimal-norm solution of the full system `U·V₍₁₎ᵀ ≈ Y`.
#[derive(Debug, Clone)]
pub struct DirectSolution {
    pub shape: SystemShape,
    /// `V₍₁₎`, l × (pM+1)^d.
    pub v1: DMatrix<f64>,
    /// `‖Y − U·V₍₁₎ᵀ‖_F / ‖Y‖_F`.
    pub residual: f64,
    /// `‖V₍₁₎‖_F`.
    pub norm: f64,
}

impl DirectSolution {
    /// Outputs (N × l) over every sample of `data`, zero prehistory.
    pub fn simulate(&self, data: &TimeSeriesDataset) -> Result<DMatrix<f64>> {
        check_dataset(data, self.shape, false)?;
        let mut out = DMatrix::zeros(data.len(), self.shape.l);
        for t in 0..data.len() {
            let row = kron_power(&build_ut(data, t, self.shape.memory)?, self.shape.degree)?;
            for i in 0..self.shape.l {
                out[(t, i)] = self.v1.row(i).iter().zip(&row).map(|(a, b)| a * b).sum();
            }
        }
        Ok(out)
    }

    /// Output `i` reshaped to a d-way cubical tensor.
    pub fn kernel_tensor(&self, output: usize) -> Result<DenseTensor> {
        DenseTensor::new(
            vec![self.shape.n(); self.shape.degree],
            self.v1.row(output).iter().copied().collect(),
        )
    }
}

fn check_scale(shape: SystemShape) -> Result<()> {
    let cols = crate::model::full_count(shape.p, shape.memory, shape.degree).unwrap_or(u128::MAX);
    if cols > ORACLE_MAX_COLUMNS {
        return Err(VttnError::BudgetExceeded {
            requested: cols,
            budget: ORACLE_MAX_COLUMNS as usize,
        });
    }
    Ok(())
}

/// Solves the full system with the SVD pseudo-inverse.
pub fn solve_direct(data: &TimeSeriesDataset, shape: SystemShape) -> Result<DirectSolution> {
    check_dataset(data, shape, true)?;
    check_scale(shape)?;
    let u = build_full_u(data, shape.memory, shape.degree)?;
    let y = data.output_matrix();
    let sol = lstsq_min_norm(&u, &y, None)?;
    let v1 = sol.x.transpose();
    Ok(DirectSolution {
        shape,
        norm: v1.norm(),
        residual: relative(sol.residual_norm, y.norm()),
        v1,
    })
}

/// Symmetrizes every row of `v1` as an `n^d` tensor.
///
/// The outputs of the model are unchanged and the norm cannot grow.
pub fn minimal_norm_symmetrize(v1: &DMatrix<f64>, n: usize, degree: usize) -> Result<DMatrix<f64>> {
    let cols = (n as u128).checked_pow(degree as u32);
    if cols != Some(v1.ncols() as u128) {
        return Err(VttnError::Size(format!(
            "{} columns is not {n}^{degree}",
            v1.ncols()
        )));
    }
    let mut out = DMatrix::zeros(v1.nrows(), v1.ncols());
    for i in 0..v1.nrows() {
        let t = DenseTensor::new(vec![n; degree], v1.row(i).iter().copied().collect())?;
        let s = symmetrize(&t)?;
        for (j, v) in s.data().iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    Ok(out)
}

/// Orthonormal basis (columns) of the numerical null space of `a`.
///
/// Right singular vectors whose singular value falls below the default cutoff.
pub fn null_space(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, n) = a.shape();
    let padded;
    // A thin SVD of a wide matrix only returns m right singular vectors.
    let a = if m < n {
        padded = a.clone().resize_vertically(n, 0.0);
        &padded
    } else {
        a
    };
    let svd = Svd::new(a)?;
    let s1 = svd.largest();
    let rank = if s1 > 0.0 {
        svd.count_at_least(default_rcond(m, n) * s1)
    } else {
        0
    };
    Ok(svd.v_t.rows(rank, n - rank).transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_case_is_regression() {
        let data = TimeSeriesDataset::new(
            vec![vec![0.0, 1.0, 2.0, 3.0]],
            vec![vec![1.0, 3.0, 5.0, 7.0]],
            None,
        )
        .unwrap();
        let sol = solve_direct(&data, SystemShape::new(1, 1, 1, 1).unwrap()).unwrap();
        assert!((sol.v1[(0, 0)] - 1.0).abs() < 1e-12 && (sol.v1[(0, 1)] - 2.0).abs() < 1e-12);
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn symmetrize_preserves_symmetric_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = DenseTensor::from_fn(vec![3, 3], |_| rng.random::<f64>()).unwrap();
        let s = symmetrize(&t).unwrap();
        let v1 = DMatrix::from_row_slice(1, 9, s.data());
        let out = minimal_norm_symmetrize(&v1, 3, 2).unwrap();
        assert!((out - v1).norm() < 1e-15);
        assert!(minimal_norm_symmetrize(&DMatrix::zeros(1, 8), 3, 2).is_err());
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let z = null_space(&a).unwrap();
        assert_eq!(z.ncols(), 2);
        assert!((a * z).norm() < 1e-15);
    }

    #[test]
    fn scale_gate() {
        let data = TimeSeriesDataset::new(vec![vec![0.5; 3]], vec![vec![1.0; 3]], None).unwrap();
        let err = solve_direct(&data, SystemShape::new(1, 1, 7, 7).unwrap()).unwrap_err();
        assert!(matches!(err, VttnError::BudgetExceeded { .. }));
    }
}
