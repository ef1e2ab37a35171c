//! Direct sparse solves.
//!
//! Everything goes through one complex sparse LU (faer) with an explicit
//! residual check; desk-scale meshes make iterative solvers unnecessary. The
//! divergence constraint is enforced by a scalar Lagrange multiplier, giving
//! the saddle block form `[[A, C^T], [C, 0]]` (C is real, so `C^H = C^T`).
//! Since `A- = conj(A+)` and `C` is real, one factorization serves both
//! saddle operators: `conj(M) x = r` is solved as `x = conj(M^-1 conj(r))`.

use super::sparse::{vec_norm, vec_sub, CscMatrix};
use crate::C64;
use faer::prelude::SpSolver;
use thiserror::Error;

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("sparse factorization failed for block '{block}'")]
    Factorization { block: &'static str },
    #[error("solve residual {achieved:.3e} above tolerance {tol:.3e} for block '{block}'")]
    Residual { achieved: f64, tol: f64, block: &'static str },
}

/// LU factorization of a square complex sparse matrix, kept together with the
/// matrix for residual checks.
pub struct SparseLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, faer::complex_native::c64>,
    mat: CscMatrix,
    block: &'static str,
    residual_tol: f64,
}

impl SparseLu {
    pub fn factor(mat: CscMatrix, block: &'static str, residual_tol: f64) -> Result<Self, SolverError> {
        let lu = mat
            .to_faer()
            .sp_lu()
            .map_err(|_| SolverError::Factorization { block })?;
        Ok(SparseLu { lu, mat, block, residual_tol })
    }

    pub fn matrix(&self) -> &CscMatrix {
        &self.mat
    }

    fn raw_solve(&self, rhs: &[C64]) -> Vec<C64> {
        let b = faer::Mat::from_fn(rhs.len(), 1, |i, _| faer::complex_native::c64::new(rhs[i].re, rhs[i].im));
        let x = self.lu.solve(&b);
        (0..rhs.len()).map(|i| C64::new(x[(i, 0)].re, x[(i, 0)].im)).collect()
    }

    /// Solve `M x = rhs` with a relative residual check.
    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>, SolverError> {
        self.solve_with_residual(rhs).map(|(x, _)| x)
    }

    /// Solve and report the achieved relative residual.
    pub fn solve_with_residual(&self, rhs: &[C64]) -> Result<(Vec<C64>, f64), SolverError> {
        let rhs_norm = vec_norm(rhs);
        if rhs_norm == 0.0 {
            return Ok((vec![C64::new(0.0, 0.0); rhs.len()], 0.0));
        }
        let x = self.raw_solve(rhs);
        let res = vec_norm(&vec_sub(&self.mat.matvec(&x), rhs)) / rhs_norm;
        if res > self.residual_tol {
            return Err(SolverError::Residual { achieved: res, tol: self.residual_tol, block: self.block });
        }
        Ok((x, res))
    }

    /// Solve `conj(M) x = rhs` using the same factorization.
    pub fn solve_conj(&self, rhs: &[C64]) -> Result<Vec<C64>, SolverError> {
        let conj_rhs: Vec<C64> = rhs.iter().map(|v| v.conj()).collect();
        let x = self.solve(&conj_rhs)?;
        Ok(x.into_iter().map(|v| v.conj()).collect())
    }
}

/// Statistics of one constrained solve.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SaddleStats {
    /// Relative residual of the full block system.
    pub residual: f64,
    /// Multiplier norm relative to the primal norm; small for compatible
    /// right-hand sides.
    pub multiplier_rel: f64,
    /// Constraint residual `|C q| / |q|`.
    pub constraint_rel: f64,
}

/// Factorized saddle system `[[A, C^T], [C, 0]]`.
pub struct SaddleLu {
    lu: SparseLu,
    n_primal: usize,
    n_mult: usize,
    c_mat: CscMatrix,
}

impl SaddleLu {
    pub fn factor(
        a: &CscMatrix,
        c: &CscMatrix,
        block: &'static str,
        residual_tol: f64,
    ) -> Result<Self, SolverError> {
        let n = a.nrows();
        let m = c.nrows();
        assert_eq!(a.ncols(), n);
        assert_eq!(c.ncols(), n);
        let mut trips: Vec<(usize, usize, C64)> = Vec::with_capacity(a.nnz() + 2 * c.nnz());
        trips.extend(a.iter());
        for (r, col, v) in c.iter() {
            trips.push((n + r, col, v));
            trips.push((col, n + r, v));
        }
        let full = CscMatrix::from_triplets(n + m, n + m, trips);
        Ok(SaddleLu {
            lu: SparseLu::factor(full, block, residual_tol)?,
            n_primal: n,
            n_mult: m,
            c_mat: c.clone(),
        })
    }

    pub fn n_primal(&self) -> usize {
        self.n_primal
    }

    /// Solve with the given primal load (multiplier load zero). When `conj`
    /// is set, the system solved is the entrywise conjugate (the `a-` saddle
    /// from an `a+` factorization).
    pub fn solve(
        &self,
        primal_rhs: &[C64],
        conj: bool,
    ) -> Result<(Vec<C64>, Vec<C64>, SaddleStats), SolverError> {
        assert_eq!(primal_rhs.len(), self.n_primal);
        let mut rhs = primal_rhs.to_vec();
        rhs.resize(self.n_primal + self.n_mult, C64::new(0.0, 0.0));
        let x = if conj { self.lu.solve_conj(&rhs)? } else { self.lu.solve(&rhs)? };
        let residual = {
            let mat = self.lu.matrix();
            let mx = if conj {
                let xc: Vec<C64> = x.iter().map(|v| v.conj()).collect();
                mat.matvec(&xc).into_iter().map(|v| v.conj()).collect()
            } else {
                mat.matvec(&x)
            };
            let nrm = vec_norm(&rhs);
            if nrm == 0.0 { 0.0 } else { vec_norm(&vec_sub(&mx, &rhs)) / nrm }
        };
        let primal = x[..self.n_primal].to_vec();
        let mult = x[self.n_primal..].to_vec();
        let pn = vec_norm(&primal);
        let multiplier_rel = if pn == 0.0 { 0.0 } else { vec_norm(&mult) / pn };
        let constraint_rel = if pn == 0.0 {
            0.0
        } else {
            vec_norm(&self.c_mat.matvec(&primal)) / pn
        };
        Ok((primal, mult, SaddleStats { residual, multiplier_rel, constraint_rel }))
    }
}
