//! Minimal compressed-sparse-column storage for complex matrices.
//!
//! Construction from triplets is canonicalized: entries are sorted by
//! `(col, row)` and duplicates within a cell are sorted by value before
//! summation, so the assembled matrix is bit-identical no matter how the
//! element loop was ordered. Factorization is delegated to faer.

use crate::C64;

#[derive(Debug, Clone)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CscMatrix {
    /// Build from (row, col, value) triplets, summing duplicates in a
    /// canonical order.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.retain(|t| t.2 != C64::new(0.0, 0.0));
        triplets.sort_by(|a, b| {
            (a.1, a.0)
                .cmp(&(b.1, b.0))
                .then(a.2.re.total_cmp(&b.2.re))
                .then(a.2.im.total_cmp(&b.2.im))
        });

        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::new();
        let mut values: Vec<C64> = Vec::new();
        let mut i = 0;
        while i < triplets.len() {
            let (r, c, _) = triplets[i];
            debug_assert!(r < nrows && c < ncols);
            let mut sum = C64::new(0.0, 0.0);
            while i < triplets.len() && triplets[i].0 == r && triplets[i].1 == c {
                sum += triplets[i].2;
                i += 1;
            }
            col_ptr[c + 1] += 1;
            row_idx.push(r);
            values.push(sum);
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        CscMatrix { nrows, ncols, col_ptr, row_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterate the stored entries of one column as (row, value) pairs.
    pub fn col_iter(&self, c: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let lo = self.col_ptr[c];
        let hi = self.col_ptr[c + 1];
        self.row_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    /// Iterate all stored entries as (row, col, value).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.ncols).flat_map(move |c| self.col_iter(c).map(move |(r, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let lo = self.col_ptr[c];
        let hi = self.col_ptr[c + 1];
        match self.row_idx[lo..hi].binary_search(&r) {
            Ok(k) => self.values[lo + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        for c in 0..self.ncols {
            let xc = x[c];
            if xc == C64::new(0.0, 0.0) {
                continue;
            }
            for (r, v) in self.col_iter(c) {
                y[r] += v * xc;
            }
        }
        y
    }

    /// `A^T x` (plain transpose, no conjugation).
    pub fn transpose_matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![C64::new(0.0, 0.0); self.ncols];
        for c in 0..self.ncols {
            let mut acc = C64::new(0.0, 0.0);
            for (r, v) in self.col_iter(c) {
                acc += v * x[r];
            }
            y[c] = acc;
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// max |A - A^T| over all cells.
    pub fn transpose_defect(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r)).norm())
            .fold(0.0, f64::max)
    }

    /// max |A - A^H| over all cells.
    pub fn hermitian_defect(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Entrywise conjugate.
    pub fn conjugate(&self) -> CscMatrix {
        CscMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn to_faer(&self) -> faer::sparse::SparseColMat<usize, faer::complex_native::c64> {
        let symbolic = faer::sparse::SymbolicSparseColMat::new_checked(
            self.nrows,
            self.ncols,
            self.col_ptr.clone(),
            None,
            self.row_idx.clone(),
        );
        let values: Vec<faer::complex_native::c64> = self
            .values
            .iter()
            .map(|v| faer::complex_native::c64::new(v.re, v.im))
            .collect();
        faer::sparse::SparseColMat::new(symbolic, values)
    }
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplet_duplicates_are_summed() {
        let m = CscMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, c(1.0, 0.0)), (0, 0, c(2.0, 1.0)), (1, 0, c(3.0, 0.0))],
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), c(3.0, 1.0));
        assert_eq!(m.get(1, 0), c(3.0, 0.0));
        assert_eq!(m.get(1, 1), c(0.0, 0.0));
    }

    #[test]
    fn assembly_is_order_independent() {
        let trips = vec![
            (0, 0, c(0.1, 0.7)),
            (1, 2, c(0.2, -0.3)),
            (0, 0, c(0.3, 0.001)),
            (2, 1, c(-0.4, 0.0)),
            (0, 0, c(1e-17, 2.0)),
        ];
        let mut rev = trips.clone();
        rev.reverse();
        let a = CscMatrix::from_triplets(3, 3, trips);
        let b = CscMatrix::from_triplets(3, 3, rev);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!(x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
        }
    }

    #[test]
    fn matvec_and_transpose() {
        // [[1, 0], [2i, 3]]
        let m = CscMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, c(1.0, 0.0)), (1, 0, c(0.0, 2.0)), (1, 1, c(3.0, 0.0))],
        );
        let x = [c(1.0, 0.0), c(0.0, 1.0)];
        let y = m.matvec(&x);
        assert_eq!(y[0], c(1.0, 0.0));
        assert_eq!(y[1], c(0.0, 5.0));
        // A^T = [[1, 2i], [0, 3]]
        let z = m.transpose_matvec(&x);
        assert_eq!(z[0], c(-1.0, 0.0));
        assert_eq!(z[1], c(0.0, 3.0));
    }
}
