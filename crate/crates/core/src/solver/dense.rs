//! Dense symmetric positive-definite system: lower-triangular Gram
//! accumulation from sparse rows and an in-place Cholesky factor.

use dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::{factor, solve};
use faer::{Conj, MatMut, MatRef, Par};
use rayon::prelude::*;

use crate::sparse::CsrMatrix;

/// Column-major `n × n` matrix; only the lower triangle is meaningful.
pub(crate) struct LowerDense {
    pub n: usize,
    pub data: Vec<f64>,
}

impl LowerDense {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.data[i * self.n + i]
    }

    pub fn add_diag(&mut self, shift: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += shift;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.diag(i)).sum()
    }

    /// Adds `scale · AᵀA`. Each entry accumulates rows of `A` in row order,
    /// so the result does not depend on how columns are split across threads.
    pub fn add_gram(&mut self, a: &CsrMatrix, scale: f64) {
        let n = self.n;
        assert_eq!(a.ncols(), n);
        if n == 0 || a.nrows() == 0 {
            return;
        }
        let block_cols = n.div_ceil(4 * rayon::current_num_threads()).max(16);
        self.data.par_chunks_mut(block_cols * n).enumerate().for_each(|(b, block)| {
            let j0 = b * block_cols;
            let j1 = (j0 + block_cols).min(n);
            for r in 0..a.nrows() {
                let (cols, vals) = a.row_slices(r);
                let start = cols.partition_point(|&c| c < j0);
                for p in start..cols.len() {
                    let cj = cols[p];
                    if cj >= j1 {
                        break;
                    }
                    let vj = scale * vals[p];
                    let column = &mut block[(cj - j0) * n..(cj - j0 + 1) * n];
                    for q in p..cols.len() {
                        column[cols[q]] += vj * vals[q];
                    }
                }
            }
        });
    }

    /// Factors in place into `L` with `M = L·Lᵀ`. On failure returns the
    /// index of the first non-positive pivot.
    pub fn cholesky(mut self) -> Result<Cholesky, usize> {
        let n = self.n;
        let mut buf = MemBuffer::new(factor::cholesky_in_place_scratch::<f64>(n, Par::Seq, Default::default()));
        let stack = MemStack::new(&mut buf);
        let mat = MatMut::from_column_major_slice_mut(&mut self.data, n, n);
        match factor::cholesky_in_place(mat, Default::default(), Par::Seq, stack, Default::default()) {
            Ok(_) => Ok(Cholesky { n, data: self.data }),
            Err(factor::LltError::NonPositivePivot { index }) => Err(index),
        }
    }
}

pub(crate) struct Cholesky {
    n: usize,
    data: Vec<f64>,
}

impl Cholesky {
    /// Squared diagonal of `L`: the Cholesky pivots.
    pub fn pivots(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.data[i * self.n + i].powi(2))
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let l = MatRef::from_column_major_slice(&self.data, self.n, self.n);
        let x = MatMut::from_column_major_slice_mut(rhs, self.n, 1);
        let mut buf = MemBuffer::new(solve::solve_in_place_scratch::<f64>(self.n, 1, Par::Seq));
        solve::solve_in_place_with_conj(l, Conj::No, x, Par::Seq, MemStack::new(&mut buf));
    }
}
