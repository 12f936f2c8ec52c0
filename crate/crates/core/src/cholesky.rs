//! Profile (skyline) Cholesky factorization.
//!
//! A periodic banded matrix has a narrow band plus dense corner blocks that
//! couple the last cells to the first ones. Storing each row of the lower
//! triangle from its first structural nonzero keeps the band narrow for the
//! leading rows and lets the trailing rows carry the wrap fill-in exactly.

use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;

#[derive(Debug, Clone)]
pub struct ProfileCholesky {
    n: usize,
    /// First stored column of each row.
    first: Vec<usize>,
    /// Start of each row in `data`.
    start: Vec<usize>,
    data: Vec<f64>,
}

impl ProfileCholesky {
    /// Factorizes the symmetric matrix whose lower-triangle entries are given
    /// by `entry(row, col)`, `col <= row`, within the profile `first`.
    pub fn factor_with(first: Vec<usize>, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let n = first.len();
        let mut start = Vec::with_capacity(n + 1);
        let mut len = 0;
        for (i, &f) in first.iter().enumerate() {
            assert!(f <= i, "profile must include the diagonal");
            start.push(len);
            len += i - f + 1;
        }
        start.push(len);
        let mut data = vec![0.0; len];
        for i in 0..n {
            for j in first[i]..=i {
                data[start[i] + j - first[i]] = entry(i, j);
            }
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut sum = data[start[i] + j - fi];
                let (ri, rj) = (start[i] - fi, start[j] - fj);
                for k in lo..j {
                    sum -= data[ri + k] * data[rj + k];
                }
                if j < i {
                    data[ri + j] = sum / data[rj + j];
                } else {
                    if !(sum > 0.0) {
                        return Err(Error::Solver(format!(
                            "matrix is not positive definite: pivot {sum:e} at row {i}"
                        )));
                    }
                    data[ri + i] = sum.sqrt();
                }
            }
        }
        Ok(ProfileCholesky { n, first, start, data })
    }

    /// Factorizes a symmetric block-circulant operator.
    pub fn factor(op: &OperatorMatrix) -> Result<Self> {
        let nb = op.block_size();
        let cells = op.cells() as isize;
        let active: Vec<isize> = op
            .offsets()
            .filter(|&d| op.block(d).unwrap().iter().any(|&v| v != 0.0))
            .collect();
        let mut first = Vec::with_capacity(op.dim());
        for j in 0..op.cells() {
            let first_cell = active
                .iter()
                .map(|d| (j as isize + d).rem_euclid(cells) as usize)
                .filter(|&c| c <= j)
                .min()
                .unwrap_or(j);
            first.extend(std::iter::repeat_n(first_cell * nb, nb));
        }
        Self::factor_with(first, |r, c| op.get(r, c))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries of the factor.
    pub fn stored(&self) -> usize {
        self.data.len()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let mut sum = x[i];
            for (k, l) in (fi..i).zip(row) {
                sum -= l * x[k];
            }
            x[i] = sum / row[i - fi];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            x[i] /= row[i - fi];
            let xi = x[i];
            for (k, l) in (fi..i).zip(row) {
                x[k] -= l * xi;
            }
        }
    }
}
