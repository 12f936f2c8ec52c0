//! Block-circulant operators on a uniform periodic DG space.
//!
//! Every operator assembled here commutes with cell translation, so it is
//! fully described by one `(k+1) x (k+1)` block per cell offset `d`:
//! `(A x)_j = sum_d B_d x_{(j + d) mod N}`. Offsets that alias modulo `N`
//! add up when the matrix is viewed densely.

use std::io::Write;

use nalgebra::DMatrix;

/// Block-circulant matrix of dimension `cells * block`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    cells: usize,
    block: usize,
    lo: isize,
    /// Blocks for offsets `lo, lo + 1, ...`, each row-major.
    blocks: Vec<f64>,
}

impl OperatorMatrix {
    pub fn zeros(cells: usize, block: usize, lo: isize, hi: isize) -> Self {
        assert!(lo <= hi, "empty offset range");
        let count = (hi - lo + 1) as usize;
        OperatorMatrix {
            cells,
            block,
            lo,
            blocks: vec![0.0; count * block * block],
        }
    }

    pub fn dim(&self) -> usize {
        self.cells * self.block
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn min_offset(&self) -> isize {
        self.lo
    }

    pub fn max_offset(&self) -> isize {
        self.lo + self.block_count() as isize - 1
    }

    fn block_count(&self) -> usize {
        self.blocks.len() / (self.block * self.block)
    }

    pub fn offsets(&self) -> impl Iterator<Item = isize> {
        self.lo..=self.max_offset()
    }

    pub fn block(&self, d: isize) -> Option<&[f64]> {
        if d < self.lo || d > self.max_offset() {
            return None;
        }
        let bb = self.block * self.block;
        let idx = (d - self.lo) as usize;
        Some(&self.blocks[idx * bb..(idx + 1) * bb])
    }

    /// Mutable block for offset `d`, growing the stored range if needed.
    pub fn block_mut(&mut self, d: isize) -> &mut [f64] {
        self.ensure_range(d, d);
        let bb = self.block * self.block;
        let idx = (d - self.lo) as usize;
        &mut self.blocks[idx * bb..(idx + 1) * bb]
    }

    fn ensure_range(&mut self, lo: isize, hi: isize) {
        let bb = self.block * self.block;
        if lo < self.lo {
            let extra = (self.lo - lo) as usize;
            let mut grown = vec![0.0; extra * bb];
            grown.extend_from_slice(&self.blocks);
            self.blocks = grown;
            self.lo = lo;
        }
        if hi > self.max_offset() {
            let extra = (hi - self.max_offset()) as usize;
            self.blocks.extend(std::iter::repeat_n(0.0, extra * bb));
        }
    }

    /// Largest `|d|` whose block has a nonzero entry.
    pub fn bandwidth(&self) -> usize {
        self.offsets()
            .filter(|&d| self.block(d).unwrap().iter().any(|&v| v != 0.0))
            .map(|d| d.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// Dense entry `(row, col)`, summing aliased offsets.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let nb = self.block;
        let (j, m) = (row / nb, row % nb);
        let (i, l) = (col / nb, col % nb);
        let n = self.cells as isize;
        let e = (i as isize - j as isize).rem_euclid(n);
        self.offsets()
            .filter(|d| d.rem_euclid(n) == e)
            .map(|d| self.block(d).unwrap()[m * nb + l])
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, c| self.get(r, c))
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nb = self.block;
        let n = self.cells as isize;
        y.fill(0.0);
        for d in self.offsets() {
            let blk = self.block(d).unwrap();
            for j in 0..self.cells {
                let src = (j as isize + d).rem_euclid(n) as usize;
                let xs = &x[src * nb..(src + 1) * nb];
                let ys = &mut y[j * nb..(j + 1) * nb];
                for m in 0..nb {
                    let row = &blk[m * nb..(m + 1) * nb];
                    ys[m] += row.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let y = self.apply_vec(x);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> Self {
        let nb = self.block;
        let mut out = OperatorMatrix::zeros(self.cells, nb, -self.max_offset(), -self.lo);
        for d in self.offsets() {
            let src = self.block(d).unwrap().to_vec();
            let dst = out.block_mut(-d);
            for m in 0..nb {
                for l in 0..nb {
                    dst[l * nb + m] = src[m * nb + l];
                }
            }
        }
        out
    }

    pub fn scale(&mut self, c: f64) {
        self.blocks.iter_mut().for_each(|v| *v *= c);
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &OperatorMatrix, c: f64) {
        assert_eq!((self.cells, self.block), (other.cells, other.block));
        self.ensure_range(other.lo, other.max_offset());
        for d in other.offsets() {
            let src = other.block(d).unwrap();
            let dst = self.block_mut(d);
            for (a, b) in dst.iter_mut().zip(src) {
                *a += c * b;
            }
        }
    }

    /// `self += c * diag(per-mode entries)` on the offset-0 block.
    pub fn add_block_diagonal(&mut self, entries: &[f64], c: f64) {
        let nb = self.block;
        let blk = self.block_mut(0);
        for m in 0..nb {
            blk[m * nb + m] += c * entries[m];
        }
    }

    /// `A^T diag(w)^{-1} B` for block-circulant `A`, `B`, with the per-mode
    /// diagonal `w` repeated on every cell.
    pub fn weighted_gram(a: &OperatorMatrix, inv_weight: &[f64], b: &OperatorMatrix) -> Self {
        assert_eq!((a.cells, a.block), (b.cells, b.block));
        let nb = a.block;
        let lo = b.lo - a.max_offset();
        let hi = b.max_offset() - a.lo;
        let mut out = OperatorMatrix::zeros(a.cells, nb, lo, hi);
        let mut scaled = vec![0.0; nb * nb];
        for c in a.offsets() {
            let ac = a.block(c).unwrap();
            if ac.iter().all(|&v| v == 0.0) {
                continue;
            }
            // scaled = A_c^T W^{-1}
            for l in 0..nb {
                for m in 0..nb {
                    scaled[l * nb + m] = ac[m * nb + l] * inv_weight[m];
                }
            }
            for d in b.offsets() {
                let bd = b.block(d).unwrap();
                let dst = out.block_mut(d - c);
                for l in 0..nb {
                    for r in 0..nb {
                        let mut acc = 0.0;
                        for m in 0..nb {
                            acc += scaled[l * nb + m] * bd[m * nb + r];
                        }
                        dst[l * nb + r] += acc;
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                worst = worst.max(self.get(r, c).abs());
            }
        }
        worst
    }

    /// Entrywise max-norm distance between the dense views of two operators.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        let mut diff = self.clone();
        diff.add_scaled(other, -1.0);
        diff.max_abs()
    }

    /// Largest `|A_{rc} - A_{cr}|` over the dense view.
    pub fn symmetry_defect(&self) -> f64 {
        self.max_abs_diff(&self.transpose())
    }

    /// Plain-text dump: a `# nldg-matrix dim=<n> band=<w>` header, then one
    /// `row col value` line per nonzero entry of the dense view.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.dim();
        writeln!(out, "# nldg-matrix dim={} band={}", n, self.bandwidth())?;
        for r in 0..n {
            for c in 0..n {
                let v = self.get(r, c);
                if v != 0.0 {
                    writeln!(out, "{r} {c} {v:e}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(cells: usize, nb: usize, lo: isize, hi: isize, seed: f64) -> OperatorMatrix {
        let mut a = OperatorMatrix::zeros(cells, nb, lo, hi);
        for d in lo..=hi {
            for (i, v) in a.block_mut(d).iter_mut().enumerate() {
                *v = ((d as f64 + 3.1) * seed + i as f64 * 0.37).sin();
            }
        }
        a
    }

    #[test]
    fn dense_view_matches_apply_and_transpose() {
        let a = sample(5, 2, -1, 3, 0.7);
        let x: Vec<f64> = (0..10).map(|i| (i as f64).cos()).collect();
        let y = a.apply_vec(&x);
        let dense = a.to_dense();
        let yd = &dense * nalgebra::DVector::from_vec(x.clone());
        for i in 0..10 {
            assert!((y[i] - yd[i]).abs() < 1e-13);
        }
        assert!((a.transpose().to_dense() - dense.transpose()).abs().max() < 1e-15);
    }

    #[test]
    fn aliasing_offsets_wrap() {
        // N = 3: offsets -2 and 1 alias.
        let mut a = OperatorMatrix::zeros(3, 1, -2, 1);
        a.block_mut(-2)[0] = 1.0;
        a.block_mut(1)[0] = 2.0;
        assert_eq!(a.get(0, 1), 3.0);
    }

    #[test]
    fn weighted_gram_matches_dense() {
        let a = sample(6, 3, 0, 2, 0.3);
        let b = sample(6, 3, -1, 1, 1.1);
        let w = [0.5, 2.0, 4.0];
        let g = OperatorMatrix::weighted_gram(&a, &w.map(|v| 1.0 / v), &b);
        let winv = DMatrix::from_fn(18, 18, |r, c| if r == c { 1.0 / w[r % 3] } else { 0.0 });
        let dense = a.to_dense().transpose() * winv * b.to_dense();
        assert!((g.to_dense() - dense).abs().max() < 1e-13);
    }

    #[test]
    fn triplet_dump_header() {
        let mut a = OperatorMatrix::zeros(4, 1, -1, 1);
        a.block_mut(-1)[0] = -1.0;
        a.block_mut(0)[0] = 2.0;
        a.block_mut(1)[0] = -1.0;
        let mut buf = Vec::new();
        a.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# nldg-matrix dim=4 band=1"));
        assert_eq!(lines.count(), 12);
    }
}
