use std::io::Write;

/// Square block-sparse matrix with dense b x b blocks, optionally bordered by one extra
/// row and column (the mean constraint) stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub n_blocks: usize,
    pub block: usize,
    /// Block CSR structure with sorted column indices.
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    /// Row-major b x b blocks in the order of `col_idx`.
    pub values: Vec<f64>,
    pub bordered: bool,
    /// Entries M[i, last] for i < last.
    pub border_col: Vec<f64>,
    /// Entries M[last, j] for j < last.
    pub border_row: Vec<f64>,
    pub corner: f64,
}

impl BlockMatrix {
    /// Zero matrix with the given block pattern (each row's neighbour list, diagonal added).
    pub fn with_pattern(block: usize, neighbors: &[Vec<usize>], bordered: bool) -> Self {
        let n = neighbors.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (r, nb) in neighbors.iter().enumerate() {
            let mut cols: Vec<usize> = nb.clone();
            cols.push(r);
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend(cols);
            row_ptr.push(col_idx.len());
        }
        let nnzb = col_idx.len();
        Self {
            n_blocks: n,
            block,
            row_ptr,
            col_idx,
            values: vec![0.0; nnzb * block * block],
            bordered,
            border_col: if bordered { vec![0.0; n * block] } else { Vec::new() },
            border_row: if bordered { vec![0.0; n * block] } else { Vec::new() },
            corner: 0.0,
        }
    }

    /// Scalar matrix (block size 1) from a dense row-major array, keeping nonzeros only.
    pub fn from_dense(n: usize, a: &[f64]) -> Self {
        let neighbors: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| a[i * n + j] != 0.0 || a[j * n + i] != 0.0).collect())
            .collect();
        let mut m = Self::with_pattern(1, &neighbors, false);
        for i in 0..n {
            for j in 0..n {
                if a[i * n + j] != 0.0 {
                    m.block_mut(i, j).unwrap()[0] = a[i * n + j];
                }
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n_blocks * self.block + self.bordered as usize
    }

    fn slot(&self, r: usize, c: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        cols.binary_search(&c).ok().map(|i| self.row_ptr[r] + i)
    }

    pub fn block_ref(&self, r: usize, c: usize) -> Option<&[f64]> {
        let bb = self.block * self.block;
        self.slot(r, c).map(|s| &self.values[s * bb..(s + 1) * bb])
    }

    pub fn block_mut(&mut self, r: usize, c: usize) -> Option<&mut [f64]> {
        let bb = self.block * self.block;
        self.slot(r, c).map(move |s| &mut self.values[s * bb..(s + 1) * bb])
    }

    /// Block-column indices of block row r.
    pub fn row_blocks(&self, r: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let nb = self.n_blocks * self.block;
        match (i == nb && self.bordered, j == nb && self.bordered) {
            (true, true) => self.corner,
            (true, false) => self.border_row[j],
            (false, true) => self.border_col[i],
            (false, false) => {
                let b = self.block;
                self.block_ref(i / b, j / b)
                    .map(|blk| blk[(i % b) * b + j % b])
                    .unwrap_or(0.0)
            }
        }
    }

    /// y = M x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let b = self.block;
        let bb = b * b;
        let nb = self.n_blocks * b;
        for r in 0..self.n_blocks {
            let yr = &mut y[r * b..(r + 1) * b];
            yr.fill(0.0);
            for s in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[s];
                let blk = &self.values[s * bb..(s + 1) * bb];
                let xc = &x[c * b..(c + 1) * b];
                for i in 0..b {
                    let row = &blk[i * b..(i + 1) * b];
                    yr[i] += row.iter().zip(xc).map(|(a, v)| a * v).sum::<f64>();
                }
            }
            if self.bordered {
                for i in 0..b {
                    yr[i] += self.border_col[r * b + i] * x[nb];
                }
            }
        }
        if self.bordered {
            y[nb] = self.border_row.iter().zip(&x[..nb]).map(|(a, v)| a * v).sum::<f64>()
                + self.corner * x[nb];
        }
    }

    /// y = M^T x
    pub fn matvec_transpose(&self, x: &[f64], y: &mut [f64]) {
        let b = self.block;
        let bb = b * b;
        let nb = self.n_blocks * b;
        y.fill(0.0);
        for r in 0..self.n_blocks {
            let xr = &x[r * b..(r + 1) * b];
            for s in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[s];
                let blk = &self.values[s * bb..(s + 1) * bb];
                let yc = &mut y[c * b..(c + 1) * b];
                for i in 0..b {
                    let xi = xr[i];
                    if xi != 0.0 {
                        for (yj, a) in yc.iter_mut().zip(&blk[i * b..(i + 1) * b]) {
                            *yj += a * xi;
                        }
                    }
                }
            }
        }
        if self.bordered {
            for j in 0..nb {
                y[j] += self.border_row[j] * x[nb];
            }
            y[nb] = self.border_col.iter().zip(&x[..nb]).map(|(a, v)| a * v).sum::<f64>()
                + self.corner * x[nb];
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .chain(&self.border_col)
            .chain(&self.border_row)
            .chain(std::iter::once(&self.corner))
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest |M_ij - M_ji| relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let b = self.block;
        let mut worst: f64 = 0.0;
        for r in 0..self.n_blocks {
            for &c in self.row_blocks(r) {
                let a = self.block_ref(r, c).unwrap();
                let t = self.block_ref(c, r).unwrap();
                for i in 0..b {
                    for j in 0..b {
                        worst = worst.max((a[i * b + j] - t[j * b + i]).abs());
                    }
                }
            }
        }
        for (a, t) in self.border_col.iter().zip(&self.border_row) {
            worst = worst.max((a - t).abs());
        }
        worst / self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Nonzero entries as (row, col, value).
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let b = self.block;
        let bb = b * b;
        let nb = self.n_blocks * b;
        let mut out = Vec::new();
        for r in 0..self.n_blocks {
            for s in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[s];
                for i in 0..b {
                    for j in 0..b {
                        let v = self.values[s * bb + i * b + j];
                        if v != 0.0 {
                            out.push((r * b + i, c * b + j, v));
                        }
                    }
                }
            }
        }
        if self.bordered {
            for i in 0..nb {
                if self.border_col[i] != 0.0 {
                    out.push((i, nb, self.border_col[i]));
                }
                if self.border_row[i] != 0.0 {
                    out.push((nb, i, self.border_row[i]));
                }
            }
            if self.corner != 0.0 {
                out.push((nb, nb, self.corner));
            }
        }
        out
    }

    /// Coordinate text dump: a "%% rows cols nnz" header then "row col value" lines (0-based).
    pub fn write_coordinate(&self, out: &mut impl Write) -> std::io::Result<()> {
        let t = self.triplets();
        writeln!(out, "%% {} {} {}", self.dim(), self.dim(), t.len())?;
        for (i, j, v) in t {
            writeln!(out, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }

    /// Dense copy (tests and small diagnostics only).
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut a = vec![0.0; n * n];
        for (i, j, v) in self.triplets() {
            a[i * n + j] += v;
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BlockMatrix {
        let mut m = BlockMatrix::with_pattern(2, &[vec![1], vec![0], vec![]], true);
        m.block_mut(0, 0).unwrap().copy_from_slice(&[1.0, 2.0, 3.0, 4.0]);
        m.block_mut(0, 1).unwrap().copy_from_slice(&[5.0, 0.0, 0.0, 6.0]);
        m.block_mut(1, 0).unwrap().copy_from_slice(&[7.0, 0.0, 1.0, 0.0]);
        m.block_mut(2, 2).unwrap().copy_from_slice(&[2.0, 0.0, 0.0, 2.0]);
        m.border_col[1] = 3.0;
        m.border_row[4] = -1.0;
        m.corner = 0.5;
        m
    }

    #[test]
    fn matvec_matches_dense() {
        let m = sample();
        let n = m.dim();
        let a = m.to_dense();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut y = vec![0.0; n];
        let mut yt = vec![0.0; n];
        m.matvec(&x, &mut y);
        m.matvec_transpose(&x, &mut yt);
        for i in 0..n {
            let r: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            let rt: f64 = (0..n).map(|j| a[j * n + i] * x[j]).sum();
            assert!((r - y[i]).abs() < 1e-14);
            assert!((rt - yt[i]).abs() < 1e-14);
        }
        assert_eq!(m.get(6, 6), 0.5);
        assert_eq!(m.get(1, 6), 3.0);
        assert_eq!(m.get(6, 4), -1.0);
        assert_eq!(m.get(0, 4), 0.0);
    }

    #[test]
    fn coordinate_dump_has_header_and_entries() {
        let m = sample();
        let mut buf = Vec::new();
        m.write_coordinate(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let first = s.lines().next().unwrap();
        assert_eq!(first, format!("%% 7 7 {}", m.triplets().len()));
        assert_eq!(s.lines().count(), m.triplets().len() + 1);
    }
}
