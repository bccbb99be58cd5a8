//! Multifrontal LU of a block-sparse matrix with an optional dense border row and column.
//!
//! Fronts follow a nested-dissection tree over the blocks. Each front eliminates its own
//! blocks with partial pivoting restricted to the fully summed rows and passes the Schur
//! complement on its boundary blocks (plus the border variable) to its parent. The border
//! variable is eliminated at the root.

use faer::linalg::lu::partial_pivoting::factor::{lu_in_place, lu_in_place_scratch};
use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_unit_lower_triangular_in_place,
    solve_unit_upper_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::prelude::{Reborrow, ReborrowMut};
use faer::{Accum, Mat, MatMut, Par};

use crate::assembly::BlockMatrix;

use super::ordering::{nested_dissection, EliminationTree, LEAF_SIZE};
use super::SolverError;

/// Pivots below this fraction of the largest matrix entry count as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone)]
struct Front {
    /// Global scalar indices of the front rows/columns: fully summed first.
    idx: Vec<usize>,
    k: usize,
    /// [L11\U11 | U12], k x m
    top: Mat<f64>,
    /// L21, (m - k) x k
    l21: Mat<f64>,
    /// Row i of the factored block is row perm[i] of the assembled front.
    perm: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FactorStats {
    pub dim: usize,
    pub fronts: usize,
    pub max_front: usize,
    /// Stored entries of L and U.
    pub factor_entries: usize,
}

#[derive(Debug, Clone)]
pub struct MultifrontalLu {
    n: usize,
    fronts: Vec<Front>,
    pub stats: FactorStats,
}

fn block_adjacency(a: &BlockMatrix) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); a.n_blocks];
    for r in 0..a.n_blocks {
        for &c in a.row_blocks(r) {
            if c != r {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

struct Symbolic {
    /// Boundary blocks of each node.
    boundary: Vec<Vec<usize>>,
}

fn symbolic(tree: &EliminationTree, adj: &[Vec<usize>], n_blocks: usize) -> Symbolic {
    let mut done = vec![false; n_blocks];
    let mut own_mark = vec![false; n_blocks];
    let mut seen = vec![false; n_blocks];
    let mut boundary: Vec<Vec<usize>> = Vec::with_capacity(tree.nodes.len());
    for node in &tree.nodes {
        for &v in &node.own {
            own_mark[v] = true;
        }
        let mut bd = Vec::new();
        let mut push = |w: usize, bd: &mut Vec<usize>| {
            if !done[w] && !own_mark[w] && !seen[w] {
                seen[w] = true;
                bd.push(w);
            }
        };
        for &v in &node.own {
            for &w in &adj[v] {
                push(w, &mut bd);
            }
        }
        for &c in &node.children {
            for &w in &boundary[c] {
                push(w, &mut bd);
            }
        }
        bd.sort_unstable();
        for &w in &bd {
            seen[w] = false;
        }
        for &v in &node.own {
            own_mark[v] = false;
            done[v] = true;
        }
        boundary.push(bd);
    }
    Symbolic { boundary }
}

impl MultifrontalLu {
    pub fn factor(a: &BlockMatrix) -> Result<Self, SolverError> {
        let adj = block_adjacency(a);
        let tree = nested_dissection(&adj, LEAF_SIZE);
        Self::factor_with_tree(a, &tree, &adj)
    }

    fn factor_with_tree(a: &BlockMatrix, tree: &EliminationTree, adj: &[Vec<usize>]) -> Result<Self, SolverError> {
        let b = a.block;
        let n = a.dim();
        let nbs = a.n_blocks * b;
        let sym = symbolic(tree, adj, a.n_blocks);
        let amax = a.max_abs();
        let threshold = PIVOT_TOLERANCE * amax;
        let root = tree.root();
        if !sym.boundary[root].is_empty() {
            return Err(SolverError::Structure("root front has boundary blocks".into()));
        }
        let mut pos = vec![usize::MAX; a.n_blocks];
        let mut contributions: Vec<Option<(Vec<usize>, Mat<f64>)>> = vec![None; tree.nodes.len()];
        let mut fronts = Vec::with_capacity(tree.nodes.len());
        let mut stats = FactorStats {
            dim: n,
            fronts: tree.nodes.len(),
            max_front: 0,
            factor_entries: 0,
        };
        for (id, node) in tree.nodes.iter().enumerate() {
            let own = &node.own;
            let bd = &sym.boundary[id];
            let is_root = id == root;
            let blocks: Vec<usize> = own.iter().chain(bd.iter()).cloned().collect();
            for (i, &blk) in blocks.iter().enumerate() {
                pos[blk] = i;
            }
            let border = a.bordered as usize;
            let m = blocks.len() * b + border;
            let k = own.len() * b + if is_root { border } else { 0 };
            stats.max_front = stats.max_front.max(m);
            let mut f = Mat::<f64>::zeros(m, m);
            let n_own = own.len();
            // original entries first touched by this front
            for (ir, &r) in blocks.iter().enumerate() {
                for &c in a.row_blocks(r) {
                    let ic = pos[c];
                    if ic == usize::MAX || (ir >= n_own && ic >= n_own) {
                        continue;
                    }
                    let blk = a.block_ref(r, c).unwrap();
                    for i in 0..b {
                        for j in 0..b {
                            f[(ir * b + i, ic * b + j)] += blk[i * b + j];
                        }
                    }
                }
            }
            if a.bordered {
                let last = m - 1;
                for (ir, &r) in own.iter().enumerate() {
                    for i in 0..b {
                        f[(ir * b + i, last)] += a.border_col[r * b + i];
                        f[(last, ir * b + i)] += a.border_row[r * b + i];
                    }
                }
                if is_root {
                    f[(last, last)] += a.corner;
                }
            }
            // extend-add
            for &c in &node.children {
                let (cblocks, s) = contributions[c].take().expect("child factored");
                let mut map = Vec::with_capacity(s.nrows());
                for &blk in &cblocks {
                    let p = pos[blk];
                    debug_assert!(p != usize::MAX);
                    for i in 0..b {
                        map.push(p * b + i);
                    }
                }
                if a.bordered {
                    map.push(m - 1);
                }
                for j in 0..s.ncols() {
                    let mj = map[j];
                    for i in 0..s.nrows() {
                        f[(map[i], mj)] += s[(i, j)];
                    }
                }
            }
            for &blk in &blocks {
                pos[blk] = usize::MAX;
            }
            let mut idx = Vec::with_capacity(m);
            for &blk in &blocks {
                idx.extend(blk * b..(blk + 1) * b);
            }
            if a.bordered {
                idx.push(nbs);
            }
            let (perm, schur, l21) = partial_factor(f.as_mut(), k, threshold).map_err(|i| SolverError::Singular {
                dof: idx[i],
            })?;
            let top = f.as_ref().subrows(0, k).to_owned();
            stats.factor_entries += k * m + (m - k) * k;
            if !is_root {
                contributions[id] = Some((bd.clone(), schur));
            }
            fronts.push(Front {
                idx,
                k,
                top,
                l21,
                perm,
            });
        }
        Ok(Self { n, fronts, stats })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites `x` (the right-hand side) with the solution of A x = rhs.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let mut t = Mat::<f64>::zeros(0, 1);
        for fr in &self.fronts {
            let k = fr.k;
            let m = fr.idx.len();
            t.resize_with(k, 1, |_, _| 0.0);
            for i in 0..k {
                t[(i, 0)] = x[fr.idx[fr.perm[i]]];
            }
            solve_unit_lower_triangular_in_place(fr.top.as_ref().submatrix(0, 0, k, k), t.as_mut(), Par::Seq);
            for i in 0..k {
                x[fr.idx[i]] = t[(i, 0)];
            }
            if m > k {
                let mut u = Mat::<f64>::zeros(m - k, 1);
                matmul(u.as_mut(), Accum::Replace, fr.l21.as_ref(), t.as_ref(), 1.0, Par::Seq);
                for i in 0..m - k {
                    x[fr.idx[k + i]] -= u[(i, 0)];
                }
            }
        }
        for fr in self.fronts.iter().rev() {
            let k = fr.k;
            let m = fr.idx.len();
            t.resize_with(k, 1, |_, _| 0.0);
            for i in 0..k {
                t[(i, 0)] = x[fr.idx[i]];
            }
            if m > k {
                let mut xb = Mat::<f64>::zeros(m - k, 1);
                for i in 0..m - k {
                    xb[(i, 0)] = x[fr.idx[k + i]];
                }
                matmul(t.as_mut(), Accum::Add, fr.top.as_ref().submatrix(0, k, k, m - k), xb.as_ref(), -1.0, Par::Seq);
            }
            solve_upper_triangular_in_place(fr.top.as_ref().submatrix(0, 0, k, k), t.as_mut(), Par::Seq);
            for i in 0..k {
                x[fr.idx[i]] = t[(i, 0)];
            }
        }
    }

    /// Overwrites `x` with the solution of A^T x = rhs.
    pub fn solve_transpose_in_place(&self, x: &mut [f64]) {
        let mut z = Mat::<f64>::zeros(0, 1);
        for fr in &self.fronts {
            let k = fr.k;
            let m = fr.idx.len();
            z.resize_with(k, 1, |_, _| 0.0);
            for i in 0..k {
                z[(i, 0)] = x[fr.idx[i]];
            }
            let u11 = fr.top.as_ref().submatrix(0, 0, k, k);
            solve_lower_triangular_in_place(u11.transpose(), z.as_mut(), Par::Seq);
            for i in 0..k {
                x[fr.idx[i]] = z[(i, 0)];
            }
            if m > k {
                let mut u = Mat::<f64>::zeros(m - k, 1);
                let u12 = fr.top.as_ref().submatrix(0, k, k, m - k);
                matmul(u.as_mut(), Accum::Replace, u12.transpose(), z.as_ref(), 1.0, Par::Seq);
                for i in 0..m - k {
                    x[fr.idx[k + i]] -= u[(i, 0)];
                }
            }
        }
        for fr in self.fronts.iter().rev() {
            let k = fr.k;
            let m = fr.idx.len();
            z.resize_with(k, 1, |_, _| 0.0);
            for i in 0..k {
                z[(i, 0)] = x[fr.idx[i]];
            }
            if m > k {
                let mut xb = Mat::<f64>::zeros(m - k, 1);
                for i in 0..m - k {
                    xb[(i, 0)] = x[fr.idx[k + i]];
                }
                matmul(z.as_mut(), Accum::Add, fr.l21.as_ref().transpose(), xb.as_ref(), -1.0, Par::Seq);
            }
            let l11 = fr.top.as_ref().submatrix(0, 0, k, k);
            solve_unit_upper_triangular_in_place(l11.transpose(), z.as_mut(), Par::Seq);
            for i in 0..k {
                x[fr.idx[fr.perm[i]]] = z[(i, 0)];
            }
        }
    }
}

/// Factors the leading k columns of the front in place. Returns the row permutation of the
/// fully summed rows, the Schur complement on the remaining rows and columns, and L21.
/// On a tiny pivot returns the front-local column index.
fn partial_factor(mut f: MatMut<'_, f64>, k: usize, threshold: f64) -> Result<(Vec<usize>, Mat<f64>, Mat<f64>), usize> {
    let m = f.nrows();
    let mut perm = vec![0usize; k];
    let mut perm_inv = vec![0usize; k];
    if k > 0 {
        let mut mem = MemBuffer::new(lu_in_place_scratch::<usize, f64>(k, m, Par::Seq, Default::default()));
        let stack = MemStack::new(&mut mem);
        lu_in_place(
            f.rb_mut().subrows_mut(0, k),
            &mut perm,
            &mut perm_inv,
            Par::Seq,
            stack,
            Default::default(),
        );
        for i in 0..k {
            let p = f[(i, i)];
            if !(p.abs() > threshold) {
                return Err(i);
            }
        }
    }
    let (top, mut bottom) = f.split_at_row_mut(k);
    let top = top.rb();
    let u11 = top.submatrix(0, 0, k, k);
    let mut l21 = bottom.rb().submatrix(0, 0, m - k, k).to_owned();
    // X U11 = F21  <=>  U11^T X^T = F21^T
    solve_lower_triangular_in_place(u11.transpose(), l21.as_mut().transpose_mut(), Par::Seq);
    let mut s = bottom.rb().submatrix(0, k, m - k, m - k).to_owned();
    matmul(s.as_mut(), Accum::Add, l21.as_ref(), top.submatrix(0, k, k, m - k), -1.0, Par::Seq);
    bottom.fill(0.0);
    Ok((perm, s, l21))
}
