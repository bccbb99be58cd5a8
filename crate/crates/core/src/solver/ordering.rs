//! Nested dissection of the block graph by BFS level-structure separators.

use std::collections::VecDeque;

/// Node of the elimination tree: `own` blocks are eliminated here after all children.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub own: Vec<usize>,
    pub children: Vec<usize>,
}

/// Elimination tree in postorder: children always precede parents, the root is last.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationTree {
    pub nodes: Vec<TreeNode>,
}

impl EliminationTree {
    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Block ordering implied by the tree.
    pub fn permutation(&self) -> Vec<usize> {
        self.nodes.iter().flat_map(|n| n.own.iter().cloned()).collect()
    }
}

pub const LEAF_SIZE: usize = 48;

/// Builds a nested-dissection tree of the graph with adjacency lists `adj`.
pub fn nested_dissection(adj: &[Vec<usize>], leaf_size: usize) -> EliminationTree {
    let n = adj.len();
    let mut nodes = Vec::new();
    let mut in_set = vec![false; n];
    let mut level = vec![usize::MAX; n];
    let all: Vec<usize> = (0..n).collect();
    let roots = dissect(adj, all, leaf_size.max(1), &mut nodes, &mut in_set, &mut level);
    if roots.len() != 1 {
        nodes.push(TreeNode {
            own: Vec::new(),
            children: roots,
        });
    }
    EliminationTree { nodes }
}

fn components(adj: &[Vec<usize>], set: &[usize], in_set: &mut [bool], mark: &mut [usize]) -> Vec<Vec<usize>> {
    for &v in set {
        in_set[v] = true;
        mark[v] = usize::MAX;
    }
    let mut out = Vec::new();
    for &s in set {
        if mark[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = vec![s];
        mark[s] = id;
        let mut i = 0;
        while i < comp.len() {
            let v = comp[i];
            i += 1;
            for &w in &adj[v] {
                if in_set[w] && mark[w] == usize::MAX {
                    mark[w] = id;
                    comp.push(w);
                }
            }
        }
        out.push(comp);
    }
    for &v in set {
        in_set[v] = false;
        mark[v] = usize::MAX;
    }
    out
}

/// BFS levels inside the set (in_set marked) from `start`; returns the level lists.
fn bfs_levels(adj: &[Vec<usize>], start: usize, in_set: &[bool], level: &mut [usize]) -> Vec<Vec<usize>> {
    let mut levels: Vec<Vec<usize>> = vec![vec![start]];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if in_set[w] && level[w] == usize::MAX {
                level[w] = level[v] + 1;
                if levels.len() <= level[w] {
                    levels.push(Vec::new());
                }
                levels[level[w]].push(w);
                queue.push_back(w);
            }
        }
    }
    levels
}

/// Returns the roots of the subtrees built for `set` (one per connected component).
fn dissect(
    adj: &[Vec<usize>],
    set: Vec<usize>,
    leaf: usize,
    nodes: &mut Vec<TreeNode>,
    in_set: &mut [bool],
    level: &mut [usize],
) -> Vec<usize> {
    if set.is_empty() {
        return Vec::new();
    }
    let comps = components(adj, &set, in_set, level);
    if comps.len() > 1 {
        return comps
            .into_iter()
            .flat_map(|c| dissect(adj, c, leaf, nodes, in_set, level))
            .collect();
    }
    let mut set = comps.into_iter().next().unwrap();
    if set.len() <= leaf {
        set.sort_unstable();
        nodes.push(TreeNode {
            own: set,
            children: Vec::new(),
        });
        return vec![nodes.len() - 1];
    }
    for &v in &set {
        in_set[v] = true;
    }
    // pseudo-peripheral start: repeat BFS from the last vertex of the deepest level
    let mut start = *set.iter().min().unwrap();
    let mut levels = Vec::new();
    for _ in 0..4 {
        for &v in &set {
            level[v] = usize::MAX;
        }
        let l = bfs_levels(adj, start, in_set, level);
        let deeper = l.len() > levels.len();
        let next = *l.last().unwrap().iter().min().unwrap();
        levels = l;
        if !deeper || next == start {
            break;
        }
        start = next;
    }
    if levels.len() <= 2 {
        for &v in &set {
            level[v] = usize::MAX;
        }
        for &v in &set {
            in_set[v] = false;
        }
        nodes.push(TreeNode {
            own: set,
            children: Vec::new(),
        });
        return vec![nodes.len() - 1];
    }
    let total = set.len() as f64;
    let mut cum = 0usize;
    let mut best: Option<(usize, usize)> = None;
    for (i, l) in levels.iter().enumerate().take(levels.len() - 1).skip(1) {
        cum += levels[i - 1].len();
        let frac = cum as f64 / total;
        if (0.35..=0.65).contains(&frac) && best.is_none_or(|(_, s)| l.len() < s) {
            best = Some((i, l.len()));
        }
    }
    let sep_level = best.map(|b| b.0).unwrap_or_else(|| {
        // fall back to the median level
        let mut c = 0;
        let mut idx = levels.len() / 2;
        for (i, l) in levels.iter().enumerate() {
            c += l.len();
            if c as f64 >= 0.5 * total {
                idx = i.clamp(1, levels.len() - 2);
                break;
            }
        }
        idx
    });
    for &v in &set {
        in_set[v] = false;
    }
    let mut sep: Vec<usize> = levels[sep_level].clone();
    let a: Vec<usize> = levels[..sep_level].iter().flatten().cloned().collect();
    let b: Vec<usize> = levels[sep_level + 1..].iter().flatten().cloned().collect();
    for &v in &set {
        level[v] = usize::MAX;
    }
    let mut children = dissect(adj, a, leaf, nodes, in_set, level);
    children.extend(dissect(adj, b, leaf, nodes, in_set, level));
    sep.sort_unstable();
    nodes.push(TreeNode { own: sep, children });
    vec![nodes.len() - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<Vec<usize>> {
        let id = |i: usize, j: usize| i * n + j;
        let mut adj = vec![Vec::new(); n * n];
        for i in 0..n {
            for j in 0..n {
                if i + 1 < n {
                    adj[id(i, j)].push(id(i + 1, j));
                    adj[id(i + 1, j)].push(id(i, j));
                }
                if j + 1 < n {
                    adj[id(i, j)].push(id(i, j + 1));
                    adj[id(i, j + 1)].push(id(i, j));
                }
            }
        }
        adj
    }

    fn check_separation(adj: &[Vec<usize>], t: &EliminationTree) {
        let n = adj.len();
        let mut owner = vec![usize::MAX; n];
        for (k, node) in t.nodes.iter().enumerate() {
            for &v in &node.own {
                assert_eq!(owner[v], usize::MAX);
                owner[v] = k;
            }
            for &c in &node.children {
                assert!(c < k);
            }
        }
        assert!(owner.iter().all(|&o| o != usize::MAX));
        // every edge joins a node to one of its ancestors (or itself)
        let mut parent = vec![usize::MAX; t.nodes.len()];
        for (k, node) in t.nodes.iter().enumerate() {
            for &c in &node.children {
                parent[c] = k;
            }
        }
        let is_ancestor = |a: usize, mut b: usize| {
            while b != usize::MAX {
                if a == b {
                    return true;
                }
                b = parent[b];
            }
            false
        };
        for v in 0..n {
            for &w in &adj[v] {
                let (a, b) = (owner[v], owner[w]);
                assert!(is_ancestor(a, b) || is_ancestor(b, a), "edge {v}-{w}");
            }
        }
    }

    #[test]
    fn grid_dissection_is_valid() {
        for n in [1, 5, 20, 33] {
            let adj = grid(n);
            let t = nested_dissection(&adj, 8);
            check_separation(&adj, &t);
            let mut p = t.permutation();
            p.sort_unstable();
            assert_eq!(p, (0..n * n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn disconnected_graph_gets_a_common_root() {
        let adj = vec![vec![1], vec![0], vec![3], vec![2]];
        let t = nested_dissection(&adj, 1);
        check_separation(&adj, &t);
        assert!(t.nodes[t.root()].own.is_empty() || t.nodes[t.root()].children.len() == 1);
    }
}
