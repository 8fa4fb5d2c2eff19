//! Directed communication graph and the mixing matrices built on it.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NodeKind {
    Generator,
    Consumer,
}

/// Directed graph over `n` nodes. An edge `(from, to)` lets `to` read from `from`.
///
/// Edges are kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    kinds: Vec<NodeKind>,
}

impl Digraph {
    pub fn new(kinds: Vec<NodeKind>, mut edges: Vec<(usize, usize)>) -> Result<Self, ModelError> {
        let n = kinds.len();
        if let Some(&(from, to)) = edges.iter().find(|&&(f, t)| f >= n || t >= n) {
            return Err(ModelError::EdgeOutOfRange { from, to, n });
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { n, edges, kinds })
    }

    /// Bidirectional ring `0 ↔ 1 ↔ … ↔ n-1 ↔ 0` with a self-loop at every node.
    pub fn bidirectional_ring(kinds: Vec<NodeKind>) -> Self {
        let n = kinds.len();
        let mut edges = Vec::with_capacity(3 * n);
        for i in 0..n {
            edges.push((i, i));
            if n > 1 {
                edges.push((i, (i + 1) % n));
                edges.push(((i + 1) % n, i));
            }
        }
        Self::new(kinds, edges).expect("ring edges are in range")
    }

    /// Directed cycle `0 → 1 → … → n-1 → 0` with self-loops.
    pub fn directed_cycle(kinds: Vec<NodeKind>) -> Self {
        let n = kinds.len();
        let mut edges = Vec::with_capacity(2 * n);
        for i in 0..n {
            edges.push((i, i));
            edges.push((i, (i + 1) % n));
        }
        Self::new(kinds, edges).expect("cycle edges are in range")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.binary_search(&(from, to)).is_ok()
    }

    pub fn has_self_loop(&self, node: usize) -> bool {
        self.has_edge(node, node)
    }

    /// Number of edges ending at `node`, self-loop included.
    pub fn in_degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|&&(_, t)| t == node).count()
    }

    /// Number of edges leaving `node`, self-loop included.
    pub fn out_degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|&&(f, _)| f == node).count()
    }

    pub fn is_strongly_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        self.disconnected_nodes().is_empty()
    }

    /// Nodes that cannot be reached from node 0 or cannot reach it.
    pub fn disconnected_nodes(&self) -> Vec<usize> {
        if self.n == 0 {
            return Vec::new();
        }
        let fwd = self.reachable(false);
        let bwd = self.reachable(true);
        (0..self.n).filter(|&i| !(fwd[i] && bwd[i])).collect()
    }

    fn reachable(&self, reversed: bool) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(f, t) in &self.edges {
                let (src, dst) = if reversed { (t, f) } else { (f, t) };
                if src == u && !seen[dst] {
                    seen[dst] = true;
                    stack.push(dst);
                }
            }
        }
        seen
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Self { n, data: rows.iter().flatten().copied().collect() })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(|r| r.to_vec()).take(self.n).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self[(i, j)]).sum()
    }

    /// `y = M x`, summing each row left to right.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(m, v)| m * v).sum()).collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// `w` mixes prices and must be row-stochastic; `q` mixes surpluses and must
/// be column-stochastic. Entry `(i, j)` is the weight node `i` gives to node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrices {
    pub w: Matrix,
    pub q: Matrix,
}

/// Uniform weights: `w[i][j] = 1/in_degree(i)` and `q[i][j] = 1/out_degree(j)`
/// for every edge `j → i`, self-loops counted.
pub fn build_uniform_weights(g: &Digraph) -> Result<WeightMatrices, ModelError> {
    if let Some(i) = (0..g.n()).find(|&i| !g.has_self_loop(i)) {
        return Err(ModelError::MissingSelfLoop(i));
    }
    if !g.is_strongly_connected() {
        return Err(ModelError::NotStronglyConnected);
    }
    let n = g.n();
    let in_deg: Vec<usize> = (0..n).map(|i| g.in_degree(i)).collect();
    let out_deg: Vec<usize> = (0..n).map(|i| g.out_degree(i)).collect();
    let mut w = Matrix::zeros(n);
    let mut q = Matrix::zeros(n);
    for &(j, i) in g.edges() {
        w[(i, j)] = 1.0 / in_deg[i] as f64;
        q[(i, j)] = 1.0 / out_deg[j] as f64;
    }
    Ok(WeightMatrices { w, q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use NodeKind::*;

    #[test]
    fn two_node_uniform() {
        let g = Digraph::bidirectional_ring(vec![Generator, Consumer]);
        let wm = build_uniform_weights(&g).unwrap();
        let half = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(wm.w, half);
        assert_eq!(wm.q, half);
    }

    #[test]
    fn single_node_identity() {
        let g = Digraph::new(vec![Generator], vec![(0, 0)]).unwrap();
        let wm = build_uniform_weights(&g).unwrap();
        assert_eq!(wm.w, Matrix::identity(1));
        assert_eq!(wm.q, Matrix::identity(1));
    }

    #[test]
    fn directed_four_cycle() {
        let g = Digraph::directed_cycle(vec![Generator, Generator, Consumer, Consumer]);
        let wm = build_uniform_weights(&g).unwrap();
        for i in 0..4 {
            let row: Vec<f64> = wm.w.row(i).iter().copied().filter(|&x| x > 0.0).collect();
            assert_eq!(row, vec![0.5, 0.5]);
            let col: Vec<f64> = (0..4).map(|r| wm.q[(r, i)]).filter(|&x| x > 0.0).collect();
            assert_eq!(col, vec![0.5, 0.5]);
        }
        // node 1 listens to node 0 only (besides itself)
        assert_eq!(wm.w[(1, 0)], 0.5);
        assert_eq!(wm.w[(0, 1)], 0.0);
    }

    #[test]
    fn rejects_missing_self_loop() {
        let g = Digraph::new(vec![Generator, Consumer], vec![(0, 1), (1, 0), (0, 0)]).unwrap();
        assert_eq!(build_uniform_weights(&g), Err(ModelError::MissingSelfLoop(1)));
    }

    #[test]
    fn rejects_not_strongly_connected() {
        let g = Digraph::new(vec![Generator, Consumer], vec![(0, 0), (1, 1), (0, 1)]).unwrap();
        assert!(!g.is_strongly_connected());
        assert_eq!(g.disconnected_nodes(), vec![1]);
        assert_eq!(build_uniform_weights(&g), Err(ModelError::NotStronglyConnected));
    }

    #[test]
    fn edge_out_of_range() {
        let err = Digraph::new(vec![Generator], vec![(0, 3)]).unwrap_err();
        assert_eq!(err, ModelError::EdgeOutOfRange { from: 0, to: 3, n: 1 });
    }
}
