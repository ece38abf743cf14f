//! Directed information-flow graphs.
//!
//! An edge `(i, j)` means agent `i` measures and follows agent `j`; the
//! associated edge vector is `x_j − x_i`. Vertices and edges are 0-based in
//! code. Edge identity is the position in the edge list.

use thiserror::Error;

use crate::numkernel::{kron_i2, DenseMatrix};
use crate::Scalar;

/// Largest number of co-leaders an agent may follow.
pub const MAX_OUTVALENCE: usize = 2;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GraphError {
    /// Indices in the message are 1-based, matching scenario files.
    #[error("edge {edge} references vertex {vertex} of {n}")]
    VertexOutOfRange { edge: usize, vertex: usize, n: usize },
    #[error("edge {edge} is a self-loop at vertex {vertex}")]
    SelfLoop { edge: usize, vertex: usize },
    #[error("edge {edge} duplicates edge {first}")]
    DuplicateEdge { edge: usize, first: usize },
    #[error("vertex {vertex} has outvalence {count}, more than {MAX_OUTVALENCE}")]
    Outvalence { vertex: usize, count: usize },
    #[error("graph is not isomorphic to the 2-cycles formation")]
    NotTwoCycles,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FormationGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl FormationGraph {
    /// Builds and validates a graph from 0-based `(origin, target)` pairs.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        let mut out = vec![0usize; n];
        for (k, &(a, b)) in edges.iter().enumerate() {
            for v in [a, b] {
                if v >= n {
                    return Err(GraphError::VertexOutOfRange {
                        edge: k + 1,
                        vertex: v + 1,
                        n,
                    });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop {
                    edge: k + 1,
                    vertex: a + 1,
                });
            }
            if let Some(first) = edges[..k].iter().position(|e| *e == (a, b)) {
                return Err(GraphError::DuplicateEdge {
                    edge: k + 1,
                    first: first + 1,
                });
            }
            out[a] += 1;
            if out[a] > MAX_OUTVALENCE {
                return Err(GraphError::Outvalence {
                    vertex: a + 1,
                    count: out[a],
                });
            }
        }
        Ok(Self { n, edges })
    }

    /// Builds a graph from 1-based pairs as written in scenario files.
    pub fn from_one_indexed(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut zero = Vec::with_capacity(edges.len());
        for (k, &(a, b)) in edges.iter().enumerate() {
            for v in [a, b] {
                if v == 0 || v > n {
                    return Err(GraphError::VertexOutOfRange { edge: k + 1, vertex: v, n });
                }
            }
            zero.push((a - 1, b - 1));
        }
        Self::new(n, zero)
    }

    /// The 2-cycles formation with edges
    /// `e1=(1,2), e2=(2,3), e3=(3,1), e4=(4,3), e5=(1,4)` (1-based).
    pub fn two_cycles() -> Self {
        Self::new(4, vec![(0, 1), (1, 2), (2, 0), (3, 2), (0, 3)]).expect("valid fixture")
    }

    /// Directed triangle `1→2, 2→3, 3→1`.
    pub fn triangle() -> Self {
        Self::new(3, vec![(0, 1), (1, 2), (2, 0)]).expect("valid fixture")
    }

    /// Five-agent example with edges
    /// `(1,2), (5,1), (3,1), (2,3), (4,3), (5,4), (4,2)` (1-based).
    pub fn five_agents() -> Self {
        Self::new(5, vec![(0, 1), (4, 0), (2, 0), (1, 2), (3, 2), (4, 3), (3, 1)]).expect("valid fixture")
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn origin(&self, edge: usize) -> usize {
        self.edges[edge].0
    }

    #[inline]
    pub fn target(&self, edge: usize) -> usize {
        self.edges[edge].1
    }

    pub fn outvalence(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v).count()
    }

    /// Indices of the edges leaving `v`, in edge order.
    pub fn outgoing(&self, v: usize) -> Vec<usize> {
        (0..self.m()).filter(|&k| self.edges[k].0 == v).collect()
    }

    /// The other edge leaving the origin of `edge`, if its origin has two.
    pub fn sibling(&self, edge: usize) -> Option<usize> {
        let o = self.origin(edge);
        (0..self.m()).find(|&k| k != edge && self.edges[k].0 == o)
    }

    /// `m × n` signed incidence matrix: −1 at the origin, +1 at the target.
    pub fn mixed_adjacency<T: Scalar>(&self) -> DenseMatrix<T> {
        let mut a = DenseMatrix::zeros(self.m(), self.n);
        for (k, &(o, t)) in self.edges.iter().enumerate() {
            a[(k, o)] = -T::one();
            a[(k, t)] = T::one();
        }
        a
    }

    /// `m × m` matrix with −1 where two edges share an origin (including the
    /// diagonal), +1 where `e_i` ends at the origin of `e_j`, 0 otherwise.
    pub fn edge_adjacency<T: Scalar>(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.m(), self.m(), |i, j| {
            let (oi, ti) = self.edges[i];
            let (oj, _) = self.edges[j];
            if oi == oj {
                -T::one()
            } else if ti == oj {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    pub fn adjacency_bundle<T: Scalar>(&self) -> AdjacencyBundle<T> {
        let mixed = self.mixed_adjacency();
        AdjacencyBundle {
            mixed2: kron_i2(&mixed),
            mixed,
            edge_adj: self.edge_adjacency(),
        }
    }

    /// True if every edge leaving a vertex of `set` ends in `set`.
    pub fn is_closed_vertex_set(&self, set: &[usize]) -> bool {
        self.edges
            .iter()
            .all(|(o, t)| !set.contains(o) || set.contains(t))
    }

    /// True if some injective vertex map sends every edge of `h` onto an
    /// edge of `self` and every edge of `self` leaving the image set is the
    /// image of an edge of `h`.
    pub fn contains_subformation(&self, h: &FormationGraph) -> bool {
        if h.n > self.n || h.m() > self.m() {
            return false;
        }
        let mut phi = vec![usize::MAX; h.n];
        let mut used = vec![false; self.n];
        self.embed(h, 0, &mut phi, &mut used)
    }

    fn embed(&self, h: &FormationGraph, next: usize, phi: &mut [usize], used: &mut [bool]) -> bool {
        if next == h.n {
            return true;
        }
        for cand in 0..self.n {
            if used[cand] || self.outvalence(cand) != h.outvalence(next) {
                continue;
            }
            phi[next] = cand;
            if self.partial_ok(h, next, phi) {
                used[cand] = true;
                if self.embed(h, next + 1, phi, used) {
                    return true;
                }
                used[cand] = false;
            }
            phi[next] = usize::MAX;
        }
        false
    }

    /// Checks the constraints involving only vertices `0..=upto` of `h`.
    fn partial_ok(&self, h: &FormationGraph, upto: usize, phi: &[usize]) -> bool {
        let has = |a: usize, b: usize| self.edges.contains(&(a, b));
        for &(a, b) in &h.edges {
            if a <= upto && b <= upto && !has(phi[a], phi[b]) {
                return false;
            }
        }
        // Outgoing edges of the newly mapped vertex must stay in the image
        // once all of h is mapped; check the mapped part now.
        for v in 0..=upto {
            for k in self.outgoing(phi[v]) {
                let t = self.target(k);
                if let Some(pre) = (0..=upto).find(|&u| phi[u] == t) {
                    if !h.edges.contains(&(v, pre)) {
                        return false;
                    }
                } else if upto + 1 == h.n {
                    return false;
                }
            }
        }
        true
    }
}

/// Mixed adjacency, edge adjacency and the Kronecker-lifted mixed adjacency.
#[derive(Debug, Clone)]
pub struct AdjacencyBundle<T> {
    pub mixed: DenseMatrix<T>,
    pub edge_adj: DenseMatrix<T>,
    pub mixed2: DenseMatrix<T>,
}

/// Correspondence between a graph isomorphic to the 2-cycles and the
/// canonical labelling of [`FormationGraph::two_cycles`].
///
/// `vertex[c]` is the graph vertex playing canonical vertex `c`, and
/// `edge[c]` the graph edge playing canonical edge `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoCyclesMap {
    pub vertex: [usize; 4],
    pub edge: [usize; 5],
}

impl TwoCyclesMap {
    pub fn identity() -> Self {
        Self {
            vertex: [0, 1, 2, 3],
            edge: [0, 1, 2, 3, 4],
        }
    }

    /// Finds a vertex relabelling turning `g` into the canonical 2-cycles.
    pub fn find(g: &FormationGraph) -> Result<Self, GraphError> {
        if g.n() != 4 || g.m() != 5 {
            return Err(GraphError::NotTwoCycles);
        }
        let canon = FormationGraph::two_cycles();
        for perm in permutations4() {
            let mut edge = [usize::MAX; 5];
            let mut ok = true;
            for (c, &(a, b)) in canon.edges().iter().enumerate() {
                match g.edges().iter().position(|e| *e == (perm[a], perm[b])) {
                    Some(k) => edge[c] = k,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Ok(Self { vertex: perm, edge });
            }
        }
        Err(GraphError::NotTwoCycles)
    }

    /// Reorders a per-edge vector from graph order into canonical order.
    pub fn to_canonical_edges<V: Copy>(&self, v: &[V]) -> [V; 5] {
        std::array::from_fn(|c| v[self.edge[c]])
    }

    /// Reorders a per-edge vector from canonical order into graph order.
    pub fn from_canonical_edges<V: Copy + Default>(&self, v: &[V; 5]) -> Vec<V> {
        let mut out = vec![V::default(); 5];
        for c in 0..5 {
            out[self.edge[c]] = v[c];
        }
        out
    }

    /// Reorders per-vertex values from canonical order into graph order.
    pub fn from_canonical_vertices<V: Copy + Default>(&self, v: &[V; 4]) -> Vec<V> {
        let mut out = vec![V::default(); 4];
        for c in 0..4 {
            out[self.vertex[c]] = v[c];
        }
        out
    }

    /// Reorders per-vertex values from graph order into canonical order.
    pub fn to_canonical_vertices<V: Copy>(&self, v: &[V]) -> [V; 4] {
        std::array::from_fn(|c| v[self.vertex[c]])
    }
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    if p.iter().all(|&v| !std::mem::replace(&mut seen[v], true)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}
