//! Multigraph representation, degree accounting, combinatorial-matrix
//! construction, and the directed-to-undirected projection.
//!
//! Undirected conventions used throughout the crate:
//!
//! * the adjacency diagonal stores **twice** the self-loop multiplicity, so
//!   every row sum is the vertex degree and `Σ_ij A_ij = 2m`;
//! * the stored combinatorial matrix holds `Ξ_ij = k_i k_j`, while the
//!   effective per-dyad ball counts are `2 Ξ_ij` off the diagonal and
//!   `Ξ_ii` on it;
//! * per-dyad draw counts are `A_ij` off the diagonal and `A_ii / 2`
//!   (self-loop units) on it.

use thiserror::Error;

/// Errors from graph construction and validation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vertex index {index} out of range for {n} vertices")]
    VertexOutOfRange { index: usize, n: usize },
    #[error("edge ({src}, {dst}) has zero multiplicity")]
    ZeroMultiplicity { src: usize, dst: usize },
    #[error("adjacency must hold {expected} entries for n = {n}, got {got}")]
    DimensionMismatch { n: usize, expected: usize, got: usize },
    #[error("undirected adjacency is asymmetric at ({i}, {j}): {a_ij} vs {a_ji}")]
    Asymmetric { i: usize, j: usize, a_ij: u64, a_ji: u64 },
    #[error("undirected diagonal entry {value} at vertex {i} is odd; the diagonal stores twice the self-loop multiplicity")]
    OddDiagonal { i: usize, value: u64 },
    #[error("stub-combination count overflows at dyad ({i}, {j})")]
    Overflow { i: usize, j: usize },
}

/// A directed or undirected multigraph with self-loops, stored as a dense
/// row-major matrix of edge multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiGraph {
    n: usize,
    directed: bool,
    adj: Vec<u64>,
}

impl MultiGraph {
    /// Builds a graph from an explicit adjacency matrix, validating the
    /// undirected symmetry and even-diagonal invariants.
    pub fn from_adjacency(n: usize, directed: bool, adj: Vec<u64>) -> Result<Self, GraphError> {
        if adj.len() != n * n {
            return Err(GraphError::DimensionMismatch {
                n,
                expected: n * n,
                got: adj.len(),
            });
        }
        if !directed {
            for i in 0..n {
                if adj[i * n + i] % 2 != 0 {
                    return Err(GraphError::OddDiagonal {
                        i,
                        value: adj[i * n + i],
                    });
                }
                for j in (i + 1)..n {
                    if adj[i * n + j] != adj[j * n + i] {
                        return Err(GraphError::Asymmetric {
                            i,
                            j,
                            a_ij: adj[i * n + j],
                            a_ji: adj[j * n + i],
                        });
                    }
                }
            }
        }
        Ok(Self { n, directed, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Raw adjacency entry A_ij (undirected diagonals are doubled).
    pub fn adjacency(&self, i: usize, j: usize) -> u64 {
        self.adj[i * self.n + j]
    }

    /// Row-major view of the adjacency matrix.
    pub fn adjacency_matrix(&self) -> &[u64] {
        &self.adj
    }

    /// Number of draws the dyad (i, j) represents in the urn: the raw
    /// multiplicity off the diagonal, self-loop units A_ii/2 on an
    /// undirected diagonal.
    pub fn dyad_draws(&self, i: usize, j: usize) -> u64 {
        let a = self.adjacency(i, j);
        if !self.directed && i == j {
            a / 2
        } else {
            a
        }
    }

    /// Total number of multi-edges m.
    pub fn edge_count(&self) -> u64 {
        let total: u64 = self.adj.iter().sum();
        if self.directed {
            total
        } else {
            total / 2
        }
    }
}

/// In/out (directed) or single (undirected) degree vectors with
/// total-edge bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DegreeSequence {
    Directed { k_out: Vec<u64>, k_in: Vec<u64> },
    Undirected { k: Vec<u64> },
}

impl DegreeSequence {
    pub fn n(&self) -> usize {
        match self {
            Self::Directed { k_out, .. } => k_out.len(),
            Self::Undirected { k } => k.len(),
        }
    }

    /// Total number of multi-edges m implied by the degree sums.
    pub fn edge_count(&self) -> u64 {
        match self {
            Self::Directed { k_out, .. } => k_out.iter().sum(),
            Self::Undirected { k } => k.iter().sum::<u64>() / 2,
        }
    }
}

/// Stub-combination counts Ξ and the total M, with directedness semantics.
///
/// `xi(i, j)` returns the stored entry; [`CombinatorialMatrix::ball_count`]
/// applies the undirected doubling rule and is what samplers and PMFs
/// consume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombinatorialMatrix {
    n: usize,
    directed: bool,
    xi: Vec<u64>,
    total: u64,
}

impl CombinatorialMatrix {
    /// Directly wraps a stub-combination matrix, e.g. one read from a file
    /// rather than induced by a degree sequence.
    pub fn from_raw(n: usize, directed: bool, xi: Vec<u64>) -> Result<Self, GraphError> {
        if xi.len() != n * n {
            return Err(GraphError::DimensionMismatch {
                n,
                expected: n * n,
                got: xi.len(),
            });
        }
        if !directed {
            for i in 0..n {
                for j in (i + 1)..n {
                    if xi[i * n + j] != xi[j * n + i] {
                        return Err(GraphError::Asymmetric {
                            i,
                            j,
                            a_ij: xi[i * n + j],
                            a_ji: xi[j * n + i],
                        });
                    }
                }
            }
        }
        let mut total: u64 = 0;
        for (idx, &x) in xi.iter().enumerate() {
            total = total
                .checked_add(x)
                .ok_or(GraphError::Overflow { i: idx / n, j: idx % n })?;
        }
        Ok(Self {
            n,
            directed,
            xi,
            total,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Stored stub-combination entry Ξ_ij.
    pub fn xi(&self, i: usize, j: usize) -> u64 {
        self.xi[i * self.n + j]
    }

    /// Total stub-combination count M = Σ_ij Ξ_ij.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Effective number of balls the urn holds for dyad (i, j): Ξ_ij when
    /// directed, 2Ξ_ij / Ξ_ii in the undirected off-diagonal / diagonal
    /// cases.
    pub fn ball_count(&self, i: usize, j: usize) -> u64 {
        let x = self.xi(i, j);
        if !self.directed && i != j {
            2 * x
        } else {
            x
        }
    }

    /// Canonical dyads of the model: all ordered pairs when directed, the
    /// upper triangle including the diagonal when undirected. Yields
    /// `(i, j, ball_count)`.
    pub fn dyads(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        let n = self.n;
        let directed = self.directed;
        (0..n).flat_map(move |i| {
            let start = if directed { 0 } else { i };
            (start..n).map(move |j| (i, j, self.ball_count(i, j)))
        })
    }
}

/// Accumulates an edge list into a multigraph.
///
/// Undirected input lists each unordered pair once; a self-loop line with
/// multiplicity w stores the doubled diagonal entry 2w.
pub fn build_graph(
    edges: &[(usize, usize, u64)],
    n: usize,
    directed: bool,
) -> Result<MultiGraph, GraphError> {
    let mut adj = vec![0_u64; n * n];
    for &(src, dst, w) in edges {
        if src >= n {
            return Err(GraphError::VertexOutOfRange { index: src, n });
        }
        if dst >= n {
            return Err(GraphError::VertexOutOfRange { index: dst, n });
        }
        if w == 0 {
            return Err(GraphError::ZeroMultiplicity { src, dst });
        }
        if directed {
            adj[src * n + dst] += w;
        } else if src == dst {
            adj[src * n + dst] += 2 * w;
        } else {
            adj[src * n + dst] += w;
            adj[dst * n + src] += w;
        }
    }
    MultiGraph::from_adjacency(n, directed, adj)
}

/// Row/column sums per the degree definitions; undirected diagonals count
/// twice through the doubled storage.
pub fn degree_sequences(g: &MultiGraph) -> DegreeSequence {
    let n = g.n();
    if g.is_directed() {
        let mut k_out = vec![0_u64; n];
        let mut k_in = vec![0_u64; n];
        for i in 0..n {
            for j in 0..n {
                let a = g.adjacency(i, j);
                k_out[i] += a;
                k_in[j] += a;
            }
        }
        DegreeSequence::Directed { k_out, k_in }
    } else {
        let k = (0..n)
            .map(|i| (0..n).map(|j| g.adjacency(i, j)).sum())
            .collect();
        DegreeSequence::Undirected { k }
    }
}

/// Builds the combinatorial matrix induced by a degree sequence:
/// Ξ_ij = k_out_i · k_in_j (directed) or k_i · k_j (undirected).
pub fn combinatorial_matrix(d: &DegreeSequence) -> Result<CombinatorialMatrix, GraphError> {
    let n = d.n();
    let (row, col) = match d {
        DegreeSequence::Directed { k_out, k_in } => (k_out, k_in),
        DegreeSequence::Undirected { k } => (k, k),
    };
    let mut xi = vec![0_u64; n * n];
    for i in 0..n {
        for j in 0..n {
            xi[i * n + j] = row[i]
                .checked_mul(col[j])
                .ok_or(GraphError::Overflow { i, j })?;
        }
    }
    CombinatorialMatrix::from_raw(n, matches!(d, DegreeSequence::Directed { .. }), xi)
}

/// Maps a directed multigraph to its undirected projection with adjacency
/// A + Aᵀ; the edge count is preserved.
pub fn undirected_projection(g: &MultiGraph) -> MultiGraph {
    assert!(g.is_directed(), "projection applies to directed graphs");
    let n = g.n();
    let mut adj = vec![0_u64; n * n];
    for i in 0..n {
        for j in 0..n {
            adj[i * n + j] = g.adjacency(i, j) + g.adjacency(j, i);
        }
    }
    MultiGraph::from_adjacency(n, false, adj)
        .expect("A + transpose(A) is symmetric with even diagonal")
}
