//! Graph representation and the star-graph builder used in all experiments.
//!
//! Edge convention: the pair `(i, j)` means node `j` sends messages to node
//! `i`, i.e. `j` is a neighbor of `i`.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    /// Sorted incoming-neighbor list per node.
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Build a graph from an explicit edge list; `(i, j)` adds `j` to `N_i`.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); node_count];
        for &(i, j) in edges {
            if i >= node_count || j >= node_count {
                return Err(Error::invalid(format!(
                    "edge ({i},{j}) out of range for {node_count} nodes"
                )));
            }
            if !neighbors[i].contains(&j) {
                neighbors[i].push(j);
            }
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        Ok(Graph { node_count, neighbors })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Incoming neighbors `N_i`, sorted ascending. Includes `i` itself when a
    /// self-loop exists.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn has_self_loop(&self, i: usize) -> bool {
        self.neighbors[i].binary_search(&i).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// 0/1 adjacency matrix; `A[i][j] = 1` iff `(i, j)` is an edge.
    pub fn adjacency(&self) -> Vec<Vec<u8>> {
        let mut a = vec![vec![0u8; self.node_count]; self.node_count];
        for (i, ns) in self.neighbors.iter().enumerate() {
            for &j in ns {
                a[i][j] = 1;
            }
        }
        a
    }

    pub fn from_adjacency(a: &[Vec<u8>]) -> Result<Self> {
        let n = a.len();
        let mut edges = Vec::new();
        for (i, row) in a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid("adjacency matrix is not square"));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0 {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_edges(n, &edges)
    }
}

/// Star graph on `n` nodes: node 0 is central, has a self-loop, and shares a
/// bidirectional edge with every other node. No other edges exist.
pub fn star_graph(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::invalid(format!("star graph needs n >= 2, got {n}")));
    }
    let mut edges = vec![(0, 0)];
    for j in 1..n {
        edges.push((0, j));
        edges.push((j, 0));
    }
    Graph::from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_graph_three_nodes() {
        let g = star_graph(3).unwrap();
        assert_eq!(g.neighbors(0), &[0, 1, 2]);
        assert_eq!(g.neighbors(1), &[0]);
        assert_eq!(g.neighbors(2), &[0]);
        assert!(g.has_self_loop(0));
        assert!(!g.has_self_loop(1));
    }

    #[test]
    fn star_graph_two_nodes() {
        let g = star_graph(2).unwrap();
        assert_eq!(g.neighbors(0), &[0, 1]);
        assert_eq!(g.neighbors(1), &[0]);
    }

    #[test]
    fn star_graph_degrees() {
        let g = star_graph(5).unwrap();
        assert_eq!(g.neighbors(0).len(), 5);
        for i in 1..5 {
            assert_eq!(g.neighbors(i).len(), 1);
        }
    }

    #[test]
    fn star_graph_rejects_small_n() {
        assert!(star_graph(1).is_err());
        assert!(star_graph(0).is_err());
    }

    #[test]
    fn adjacency_of_star() {
        let g = star_graph(3).unwrap();
        let a = g.adjacency();
        assert_eq!(a[0], vec![1, 1, 1]);
        assert_eq!(a[1], vec![1, 0, 0]);
        assert_eq!(a[2], vec![1, 0, 0]);
    }

    #[test]
    fn adjacency_ones_count() {
        for n in 2..8 {
            let g = star_graph(n).unwrap();
            let ones: usize = g
                .adjacency()
                .iter()
                .flatten()
                .map(|&v| v as usize)
                .sum();
            assert_eq!(ones, 2 * (n - 1) + 1);
        }
    }

    #[test]
    fn empty_edge_set_gives_zero_matrix() {
        let g = Graph::from_edges(3, &[]).unwrap();
        assert!(g.adjacency().iter().flatten().all(|&v| v == 0));
    }

    #[test]
    fn bidirectional_graph_without_self_loops_is_symmetric() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 0), (2, 3), (3, 2)]).unwrap();
        let a = g.adjacency();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a[i][j], a[j][i]);
            }
        }
    }

    #[test]
    fn adjacency_round_trip() {
        let g = star_graph(6).unwrap();
        let back = Graph::from_adjacency(&g.adjacency()).unwrap();
        assert_eq!(g, back);
    }
}
