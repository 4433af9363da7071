use std::io::{self, Write};

use crate::error::{Error, Result};

/// Undirected graph in compressed sparse row form.
///
/// Each vertex's neighbour list is sorted ascending and holds no duplicates
/// or self-loops. `weights` is parallel to `neighbors`; an unweighted graph
/// carries unit weights until [`crate::slg::apply_gaussian_weights`] runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
    sigma_g: Option<f64>,
    degree_bound: usize,
}

impl Graph {
    /// Builds from per-vertex adjacency lists that are already symmetric,
    /// sorted and deduplicated.
    pub(crate) fn from_sorted_lists<I, L>(n: usize, lists: I, degree_bound: usize) -> Self
    where
        I: IntoIterator<Item = L>,
        L: AsRef<[u32]>,
    {
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        for l in lists {
            neighbors.extend_from_slice(l.as_ref());
            offsets.push(neighbors.len());
        }
        debug_assert_eq!(offsets.len(), n + 1);
        let weights = vec![1.0; neighbors.len()];
        Graph { offsets, neighbors, weights, sigma_g: None, degree_bound }
    }

    /// Symmetric graph from an arbitrary undirected edge list. Self-loops and
    /// repeated edges are dropped.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::InvalidArgument(format!("edge ({a}, {b}) out of range for {n} vertices")));
            }
            if a != b {
                lists[a as usize].push(b);
                lists[b as usize].push(a);
            }
        }
        for l in &mut lists {
            l.sort_unstable();
            l.dedup();
        }
        let bound = lists.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Graph::from_sorted_lists(n, &lists, bound))
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weights[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_vertices()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn mean_degree(&self) -> f64 {
        match self.num_vertices() {
            0 => 0.0,
            n => self.neighbors.len() as f64 / n as f64,
        }
    }

    /// Largest degree the builder can produce (6 for scan-line graphs).
    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    /// Weighted degree `d_i = sum_j w_ij`.
    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.weights(i).iter().sum()
    }

    /// Kernel width used for the weights, if they have been set.
    pub fn sigma_g(&self) -> Option<f64> {
        self.sigma_g
    }

    pub fn is_weighted(&self) -> bool {
        self.sigma_g.is_some()
    }

    /// Unique undirected edges `(i, j)` with `i < j`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.num_vertices()).flat_map(move |i| {
            self.neighbors(i).iter().filter(move |&&j| j as usize > i).map(move |&j| (i as u32, j))
        })
    }

    pub fn weight(&self, i: usize, j: u32) -> Option<f64> {
        let nb = self.neighbors(i);
        nb.binary_search(&j).ok().map(|k| self.weights(i)[k])
    }

    pub(crate) fn raw_parts(&self) -> (&[usize], &[u32]) {
        (&self.offsets, &self.neighbors)
    }

    pub(crate) fn set_weights(&mut self, weights: Vec<f64>, sigma_g: f64) {
        debug_assert_eq!(weights.len(), self.neighbors.len());
        self.weights = weights;
        self.sigma_g = Some(sigma_g);
    }

    /// Writes `i j w_ij` lines for every undirected edge, ascending `i` then `j`.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        for i in 0..self.num_vertices() {
            for (&j, &wt) in self.neighbors(i).iter().zip(self.weights(i)) {
                if j as usize > i {
                    writeln!(w, "{i} {j} {wt}")?;
                }
            }
        }
        Ok(())
    }
}
