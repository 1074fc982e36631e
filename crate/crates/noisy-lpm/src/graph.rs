//! Undirected binary networks and edge-list ingestion.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An immutable undirected binary graph.
///
/// Nodes are dense ids `0..n_nodes`. Neighbour lists are sorted, symmetric
/// and loop-free, so `degrees[i] == adjacency[i].len()` and the degree sum
/// equals twice the number of undirected edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    n_nodes: usize,
    adjacency: Vec<Vec<u32>>,
    degrees: Vec<u32>,
    n_edges: usize,
}

/// A network loaded from disk together with its id-remapping table.
#[derive(Clone, Debug)]
pub struct LoadedNetwork {
    pub network: Network,
    /// Original file id of each dense node id (first-appearance order).
    pub original_ids: Vec<u64>,
}

impl Network {
    /// Builds a network from a list of (possibly duplicated, possibly looped)
    /// undirected edges over dense ids `0..n_nodes`.
    ///
    /// Self-loops are dropped; duplicate edges, in either orientation,
    /// collapse to a single undirected edge.
    pub fn from_edges(n_nodes: usize, edges: &[(u32, u32)]) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::Data("empty graph: zero nodes".into()));
        }
        let mut adjacency = vec![Vec::new(); n_nodes];
        for &(a, b) in edges {
            if a as usize >= n_nodes || b as usize >= n_nodes {
                return Err(Error::Data(format!(
                    "edge ({a}, {b}) references a node outside 0..{n_nodes}"
                )));
            }
            if a == b {
                continue;
            }
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        let mut n_half_edges = 0usize;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            n_half_edges += list.len();
        }
        let degrees = adjacency.iter().map(|l| l.len() as u32).collect();
        Ok(Self {
            n_nodes,
            adjacency,
            degrees,
            n_edges: n_half_edges / 2,
        })
    }

    /// Loads an edge list from a text file.
    ///
    /// Each non-comment line holds two integer tokens separated by blanks or
    /// tabs; lines starting with `#` are comments. Node ids may be arbitrary
    /// non-negative integers and are densely remapped to `0..N` in
    /// first-appearance order; the mapping is returned so results can be
    /// traced back to the original ids.
    pub fn load_edge_list(path: &Path) -> Result<LoadedNetwork> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let reader = BufReader::new(file);

        let mut dense_of: HashMap<u64, u32> = HashMap::new();
        let mut original_ids: Vec<u64> = Vec::new();
        let mut edges: Vec<(u32, u32)> = Vec::new();

        let mut intern = |raw: u64, original_ids: &mut Vec<u64>| -> u32 {
            *dense_of.entry(raw).or_insert_with(|| {
                original_ids.push(raw);
                (original_ids.len() - 1) as u32
            })
        };

        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| Error::Io {
                path: path.to_owned(),
                source,
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<u64> {
                tok.ok_or_else(|| {
                    Error::Data(format!("{}:{}: expected two integer tokens", path.display(), lineno + 1))
                })?
                .parse::<u64>()
                .map_err(|_| {
                    Error::Data(format!("{}:{}: non-integer token", path.display(), lineno + 1))
                })
            };
            let a = parse(tokens.next())?;
            let b = parse(tokens.next())?;
            if tokens.next().is_some() {
                return Err(Error::Data(format!(
                    "{}:{}: trailing tokens after edge",
                    path.display(),
                    lineno + 1
                )));
            }
            let da = intern(a, &mut original_ids);
            let db = intern(b, &mut original_ids);
            edges.push((da, db));
        }

        let network = Network::from_edges(original_ids.len(), &edges)?;
        Ok(LoadedNetwork {
            network,
            original_ids,
        })
    }

    /// Writes the network as an edge list (one `i j` line per undirected
    /// edge, dense ids, i < j).
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.n_nodes {
            for &j in &self.adjacency[i] {
                if (i as u32) < j {
                    writeln!(out, "{} {}", i, j)?;
                }
            }
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.degrees[i]
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.n_edges as f64 / self.n_nodes as f64
    }

    /// Fraction of the N(N−1)/2 possible edges that are present.
    pub fn density(&self) -> f64 {
        let pairs = self.n_nodes as f64 * (self.n_nodes as f64 - 1.0) / 2.0;
        self.n_edges as f64 / pairs
    }

    /// Sorted neighbour ids of node `i`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    /// The edge indicator y_ij ∈ {0, 1}.
    ///
    /// Binary search over the sorted neighbour list, O(log degree).
    /// `i == j` or an out-of-range id is a caller contract violation.
    pub fn edge_indicator(&self, i: usize, j: usize) -> u8 {
        assert!(
            i != j && i < self.n_nodes && j < self.n_nodes,
            "edge_indicator contract violated: i={i}, j={j}, n={}",
            self.n_nodes
        );
        self.is_edge(i, j) as u8
    }

    pub fn is_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&(j as u32)).is_ok()
    }
}
