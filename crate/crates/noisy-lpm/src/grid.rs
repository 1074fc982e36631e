//! Uniform M×M partition of the latent square with incrementally
//! maintained occupancy and per-node edge counts.
//!
//! For every box the grid tracks how many nodes sit in it, and for every
//! node how many of its edges land in each box (stored sparsely, zero
//! entries never kept). The number of a node's non-edges into a box follows
//! from those two counts and the node's own membership, so it is derived on
//! demand rather than stored. Moving one node touches only its own box
//! assignment and its neighbours' sparse entries, keeping a position update
//! O(degree) in grid maintenance.

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::model::ParameterSpace;

/// The box grid over [−S, S]².
///
/// Boxes are indexed by a linear id `ix·M + iy` where `ix`, `iy` are the
/// per-axis lattice indices in `0..M`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxGrid {
    m: usize,
    /// Box side length b = 2S/M.
    side: f64,
    half_side: f64,
    /// Linear box id of each node.
    box_of: Vec<u32>,
    /// Number of nodes in each box.
    occupancy: Vec<u32>,
    /// Per node: sorted (box id, edge count) pairs, counts always > 0.
    edge_counts: Vec<Vec<(u32, u32)>>,
    n_nonempty: usize,
}

impl BoxGrid {
    /// Builds the grid from scratch for the given positions.
    pub fn build(
        positions: &[[f64; 2]],
        net: &Network,
        m: usize,
        space: &ParameterSpace,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("grid must have at least one box per axis".into()));
        }
        if positions.len() != net.n_nodes() {
            return Err(Error::Config(format!(
                "{} positions for {} nodes",
                positions.len(),
                net.n_nodes()
            )));
        }
        let side = 2.0 * space.half_side / m as f64;
        let mut grid = Self {
            m,
            side,
            half_side: space.half_side,
            box_of: Vec::with_capacity(positions.len()),
            occupancy: vec![0; m * m],
            edge_counts: vec![Vec::new(); positions.len()],
            n_nonempty: 0,
        };
        for (i, &z) in positions.iter().enumerate() {
            if !space.contains_z(z) {
                return Err(Error::Data(format!(
                    "position {:?} of node {} lies outside the latent square",
                    z, i
                )));
            }
            let b = grid.box_index(z);
            grid.box_of.push(b);
            if grid.occupancy[b as usize] == 0 {
                grid.n_nonempty += 1;
            }
            grid.occupancy[b as usize] += 1;
        }
        for i in 0..net.n_nodes() {
            for &j in net.neighbors(i) {
                inc_entry(&mut grid.edge_counts[i], grid.box_of[j as usize]);
            }
        }
        Ok(grid)
    }

    /// Number of intervals per axis.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Box side length b.
    pub fn box_side(&self) -> f64 {
        self.side
    }

    pub fn n_boxes(&self) -> usize {
        self.m * self.m
    }

    /// Number of boxes currently holding at least one node.
    pub fn n_nonempty(&self) -> usize {
        self.n_nonempty
    }

    /// Linear box id containing a point.
    ///
    /// A coordinate maps to lattice index min(⌊(x+S)/b⌋, M−1); points on an
    /// interior boundary belong to the box whose lower edge they sit on, and
    /// the top edge is clamped into the last box.
    pub fn box_index(&self, z: [f64; 2]) -> u32 {
        let ix = self.axis_index(z[0]);
        let iy = self.axis_index(z[1]);
        (ix * self.m + iy) as u32
    }

    fn axis_index(&self, x: f64) -> usize {
        let raw = ((x + self.half_side) / self.side).floor();
        (raw.max(0.0) as usize).min(self.m - 1)
    }

    pub fn box_of(&self, i: usize) -> u32 {
        self.box_of[i]
    }

    pub fn occupancy(&self, linear: u32) -> u32 {
        self.occupancy[linear as usize]
    }

    /// Per-box occupancy, indexed by linear box id.
    pub fn occupancies(&self) -> &[u32] {
        &self.occupancy
    }

    /// Centre of a box.
    pub fn center(&self, linear: u32) -> [f64; 2] {
        let ix = linear as usize / self.m;
        let iy = linear as usize % self.m;
        [
            -self.half_side + self.side * (ix as f64 + 0.5),
            -self.half_side + self.side * (iy as f64 + 0.5),
        ]
    }

    /// Euclidean distance from a point to a box centre.
    pub fn center_distance(&self, z: [f64; 2], linear: u32) -> f64 {
        let c = self.center(linear);
        ((z[0] - c[0]).powi(2) + (z[1] - c[1]).powi(2)).sqrt()
    }

    /// Number of edges between node `i` and the nodes in a box.
    pub fn edge_count(&self, i: usize, linear: u32) -> u32 {
        match self.edge_counts[i].binary_search_by_key(&linear, |e| e.0) {
            Ok(pos) => self.edge_counts[i][pos].1,
            Err(_) => 0,
        }
    }

    /// Sparse (box id, edge count) entries of node `i`, sorted by box id.
    pub fn edge_count_entries(&self, i: usize) -> &[(u32, u32)] {
        &self.edge_counts[i]
    }

    /// Number of non-edges between node `i` and the nodes in a box:
    /// occupancy − edge count − membership indicator.
    ///
    /// Because the indicator cancels the node's own contribution to the
    /// occupancy, the result does not depend on where node `i` sits; it is
    /// the count of non-neighbours of `i` inside the box.
    pub fn non_edge_count(&self, i: usize, linear: u32, i_in_box: bool) -> u32 {
        let n = self.occupancy[linear as usize] as i64;
        let xi = self.edge_count(i, linear) as i64;
        let zeta = n - xi - i64::from(i_in_box);
        if zeta < 0 {
            panic!(
                "internal consistency fault: negative non-edge count for node {i} in box {linear} \
                 (occupancy {n}, edges {xi}, member {i_in_box})"
            );
        }
        zeta as u32
    }

    /// Re-files node `i` under its new position, updating the occupancy and
    /// the sparse edge counts of its neighbours. A move inside the current
    /// box leaves every count unchanged.
    pub fn move_node(&mut self, i: usize, z_new: [f64; 2], net: &Network) {
        let new_box = self.box_index(z_new);
        let old_box = self.box_of[i];
        if new_box == old_box {
            return;
        }
        let occ = &mut self.occupancy[old_box as usize];
        debug_assert!(*occ > 0);
        *occ -= 1;
        if *occ == 0 {
            self.n_nonempty -= 1;
        }
        let occ = &mut self.occupancy[new_box as usize];
        if *occ == 0 {
            self.n_nonempty += 1;
        }
        *occ += 1;
        self.box_of[i] = new_box;
        for &j in net.neighbors(i) {
            dec_entry(&mut self.edge_counts[j as usize], old_box);
            inc_entry(&mut self.edge_counts[j as usize], new_box);
        }
    }
}

fn inc_entry(entries: &mut Vec<(u32, u32)>, linear: u32) {
    match entries.binary_search_by_key(&linear, |e| e.0) {
        Ok(pos) => entries[pos].1 += 1,
        Err(pos) => entries.insert(pos, (linear, 1)),
    }
}

fn dec_entry(entries: &mut Vec<(u32, u32)>, linear: u32) {
    match entries.binary_search_by_key(&linear, |e| e.0) {
        Ok(pos) => {
            entries[pos].1 -= 1;
            if entries[pos].1 == 0 {
                entries.remove(pos);
            }
        }
        Err(_) => panic!(
            "internal consistency fault: decrementing absent edge count for box {linear}"
        ),
    }
}
