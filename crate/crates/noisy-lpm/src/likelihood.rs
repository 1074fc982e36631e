//! Exact and noisy log-likelihoods and the ratio kernels the samplers use.
//!
//! The exact likelihood runs over every ordered node pair with a global 1/2
//! exponent, so each undirected edge contributes once. The noisy likelihood
//! replaces the distance to a node by the distance to the centre of the box
//! containing it and aggregates per box: node i contributes its per-box edge
//! and non-edge counts against the box centres, again with the 1/2 exponent.
//!
//! Ratio kernels come in four flavours (exact/noisy × position/parameter).
//! Everything is accumulated in log space with compensated summation;
//! callers exponentiate only at the acceptance step. The big sums
//! parallelise over nodes in fixed-size chunks that are reduced in chunk
//! order, so results are identical for any thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::grid::BoxGrid;
use crate::model::{GlobalParams, LinkFunction, ParameterSpace};
use crate::stats::KahanSum;

/// Latent positions plus global parameters, optionally carrying the box
/// grid the noisy kernels read.
///
/// When the grid is present it is kept consistent with the positions: every
/// position write goes through [`LatentState::set_position`].
#[derive(Clone, Debug)]
pub struct LatentState {
    pub positions: Vec<[f64; 2]>,
    pub psi: GlobalParams,
    grid: Option<BoxGrid>,
}

impl LatentState {
    /// State without a grid (exact sampling only).
    pub fn new(positions: Vec<[f64; 2]>, psi: GlobalParams) -> Self {
        Self {
            positions,
            psi,
            grid: None,
        }
    }

    /// State with an M×M grid built from the positions.
    pub fn with_grid(
        positions: Vec<[f64; 2]>,
        psi: GlobalParams,
        net: &Network,
        m: usize,
        space: &ParameterSpace,
    ) -> Result<Self> {
        let grid = BoxGrid::build(&positions, net, m, space)?;
        Ok(Self {
            positions,
            psi,
            grid: Some(grid),
        })
    }

    pub fn grid(&self) -> Option<&BoxGrid> {
        self.grid.as_ref()
    }

    fn grid_required(&self) -> &BoxGrid {
        self.grid
            .as_ref()
            .expect("noisy kernel called on a state without a grid")
    }

    /// Moves node `i`, keeping the grid (if any) consistent.
    pub fn set_position(&mut self, i: usize, z: [f64; 2], net: &Network) {
        if let Some(grid) = self.grid.as_mut() {
            grid.move_node(i, z, net);
        }
        self.positions[i] = z;
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let a = self.positions[i];
        let b = self.positions[j];
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }
}

/// Sums `row(i)` over `0..n` in fixed 64-row chunks, chunks evaluated in
/// parallel and reduced in index order with compensated summation.
fn chunked_sum<F>(n: usize, row: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    const CHUNK: usize = 64;
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = KahanSum::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                acc.add(row(i));
            }
            acc.value()
        })
        .collect();
    let mut acc = KahanSum::new();
    for v in partials {
        acc.add(v);
    }
    acc.value()
}

/// Contribution of node `i`'s pairs with j > i to the exact log-likelihood.
fn exact_row_upper(state: &LatentState, net: &Network, link: LinkFunction, i: usize) -> f64 {
    let n = net.n_nodes();
    let neighbors = net.neighbors(i);
    let mut ptr = neighbors.partition_point(|&j| (j as usize) <= i);
    let mut acc = KahanSum::new();
    for j in (i + 1)..n {
        let is_edge = ptr < neighbors.len() && neighbors[ptr] as usize == j;
        if is_edge {
            ptr += 1;
        }
        let (log_p, log_q) = link.log_probs(state.distance(i, j), &state.psi);
        acc.add(if is_edge { log_p } else { log_q });
    }
    acc.value()
}

/// Exact log-likelihood, O(N²).
pub fn exact_log_lik(state: &LatentState, net: &Network, link: LinkFunction) -> f64 {
    chunked_sum(net.n_nodes(), |i| exact_row_upper(state, net, link, i))
}

/// Node `i`'s aggregated row of the noisy log-likelihood (no 1/2 factor).
fn noisy_row(state: &LatentState, link: LinkFunction, i: usize) -> f64 {
    let grid = state.grid_required();
    let z = state.positions[i];
    let own_box = grid.box_of(i);
    let entries = grid.edge_count_entries(i);
    let mut ptr = 0usize;
    let mut acc = KahanSum::new();
    for (b, &occ) in grid.occupancies().iter().enumerate() {
        if occ == 0 {
            continue;
        }
        let b = b as u32;
        let edges = if ptr < entries.len() && entries[ptr].0 == b {
            let v = entries[ptr].1;
            ptr += 1;
            v
        } else {
            0
        };
        let non_edges = grid.non_edge_count(i, b, own_box == b);
        if edges == 0 && non_edges == 0 {
            continue;
        }
        let (log_p, log_q) = link.log_probs(grid.center_distance(z, b), &state.psi);
        acc.add(edges as f64 * log_p + non_edges as f64 * log_q);
    }
    acc.value()
}

/// Noisy log-likelihood, O(N · #non-empty boxes + Σ degree).
pub fn noisy_log_lik(state: &LatentState, net: &Network, link: LinkFunction) -> f64 {
    0.5 * chunked_sum(net.n_nodes(), |i| noisy_row(state, link, i))
}

/// Log of the exact likelihood ratio for moving node `i` to `z_new`.
///
/// Equals the log-quotient of the full likelihood at the two states: the
/// ordered-pair products cancel everywhere except node i's row, whose terms
/// appear twice and carry the global 1/2.
pub fn log_exact_lr_z(
    state: &LatentState,
    net: &Network,
    link: LinkFunction,
    i: usize,
    z_new: [f64; 2],
) -> f64 {
    let n = net.n_nodes();
    let neighbors = net.neighbors(i);
    let mut ptr = 0usize;
    let mut acc = KahanSum::new();
    for j in 0..n {
        if j == i {
            continue;
        }
        let is_edge = ptr < neighbors.len() && neighbors[ptr] as usize == j;
        if is_edge {
            ptr += 1;
        }
        let old = state.positions[j];
        let d_new = ((z_new[0] - old[0]).powi(2) + (z_new[1] - old[1]).powi(2)).sqrt();
        let (lp_new, lq_new) = link.log_probs(d_new, &state.psi);
        let (lp_old, lq_old) = link.log_probs(state.distance(i, j), &state.psi);
        acc.add(if is_edge {
            lp_new - lp_old
        } else {
            lq_new - lq_old
        });
    }
    acc.value()
}

/// Log of the noisy likelihood ratio for moving node `i` to `z_new`.
///
/// Per non-empty box, the edge exponent is node i's edge count into that
/// box and the non-edge exponent is the count of i's non-neighbours there;
/// both are invariant to where node i itself sits, so the same exponents
/// serve the numerator (state with z_new) and the denominator. This is the
/// exact log-quotient of the noisy full conditional of node i, making each
/// position update a genuine Metropolis step for the noisy target. Cost is
/// O(#non-empty boxes + degree of i).
pub fn log_noisy_lr_z(
    state: &LatentState,
    _net: &Network,
    link: LinkFunction,
    i: usize,
    z_new: [f64; 2],
) -> f64 {
    let grid = state.grid_required();
    let z_old = state.positions[i];
    let own_box = grid.box_of(i);
    let entries = grid.edge_count_entries(i);
    let mut ptr = 0usize;
    let mut acc = KahanSum::new();
    for (b, &occ) in grid.occupancies().iter().enumerate() {
        if occ == 0 {
            continue;
        }
        let b = b as u32;
        let edges = if ptr < entries.len() && entries[ptr].0 == b {
            let v = entries[ptr].1;
            ptr += 1;
            v
        } else {
            0
        };
        let non_edges = grid.non_edge_count(i, b, own_box == b);
        if edges == 0 && non_edges == 0 {
            continue;
        }
        let (lp_new, lq_new) = link.log_probs(grid.center_distance(z_new, b), &state.psi);
        let (lp_old, lq_old) = link.log_probs(grid.center_distance(z_old, b), &state.psi);
        acc.add(edges as f64 * (lp_new - lp_old) + non_edges as f64 * (lq_new - lq_old));
    }
    acc.value()
}

/// Log of the exact likelihood ratio for a global-parameter update.
///
/// The square-rooted ordered-pair product reduces to a plain sum over
/// unordered pairs, so this equals the exact log-likelihood difference.
pub fn log_exact_lr_psi(
    state: &LatentState,
    net: &Network,
    link: LinkFunction,
    psi_new: &GlobalParams,
) -> f64 {
    chunked_sum(net.n_nodes(), |i| {
        let n = net.n_nodes();
        let neighbors = net.neighbors(i);
        let mut ptr = neighbors.partition_point(|&j| (j as usize) <= i);
        let mut acc = KahanSum::new();
        for j in (i + 1)..n {
            let is_edge = ptr < neighbors.len() && neighbors[ptr] as usize == j;
            if is_edge {
                ptr += 1;
            }
            let d = state.distance(i, j);
            let (lp_new, lq_new) = link.log_probs(d, psi_new);
            let (lp_old, lq_old) = link.log_probs(d, &state.psi);
            acc.add(if is_edge {
                lp_new - lp_old
            } else {
                lq_new - lq_old
            });
        }
        acc.value()
    })
}

/// Log of the noisy likelihood ratio for a global-parameter update; equals
/// the noisy log-likelihood difference. O(N · #non-empty boxes).
pub fn log_noisy_lr_psi(
    state: &LatentState,
    net: &Network,
    link: LinkFunction,
    psi_new: &GlobalParams,
) -> f64 {
    0.5 * chunked_sum(net.n_nodes(), |i| {
        let grid = state.grid_required();
        let z = state.positions[i];
        let own_box = grid.box_of(i);
        let entries = grid.edge_count_entries(i);
        let mut ptr = 0usize;
        let mut acc = KahanSum::new();
        for (b, &occ) in grid.occupancies().iter().enumerate() {
            if occ == 0 {
                continue;
            }
            let b = b as u32;
            let edges = if ptr < entries.len() && entries[ptr].0 == b {
                let v = entries[ptr].1;
                ptr += 1;
                v
            } else {
                0
            };
            let non_edges = grid.non_edge_count(i, b, own_box == b);
            if edges == 0 && non_edges == 0 {
                continue;
            }
            let d = grid.center_distance(z, b);
            let (lp_new, lq_new) = link.log_probs(d, psi_new);
            let (lp_old, lq_old) = link.log_probs(d, &state.psi);
            acc.add(edges as f64 * (lp_new - lp_old) + non_edges as f64 * (lq_new - lq_old));
        }
        acc.value()
    })
}

/// Exact position-update likelihood ratio (exponentiated).
pub fn exact_lr_z(
    state: &LatentState,
    net: &Network,
    link: LinkFunction,
    i: usize,
    z_new: [f64; 2],
) -> f64 {
    log_exact_lr_z(state, net, link, i, z_new).exp()
}

/// Noisy position-update likelihood ratio (exponentiated).
pub fn noisy_lr_z(
    state: &LatentState,
    net: &Network,
    link: LinkFunction,
    i: usize,
    z_new: [f64; 2],
) -> f64 {
    log_noisy_lr_z(state, net, link, i, z_new).exp()
}

/// Exact parameter-update likelihood ratio (exponentiated).
pub fn exact_lr_psi(
    state: &LatentState,
    net: &Network,
    link: LinkFunction,
    psi_new: &GlobalParams,
) -> f64 {
    log_exact_lr_psi(state, net, link, psi_new).exp()
}

/// Noisy parameter-update likelihood ratio (exponentiated).
pub fn noisy_lr_psi(
    state: &LatentState,
    net: &Network,
    link: LinkFunction,
    psi_new: &GlobalParams,
) -> f64 {
    log_noisy_lr_psi(state, net, link, psi_new).exp()
}

/// Validates that a state's grid matches a from-scratch rebuild.
pub fn check_grid_consistency(
    state: &LatentState,
    net: &Network,
    space: &ParameterSpace,
) -> Result<()> {
    let grid = match state.grid() {
        Some(g) => g,
        None => return Ok(()),
    };
    let rebuilt = BoxGrid::build(&state.positions, net, grid.m(), space)?;
    if *grid != rebuilt {
        return Err(Error::Internal(
            "incrementally maintained grid deviates from a rebuild".into(),
        ));
    }
    Ok(())
}
