//! Procrustes post-processing of posterior position draws.
//!
//! Latent positions are only identified up to translations, rotations and
//! reflections, so draws are matched to a reference layout before any
//! averaging: both configurations are centred and the orthogonal transform
//! (rotation or roto-reflection) minimising the summed squared residual is
//! applied. Alignment is strictly post-hoc; the chains never see it.

use rayon::prelude::*;

use crate::graph::Network;
use crate::likelihood::{exact_log_lik, LatentState};
use crate::model::{log_prior_psi, log_prior_z, GlobalParams, LinkFunction, ParameterSpace};
use crate::sampler::ChainSample;

/// Where the reference layout came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceSource {
    TruePositions,
    MapDraw,
}

/// The layout draws are matched against.
#[derive(Clone, Debug)]
pub struct ReferenceConfig {
    pub points: Vec<[f64; 2]>,
    pub source: ReferenceSource,
}

fn centroid(points: &[[f64; 2]]) -> [f64; 2] {
    let n = points.len() as f64;
    let mut c = [0.0, 0.0];
    for p in points {
        c[0] += p[0];
        c[1] += p[1];
    }
    [c[0] / n, c[1] / n]
}

/// Optimal orthogonal alignment of `draw` onto the reference.
///
/// Both point sets are centred; the orthogonal factor maximising the trace
/// of R·H (H the 2×2 cross-covariance) is picked from the rotation and the
/// roto-reflection branch in closed form, reflections being part of the
/// non-identifiable family. Degenerate cross-covariances fall back to the
/// identity, leaving a pure translation.
pub fn procrustes_align(draw: &[[f64; 2]], reference: &ReferenceConfig) -> Vec<[f64; 2]> {
    assert_eq!(
        draw.len(),
        reference.points.len(),
        "draw and reference must have the same number of points"
    );
    let cd = centroid(draw);
    let cr = centroid(&reference.points);

    // Cross-covariance H = Σ (draw − cd)(ref − cr)^T.
    let mut h = [[0.0f64; 2]; 2];
    for (p, r) in draw.iter().zip(&reference.points) {
        let x = [p[0] - cd[0], p[1] - cd[1]];
        let y = [r[0] - cr[0], r[1] - cr[1]];
        h[0][0] += x[0] * y[0];
        h[0][1] += x[0] * y[1];
        h[1][0] += x[1] * y[0];
        h[1][1] += x[1] * y[1];
    }

    // tr(R H) over rotations R(φ) peaks at sqrt(a² + b²) with
    // a = h00 + h11, b = h01 − h10; over roto-reflections at
    // sqrt(c² + e²) with c = h00 − h11, e = h01 + h10.
    let a = h[0][0] + h[1][1];
    let b = h[0][1] - h[1][0];
    let c = h[0][0] - h[1][1];
    let e = h[0][1] + h[1][0];
    let rot_gain = (a * a + b * b).sqrt();
    let ref_gain = (c * c + e * e).sqrt();

    let transform: [[f64; 2]; 2] = if rot_gain <= f64::EPSILON && ref_gain <= f64::EPSILON {
        [[1.0, 0.0], [0.0, 1.0]]
    } else if rot_gain >= ref_gain {
        let (cos, sin) = (a / rot_gain, b / rot_gain);
        // Rotation acting on row vectors: x ↦ (x·cos − y·sin, x·sin + y·cos).
        [[cos, sin], [-sin, cos]]
    } else {
        let (cos, sin) = (c / ref_gain, e / ref_gain);
        [[cos, sin], [sin, -cos]]
    };

    draw.iter()
        .map(|p| {
            let x = [p[0] - cd[0], p[1] - cd[1]];
            [
                x[0] * transform[0][0] + x[1] * transform[1][0] + cr[0],
                x[0] * transform[0][1] + x[1] * transform[1][1] + cr[1],
            ]
        })
        .collect()
}

/// Summed squared distance between two configurations.
pub fn squared_residual(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
        .sum()
}

/// Root-mean-square distance per node between two configurations.
pub fn rmse(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    (squared_residual(a, b) / a.len() as f64).sqrt()
}

/// Picks the stored draw with the highest exact log-posterior.
///
/// The posterior value is recomputed exactly (full likelihood plus priors)
/// even for chains that sampled with the noisy kernels, so the reference is
/// the best configuration under the true model. Ties break towards the
/// earliest draw.
pub fn map_draw(
    sample: &ChainSample,
    net: &Network,
    link: LinkFunction,
    space: &ParameterSpace,
) -> (usize, ReferenceConfig) {
    assert!(!sample.z_draws.is_empty(), "chain stored no draws");
    let scores: Vec<f64> = sample
        .z_draws
        .par_iter()
        .zip(sample.psi_draws.par_iter())
        .map(|(z, psi)| {
            let state = LatentState::new(z.clone(), GlobalParams::new(psi.clone()));
            let mut lp = exact_log_lik(&state, net, link);
            for &p in z.iter() {
                lp += log_prior_z(p, space);
            }
            lp += log_prior_psi(&state.psi, space);
            lp
        })
        .collect();
    let mut best = 0usize;
    for (idx, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = idx;
        }
    }
    (
        best,
        ReferenceConfig {
            points: sample.z_draws[best].clone(),
            source: ReferenceSource::MapDraw,
        },
    )
}

/// Aligns every stored draw to the reference and averages: the posterior
/// mean positions of the identified model.
pub fn aligned_posterior_mean(
    sample: &ChainSample,
    reference: &ReferenceConfig,
) -> Vec<[f64; 2]> {
    let n = reference.points.len();
    let partial: Vec<Vec<[f64; 2]>> = sample
        .z_draws
        .par_iter()
        .map(|draw| procrustes_align(draw, reference))
        .collect();
    let mut mean = vec![[0.0f64; 2]; n];
    for aligned in &partial {
        for (m, p) in mean.iter_mut().zip(aligned) {
            m[0] += p[0];
            m[1] += p[1];
        }
    }
    let count = sample.z_draws.len() as f64;
    for m in &mut mean {
        m[0] /= count;
        m[1] /= count;
    }
    mean
}
