//! Edge-probability links, bounded parameter spaces, priors and proposals.
//!
//! Every parameter lives on a bounded support: latent positions on the
//! square [−S, S]², each global parameter on an interval. The link maps a
//! latent distance and the global parameters to an edge probability; it is
//! non-increasing and Lipschitz in the distance, which is what makes the
//! grid approximation's error controllable.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{log_logistic_pair, logistic, norm_log_pdf, norm_window};

/// Bounded supports and proposal scales for one model instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParameterSpace {
    /// Half side S of the latent square [−S, S]².
    pub half_side: f64,
    /// Standard deviation γ of the truncated Gaussian position prior.
    pub prior_std: f64,
    /// Per-parameter bounds [lo, hi] for the global parameters.
    pub psi_bounds: Vec<(f64, f64)>,
    /// Per-parameter prior standard deviations (wide by default).
    pub psi_prior_std: Vec<f64>,
    /// Initial random-walk standard deviation for position proposals.
    pub prop_std_z: f64,
    /// Initial random-walk standard deviations for global-parameter proposals.
    pub prop_std_psi: Vec<f64>,
}

impl ParameterSpace {
    /// The space used throughout the simulation studies: S = γ = 1, wide
    /// non-informative bounds on the intercept and log-scale.
    pub fn study_default() -> Self {
        Self {
            half_side: 1.0,
            prior_std: 1.0,
            psi_bounds: vec![(-10.0, 10.0), (-5.0, 5.0)],
            psi_prior_std: vec![10.0, 10.0],
            prop_std_z: 0.15,
            prop_std_psi: vec![0.1, 0.1],
        }
    }

    pub fn validate(&self, link: LinkFunction) -> Result<()> {
        if !(self.half_side > 0.0) {
            return Err(Error::Config("half_side must be positive".into()));
        }
        if !(self.prior_std > 0.0) {
            return Err(Error::Config("prior_std must be positive".into()));
        }
        if self.psi_bounds.len() != link.n_params() {
            return Err(Error::Config(format!(
                "link expects {} global parameters, got bounds for {}",
                link.n_params(),
                self.psi_bounds.len()
            )));
        }
        if self.psi_prior_std.len() != self.psi_bounds.len()
            || self.prop_std_psi.len() != self.psi_bounds.len()
        {
            return Err(Error::Config(
                "psi_prior_std and prop_std_psi must match psi_bounds in length".into(),
            ));
        }
        for &(lo, hi) in &self.psi_bounds {
            if !(lo < hi) {
                return Err(Error::Config(format!("empty parameter interval [{lo}, {hi}]")));
            }
        }
        if !(self.prop_std_z > 0.0) || self.prop_std_psi.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Config("proposal standard deviations must be positive".into()));
        }
        if self.psi_prior_std.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Config("prior standard deviations must be positive".into()));
        }
        Ok(())
    }

    /// Largest distance realisable inside the latent square, 2√2·S.
    pub fn max_distance(&self) -> f64 {
        2.0 * std::f64::consts::SQRT_2 * self.half_side
    }

    pub fn contains_z(&self, z: [f64; 2]) -> bool {
        let s = self.half_side;
        z[0] >= -s && z[0] <= s && z[1] >= -s && z[1] <= s
    }

    pub fn contains_psi(&self, psi: &GlobalParams) -> bool {
        psi.values.len() == self.psi_bounds.len()
            && psi
                .values
                .iter()
                .zip(&self.psi_bounds)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    /// Midpoints of the global-parameter intervals.
    pub fn psi_midpoints(&self) -> GlobalParams {
        GlobalParams::new(self.psi_bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect())
    }
}

/// The global (static) parameters of the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalParams {
    pub values: Vec<f64>,
}

impl GlobalParams {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// A copy with coordinate `k` replaced by `value`.
    pub fn with_coord(&self, k: usize, value: f64) -> Self {
        let mut values = self.values.clone();
        values[k] = value;
        Self { values }
    }
}

/// Edge-probability link ρ(d, ψ).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkFunction {
    /// logit p = ψ − d, a single intercept parameter.
    HoffLogit,
    /// logit p = β − e^θ·d, intercept plus log-scale; ψ = (β, θ).
    TwoParamLogit,
}

impl LinkFunction {
    pub fn n_params(&self) -> usize {
        match self {
            LinkFunction::HoffLogit => 1,
            LinkFunction::TwoParamLogit => 2,
        }
    }

    fn linear_predictor(&self, d: f64, psi: &GlobalParams) -> f64 {
        match self {
            LinkFunction::HoffLogit => psi.values[0] - d,
            LinkFunction::TwoParamLogit => psi.values[0] - psi.values[1].exp() * d,
        }
    }

    /// Edge probability at distance `d`.
    pub fn edge_prob(&self, d: f64, psi: &GlobalParams) -> f64 {
        logistic(self.linear_predictor(d, psi))
    }

    /// (log p, log(1−p)) at distance `d`, stable over the whole support.
    pub fn log_probs(&self, d: f64, psi: &GlobalParams) -> (f64, f64) {
        log_logistic_pair(self.linear_predictor(d, psi))
    }

    /// Supremum of |∂ρ/∂d| over the bounded space, computed analytically.
    ///
    /// The logistic derivative is bounded by 1/4, so the slope in d is at
    /// most (scale)/4 where the scale is 1 for the intercept-only link and
    /// e^θ for the two-parameter link.
    pub fn lipschitz_in_distance(&self, space: &ParameterSpace) -> f64 {
        match self {
            LinkFunction::HoffLogit => 0.25,
            LinkFunction::TwoParamLogit => space.psi_bounds[1].1.exp() * 0.25,
        }
    }
}

/// Probability range and distance-Lipschitz constant of a link over a
/// bounded space.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Smallest edge probability attainable over the space.
    pub prob_lower: f64,
    /// Largest edge probability attainable over the space.
    pub prob_upper: f64,
    /// Lipschitz constant of ρ in the distance argument.
    pub prob_lipschitz: f64,
}

/// Computes the probability range by enumerating the corners of the
/// global-parameter box at the extreme distances 0 and 2√2·S, plus the
/// analytic Lipschitz constant.
pub fn derived_constants(link: LinkFunction, space: &ParameterSpace) -> DerivedConstants {
    let k = link.n_params();
    let d_extremes = [0.0, space.max_distance()];
    let mut prob_lower = f64::INFINITY;
    let mut prob_upper = f64::NEG_INFINITY;
    for corner in 0..(1usize << k) {
        let values: Vec<f64> = (0..k)
            .map(|j| {
                let (lo, hi) = space.psi_bounds[j];
                if corner >> j & 1 == 1 {
                    hi
                } else {
                    lo
                }
            })
            .collect();
        let psi = GlobalParams::new(values);
        for &d in &d_extremes {
            let p = link.edge_prob(d, &psi);
            prob_lower = prob_lower.min(p);
            prob_upper = prob_upper.max(p);
        }
    }
    DerivedConstants {
        prob_lower,
        prob_upper,
        prob_lipschitz: link.lipschitz_in_distance(space),
    }
}

/// Log-density of the spherical truncated Gaussian position prior.
///
/// Each coordinate has density φ(z/γ) / (γ·[Φ(S/γ) − Φ(−S/γ)]) on [−S, S];
/// positions outside the square get −∞.
pub fn log_prior_z(z: [f64; 2], space: &ParameterSpace) -> f64 {
    if !space.contains_z(z) {
        return f64::NEG_INFINITY;
    }
    let g = space.prior_std;
    let s = space.half_side;
    let log_norm = norm_window(0.0, g, -s, s).ln();
    z.iter()
        .map(|&c| norm_log_pdf(c / g) - g.ln() - log_norm)
        .sum()
}

/// Log-density (up to the truncation constant) of the global-parameter
/// prior: independent wide Gaussians restricted to the bound intervals.
///
/// The truncation normaliser is constant over the support, so it cancels in
/// every ratio the samplers form; it is omitted so the value at ψ = 0 with
/// std σ is exactly Σ_k [log φ(0) − log σ].
pub fn log_prior_psi(psi: &GlobalParams, space: &ParameterSpace) -> f64 {
    if !space.contains_psi(psi) {
        return f64::NEG_INFINITY;
    }
    psi.values
        .iter()
        .zip(&space.psi_prior_std)
        .map(|(&v, &sd)| norm_log_pdf(v / sd) - sd.ln())
        .sum()
}

/// Draws from a Gaussian(centre, sd²) truncated to [lo, hi] by rejection.
fn sample_trunc_normal<R: Rng>(centre: f64, sd: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    debug_assert!(centre >= lo && centre <= hi);
    let normal = Normal::new(centre, sd).expect("valid proposal std");
    for _ in 0..1_000_000 {
        let x = normal.sample(rng);
        if x >= lo && x <= hi {
            return x;
        }
    }
    // With proposal scales capped at the support width the acceptance rate
    // is bounded well away from zero; reaching this means corrupted state.
    panic!("internal consistency fault: truncated-normal rejection loop stalled");
}

/// Truncated-Gaussian random-walk proposal for a latent position.
///
/// Returns the proposed point and log q(z′→z) − log q(z→z′), which reduces
/// to the log-ratio of the truncation windows because the Gaussian kernel
/// itself is symmetric.
pub fn propose_z<R: Rng>(
    z: [f64; 2],
    space: &ParameterSpace,
    prop_std: f64,
    rng: &mut R,
) -> ([f64; 2], f64) {
    let s = space.half_side;
    let mut proposed = [0.0; 2];
    let mut log_q_ratio = 0.0;
    for m in 0..2 {
        proposed[m] = sample_trunc_normal(z[m], prop_std, -s, s, rng);
        log_q_ratio += norm_window(z[m], prop_std, -s, s).ln()
            - norm_window(proposed[m], prop_std, -s, s).ln();
    }
    (proposed, log_q_ratio)
}

/// One-dimensional truncated-Gaussian random walk for a global parameter.
pub fn propose_psi<R: Rng>(
    value: f64,
    bounds: (f64, f64),
    prop_std: f64,
    rng: &mut R,
) -> (f64, f64) {
    let (lo, hi) = bounds;
    let proposed = sample_trunc_normal(value, prop_std, lo, hi, rng);
    let log_q_ratio =
        norm_window(value, prop_std, lo, hi).ln() - norm_window(proposed, prop_std, lo, hi).ln();
    (proposed, log_q_ratio)
}
