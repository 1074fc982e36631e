//! Exact and noisy Metropolis-within-Gibbs samplers over one sweep skeleton.
//!
//! A sweep proposes and accepts/rejects each latent position in turn (both
//! coordinates in block) and then each global parameter, in a fixed scan
//! order by default. The exact and noisy samplers differ only in which
//! likelihood-ratio kernel the acceptance probability uses; in noisy mode an
//! accepted position move also re-files the node in the box grid.
//!
//! Proposal scales can adapt during burn-in: every adaptation interval, a
//! parameter whose realised acceptance rate leaves the target window gets
//! its standard deviation scaled up or down by a fixed factor. Scales are
//! frozen once sampling starts, so the recorded draws come from a fixed
//! Metropolis kernel.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::likelihood::{
    log_exact_lr_psi, log_exact_lr_z, log_noisy_lr_psi, log_noisy_lr_z, LatentState,
};
use crate::model::{
    log_prior_psi, log_prior_z, propose_psi, propose_z, GlobalParams, LinkFunction,
    ParameterSpace,
};

/// Which likelihood the acceptance ratios use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Noisy,
}

/// Burn-in proposal adaptation settings.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdaptSettings {
    pub enabled: bool,
    /// Target acceptance window [low, high].
    pub target_low: f64,
    pub target_high: f64,
    /// Sweeps between adjustments.
    pub interval: usize,
}

impl Default for AdaptSettings {
    fn default() -> Self {
        Self {
            enabled: true,
            target_low: 0.2,
            target_high: 0.5,
            interval: 100,
        }
    }
}

/// Scale factors applied when the acceptance rate leaves the window.
const ADAPT_UP: f64 = 1.25;
const ADAPT_DOWN: f64 = 0.8;

/// One std adjustment step: grow when accepting too often, shrink when
/// accepting too rarely, clamp into (floor, cap].
pub fn adapt_proposal_std(
    accepted: u64,
    proposed: u64,
    current_std: f64,
    window: (f64, f64),
    cap: f64,
) -> f64 {
    if proposed == 0 {
        return current_std;
    }
    let rate = accepted as f64 / proposed as f64;
    let scaled = if rate > window.1 {
        current_std * ADAPT_UP
    } else if rate < window.0 {
        current_std * ADAPT_DOWN
    } else {
        current_std
    };
    scaled.clamp(cap * 1e-9, cap)
}

/// Full sampler configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub mode: Mode,
    /// Grid intervals per axis (noisy mode only).
    pub grid_m: usize,
    pub seed: u64,
    pub adapt: AdaptSettings,
    /// Shuffle the node update order each sweep instead of scanning 0..N.
    pub random_scan: bool,
    #[serde(skip)]
    pub init_positions: Option<Vec<[f64; 2]>>,
    #[serde(skip)]
    pub init_psi: Option<Vec<f64>>,
}

impl SamplerConfig {
    pub fn new(mode: Mode, iterations: usize, burn_in: usize, thin: usize, seed: u64) -> Self {
        Self {
            iterations,
            burn_in,
            thin,
            mode,
            grid_m: 8,
            seed,
            adapt: AdaptSettings::default(),
            random_scan: false,
            init_positions: None,
            init_psi: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        let a = &self.adapt;
        if !(0.0 < a.target_low && a.target_low < a.target_high && a.target_high < 1.0) {
            return Err(Error::Config(
                "adaptation window must satisfy 0 < low < high < 1".into(),
            ));
        }
        if a.enabled && a.interval == 0 {
            return Err(Error::Config("adaptation interval must be positive".into()));
        }
        if self.mode == Mode::Noisy && self.grid_m == 0 {
            return Err(Error::Config("noisy mode needs at least one grid box".into()));
        }
        Ok(())
    }

    /// Number of draws a run will store.
    pub fn n_draws(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Wall-clock accounting for one run.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct ChainTimings {
    pub burn_in_secs: f64,
    pub sampling_secs: f64,
    pub mean_sweep_secs_burn_in: f64,
    pub mean_sweep_secs_sampling: f64,
    /// Total time spent in position updates across all sweeps.
    pub z_phase_secs: f64,
    /// Total time spent in global-parameter updates across all sweeps.
    pub psi_phase_secs: f64,
    pub n_sweeps: usize,
}

/// Thinned posterior draws plus run statistics.
#[derive(Clone, Debug)]
pub struct ChainSample {
    pub z_draws: Vec<Vec<[f64; 2]>>,
    pub psi_draws: Vec<Vec<f64>>,
    /// Per-node acceptance rates over the sampling phase.
    pub accept_rate_z: Vec<f64>,
    /// Per-parameter acceptance rates over the sampling phase.
    pub accept_rate_psi: Vec<f64>,
    pub final_prop_std_z: Vec<f64>,
    pub final_prop_std_psi: Vec<f64>,
    pub timings: ChainTimings,
    pub seed: u64,
}

/// Acceptance probability for moving node `i` to `z_new`:
/// 1 ∧ (q-ratio · prior-ratio · likelihood-ratio), assembled in log space.
#[allow(clippy::too_many_arguments)]
pub fn accept_prob_z(
    state: &LatentState,
    net: &Network,
    link: LinkFunction,
    space: &ParameterSpace,
    i: usize,
    z_new: [f64; 2],
    log_q_ratio: f64,
    mode: Mode,
) -> f64 {
    log_accept_z(state, net, link, space, i, z_new, log_q_ratio, mode)
        .min(0.0)
        .exp()
}

#[allow(clippy::too_many_arguments)]
fn log_accept_z(
    state: &LatentState,
    net: &Network,
    link: LinkFunction,
    space: &ParameterSpace,
    i: usize,
    z_new: [f64; 2],
    log_q_ratio: f64,
    mode: Mode,
) -> f64 {
    let prior_diff = log_prior_z(z_new, space) - log_prior_z(state.positions[i], space);
    let log_lr = match mode {
        Mode::Exact => log_exact_lr_z(state, net, link, i, z_new),
        Mode::Noisy => log_noisy_lr_z(state, net, link, i, z_new),
    };
    log_q_ratio + prior_diff + log_lr
}

/// Acceptance probability for setting global parameter `k` to `value`.
#[allow(clippy::too_many_arguments)]
pub fn accept_prob_psi(
    state: &LatentState,
    net: &Network,
    link: LinkFunction,
    space: &ParameterSpace,
    k: usize,
    value: f64,
    log_q_ratio: f64,
    mode: Mode,
) -> f64 {
    log_accept_psi(state, net, link, space, k, value, log_q_ratio, mode)
        .min(0.0)
        .exp()
}

#[allow(clippy::too_many_arguments)]
fn log_accept_psi(
    state: &LatentState,
    net: &Network,
    link: LinkFunction,
    space: &ParameterSpace,
    k: usize,
    value: f64,
    log_q_ratio: f64,
    mode: Mode,
) -> f64 {
    let psi_new = state.psi.with_coord(k, value);
    let prior_diff = log_prior_psi(&psi_new, space) - log_prior_psi(&state.psi, space);
    let log_lr = match mode {
        Mode::Exact => log_exact_lr_psi(state, net, link, &psi_new),
        Mode::Noisy => log_noisy_lr_psi(state, net, link, &psi_new),
    };
    log_q_ratio + prior_diff + log_lr
}

struct Chain<'a> {
    net: &'a Network,
    link: LinkFunction,
    space: &'a ParameterSpace,
    mode: Mode,
    random_scan: bool,
    state: LatentState,
    prop_std_z: Vec<f64>,
    prop_std_psi: Vec<f64>,
    rng: ChaCha8Rng,
    scan: Vec<usize>,
    // window counters (reset at each adaptation step)
    win_acc_z: Vec<u64>,
    win_prop_z: Vec<u64>,
    win_acc_psi: Vec<u64>,
    win_prop_psi: Vec<u64>,
    // phase totals
    acc_z: Vec<u64>,
    prop_z: Vec<u64>,
    acc_psi: Vec<u64>,
    prop_psi: Vec<u64>,
}

impl<'a> Chain<'a> {
    fn update_z(&mut self, i: usize) {
        let (z_new, log_q_ratio) =
            propose_z(self.state.positions[i], self.space, self.prop_std_z[i], &mut self.rng);
        let log_acc = log_accept_z(
            &self.state,
            self.net,
            self.link,
            self.space,
            i,
            z_new,
            log_q_ratio,
            self.mode,
        );
        self.win_prop_z[i] += 1;
        self.prop_z[i] += 1;
        let u: f64 = self.rng.random();
        if u < log_acc.min(0.0).exp() {
            self.state.set_position(i, z_new, self.net);
            self.win_acc_z[i] += 1;
            self.acc_z[i] += 1;
        }
    }

    fn update_psi(&mut self, k: usize) {
        let (value, log_q_ratio) = propose_psi(
            self.state.psi.values[k],
            self.space.psi_bounds[k],
            self.prop_std_psi[k],
            &mut self.rng,
        );
        let log_acc = log_accept_psi(
            &self.state,
            self.net,
            self.link,
            self.space,
            k,
            value,
            log_q_ratio,
            self.mode,
        );
        self.win_prop_psi[k] += 1;
        self.prop_psi[k] += 1;
        let u: f64 = self.rng.random();
        if u < log_acc.min(0.0).exp() {
            self.state.psi.values[k] = value;
            self.win_acc_psi[k] += 1;
            self.acc_psi[k] += 1;
        }
    }

    /// One full sweep; returns (position-phase, parameter-phase) seconds.
    fn sweep(&mut self) -> (f64, f64) {
        if self.random_scan {
            self.scan.shuffle(&mut self.rng);
        }
        let t0 = Instant::now();
        for idx in 0..self.scan.len() {
            self.update_z(self.scan[idx]);
        }
        let z_secs = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        for k in 0..self.state.psi.values.len() {
            self.update_psi(k);
        }
        (z_secs, t1.elapsed().as_secs_f64())
    }

    fn adapt(&mut self, window: (f64, f64)) {
        let z_cap = 2.0 * self.space.half_side;
        for i in 0..self.prop_std_z.len() {
            self.prop_std_z[i] = adapt_proposal_std(
                self.win_acc_z[i],
                self.win_prop_z[i],
                self.prop_std_z[i],
                window,
                z_cap,
            );
            self.win_acc_z[i] = 0;
            self.win_prop_z[i] = 0;
        }
        for k in 0..self.prop_std_psi.len() {
            let (lo, hi) = self.space.psi_bounds[k];
            self.prop_std_psi[k] = adapt_proposal_std(
                self.win_acc_psi[k],
                self.win_prop_psi[k],
                self.prop_std_psi[k],
                window,
                hi - lo,
            );
            self.win_acc_psi[k] = 0;
            self.win_prop_psi[k] = 0;
        }
    }

    fn reset_phase_totals(&mut self) {
        self.acc_z.iter_mut().for_each(|c| *c = 0);
        self.prop_z.iter_mut().for_each(|c| *c = 0);
        self.acc_psi.iter_mut().for_each(|c| *c = 0);
        self.prop_psi.iter_mut().for_each(|c| *c = 0);
    }
}

/// Draws initial positions from the truncated Gaussian prior.
fn init_from_prior<R: Rng>(
    n: usize,
    space: &ParameterSpace,
    rng: &mut R,
) -> Vec<[f64; 2]> {
    use rand_distr::Normal;
    let normal = Normal::new(0.0, space.prior_std).unwrap();
    let s = space.half_side;
    let coord = |rng: &mut R| loop {
        let x: f64 = normal.sample(rng);
        if (-s..=s).contains(&x) {
            break x;
        }
    };
    (0..n).map(|_| [coord(rng), coord(rng)]).collect()
}

/// Runs a full chain: initialisation, burn-in with optional adaptation,
/// then sampling with thinning.
pub fn run(
    net: &Network,
    link: LinkFunction,
    space: &ParameterSpace,
    config: &SamplerConfig,
) -> Result<ChainSample> {
    config.validate()?;
    space.validate(link)?;

    let n = net.n_nodes();
    let k = link.n_params();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let positions = match &config.init_positions {
        Some(p) => {
            if p.len() != n {
                return Err(Error::Config(format!(
                    "{} initial positions for {} nodes",
                    p.len(),
                    n
                )));
            }
            p.clone()
        }
        None => init_from_prior(n, space, &mut rng),
    };
    let psi = match &config.init_psi {
        Some(v) => {
            let psi = GlobalParams::new(v.clone());
            if !space.contains_psi(&psi) {
                return Err(Error::Config("initial global parameters out of bounds".into()));
            }
            psi
        }
        None => space.psi_midpoints(),
    };
    let state = match config.mode {
        Mode::Exact => LatentState::new(positions, psi),
        Mode::Noisy => LatentState::with_grid(positions, psi, net, config.grid_m, space)?,
    };

    let mut chain = Chain {
        net,
        link,
        space,
        mode: config.mode,
        random_scan: config.random_scan,
        state,
        prop_std_z: vec![space.prop_std_z; n],
        prop_std_psi: space.prop_std_psi.clone(),
        rng,
        scan: (0..n).collect(),
        win_acc_z: vec![0; n],
        win_prop_z: vec![0; n],
        win_acc_psi: vec![0; k],
        win_prop_psi: vec![0; k],
        acc_z: vec![0; n],
        prop_z: vec![0; n],
        acc_psi: vec![0; k],
        prop_psi: vec![0; k],
    };

    let n_draws = config.n_draws();
    let mut z_draws = Vec::with_capacity(n_draws);
    let mut psi_draws = Vec::with_capacity(n_draws);
    let mut timings = ChainTimings {
        n_sweeps: config.iterations,
        ..Default::default()
    };

    let window = (config.adapt.target_low, config.adapt.target_high);
    let mut phase_start = Instant::now();
    for t in 0..config.iterations {
        let (z_secs, psi_secs) = chain.sweep();
        timings.z_phase_secs += z_secs;
        timings.psi_phase_secs += psi_secs;

        let in_burn_in = t < config.burn_in;
        if in_burn_in {
            if config.adapt.enabled && (t + 1) % config.adapt.interval == 0 {
                chain.adapt(window);
            }
            if t + 1 == config.burn_in {
                timings.burn_in_secs = phase_start.elapsed().as_secs_f64();
                phase_start = Instant::now();
                chain.reset_phase_totals();
            }
        } else if (t - config.burn_in) % config.thin == config.thin - 1 {
            z_draws.push(chain.state.positions.clone());
            psi_draws.push(chain.state.psi.values.clone());
        }
    }
    timings.sampling_secs = phase_start.elapsed().as_secs_f64();
    if config.burn_in > 0 {
        timings.mean_sweep_secs_burn_in = timings.burn_in_secs / config.burn_in as f64;
    }
    let sampling_sweeps = config.iterations - config.burn_in;
    timings.mean_sweep_secs_sampling = timings.sampling_secs / sampling_sweeps as f64;

    let rate = |acc: &[u64], prop: &[u64]| -> Vec<f64> {
        acc.iter()
            .zip(prop)
            .map(|(&a, &p)| if p == 0 { 0.0 } else { a as f64 / p as f64 })
            .collect()
    };
    Ok(ChainSample {
        z_draws,
        psi_draws,
        accept_rate_z: rate(&chain.acc_z, &chain.prop_z),
        accept_rate_psi: rate(&chain.acc_psi, &chain.prop_psi),
        final_prop_std_z: chain.prop_std_z,
        final_prop_std_psi: chain.prop_std_psi,
        timings,
        seed: config.seed,
    })
}

/// Outcome of running the exact and noisy deciders on one shared random
/// stream.
#[derive(Clone, Copy, Debug, Default)]
pub struct CoupledReport {
    pub decisions: usize,
    pub mismatches: usize,
    /// Largest |α_exact − α_noisy| observed.
    pub max_alpha_gap: f64,
}

/// Runs `n_sweeps` sweeps where every proposal and uniform is shared
/// between an exact decider and a noisy decider over the same evolving
/// state. Each step compares the two accept/reject decisions and then
/// applies the exact decision to both states so they stay in lockstep.
#[allow(clippy::too_many_arguments)]
pub fn coupled_sweeps(
    exact_state: &mut LatentState,
    noisy_state: &mut LatentState,
    net: &Network,
    link: LinkFunction,
    space: &ParameterSpace,
    prop_std_z: f64,
    prop_std_psi: &[f64],
    n_sweeps: usize,
    rng: &mut ChaCha8Rng,
) -> CoupledReport {
    let mut report = CoupledReport::default();
    let record = |report: &mut CoupledReport, a_exact: f64, a_noisy: f64, u: f64| {
        report.decisions += 1;
        report.max_alpha_gap = report.max_alpha_gap.max((a_exact - a_noisy).abs());
        let d_exact = u < a_exact;
        let d_noisy = u < a_noisy;
        if d_exact != d_noisy {
            report.mismatches += 1;
        }
        d_exact
    };
    for _ in 0..n_sweeps {
        for i in 0..net.n_nodes() {
            let (z_new, log_q_ratio) =
                propose_z(exact_state.positions[i], space, prop_std_z, rng);
            let a_exact =
                accept_prob_z(exact_state, net, link, space, i, z_new, log_q_ratio, Mode::Exact);
            let a_noisy =
                accept_prob_z(noisy_state, net, link, space, i, z_new, log_q_ratio, Mode::Noisy);
            let u: f64 = rng.random();
            if record(&mut report, a_exact, a_noisy, u) {
                exact_state.set_position(i, z_new, net);
                noisy_state.set_position(i, z_new, net);
            }
        }
        for k in 0..exact_state.psi.values.len() {
            let (value, log_q_ratio) = propose_psi(
                exact_state.psi.values[k],
                space.psi_bounds[k],
                prop_std_psi[k],
                rng,
            );
            let a_exact = accept_prob_psi(
                exact_state,
                net,
                link,
                space,
                k,
                value,
                log_q_ratio,
                Mode::Exact,
            );
            let a_noisy = accept_prob_psi(
                noisy_state,
                net,
                link,
                space,
                k,
                value,
                log_q_ratio,
                Mode::Noisy,
            );
            let u: f64 = rng.random();
            if record(&mut report, a_exact, a_noisy, u) {
                exact_state.psi.values[k] = value;
                noisy_state.psi.values[k] = value;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::check_grid_consistency;
    use crate::stats::{norm_log_pdf, norm_window};
    use crate::synth::{generate, SynthSpec};

    fn study_space() -> ParameterSpace {
        ParameterSpace::study_default()
    }

    fn small_instance(n: usize, seed: u64) -> (crate::graph::Network, Vec<[f64; 2]>) {
        let out = generate(
            &SynthSpec::study_preset(n, seed),
            LinkFunction::TwoParamLogit,
            &study_space(),
        )
        .unwrap();
        (out.network, out.positions)
    }

    #[test]
    fn accept_prob_is_one_for_identity_proposal() {
        let (net, positions) = small_instance(10, 1);
        let state = LatentState::new(positions.clone(), GlobalParams::new(vec![0.5, 1.0]));
        let a = accept_prob_z(
            &state,
            &net,
            LinkFunction::TwoParamLogit,
            &study_space(),
            4,
            positions[4],
            0.0,
            Mode::Exact,
        );
        assert_eq!(a, 1.0);
        let b = accept_prob_psi(
            &state,
            &net,
            LinkFunction::TwoParamLogit,
            &study_space(),
            0,
            0.5,
            0.0,
            Mode::Exact,
        );
        assert_eq!(b, 1.0);
    }

    #[test]
    fn detailed_balance_identity_on_small_instances() {
        // π(z)·q(z→z')·α(z→z') = π(z')·q(z'→z)·α(z'→z) with π the
        // unnormalised full conditional of node i, both sides evaluated
        // directly in log space.
        let link = LinkFunction::TwoParamLogit;
        let space = study_space();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..30 {
            let (net, positions) = small_instance(5, 100 + seed);
            let psi = GlobalParams::new(vec![0.5, 3f64.ln()]);
            let state = LatentState::new(positions.clone(), psi.clone());
            let i = rng.random_range(0..5);
            let v = 0.4;
            let z = positions[i];
            let (z_new, log_q_ratio) = propose_z(z, &space, v, &mut rng);

            let log_conditional = |zi: [f64; 2]| -> f64 {
                let mut total = log_prior_z(zi, &space);
                for j in 0..net.n_nodes() {
                    if j == i {
                        continue;
                    }
                    let d = ((zi[0] - positions[j][0]).powi(2)
                        + (zi[1] - positions[j][1]).powi(2))
                    .sqrt();
                    let (lp, lq) = link.log_probs(d, &psi);
                    total += if net.is_edge(i, j) { lp } else { lq };
                }
                total
            };
            let log_q = |from: [f64; 2], to: [f64; 2]| -> f64 {
                (0..2)
                    .map(|m| {
                        norm_log_pdf((to[m] - from[m]) / v)
                            - v.ln()
                            - norm_window(from[m], v, -1.0, 1.0).ln()
                    })
                    .sum()
            };

            let a_fwd = accept_prob_z(&state, &net, link, &space, i, z_new, log_q_ratio, Mode::Exact);
            let mut moved = state.clone();
            moved.set_position(i, z_new, &net);
            let a_bwd = accept_prob_z(&moved, &net, link, &space, i, z, -log_q_ratio, Mode::Exact);

            let lhs = log_conditional(z) + log_q(z, z_new) + a_fwd.ln();
            let rhs = log_conditional(z_new) + log_q(z_new, z) + a_bwd.ln();
            assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
                "detailed balance broken: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn zero_variance_sweep_leaves_state_unchanged() {
        let (net, positions) = small_instance(12, 3);
        let mut space = study_space();
        space.prop_std_z = 1e-12;
        space.prop_std_psi = vec![1e-12, 1e-12];
        let mut config = SamplerConfig::new(Mode::Exact, 4, 1, 1, 9);
        config.adapt.enabled = false;
        config.init_positions = Some(positions.clone());
        config.init_psi = Some(vec![0.4, 0.2]);
        let sample = run(&net, LinkFunction::TwoParamLogit, &space, &config).unwrap();
        let last = sample.z_draws.last().unwrap();
        for (a, b) in last.iter().zip(&positions) {
            assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        }
        let psi = sample.psi_draws.last().unwrap();
        assert!((psi[0] - 0.4).abs() < 1e-9 && (psi[1] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn grid_matches_rebuild_after_many_noisy_sweeps() {
        // Drive the noisy updates through the public per-step pieces so the
        // incrementally maintained grid itself is the thing checked.
        let (net, positions) = small_instance(40, 4);
        let space = study_space();
        let link = LinkFunction::TwoParamLogit;
        let mut state = LatentState::with_grid(
            positions,
            GlobalParams::new(vec![0.5, 3f64.ln()]),
            &net,
            8,
            &space,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            for i in 0..net.n_nodes() {
                let (z_new, log_q) =
                    propose_z(state.positions[i], &space, 0.3, &mut rng);
                let a = accept_prob_z(&state, &net, link, &space, i, z_new, log_q, Mode::Noisy);
                if rng.random::<f64>() < a {
                    state.set_position(i, z_new, &net);
                }
            }
            for k in 0..2 {
                let (value, log_q) = propose_psi(
                    state.psi.values[k],
                    space.psi_bounds[k],
                    0.1,
                    &mut rng,
                );
                let a =
                    accept_prob_psi(&state, &net, link, &space, k, value, log_q, Mode::Noisy);
                if rng.random::<f64>() < a {
                    state.psi.values[k] = value;
                }
            }
        }
        check_grid_consistency(&state, &net, &space).unwrap();
    }

    #[test]
    fn deterministic_replay_same_seed() {
        let (net, _) = small_instance(25, 5);
        let space = study_space();
        let mut config = SamplerConfig::new(Mode::Noisy, 300, 100, 5, 77);
        config.grid_m = 6;
        let a = run(&net, LinkFunction::TwoParamLogit, &space, &config).unwrap();
        let b = run(&net, LinkFunction::TwoParamLogit, &space, &config).unwrap();
        assert_eq!(a.z_draws, b.z_draws);
        assert_eq!(a.psi_draws, b.psi_draws);
        assert_eq!(a.accept_rate_z, b.accept_rate_z);
    }

    #[test]
    fn draw_count_follows_thinning_formula() {
        let (net, _) = small_instance(8, 6);
        let space = study_space();
        let config = SamplerConfig::new(Mode::Exact, 2000, 1000, 10, 1);
        let sample = run(&net, LinkFunction::TwoParamLogit, &space, &config).unwrap();
        assert_eq!(sample.z_draws.len(), 100);
        assert_eq!(sample.psi_draws.len(), 100);
        assert!(sample
            .accept_rate_z
            .iter()
            .chain(&sample.accept_rate_psi)
            .all(|&r| (0.0..=1.0).contains(&r)));
    }

    #[test]
    fn adaptation_directions() {
        let window = (0.2, 0.5);
        assert_eq!(adapt_proposal_std(35, 100, 0.3, window, 2.0), 0.3);
        assert!(adapt_proposal_std(90, 100, 0.3, window, 2.0) > 0.3);
        assert!(adapt_proposal_std(5, 100, 0.3, window, 2.0) < 0.3);
        // Cap and floor.
        assert_eq!(adapt_proposal_std(90, 100, 1.9, window, 2.0), 2.0);
        assert_eq!(adapt_proposal_std(90, 100, 3.0, window, 2.0), 2.0);
    }

    #[test]
    fn proposal_scales_frozen_after_burn_in() {
        // Extending the sampling phase must not change the final scales:
        // adaptation only ever runs during burn-in.
        let (net, _) = small_instance(15, 7);
        let space = study_space();
        let mut short = SamplerConfig::new(Mode::Exact, 450, 400, 1, 5);
        short.adapt.interval = 50;
        let mut long = short.clone();
        long.iterations = 1400;
        let a = run(&net, LinkFunction::TwoParamLogit, &space, &short).unwrap();
        let b = run(&net, LinkFunction::TwoParamLogit, &space, &long).unwrap();
        assert_eq!(a.final_prop_std_z, b.final_prop_std_z);
        assert_eq!(a.final_prop_std_psi, b.final_prop_std_psi);
        // Adaptation did move the scales away from their initial values.
        assert!(a
            .final_prop_std_z
            .iter()
            .any(|&v| (v - space.prop_std_z).abs() > 1e-12));
    }

    #[test]
    fn twin_chains_agree_on_a_tiny_graph() {
        // Two independent seeds on a 3-node graph: the binned histograms of
        // the intercept draws must be close in total variation.
        let net = crate::graph::Network::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let mut space = study_space();
        space.prop_std_z = 0.8;
        space.prop_std_psi = vec![0.8, 0.8];
        let link = LinkFunction::TwoParamLogit;
        let histogram = |seed: u64| -> Vec<f64> {
            let mut config = SamplerConfig::new(Mode::Exact, 1_000_000, 100_000, 1, seed);
            config.adapt.enabled = false;
            let sample = run(&net, link, &space, &config).unwrap();
            let mut bins = [0.0f64; 20];
            for psi in &sample.psi_draws {
                let idx = (((psi[0] + 10.0) / 20.0 * 20.0) as usize).min(19);
                bins[idx] += 1.0;
            }
            let total: f64 = bins.iter().sum();
            bins.iter().map(|b| b / total).collect()
        };
        let h1 = histogram(101);
        let h2 = histogram(202);
        let tv: f64 = 0.5 * h1.iter().zip(&h2).map(|(a, b)| (a - b).abs()).sum::<f64>();
        assert!(tv < 0.05, "twin-chain total variation {tv}");
    }

    #[test]
    fn fine_grid_coupling_matches_decisions() {
        // Nodes alone at the centres of their boxes: the grid approximation
        // is lossless, so exact and noisy deciders agree. Proposals use the
        // near-zero-variance scale so the configuration is preserved.
        let (net, _) = small_instance(10, 8);
        let space = study_space();
        let link = LinkFunction::TwoParamLogit;
        let m = 4;
        let b = 2.0 / m as f64;
        let positions: Vec<[f64; 2]> = (0..10)
            .map(|i| {
                let ix = i / m;
                let iy = i % m;
                [-1.0 + b * (ix as f64 + 0.5), -1.0 + b * (iy as f64 + 0.5)]
            })
            .collect();
        let psi = GlobalParams::new(vec![0.5, 3f64.ln()]);
        let mut exact_state = LatentState::new(positions.clone(), psi.clone());
        let mut noisy_state =
            LatentState::with_grid(positions, psi, &net, m, &space).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let report = coupled_sweeps(
            &mut exact_state,
            &mut noisy_state,
            &net,
            link,
            &space,
            1e-12,
            &[1e-12, 1e-12],
            100,
            &mut rng,
        );
        assert_eq!(report.mismatches, 0, "gap {}", report.max_alpha_gap);
        assert!(report.max_alpha_gap < 1e-9);
    }

    #[test]
    fn chain_histogram_matches_brute_force_conditional() {
        // One free node on a 3-node graph, others pinned: the empirical
        // distribution over a coarse 4×4 binning must match the
        // quadrature-normalised full conditional.
        let net = crate::graph::Network::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let link = LinkFunction::TwoParamLogit;
        let space = study_space();
        let psi = GlobalParams::new(vec![0.5, 3f64.ln()]);
        let fixed = [[0.4, 0.3], [-0.5, 0.1]];
        let positions = vec![[0.0, 0.0], fixed[0], fixed[1]];
        let mut state = LatentState::new(positions, psi.clone());

        let log_conditional = |z: [f64; 2]| -> f64 {
            let mut total = log_prior_z(z, &space);
            for (j, zf) in fixed.iter().enumerate() {
                let d = ((z[0] - zf[0]).powi(2) + (z[1] - zf[1]).powi(2)).sqrt();
                let (lp, lq) = link.log_probs(d, &psi);
                total += if net.is_edge(0, j + 1) { lp } else { lq };
            }
            total
        };

        // Quadrature masses over 4×4 bins (40×40 midpoint points per bin).
        let bins = 4;
        let sub = 40;
        let mut mass = vec![0.0f64; bins * bins];
        let h = 2.0 / (bins * sub) as f64;
        for gx in 0..bins * sub {
            for gy in 0..bins * sub {
                let x = -1.0 + h * (gx as f64 + 0.5);
                let y = -1.0 + h * (gy as f64 + 0.5);
                let w = log_conditional([x, y]).exp();
                mass[(gx / sub) * bins + gy / sub] += w;
            }
        }
        let total: f64 = mass.iter().sum();
        for m in &mut mass {
            *m /= total;
        }

        // Single-site chain over node 0.
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let v = 0.6;
        let mut hist = vec![0.0f64; bins * bins];
        let updates = 400_000;
        let burn = 20_000;
        for t in 0..updates {
            let (z_new, log_q_ratio) = propose_z(state.positions[0], &space, v, &mut rng);
            let a = accept_prob_z(&state, &net, link, &space, 0, z_new, log_q_ratio, Mode::Exact);
            let u: f64 = rng.random();
            if u < a {
                state.set_position(0, z_new, &net);
            }
            if t >= burn {
                let z = state.positions[0];
                let bx = (((z[0] + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1);
                let by = (((z[1] + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1);
                hist[bx * bins + by] += 1.0;
            }
        }
        let count: f64 = hist.iter().sum();
        for hh in &mut hist {
            *hh /= count;
        }
        let tv: f64 = 0.5 * mass.iter().zip(&hist).map(|(a, b)| (a - b).abs()).sum::<f64>();
        assert!(tv < 0.05, "total variation {tv}");
    }

    #[test]
    fn noisy_chain_histogram_matches_its_own_target() {
        // Single free node in noisy mode: the per-box edge and non-edge
        // exponents count only the other (fixed) nodes, so the update's
        // target is a closed-form density that quadrature can normalise.
        // The chain histogram must match it, grid maintenance included.
        let net = crate::graph::Network::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let link = LinkFunction::TwoParamLogit;
        let space = study_space();
        let psi = GlobalParams::new(vec![0.5, 3f64.ln()]);
        let fixed = [[0.35, 0.3], [-0.55, 0.15]];
        let mut state = LatentState::with_grid(
            vec![[0.0, 0.0], fixed[0], fixed[1]],
            psi.clone(),
            &net,
            4,
            &space,
        )
        .unwrap();
        let grid_m = 4usize;
        let side = 2.0 / grid_m as f64;
        let box_of = |z: [f64; 2]| -> (usize, usize) {
            let idx = |x: f64| ((((x + 1.0) / side).floor()).max(0.0) as usize).min(grid_m - 1);
            (idx(z[0]), idx(z[1]))
        };
        let centre = |b: (usize, usize)| -> [f64; 2] {
            [
                -1.0 + side * (b.0 as f64 + 0.5),
                -1.0 + side * (b.1 as f64 + 0.5),
            ]
        };
        let log_target = |z: [f64; 2]| -> f64 {
            let mut total = log_prior_z(z, &space);
            for (j, zf) in fixed.iter().enumerate() {
                let c = centre(box_of(*zf));
                let d = ((z[0] - c[0]).powi(2) + (z[1] - c[1]).powi(2)).sqrt();
                let (lp, lq) = link.log_probs(d, &psi);
                total += if net.is_edge(0, j + 1) { lp } else { lq };
            }
            total
        };

        let bins = 4;
        let sub = 40;
        let mut mass = vec![0.0f64; bins * bins];
        let h = 2.0 / (bins * sub) as f64;
        for gx in 0..bins * sub {
            for gy in 0..bins * sub {
                let x = -1.0 + h * (gx as f64 + 0.5);
                let y = -1.0 + h * (gy as f64 + 0.5);
                mass[(gx / sub) * bins + gy / sub] += log_target([x, y]).exp();
            }
        }
        let total: f64 = mass.iter().sum();
        for m in &mut mass {
            *m /= total;
        }

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let v = 0.6;
        let mut hist = vec![0.0f64; bins * bins];
        let updates = 300_000;
        let burn = 20_000;
        for t in 0..updates {
            let (z_new, log_q_ratio) = propose_z(state.positions[0], &space, v, &mut rng);
            let a = accept_prob_z(&state, &net, link, &space, 0, z_new, log_q_ratio, Mode::Noisy);
            let u: f64 = rng.random();
            if u < a {
                state.set_position(0, z_new, &net);
            }
            if t >= burn {
                let z = state.positions[0];
                let bx = (((z[0] + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1);
                let by = (((z[1] + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1);
                hist[bx * bins + by] += 1.0;
            }
        }
        let count: f64 = hist.iter().sum();
        for hh in &mut hist {
            *hh /= count;
        }
        let tv: f64 = 0.5 * mass.iter().zip(&hist).map(|(a, b)| (a - b).abs()).sum::<f64>();
        assert!(tv < 0.05, "noisy-chain total variation {tv}");
        crate::likelihood::check_grid_consistency(&state, &net, &space).unwrap();
    }

    #[test]
    fn acceptance_gap_shrinks_with_finer_grids() {
        // Aggregate |α_exact − α_noisy| over random proposals, for clouds
        // kept away from box boundaries so refinement monotonically helps.
        let link = LinkFunction::TwoParamLogit;
        let space = study_space();
        let psi = GlobalParams::new(vec![0.5, 3f64.ln()]);
        let mut gaps = Vec::new();
        for m in [4usize, 8, 16] {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut total_gap = 0.0;
            for seed in 0..10 {
                let (net, positions) = small_instance(30, 500 + seed);
                let exact_state = LatentState::new(positions.clone(), psi.clone());
                let noisy_state = LatentState::with_grid(
                    positions.clone(),
                    psi.clone(),
                    &net,
                    m,
                    &space,
                )
                .unwrap();
                for _ in 0..50 {
                    let i = rng.random_range(0..30);
                    let (z_new, log_q) =
                        propose_z(positions[i], &space, 0.3, &mut rng);
                    let ae = accept_prob_z(
                        &exact_state, &net, link, &space, i, z_new, log_q, Mode::Exact,
                    );
                    let an = accept_prob_z(
                        &noisy_state, &net, link, &space, i, z_new, log_q, Mode::Noisy,
                    );
                    total_gap += (ae - an).abs();
                }
            }
            gaps.push(total_gap);
        }
        assert!(
            gaps[2] < gaps[1] && gaps[1] < gaps[0],
            "acceptance gaps not shrinking: {gaps:?}"
        );
    }

    #[test]
    fn config_validation() {
        let mut config = SamplerConfig::new(Mode::Noisy, 100, 100, 1, 0);
        assert!(config.validate().is_err()); // burn_in == iterations
        config.burn_in = 50;
        config.thin = 0;
        assert!(config.validate().is_err());
        config.thin = 1;
        config.grid_m = 0;
        assert!(config.validate().is_err());
        config.grid_m = 4;
        assert!(config.validate().is_ok());
        config.adapt.target_low = 0.9;
        assert!(config.validate().is_err());
    }
}
