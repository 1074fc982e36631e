//! `bench`: per-sweep timing table over (mode, N, M) combinations on
//! freshly simulated study networks.

use std::path::PathBuf;

use clap::Args;
use noisy_lpm::sampler::{run as run_chain, AdaptSettings, Mode, SamplerConfig};
use noisy_lpm::synth::generate;
use noisy_lpm::{Error, Result};

use crate::config::RunConfig;
use crate::output::{write_csv, Meta};

#[derive(Args, Clone, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    common: crate::CommonArgs,
    /// Network sizes to time.
    #[arg(long, value_delimiter = ',', default_value = "200,400,600")]
    n_list: Vec<usize>,
    /// Grid sizes for the noisy sampler.
    #[arg(long, value_delimiter = ',', default_value = "8,12,16")]
    m_list: Vec<usize>,
    /// Samplers to time.
    #[arg(long, value_delimiter = ',', default_value = "exact,noisy")]
    modes: Vec<String>,
    /// Sweeps per timed run.
    #[arg(long, default_value_t = 200)]
    sweeps: usize,
    /// Output CSV.
    #[arg(long, default_value = "bench.csv")]
    out: PathBuf,
}

pub struct BenchRow {
    pub mode: Mode,
    pub n: usize,
    pub m: Option<usize>,
    pub sweeps: usize,
    pub total_secs: f64,
    pub secs_per_sweep: f64,
    pub z_phase_secs: f64,
    pub psi_phase_secs: f64,
    /// Mean microseconds per individual position update.
    pub per_node_z_update_usecs: f64,
}

/// Times `sweeps` sweeps of one sampler on one simulated network.
pub fn time_run(
    config: &RunConfig,
    mode: Mode,
    n: usize,
    m: usize,
    sweeps: usize,
) -> Result<BenchRow> {
    let space = config.model.space();
    let link = config.model.link;
    let mut spec = config.synth_spec();
    spec.n_nodes = n;
    let data = generate(&spec, link, &space)?;

    let mut sampler_config = SamplerConfig::new(mode, sweeps, 0, sweeps, config.sampler.seed);
    sampler_config.grid_m = m;
    sampler_config.adapt = AdaptSettings {
        enabled: false,
        ..AdaptSettings::default()
    };
    let sample = run_chain(&data.network, link, &space, &sampler_config)?;
    let t = sample.timings;
    let total = t.burn_in_secs + t.sampling_secs;
    Ok(BenchRow {
        mode,
        n,
        m: match mode {
            Mode::Noisy => Some(m),
            Mode::Exact => None,
        },
        sweeps,
        total_secs: total,
        secs_per_sweep: total / sweeps as f64,
        z_phase_secs: t.z_phase_secs,
        psi_phase_secs: t.psi_phase_secs,
        per_node_z_update_usecs: t.z_phase_secs / (sweeps as f64 * n as f64) * 1e6,
    })
}

pub fn run(args: BenchArgs) -> Result<()> {
    crate::init_threads(args.common.threads);
    let mut config = RunConfig::load(args.common.config.as_deref())?;
    if let Some(seed) = args.common.seed {
        config.sampler.seed = seed;
    }
    let modes = args
        .modes
        .iter()
        .map(|m| match m.as_str() {
            "exact" => Ok(Mode::Exact),
            "noisy" => Ok(Mode::Noisy),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for &n in &args.n_list {
        for &mode in &modes {
            let m_values: &[usize] = match mode {
                Mode::Exact => &[0],
                Mode::Noisy => &args.m_list,
            };
            for &m in m_values {
                let row = time_run(&config, mode, n, m.max(1), args.sweeps)?;
                eprintln!(
                    "{:?} n={} m={:?}: {:.3} s/sweep",
                    row.mode, row.n, row.m, row.secs_per_sweep
                );
                rows.push(row);
            }
        }
    }

    let meta = Meta::new(config.sampler.seed, &config.hash());
    write_csv(
        &args.out,
        &meta,
        "mode,n,m,sweeps,total_secs,secs_per_sweep,z_phase_secs,psi_phase_secs,per_node_z_update_usecs",
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                match r.mode {
                    Mode::Exact => "exact",
                    Mode::Noisy => "noisy",
                },
                r.n,
                r.m.map_or(String::new(), |m| m.to_string()),
                r.sweeps,
                r.total_secs,
                r.secs_per_sweep,
                r.z_phase_secs,
                r.psi_phase_secs,
                r.per_node_z_update_usecs
            )
        }),
    )?;
    println!("wrote {}", args.out.display());
    Ok(())
}
