//! `fit`: run a sampler on an edge list and write draws, summaries and
//! aligned posterior-mean positions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use noisy_lpm::align::{aligned_posterior_mean, map_draw, ReferenceConfig, ReferenceSource};
use noisy_lpm::graph::Network;
use noisy_lpm::sampler::{run as run_chain, ChainSample, Mode};
use noisy_lpm::{Error, Result};

use crate::config::RunConfig;
use crate::output::{ensure_dir, parse_f64, read_csv_rows, write_csv, write_json, Meta};

#[derive(Args, Clone, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    common: crate::CommonArgs,
    /// Edge-list file to fit.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Sampler mode: exact | noisy.
    #[arg(long)]
    mode: Option<String>,
    /// Grid intervals per axis (noisy mode).
    #[arg(long)]
    grid_m: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Enable or disable burn-in proposal adaptation: on | off.
    #[arg(long)]
    adapt: Option<String>,
    /// Shuffle the node update order each sweep.
    #[arg(long)]
    random_scan: bool,
    /// True positions CSV (node,x,y) used as the alignment reference;
    /// defaults to the maximum-a-posteriori draw.
    #[arg(long)]
    ref_positions: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "fit-out")]
    out_dir: PathBuf,
}

pub fn run(args: FitArgs) -> Result<()> {
    crate::init_threads(args.common.threads);
    let mut config = RunConfig::load(args.common.config.as_deref())?;
    if let Some(mode) = &args.mode {
        config.sampler.mode = match mode.as_str() {
            "exact" => Mode::Exact,
            "noisy" => Mode::Noisy,
            other => return Err(Error::Config(format!("unknown mode {other:?}"))),
        };
    }
    if let Some(m) = args.grid_m {
        config.grid.m = m;
    }
    if let Some(v) = args.iterations {
        config.sampler.iterations = v;
    }
    if let Some(v) = args.burn_in {
        config.sampler.burn_in = v;
    }
    if let Some(v) = args.thin {
        config.sampler.thin = v;
    }
    if let Some(v) = args.common.seed {
        config.sampler.seed = v;
    }
    if let Some(v) = &args.adapt {
        config.sampler.adapt.enabled = match v.as_str() {
            "on" => true,
            "off" => false,
            other => return Err(Error::Config(format!("--adapt takes on|off, got {other:?}"))),
        };
    }
    if args.random_scan {
        config.sampler.random_scan = true;
    }
    if let Some(edges) = &args.edges {
        config.io.edges = Some(edges.clone());
    }
    if let Some(path) = &args.ref_positions {
        config.io.true_positions = Some(path.clone());
    }

    // Fail fast on configuration problems before touching any data.
    let sampler_config = config.sampler_config();
    sampler_config.validate()?;
    config.model.space().validate(config.model.link)?;

    let edges_path = config
        .io
        .edges
        .clone()
        .ok_or_else(|| Error::Config("no edge list given (--edges or [io].edges)".into()))?;
    let loaded = Network::load_edge_list(&edges_path)?;
    let net = loaded.network;

    let out_dir = ensure_dir(&args.out_dir)?;
    let hash = config.hash();
    let meta = Meta::new(config.sampler.seed, &hash);
    let space = config.model.space();
    let link = config.model.link;

    // Id-remapping sidecar, so outputs trace back to the file's node ids.
    let idmap: BTreeMap<u64, usize> = loaded
        .original_ids
        .iter()
        .enumerate()
        .map(|(dense, &orig)| (orig, dense))
        .collect();
    write_json(&out_dir.join("idmap.json"), &meta, &idmap)?;

    let sample = run_chain(&net, link, &space, &sampler_config)?;

    write_draws(&out_dir, &meta, &sample)?;

    // Alignment reference: supplied true positions, or the MAP draw.
    let (reference, map_index) = match &config.io.true_positions {
        Some(path) => {
            // The reference file is keyed by the original ids; translate through
            // the remap table so isolated nodes absent from the edge list
            // are simply skipped.
            let points = read_positions_mapped(path, &loaded.original_ids)?;
            (
                ReferenceConfig {
                    points,
                    source: ReferenceSource::TruePositions,
                },
                None,
            )
        }
        None => {
            let (idx, reference) = map_draw(&sample, &net, link, &space);
            (reference, Some(idx))
        }
    };
    let mean_positions = aligned_posterior_mean(&sample, &reference);
    write_csv(
        &out_dir.join("positions_mean.csv"),
        &meta,
        "node,x,y",
        mean_positions
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{i},{},{}", p[0], p[1])),
    )?;

    let summary = Summary::build(&config, &net, &sample, map_index);
    write_json(&out_dir.join("summary.json"), &meta, &summary)?;
    println!(
        "fit complete: {} draws in {}",
        sample.z_draws.len(),
        out_dir.display()
    );
    Ok(())
}

fn write_draws(out_dir: &Path, meta: &Meta, sample: &ChainSample) -> Result<()> {
    // Long format: one row per stored draw per node.
    write_csv(
        &out_dir.join("z_draws.csv"),
        meta,
        "draw,node,x,y",
        sample.z_draws.iter().enumerate().flat_map(|(d, z)| {
            z.iter()
                .enumerate()
                .map(move |(i, p)| format!("{d},{i},{},{}", p[0], p[1]))
        }),
    )?;
    let k = sample.psi_draws.first().map_or(0, Vec::len);
    let header = std::iter::once("draw".to_string())
        .chain((0..k).map(|j| format!("psi_{j}")))
        .collect::<Vec<_>>()
        .join(",");
    write_csv(
        &out_dir.join("psi_draws.csv"),
        meta,
        &header,
        sample.psi_draws.iter().enumerate().map(|(d, psi)| {
            let mut row = d.to_string();
            for v in psi {
                row.push(',');
                row.push_str(&v.to_string());
            }
            row
        }),
    )
}

/// Reads a node,x,y CSV keyed by original file ids and returns positions
/// in dense-id order, ignoring rows for nodes the graph does not contain.
pub fn read_positions_mapped(path: &Path, original_ids: &[u64]) -> Result<Vec<[f64; 2]>> {
    let rows = read_csv_rows(path)?;
    let mut by_id = std::collections::HashMap::with_capacity(rows.len());
    for row in &rows {
        if row.len() < 3 {
            return Err(Error::Data(format!("{}: short row", path.display())));
        }
        let node: u64 = row[0]
            .parse()
            .map_err(|_| Error::Data(format!("{}: bad node id {:?}", path.display(), row[0])))?;
        by_id.insert(node, [parse_f64(&row[1], path)?, parse_f64(&row[2], path)?]);
    }
    original_ids
        .iter()
        .map(|orig| {
            by_id.get(orig).copied().ok_or_else(|| {
                Error::Data(format!(
                    "{}: no position row for node {orig}",
                    path.display()
                ))
            })
        })
        .collect()
}

/// Reads a node,x,y CSV into a dense position vector.
pub fn read_positions(path: &Path, n_nodes: usize) -> Result<Vec<[f64; 2]>> {
    let rows = read_csv_rows(path)?;
    if rows.len() != n_nodes {
        return Err(Error::Data(format!(
            "{}: {} position rows for {} nodes",
            path.display(),
            rows.len(),
            n_nodes
        )));
    }
    let mut points = vec![[0.0f64; 2]; n_nodes];
    for row in &rows {
        if row.len() < 3 {
            return Err(Error::Data(format!("{}: short row", path.display())));
        }
        let node: usize = row[0]
            .parse()
            .map_err(|_| Error::Data(format!("{}: bad node id {:?}", path.display(), row[0])))?;
        if node >= n_nodes {
            return Err(Error::Data(format!(
                "{}: node id {node} out of range",
                path.display()
            )));
        }
        points[node] = [parse_f64(&row[1], path)?, parse_f64(&row[2], path)?];
    }
    Ok(points)
}

#[derive(serde::Serialize)]
struct Summary {
    mode: Mode,
    n_nodes: usize,
    n_edges: usize,
    iterations: usize,
    burn_in: usize,
    thin: usize,
    n_draws: usize,
    grid_m: Option<usize>,
    posterior_mean_psi: Vec<f64>,
    posterior_sd_psi: Vec<f64>,
    accept_rate_psi: Vec<f64>,
    accept_rate_z_mean: f64,
    accept_rate_z_min: f64,
    accept_rate_z_max: f64,
    final_prop_std_psi: Vec<f64>,
    final_prop_std_z_mean: f64,
    timings: noisy_lpm::sampler::ChainTimings,
    map_draw_index: Option<usize>,
    reference: String,
    model: crate::config::ModelConfig,
}

impl Summary {
    fn build(
        config: &RunConfig,
        net: &Network,
        sample: &ChainSample,
        map_index: Option<usize>,
    ) -> Self {
        let k = sample.psi_draws.first().map_or(0, Vec::len);
        let n_draws = sample.psi_draws.len();
        let mut mean = vec![0.0; k];
        for draw in &sample.psi_draws {
            for (m, v) in mean.iter_mut().zip(draw) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n_draws as f64;
        }
        let mut sd = vec![0.0; k];
        for draw in &sample.psi_draws {
            for j in 0..k {
                sd[j] += (draw[j] - mean[j]).powi(2);
            }
        }
        for s in &mut sd {
            *s = (*s / (n_draws.max(2) as f64 - 1.0)).sqrt();
        }
        let z_rates = &sample.accept_rate_z;
        let z_mean = z_rates.iter().sum::<f64>() / z_rates.len() as f64;
        Self {
            mode: config.sampler.mode,
            n_nodes: net.n_nodes(),
            n_edges: net.n_edges(),
            iterations: config.sampler.iterations,
            burn_in: config.sampler.burn_in,
            thin: config.sampler.thin,
            n_draws,
            grid_m: match config.sampler.mode {
                Mode::Noisy => Some(config.grid.m),
                Mode::Exact => None,
            },
            posterior_mean_psi: mean,
            posterior_sd_psi: sd,
            accept_rate_psi: sample.accept_rate_psi.clone(),
            accept_rate_z_mean: z_mean,
            accept_rate_z_min: z_rates.iter().copied().fold(f64::INFINITY, f64::min),
            accept_rate_z_max: z_rates.iter().copied().fold(0.0, f64::max),
            final_prop_std_psi: sample.final_prop_std_psi.clone(),
            final_prop_std_z_mean: sample.final_prop_std_z.iter().sum::<f64>()
                / sample.final_prop_std_z.len() as f64,
            timings: sample.timings,
            map_draw_index: map_index,
            reference: match map_index {
                Some(_) => "map-draw".to_string(),
                None => "true-positions".to_string(),
            },
            model: config.model.clone(),
        }
    }
}
