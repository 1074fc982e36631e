//! `simulate`: write synthetic networks, their true positions and
//! parameters.

use std::path::{Path, PathBuf};

use clap::Args;
use noisy_lpm::synth::{generate, PositionLaw, SynthOutput};
use noisy_lpm::Result;

use crate::config::RunConfig;
use crate::output::{ensure_dir, write_csv, write_json, Meta};

#[derive(Args, Clone, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    common: crate::CommonArgs,
    /// Number of nodes.
    #[arg(long)]
    n: Option<usize>,
    /// Intercept of the link.
    #[arg(long)]
    beta: Option<f64>,
    /// Log-scale of the link.
    #[arg(long)]
    theta: Option<f64>,
    /// Position law: uniform-square | truncated-gaussian.
    #[arg(long)]
    law: Option<String>,
    /// Pin node 0 at the origin.
    #[arg(long)]
    pin_origin: bool,
    /// Generate this many networks (seeds seed, seed+1, ...).
    #[arg(long)]
    replicates: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "sim-out")]
    out_dir: PathBuf,
}

pub fn run(args: SimulateArgs) -> Result<()> {
    crate::init_threads(args.common.threads);
    let mut config = RunConfig::load(args.common.config.as_deref())?;
    if let Some(n) = args.n {
        config.study.n = n;
    }
    if let Some(beta) = args.beta {
        config.study.beta = beta;
    }
    if let Some(theta) = args.theta {
        config.study.theta = theta;
    }
    if let Some(law) = &args.law {
        config.study.law = match law.as_str() {
            "uniform-square" => PositionLaw::UniformSquare,
            "truncated-gaussian" => PositionLaw::TruncatedGaussian,
            other => {
                return Err(noisy_lpm::Error::Config(format!(
                    "unknown position law {other:?}"
                )))
            }
        };
    }
    if args.pin_origin {
        config.study.pin_first_node_at_origin = true;
    }
    if let Some(seed) = args.common.seed {
        config.sampler.seed = seed;
    }
    if let Some(r) = args.replicates {
        config.study.replicates = r;
    }

    let out_dir = ensure_dir(&args.out_dir)?;
    let hash = config.hash();
    let space = config.model.space();
    let link = config.model.link;
    let replicates = config.study.replicates.max(1);

    let mut densities = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let mut spec = config.synth_spec();
        spec.seed = config.sampler.seed + r as u64;
        let out = generate(&spec, link, &space)?;
        densities.push(out.network.density());
        let dir = if replicates == 1 {
            out_dir.clone()
        } else {
            ensure_dir(&out_dir.join(format!("rep_{r:03}")))?
        };
        let meta = Meta::new(spec.seed, &hash);
        write_outputs(&dir, &meta, &out)?;
    }

    if replicates > 1 {
        let meta = Meta::new(config.sampler.seed, &hash);
        write_csv(
            &out_dir.join("densities.csv"),
            &meta,
            "replicate,density",
            densities
                .iter()
                .enumerate()
                .map(|(r, d)| format!("{r},{d}")),
        )?;
    }
    let mean = densities.iter().sum::<f64>() / densities.len() as f64;
    println!(
        "wrote {replicates} network(s) to {}; mean density {mean:.4}",
        out_dir.display()
    );
    Ok(())
}

fn write_outputs(dir: &Path, meta: &Meta, out: &SynthOutput) -> Result<()> {
    let edges_path = dir.join("edges.txt");
    let file = std::fs::File::create(&edges_path).map_err(|source| noisy_lpm::Error::Io {
        path: edges_path.clone(),
        source,
    })?;
    let mut buf = std::io::BufWriter::new(file);
    out.network
        .write_edge_list(&mut buf)
        .map_err(|source| noisy_lpm::Error::Io {
            path: edges_path.clone(),
            source,
        })?;

    write_csv(
        &dir.join("true_positions.csv"),
        meta,
        "node,x,y",
        out.positions
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{i},{},{}", p[0], p[1])),
    )?;

    #[derive(serde::Serialize)]
    struct Params<'a> {
        psi: &'a [f64],
        n_nodes: usize,
        n_edges: usize,
        density: f64,
    }
    write_json(
        &dir.join("params.json"),
        meta,
        &Params {
            psi: &out.params.values,
            n_nodes: out.network.n_nodes(),
            n_edges: out.network.n_edges(),
            density: out.network.density(),
        },
    )
}
