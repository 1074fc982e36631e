//! `bounds`: compute the approximation-error constants and bounds, with an
//! optional empirical certification pass.

use std::path::PathBuf;

use clap::Args;
use noisy_lpm::bounds::{compute_report, sandwich_certify, BoundReport, ErgodicityParams};
use noisy_lpm::{Error, Result};

use crate::config::RunConfig;
use crate::output::{write_json, Meta};

#[derive(Args, Clone, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    common: crate::CommonArgs,
    /// Network size the bounds are evaluated for.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Grid intervals per axis; comma-separated for a sweep (overrides --b).
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    /// Box side length; 0 gives the zero-error limit.
    #[arg(long)]
    b: Option<f64>,
    /// Ergodicity prefactor of the exact chain.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Ergodicity geometric rate of the exact chain.
    #[arg(long, default_value_t = 0.99)]
    tau: f64,
    /// Skip the total-variation bound (no ergodicity hypothesis).
    #[arg(long)]
    no_ergodicity: bool,
    /// Run the ratio-sandwich certification sweep and report it.
    #[arg(long)]
    certify: bool,
    /// Output JSON path (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(serde::Serialize)]
struct BoundsDocument {
    reports: Vec<BoundReport>,
    certification: Option<noisy_lpm::bounds::SandwichReport>,
}

pub fn run(args: BoundsArgs) -> Result<()> {
    crate::init_threads(args.common.threads);
    let config = RunConfig::load(args.common.config.as_deref())?;
    let space = config.model.space();
    let link = config.model.link;
    let erg = if args.no_ergodicity {
        None
    } else {
        let erg = ErgodicityParams {
            c: args.c,
            tau: args.tau,
        };
        erg.validate()?;
        Some(erg)
    };

    let sides: Vec<f64> = if !args.m.is_empty() {
        args.m
            .iter()
            .map(|&m| {
                if m == 0 {
                    Err(Error::Config("grid m must be positive".into()))
                } else {
                    Ok(2.0 * space.half_side / m as f64)
                }
            })
            .collect::<Result<_>>()?
    } else {
        vec![args.b.unwrap_or(2.0 * space.half_side / 16.0)]
    };

    let reports = sides
        .iter()
        .map(|&b| compute_report(link, &space, args.n, b, erg))
        .collect::<Result<Vec<_>>>()?;

    let certification = args
        .certify
        .then(|| sandwich_certify(link, &space, 100_000, config.sampler.seed));

    let document = BoundsDocument {
        reports,
        certification,
    };
    let meta = Meta::new(config.sampler.seed, &config.hash());
    match &args.out {
        Some(path) => write_json(path, &meta, &document)?,
        None => {
            let text = serde_json::to_string_pretty(&document)
                .map_err(|e| Error::Internal(format!("serialising report: {e}")))?;
            println!("{text}");
        }
    }
    Ok(())
}
