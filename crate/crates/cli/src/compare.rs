//! `compare`: exact-vs-noisy likelihood scatter data and chain-vs-chain
//! posterior comparisons, emitted as tidy CSV for external plotting.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use noisy_lpm::align::{procrustes_align, rmse, ReferenceConfig, ReferenceSource};
use noisy_lpm::likelihood::{exact_log_lik, noisy_log_lik, LatentState};
use noisy_lpm::model::{GlobalParams, LinkFunction};
use noisy_lpm::synth::generate;
use noisy_lpm::{Error, Result};

use crate::config::RunConfig;
use crate::fit::read_positions;
use crate::output::{ensure_dir, parse_f64, read_csv_rows, write_csv, Meta};

#[derive(Subcommand, Clone, Debug)]
pub enum CompareCmd {
    /// Exact vs noisy log-likelihood at the true parameters over fresh
    /// simulated networks, one row per (replicate, grid).
    Study1(Study1Args),
    /// Posterior comparisons between two fit output directories.
    Chains(ChainsArgs),
}

#[derive(Args, Clone, Debug)]
pub struct Study1Args {
    #[command(flatten)]
    common: crate::CommonArgs,
    /// Nodes per simulated network.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Number of simulated networks.
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    /// Grid sizes to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "8,12,16")]
    m_list: Vec<usize>,
    /// Output CSV.
    #[arg(long, default_value = "study1.csv")]
    out: PathBuf,
}

#[derive(Args, Clone, Debug)]
pub struct ChainsArgs {
    #[command(flatten)]
    common: crate::CommonArgs,
    /// First fit output directory (e.g. the exact run).
    #[arg(long)]
    fit_a: PathBuf,
    /// Second fit output directory (e.g. the noisy run).
    #[arg(long)]
    fit_b: PathBuf,
    /// Optional true positions CSV for ground-truth error columns.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output directory for the comparison tables.
    #[arg(long, default_value = "compare-out")]
    out_dir: PathBuf,
}

pub fn run(cmd: CompareCmd) -> Result<()> {
    match cmd {
        CompareCmd::Study1(args) => study1(args),
        CompareCmd::Chains(args) => chains(args),
    }
}

fn study1(args: Study1Args) -> Result<()> {
    crate::init_threads(args.common.threads);
    let mut config = RunConfig::load(args.common.config.as_deref())?;
    if let Some(seed) = args.common.seed {
        config.sampler.seed = seed;
    }
    config.study.n = args.n;
    let space = config.model.space();
    let link = config.model.link;

    let mut rows = Vec::new();
    for r in 0..args.replicates {
        let mut spec = config.synth_spec();
        spec.seed = config.sampler.seed + r as u64;
        let out = generate(&spec, link, &space)?;
        let exact = exact_log_lik(
            &LatentState::new(out.positions.clone(), out.params.clone()),
            &out.network,
            link,
        );
        for &m in &args.m_list {
            let state = LatentState::with_grid(
                out.positions.clone(),
                out.params.clone(),
                &out.network,
                m,
                &space,
            )?;
            let noisy = noisy_log_lik(&state, &out.network, link);
            rows.push(format!("{r},{},{m},{exact},{noisy}", args.n));
        }
    }
    let meta = Meta::new(config.sampler.seed, &config.hash());
    write_csv(
        &args.out,
        &meta,
        "replicate,n,m,exact_loglik,noisy_loglik",
        rows,
    )?;
    println!("wrote {}", args.out.display());
    Ok(())
}

/// What `chains` needs back from a fit directory.
struct FitOutput {
    mean_positions: Vec<[f64; 2]>,
    psi_draws: Vec<Vec<f64>>,
    link: LinkFunction,
}

fn load_fit(dir: &Path) -> Result<FitOutput> {
    let summary_path = dir.join("summary.json");
    let text = std::fs::read_to_string(&summary_path).map_err(|source| Error::Io {
        path: summary_path.clone(),
        source,
    })?;
    let summary: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("{}: {e}", summary_path.display())))?;
    let n_nodes = summary["data"]["n_nodes"]
        .as_u64()
        .ok_or_else(|| Error::Data(format!("{}: missing n_nodes", summary_path.display())))?
        as usize;
    let link = match summary["data"]["model"]["link"].as_str() {
        Some("hoff-logit") => LinkFunction::HoffLogit,
        Some("two-param-logit") => LinkFunction::TwoParamLogit,
        other => {
            return Err(Error::Data(format!(
                "{}: unknown link {other:?}",
                summary_path.display()
            )))
        }
    };

    let mean_positions = read_positions(&dir.join("positions_mean.csv"), n_nodes)?;

    let psi_path = dir.join("psi_draws.csv");
    let psi_draws = read_csv_rows(&psi_path)?
        .iter()
        .map(|row| {
            row[1..]
                .iter()
                .map(|f| parse_f64(f, &psi_path))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FitOutput {
        mean_positions,
        psi_draws,
        link,
    })
}

/// Dense-to-original id table from a fit directory, if the sidecar parses.
fn read_idmap(dir: &Path) -> Option<Vec<u64>> {
    let text = std::fs::read_to_string(dir.join("idmap.json")).ok()?;
    let doc: serde_json::Value = serde_json::from_str(&text).ok()?;
    let map = doc["data"].as_object()?;
    let mut pairs: Vec<(u64, u64)> = map
        .iter()
        .map(|(orig, dense)| Some((dense.as_u64()?, orig.parse().ok()?)))
        .collect::<Option<_>>()?;
    pairs.sort_unstable();
    Some(pairs.into_iter().map(|(_, orig)| orig).collect())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

fn chains(args: ChainsArgs) -> Result<()> {
    crate::init_threads(args.common.threads);
    let config = RunConfig::load(args.common.config.as_deref())?;
    let a = load_fit(&args.fit_a)?;
    let b = load_fit(&args.fit_b)?;
    if a.mean_positions.len() != b.mean_positions.len() {
        return Err(Error::Data("fits have different node counts".into()));
    }
    let out_dir = ensure_dir(&args.out_dir)?;
    let meta = Meta::new(config.sampler.seed, &config.hash());

    // Positions: align B onto A, plus both onto the truth when given.
    let ref_a = ReferenceConfig {
        points: a.mean_positions.clone(),
        source: ReferenceSource::MapDraw,
    };
    let b_on_a = procrustes_align(&b.mean_positions, &ref_a);
    let mut rows = vec![format!("a_vs_b,{}", rmse(&b_on_a, &a.mean_positions))];
    if let Some(truth_path) = &args.truth {
        let truth = match read_idmap(&args.fit_a) {
            Some(original_ids) => crate::fit::read_positions_mapped(truth_path, &original_ids)?,
            None => read_positions(truth_path, a.mean_positions.len())?,
        };
        let ref_truth = ReferenceConfig {
            points: truth.clone(),
            source: ReferenceSource::TruePositions,
        };
        let a_on_truth = procrustes_align(&a.mean_positions, &ref_truth);
        let b_on_truth = procrustes_align(&b.mean_positions, &ref_truth);
        rows.push(format!("a_vs_truth,{}", rmse(&a_on_truth, &truth)));
        rows.push(format!("b_vs_truth,{}", rmse(&b_on_truth, &truth)));
    }
    write_csv(&out_dir.join("rmse.csv"), &meta, "pair,rmse", rows)?;

    // Global-parameter posterior summaries per fit.
    let mut rows = Vec::new();
    for (name, fit) in [("a", &a), ("b", &b)] {
        let k = fit.psi_draws.first().map_or(0, Vec::len);
        for j in 0..k {
            let mut values: Vec<f64> = fit.psi_draws.iter().map(|d| d[j]).collect();
            values.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            rows.push(format!(
                "{name},{j},{mean},{},{},{}",
                quantile(&values, 0.025),
                quantile(&values, 0.5),
                quantile(&values, 0.975)
            ));
        }
    }
    write_csv(
        &out_dir.join("psi_summary.csv"),
        &meta,
        "fit,param,mean,q025,median,q975",
        rows,
    )?;

    // Edge probabilities from the plug-in posterior means of each fit.
    let psi_mean = |fit: &FitOutput| -> GlobalParams {
        let k = fit.psi_draws.first().map_or(0, Vec::len);
        let mut mean = vec![0.0; k];
        for d in &fit.psi_draws {
            for (m, v) in mean.iter_mut().zip(d) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= fit.psi_draws.len() as f64;
        }
        GlobalParams::new(mean)
    };
    let pa = psi_mean(&a);
    let pb = psi_mean(&b);
    let n = a.mean_positions.len();
    let mut rows = Vec::with_capacity(n * (n - 1) / 2);
    let dist = |zs: &[[f64; 2]], i: usize, j: usize| -> f64 {
        ((zs[i][0] - zs[j][0]).powi(2) + (zs[i][1] - zs[j][1]).powi(2)).sqrt()
    };
    for i in 0..n {
        for j in (i + 1)..n {
            let prob_a = a.link.edge_prob(dist(&a.mean_positions, i, j), &pa);
            let prob_b = b.link.edge_prob(dist(&b_on_a, i, j), &pb);
            rows.push(format!("{i},{j},{prob_a},{prob_b}"));
        }
    }
    write_csv(
        &out_dir.join("edge_prob_scatter.csv"),
        &meta,
        "i,j,prob_a,prob_b",
        rows,
    )?;

    println!("wrote comparison tables to {}", out_dir.display());
    Ok(())
}
